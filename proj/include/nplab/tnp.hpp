#pragma once

/// @file tnp.hpp
/// Transformer NPs as matrix polynomials in a normalized attention matrix:
/// layerwise forward passes, the Chebyshev GP pipeline, finite-difference
/// Jacobians, the eigenvalue-controlled family and the depth lower bound.

#include "nplab/cnp.hpp"
#include "nplab/core.hpp"
#include "nplab/gp_oracle.hpp"
#include "nplab/jacobi.hpp"
#include "nplab/kernels.hpp"
#include "nplab/polyapprox.hpp"
#include "nplab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace nplab {

/// K~ = D^{-1} K with D = diag(K 1).
struct AttentionMatrix {
    Matrix k_tilde;
    Vector row_sums;
    double gamma = 1.0;          ///< d_max / d_min
    Vector eigenvalues;          ///< of K~, ascending (through D^{-1/2} K D^{-1/2})
    double kappa = 0.0;          ///< condition number of K~
    double kappa_source = 0.0;   ///< condition number of K
    bool bracket_holds = false;  ///< kappa in [kappa_source / gamma, gamma kappa_source]
};

inline AttentionMatrix normalize_attention(const GramSpectrum& k) {
    const Eigen::Index n = k.size();
    AttentionMatrix a;
    a.row_sums = k.matrix.rowwise().sum();
    if (!(a.row_sums.minCoeff() > 0.0)) throw InputError("normalize_attention: nonpositive row sum");
    a.k_tilde = a.row_sums.cwiseInverse().asDiagonal() * k.matrix;
    a.gamma = a.row_sums.maxCoeff() / a.row_sums.minCoeff();
    const Vector s = a.row_sums.cwiseSqrt().cwiseInverse();
    Matrix sym(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) sym(i, j) = s[i] * k.matrix(i, j) * s[j];
    a.eigenvalues = jacobi_eigen(symmetrize(sym)).values;
    a.kappa = a.eigenvalues[n - 1] / a.eigenvalues[0];
    a.kappa_source = k.kappa;
    const double slack = 1e-10;
    a.bracket_holds = a.kappa >= a.kappa_source / a.gamma * (1 - slack) && a.kappa <= a.gamma * a.kappa_source * (1 + slack);
    return a;
}

/// Runs the schedule as a stack of layers acting on H0 (n x d).
///   ProductForm          H <- H + alpha_l A H
///   ChebyshevIteration   X <- X + (H0 - A X) / x_l, X_0 = 0, nodes in stored order
///   NeumannSum           X <- X + (H0 - A X) / lambda_max, repeated L times
/// The iterations return q_L(A) H0.
inline Matrix tnp_forward(const Matrix& a, const PolySchedule& s, const Matrix& h0) {
    if (a.rows() != a.cols()) throw InputError("tnp_forward: attention matrix must be square");
    if (h0.rows() != a.rows()) throw InputError("tnp_forward: H0 rows do not match the attention matrix");
    switch (s.form) {
        case ScheduleForm::ProductForm: {
            Matrix h = h0;
            for (double alpha : s.coefficients) h += alpha * (a * h);
            return h;
        }
        case ScheduleForm::ChebyshevIteration: {
            Matrix x = Matrix::Zero(h0.rows(), h0.cols());
            for (double c : s.coefficients) x += c * (h0 - a * x);
            return x;
        }
        case ScheduleForm::NeumannSum: {
            Matrix x = Matrix::Zero(h0.rows(), h0.cols());
            if (s.depth == 0) return x;
            const double c = s.coefficients.at(0);
            for (int l = 0; l < s.depth; ++l) x += c * (h0 - a * x);
            return x;
        }
    }
    return h0;
}

/// Same, checking the schedule interval against the spectrum of the target.
inline Matrix tnp_forward(const GramSpectrum& target, const PolySchedule& s, const Matrix& h0) {
    if (s.form != ScheduleForm::ProductForm) detail::require_interval(target, s);
    return tnp_forward(target.matrix, s, h0);
}

inline Matrix tnp_forward(const AttentionMatrix& a, const PolySchedule& s, const Matrix& h0) {
    return tnp_forward(a.k_tilde, s, h0);
}

struct PipelineResult {
    double prediction = 0.0;
    double oracle = 0.0;
    double error = 0.0;      ///< |prediction - oracle|
    double bound = 0.0;      ///< |k| |y| (2 / lambda_min) rho^L
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double kappa = 0.0;
    double rho = 0.0;
    int depth = 0;
    Eigen::Index channels = 0;
    double roundoff = 0.0;   ///< |k| |y| 1e-12 / lambda_min

    /// error <= bound up to the roundoff floor of a computed inverse
    bool within_bound() const { return error <= bound + roundoff; }
};

/// GP posterior mean through a depth-L Chebyshev TNP: H0 = [I | y | 1]
/// (n + 2 channels), z = q_L(K) y read off the y channel, prediction k^T z.
inline PipelineResult tnp_gp_pipeline(const KernelSpec& spec, const ContextSet& c, const Point& x_t, int depth) {
    c.validate();
    const Eigen::Index n = c.size();
    const auto g = gram_spectrum(spec, c.locations);
    if (g.lambda_min <= kMinGramEigenvalue)
        throw NumericError("tnp_gp_pipeline: near-singular Gram, lambda_min", g.lambda_min);
    const auto sched = chebyshev_schedule(g.lambda_min, g.lambda_max, depth);
    Matrix h0(n, n + 2);
    h0 << Matrix::Identity(n, n), c.y_column(), Vector::Ones(n);
    const Matrix h = tnp_forward(g, sched, h0);
    const Vector k = kernel_vector(spec, c.locations, x_t);
    const Vector y = c.y_column();
    PipelineResult r;
    r.prediction = k.dot(h.col(n));
    r.oracle = posterior_weights(g, spec, c.locations, x_t).mean(y);
    r.error = std::abs(r.prediction - r.oracle);
    r.lambda_min = g.lambda_min;
    r.lambda_max = g.lambda_max;
    r.kappa = g.kappa;
    r.rho = sched.rho;
    r.depth = depth;
    r.channels = n + 2;
    r.bound = k.norm() * y.norm() * 2.0 / g.lambda_min * std::pow(sched.rho, depth);
    r.roundoff = 1e-12 * k.norm() * y.norm() / g.lambda_min;
    return r;
}

/// y -> K_TC q_L(K) y for the Chebyshev pipeline, and its analytic Jacobian.
struct LinearPipeline {
    std::function<Vector(const Vector&)> map;
    Matrix jacobian;  ///< K_TC q_L(K)
    Matrix exact;     ///< K_TC K^{-1}
};

inline LinearPipeline linear_pipeline(const KernelSpec& spec, const Matrix& context, const Matrix& targets, int depth) {
    const auto g = gram_spectrum(spec, context);
    const auto sched = chebyshev_schedule(g.lambda_min, g.lambda_max, depth);
    const Matrix ktc = cross_gram(spec, targets, context);
    LinearPipeline p;
    p.jacobian = ktc * apply_inverse_schedule(g, sched);
    p.exact = ktc * g.inverse();
    p.map = [g, sched, ktc](const Vector& y) -> Vector { return ktc * tnp_forward(g.matrix, sched, y); };
    return p;
}

/// Central-difference Jacobian, column by column. step <= 0 selects
/// 1e-5 (1 + |y0|_inf).
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& y0, double step = 0.0) {
    if (step <= 0.0) step = 1e-5 * (1.0 + y0.cwiseAbs().maxCoeff());
    const Vector f0 = f(y0);
    Matrix jac(f0.size(), y0.size());
    for (Eigen::Index j = 0; j < y0.size(); ++j) {
        Vector yp = y0, ym = y0;
        yp[j] += step;
        ym[j] -= step;
        jac.col(j) = (f(yp) - f(ym)) / (2.0 * step);
    }
    return jac;
}

// ---------------------------------------------------------------------------
// Eigenvalue-controlled family

struct EigFamilyMember {
    double t = 0.0;
    double kappa = 0.0;
    Eigen::Index n = 0;
    Matrix matrix;
    Vector v1;
    double mu1 = 0.0;
};

/// Unit vector orthogonal to 1: alternating signs, Gram-Schmidt for odd n.
inline Vector family_direction(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
    if (n % 2 == 1) v.array() -= v.mean();
    return v / v.norm();
}

/// K_t = I + (1/kappa - 1 + t) v1 v1^T: row sums 1, mu_1 = 1/kappa + t, all
/// other eigenvalues 1.
inline EigFamilyMember eig_family(double kappa, Eigen::Index n, double t) {
    if (!(kappa > 1.0)) throw InputError("eig_family: kappa must exceed 1");
    if (n < 2) throw InputError("eig_family: n must be at least 2");
    const double hi = 1.0 - 1.0 / kappa;
    if (t < -1e-15 || t > hi + 1e-15) throw InputError("eig_family: t outside [0, 1 - 1/kappa]");
    EigFamilyMember m;
    m.t = t;
    m.kappa = kappa;
    m.n = n;
    m.v1 = family_direction(n);
    m.mu1 = 1.0 / kappa + t;
    m.matrix = Matrix::Identity(n, n) + (1.0 / kappa - 1.0 + t) * m.v1 * m.v1.transpose();
    return m;
}

// ---------------------------------------------------------------------------
// Depth lower bound

struct DepthBarrierReport {
    double kappa = 0.0;
    Eigen::Index n = 0;
    int depth = 0;
    int fitted_poly_degree = 0;    ///< degree used for the univariate fit (= depth)
    double fit_residual = 0.0;     ///< max |v1^T M v1 - fit| over the t grid
    bool structural_ok = false;    ///< fit residual <= 1e-6
    int oracle_degree = 0;         ///< 2 depth
    double oracle_error = 0.0;     ///< best degree-2L approximation of 1/mu on [1/kappa, 1]
    double barrier = 0.0;          ///< (2/(a+b)) rho^{2L}
    double epsilon = 0.0;
    bool depth_sufficient = false; ///< oracle_error <= epsilon
    int implied_min_depth = 0;     ///< smallest L' with oracle error at 2L' <= epsilon (-1 if beyond search)
    double decay_slope = 0.0;      ///< fitted d log E / d degree over degrees 2L', L' = 2..max(L, 6)
    double log_rho = 0.0;
};

namespace detail {

/// Least-squares polynomial fit in the Chebyshev basis over [a, b]; returns max residual.
inline double polynomial_fit_residual(const std::vector<double>& xs, const std::vector<double>& ys, int degree,
                                      double a, double b) {
    const auto m = static_cast<Eigen::Index>(xs.size());
    Matrix basis(m, degree + 1);
    Vector y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double t = (2.0 * xs[static_cast<std::size_t>(i)] - a - b) / (b - a);
        double t0 = 1.0, t1 = t;
        basis(i, 0) = 1.0;
        if (degree >= 1) basis(i, 1) = t;
        for (int j = 2; j <= degree; ++j) {
            const double t2 = 2.0 * t * t1 - t0;
            basis(i, j) = t2;
            t0 = t1;
            t1 = t2;
        }
        y[i] = ys[static_cast<std::size_t>(i)];
    }
    const Vector c = basis.colPivHouseholderQr().solve(y);
    return (basis * c - y).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Sweeps the eigenvalue family with a fixed product-form TNP, checks that the
/// Jacobian quadratic form v1^T M v1 is a degree-L polynomial in mu_1, then
/// compares the degree-2L minimax error on [1/kappa, 1] with epsilon.
inline DepthBarrierReport depth_barrier_experiment(double kappa, Eigen::Index n, int depth, int t_grid,
                                                   double epsilon = 1e-2, std::uint64_t seed = 0) {
    if (!(kappa > 1.0)) throw InputError("depth_barrier_experiment: kappa must exceed 1");
    if (depth < 1) throw InputError("depth_barrier_experiment: depth must be at least 1");
    if (t_grid < 4 * depth + 4) throw InputError("depth_barrier_experiment: t_grid must be >= 4L + 4");
    DepthBarrierReport r;
    r.kappa = kappa;
    r.n = n;
    r.depth = depth;
    r.epsilon = epsilon;

    Rng rng(seed, "tnp.depth_barrier");
    std::vector<double> alphas;
    for (int l = 0; l < depth; ++l) alphas.push_back(rng.uniform(-1.0, 1.0));
    const auto sched = product_schedule(alphas);

    std::vector<double> mus, quad;
    double scale = 1.0;
    for (int i = 0; i < t_grid; ++i) {
        const double t = (1.0 - 1.0 / kappa) * static_cast<double>(i) / static_cast<double>(t_grid - 1);
        const auto member = eig_family(kappa, n, t);
        const auto f = [&](const Vector& y) -> Vector { return tnp_forward(member.matrix, sched, y); };
        const Matrix m = fd_jacobian(f, Vector::Zero(n));
        const double q = member.v1.dot(m * member.v1);
        mus.push_back(member.mu1);
        quad.push_back(q);
        scale = std::max(scale, std::abs(q));
    }
    r.fitted_poly_degree = depth;
    r.fit_residual = detail::polynomial_fit_residual(mus, quad, depth, 1.0 / kappa, 1.0);
    r.structural_ok = r.fit_residual <= 1e-6 * scale;

    const double a = 1.0 / kappa;
    r.oracle_degree = 2 * depth;
    r.oracle_error = minimax_oracle(a, 1.0, r.oracle_degree).error;
    r.barrier = chebyshev_barrier(a, 1.0, r.oracle_degree);
    r.depth_sufficient = r.oracle_error <= epsilon;
    r.log_rho = std::log(chebyshev_rate(kappa));

    r.implied_min_depth = -1;
    for (int l = 1; l <= 200; ++l) {
        if (minimax_oracle(a, 1.0, 2 * l, std::max(kDefaultMinimaxGrid, 10 * (2 * l + 2))).error <= epsilon) {
            r.implied_min_depth = l;
            break;
        }
    }

    std::vector<double> degs, errs;
    for (int l = 2; l <= std::max(depth, 6); ++l) {
        const double e = minimax_oracle(a, 1.0, 2 * l).error;
        if (e < 1e-13) break;  // below the grid/roundoff floor
        degs.push_back(2.0 * l);
        errs.push_back(e);
    }
    r.decay_slope = degs.size() >= 2 ? log_slope(degs, errs) : r.log_rho;
    return r;
}

struct DepthSufficiency {
    double kappa = 0.0;
    double epsilon = 0.0;
    int sufficient_depth = 0;    ///< Chebyshev depth reaching epsilon |K^{-1}|
    int necessary_degree = 0;    ///< minimax degree reaching the same accuracy
    double necessary_depth = 0;  ///< necessary_degree / 2
    double ratio = 0.0;          ///< sufficient / necessary depth
};

/// Sufficient (Chebyshev construction) against necessary (minimax oracle at
/// degree 2L) depth for relative accuracy epsilon on [1/kappa, 1].
inline DepthSufficiency depth_sufficiency(double kappa, double epsilon) {
    DepthSufficiency r;
    r.kappa = kappa;
    r.epsilon = epsilon;
    const double a = 1.0 / kappa;
    r.sufficient_depth = required_depth(ScheduleForm::ChebyshevIteration, a, 1.0, epsilon);
    for (int deg = 0; deg <= 400; ++deg) {
        if (minimax_oracle(a, 1.0, deg, std::max(kDefaultMinimaxGrid, 10 * (deg + 2))).error <= epsilon / a) {
            r.necessary_degree = deg;
            break;
        }
    }
    r.necessary_depth = 0.5 * r.necessary_degree;
    r.ratio = r.necessary_depth > 0 ? r.sufficient_depth / r.necessary_depth : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Linearization

struct LinearizationPoint {
    double eta = 0.0;
    double epsilon = 0.0;        ///< sampled sup_{|y|<=1} |F(y) - T y|
    double curvature = 0.0;      ///< L2 = |Hessian| = 2 eta |u|^2
    double jacobian_gap = 0.0;   ///< |dF/dy(0) - T|
    double bound = 0.0;          ///< 2 epsilon + L2 / 2
};

struct LinearizationReport {
    double fd_error = 0.0;       ///< |fd_jacobian - analytic| for the unperturbed pipeline
    std::vector<LinearizationPoint> points;
    bool bound_holds = false;
    bool monotone = false;
};

/// F_eta(y) = g^T y + eta ((u^T y + 1)^2 - 1) with g^T = k^T q_L(K) and u the
/// unit direction of g - T. The FD Jacobian at 0 is compared with the exact
/// GP row T = k^T K^{-1}.
inline LinearizationReport linearization_experiment(const KernelSpec& spec, const ContextSet& c, const Point& x_t,
                                                    int depth, const std::vector<double>& etas,
                                                    std::uint64_t seed = 0, int samples = 2000) {
    const Eigen::Index n = c.size();
    Matrix tgt(1, x_t.size());
    tgt.row(0) = x_t.transpose();
    const auto pipe = linear_pipeline(spec, c.locations, tgt, depth);
    LinearizationReport rep;
    rep.fd_error = (fd_jacobian(pipe.map, Vector::Zero(n)) - pipe.jacobian).norm();

    const Vector g = pipe.jacobian.row(0).transpose();
    const Vector t = pipe.exact.row(0).transpose();
    Vector u = g - t;
    u = u.norm() > 0 ? Vector(u / u.norm()) : Vector(Vector::Unit(n, 0));

    Rng rng(seed, "tnp.linearization");
    std::vector<Vector> dirs{u, -u};
    for (int i = 0; i < samples; ++i) {
        Vector y = rng.normal_vector(n);
        y *= std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) / y.norm();
        dirs.push_back(y);
    }
    rep.bound_holds = true;
    rep.monotone = true;
    double last = -1.0;
    for (double eta : etas) {
        const auto f = [&](const Vector& y) -> Vector {
            Vector out(1);
            const double s = u.dot(y) + 1.0;
            out[0] = pipe.map(y)[0] + eta * (s * s - 1.0);
            return out;
        };
        LinearizationPoint p;
        p.eta = eta;
        for (const auto& y : dirs) p.epsilon = std::max(p.epsilon, std::abs(f(y)[0] - t.dot(y)));
        p.curvature = 2.0 * eta * u.squaredNorm();
        p.jacobian_gap = (fd_jacobian(f, Vector::Zero(n)).row(0).transpose() - t).norm();
        p.bound = 2.0 * p.epsilon + 0.5 * p.curvature;
        if (p.jacobian_gap > p.bound) rep.bound_holds = false;
        if (p.jacobian_gap < last) rep.monotone = false;
        last = p.jacobian_gap;
        rep.points.push_back(p);
    }
    return rep;
}

}  // namespace nplab
