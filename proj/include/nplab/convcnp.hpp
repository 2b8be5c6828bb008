#pragma once

/// @file convcnp.hpp
/// ConvCNPs on grids: functional channels, context recovery, the circulant
/// Chebyshev CNN for GP means, the per-frequency Jacobian factorization,
/// full-support filters and the depth-support tradeoff.

#include "nplab/anp.hpp"
#include "nplab/cnp.hpp"
#include "nplab/core.hpp"
#include "nplab/gp_oracle.hpp"
#include "nplab/kernels.hpp"
#include "nplab/minimax.hpp"
#include "nplab/polyapprox.hpp"
#include "nplab/tnp.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace nplab {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;

struct GridSpec {
    Eigen::Index n = 32;
    double spacing = 1.0;
    bool periodic = true;

    double period() const { return static_cast<double>(n) * spacing; }
    double location(Eigen::Index i) const { return static_cast<double>(i) * spacing; }

    Matrix locations() const {
        Matrix x(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = location(i);
        return x;
    }

    void validate() const {
        if (n < 1) throw InputError("grid: n must be positive");
        if (!(spacing > 0.0)) throw InputError("grid: spacing must be positive");
    }
};

/// X(k) = sum_m x(m) exp(-2 pi i k m / n), direct O(n^2).
inline CVector dft(const CVector& x) {
    const Eigen::Index n = x.size();
    CVector out(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        Complex acc = 0.0;
        for (Eigen::Index m = 0; m < n; ++m) {
            const double th = -2.0 * std::numbers::pi * static_cast<double>((k * m) % n) / static_cast<double>(n);
            acc += x[m] * Complex(std::cos(th), std::sin(th));
        }
        out[k] = acc;
    }
    return out;
}

inline CVector dft(const Vector& x) { return dft(CVector(x.cast<Complex>())); }

/// x(m) = (1/n) sum_k X(k) exp(+2 pi i k m / n).
inline CVector idft(const CVector& x) {
    const Eigen::Index n = x.size();
    return dft(CVector(x.conjugate())).conjugate() / static_cast<double>(n);
}

/// Circulant matrix C_ij = column[(i - j) mod n]: circular convolution with
/// `column`, diagonalized by the DFT with eigenvalue DFT(column)(k) on the
/// Fourier mode exp(2 pi i k m / n).
struct CirculantOperator {
    Vector column;
    CVector eigenvalues;

    CirculantOperator() = default;
    explicit CirculantOperator(Vector c) : column(std::move(c)), eigenvalues(dft(column)) {}

    Eigen::Index size() const { return column.size(); }

    /// Operator with the given per-frequency eigenvalues; their conjugate
    /// symmetry is checked so that the result is real.
    static CirculantOperator from_eigenvalues(const CVector& ev, double tol = 1e-10) {
        const CVector c = idft(ev);
        const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        if (c.imag().cwiseAbs().maxCoeff() > tol * scale)
            throw NumericError("circulant: eigenvalues are not conjugate symmetric; imaginary part",
                               c.imag().cwiseAbs().maxCoeff());
        CirculantOperator op;
        op.column = c.real();
        op.eigenvalues = ev;
        return op;
    }

    Matrix matrix() const {
        const Eigen::Index n = size();
        Matrix m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) = column[((i - j) % n + n) % n];
        return m;
    }

    /// Circular convolution (C v)_i = sum_m column[m] v[i - m].
    Vector apply(const Vector& v) const {
        const Eigen::Index n = size();
        if (v.size() != n) throw InputError("circulant: size mismatch");
        Vector out = Vector::Zero(n);
        for (Eigen::Index m = 0; m < n; ++m) {
            if (column[m] == 0.0) continue;
            for (Eigen::Index i = 0; i < n; ++i) out[i] += column[m] * v[(i - m + n) % n];
        }
        return out;
    }

    Vector real_eigenvalues(double tol = 1e-10) const {
        const double scale = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
        if (eigenvalues.imag().cwiseAbs().maxCoeff() > tol * scale)
            throw NumericError("circulant: spectrum is not real", eigenvalues.imag().cwiseAbs().maxCoeff());
        return eigenvalues.real();
    }

    friend CirculantOperator operator*(const CirculantOperator& a, const CirculantOperator& b) {
        return CirculantOperator(a.matrix() * b.column);
    }
    friend CirculantOperator operator+(const CirculantOperator& a, const CirculantOperator& b) {
        return CirculantOperator(a.column + b.column);
    }
};

inline CirculantOperator identity_operator(Eigen::Index n) { return CirculantOperator(Vector::Unit(n, 0)); }

/// Centered taps phi(m delta), m = -h..h (odd length 2h + 1 <= n), placed
/// on a periodic grid of size n.
inline CirculantOperator filter_operator(const Vector& taps, Eigen::Index n) {
    if (taps.size() % 2 != 1) throw InputError("filter_operator: taps must have odd length");
    if (taps.size() > n) throw InputError("filter_operator: filter longer than the grid");
    const Eigen::Index h = taps.size() / 2;
    Vector c = Vector::Zero(n);
    for (Eigen::Index m = -h; m <= h; ++m) c[(m + n) % n] += taps[m + h];
    return CirculantOperator(c);
}

// ---------------------------------------------------------------------------
// Periodic kernels

inline constexpr double kWrapCutoff = 6.0;  ///< images within 6 lengthscales

/// sum over images d + m P with |d + m P| <= 6 l; the nearest image is always kept.
inline double wrapped_kernel_value(const KernelSpec& spec, double period, double displacement) {
    if (!spec.stationary()) throw InputError("wrapped kernel: stationary kernel required");
    double d = std::fmod(displacement, period);
    if (d < 0) d += period;
    if (d > 0.5 * period) d -= period;  // nearest image
    const double cutoff = kWrapCutoff * spec.lengthscale;
    double acc = stationary_profile(spec, std::abs(d));
    for (int m = 1;; ++m) {
        const double r1 = std::abs(d + m * period), r2 = std::abs(d - m * period);
        bool any = false;
        if (r1 <= cutoff) {
            acc += stationary_profile(spec, r1);
            any = true;
        }
        if (r2 <= cutoff) {
            acc += stationary_profile(spec, r2);
            any = true;
        }
        if (!any) break;
    }
    return acc;
}

/// Circulant Gram of the periodically wrapped kernel on the grid (jitter on the diagonal).
inline CirculantOperator wrapped_kernel_operator(const KernelSpec& spec, const GridSpec& grid) {
    grid.validate();
    spec.validate();
    Vector c(grid.n);
    for (Eigen::Index j = 0; j < grid.n; ++j) c[j] = wrapped_kernel_value(spec, grid.period(), grid.location(j));
    c[0] += spec.jitter;
    return CirculantOperator(c);
}

/// The wrapped kernel column restricted to |m| <= h taps (support 2h + 1).
inline CirculantOperator truncated_kernel_operator(const KernelSpec& spec, const GridSpec& grid, Eigen::Index support) {
    const auto full = wrapped_kernel_operator(spec, grid);
    const Eigen::Index h = support / 2;
    Vector c = Vector::Zero(grid.n);
    for (Eigen::Index m = -h; m <= h; ++m) c[(m + grid.n) % grid.n] = full.column[(m + grid.n) % grid.n];
    return CirculantOperator(c);
}

// ---------------------------------------------------------------------------
// Functional channels

struct Channels {
    Vector density;  ///< rho_C(q) = sum_i w(q - x_i)
    Matrix signal;   ///< s_C(q) = sum_i w(q - x_i) h(y_i), one row per query
};

using ValueEncoder = std::function<Vector(const Vector& y)>;

inline ValueEncoder identity_value() {
    return [](const Vector& y) { return y; };
}

inline ValueEncoder value_with_one() {
    return [](const Vector& y) {
        Vector v(y.size() + 1);
        v << y, 1.0;
        return v;
    };
}

inline Channels channels(const KernelSpec& w, const ContextSet& c, const Matrix& queries, const ValueEncoder& h) {
    c.validate();
    if (queries.cols() != c.dx()) throw InputError("channels: query dimension mismatch");
    const Eigen::Index d = h(c.y(0)).size();
    Channels out{Vector::Zero(queries.rows()), Matrix::Zero(queries.rows(), d)};
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const Vector hv = h(c.y(i));
        for (Eigen::Index q = 0; q < queries.rows(); ++q) {
            const double k = eval_kernel(w, queries.row(q).transpose(), c.x(i));
            out.density[q] += k;
            out.signal.row(q) += k * hv.transpose();
        }
    }
    return out;
}

/// s / rho with h(y) = (y, 1): the kernel smoother readout.
inline Vector smoother_readout(const Channels& ch) {
    return ch.signal.col(0).cwiseQuotient(ch.signal.col(ch.signal.cols() - 1));
}

/// Recovers an on-grid context from channel samples of h(y) = y on the query
/// grid: locations are the local maxima of rho, confirmed by re-synthesizing
/// rho; values solve W h = s at the recovered locations.
inline ContextSet recover_context(const KernelSpec& w, const Vector& rho, const Matrix& s, const Matrix& query_grid) {
    if (query_grid.cols() != 1) throw InputError("recover_context: one-dimensional query grid required");
    const Eigen::Index m = query_grid.rows();
    if (rho.size() != m || s.rows() != m) throw InputError("recover_context: sample/grid size mismatch");
    if (m < 3) throw InputError("recover_context: grid too small");
    const double step = query_grid(1, 0) - query_grid(0, 0);
    if (step > w.lengthscale / 4.0 + 1e-12) throw InputError("recover_context: grid resolution must be <= l/4");

    std::vector<Eigen::Index> peaks;
    const double floor = 1e-6 * rho.maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
        const double left = i > 0 ? rho[i - 1] : -1.0, right = i + 1 < m ? rho[i + 1] : -1.0;
        if (rho[i] > floor && rho[i] > left && rho[i] >= right) peaks.push_back(i);
    }
    const auto n = static_cast<Eigen::Index>(peaks.size());
    if (n == 0) throw DegenerateError("recover_context: no context mass found");
    Matrix x(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = query_grid(peaks[static_cast<std::size_t>(i)], 0);

    // the peaks must explain rho exactly; merged or coincident points do not
    const Vector resynth = cross_gram(w, query_grid, x) * Vector::Ones(n);
    if ((resynth - rho).cwiseAbs().maxCoeff() > 1e-8 * rho.cwiseAbs().maxCoeff())
        throw DegenerateError("recover_context: density is not a sum of distinct on-grid bumps");

    const auto g = spectrum_of(cross_gram(w, x, x));
    if (!(g.lambda_min > 0.0) || g.kappa > 1e12) throw NumericError("recover_context: ill-conditioned W, kappa", g.kappa);
    Matrix values(n, s.cols());
    for (Eigen::Index col = 0; col < s.cols(); ++col) {
        Vector rhs(n);
        for (Eigen::Index i = 0; i < n; ++i) rhs[i] = s(peaks[static_cast<std::size_t>(i)], col);
        values.col(col) = g.solve(rhs);
    }
    return {x, values};
}

// ---------------------------------------------------------------------------
// Chebyshev CNN on a periodic grid

struct GridGpResult {
    double prediction = 0.0;
    double oracle = 0.0;
    double error = 0.0;
    double bound = 0.0;       ///< |k| |y| (2 / lambda_min) rho^L
    double slack = 1e-6;      ///< allowance for the discretization term
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double kappa = 0.0;
    double rho = 0.0;
    int depth = 0;

    bool within_bound() const { return error <= bound + slack; }
};

/// Every grid point is a context point carrying y_i. Each CNN layer is the
/// residual update z <- z + (y - K * z) / x_l, with K * z a circular
/// convolution by the wrapped kernel; the readout at the real position x_t
/// uses the wrapped kernel cross-weights.
inline GridGpResult grid_cnn_gp(const KernelSpec& spec, const GridSpec& grid, const Vector& y, double x_t, int depth) {
    grid.validate();
    if (!grid.periodic) throw InputError("grid_cnn_gp: aperiodic grids are not supported");
    if (y.size() != grid.n) throw InputError("grid_cnn_gp: y must have one value per grid point");
    const auto k = wrapped_kernel_operator(spec, grid);
    const Vector lam = k.real_eigenvalues();
    GridGpResult r;
    r.lambda_min = lam.minCoeff();
    r.lambda_max = lam.maxCoeff();
    if (r.lambda_min <= kMinGramEigenvalue)
        throw NumericError("grid_cnn_gp: near-singular circulant Gram, lambda_min", r.lambda_min);
    r.kappa = r.lambda_max / r.lambda_min;
    const auto sched = chebyshev_schedule(r.lambda_min, r.lambda_max, depth);
    r.rho = sched.rho;
    r.depth = depth;

    Vector z = Vector::Zero(grid.n);
    for (double c : sched.coefficients) z += c * (y - k.apply(z));

    Vector cross(grid.n);
    for (Eigen::Index i = 0; i < grid.n; ++i) cross[i] = wrapped_kernel_value(spec, grid.period(), x_t - grid.location(i));
    r.prediction = cross.dot(z);

    const auto g = spectrum_of(k.matrix());
    r.oracle = cross.dot(g.solve(y));
    r.error = std::abs(r.prediction - r.oracle);
    r.bound = cross.norm() * y.norm() * 2.0 / r.lambda_min * std::pow(r.rho, depth);
    return r;
}

// ---------------------------------------------------------------------------
// Fourier Jacobian

/// J(k) = g(k) prod_l (1 + d_l tau_l(k)) h' w(k).
inline CirculantOperator circulant_jacobian(const std::vector<CirculantOperator>& filters, const std::vector<double>& d,
                                            const CirculantOperator& w_hat, const CirculantOperator& g_hat,
                                            double h_prime) {
    if (filters.size() != d.size()) throw InputError("circulant_jacobian: one activation derivative per filter");
    const Eigen::Index n = w_hat.size();
    if (g_hat.size() != n) throw InputError("circulant_jacobian: operator sizes differ");
    CVector ev = g_hat.eigenvalues.cwiseProduct(w_hat.eigenvalues) * h_prime;
    for (std::size_t l = 0; l < filters.size(); ++l) {
        if (filters[l].size() != n) throw InputError("circulant_jacobian: operator sizes differ");
        ev = ev.cwiseProduct((CVector::Ones(n) + d[l] * filters[l].eigenvalues).eval());
    }
    return CirculantOperator::from_eigenvalues(ev, 1e-8);
}

inline double softplus(double x) { return x > 30 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Grid ConvCNP with every grid point a context point:
///   encoder   h(y) = y + 0.3 y^2            (h'(0) = 1)
///   signal    s = W h(y)                    (circular convolution by w)
///   layers    r <- r + softplus(phi_l * r + b_l), b_l = -(sum phi_l) u_{l-1}
///   readout   r_L / rho_0
/// u_{l-1} is the uniform value of r at y = 0, so every activation sits at
/// softplus'(0) = 1/2.
struct GridConvCnp {
    CirculantOperator w;
    std::vector<CirculantOperator> filters;
    std::vector<double> biases;
    double rho0 = 1.0;
    double quadratic = 0.3;

    static GridConvCnp build(const CirculantOperator& w, std::vector<CirculantOperator> filters) {
        GridConvCnp net;
        net.w = w;
        net.rho0 = w.column.sum();
        double u = 0.0;  // uniform CNN input at y = 0, since h(0) = 0
        for (const auto& f : filters) {
            const double b = -f.column.sum() * u;
            net.biases.push_back(b);
            u += softplus(f.column.sum() * u + b);
        }
        net.filters = std::move(filters);
        return net;
    }

    Vector operator()(const Vector& y) const {
        const Vector h = y + quadratic * y.cwiseAbs2();
        Vector r = w.apply(h);
        for (std::size_t l = 0; l < filters.size(); ++l) {
            const Vector pre = filters[l].apply(r).array() + biases[l];
            r += pre.unaryExpr([](double v) { return softplus(v); });
        }
        return r / rho0;
    }

    CirculantOperator analytic_jacobian() const {
        const Eigen::Index n = w.size();
        return circulant_jacobian(filters, std::vector<double>(filters.size(), 0.5), w,
                                  CirculantOperator(Vector::Unit(n, 0) / rho0), 1.0);
    }
};

/// Per-frequency spectrum of a (nearly) circulant matrix: f_k^H J f_k / n.
inline CVector frequency_response(const Matrix& j) {
    const Eigen::Index n = j.rows();
    CVector out(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        CVector f(n);
        for (Eigen::Index m = 0; m < n; ++m) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>((k * m) % n) / static_cast<double>(n);
            f[m] = Complex(std::cos(th), std::sin(th));
        }
        out[k] = f.dot(j.cast<Complex>() * f) / static_cast<double>(n);
    }
    return out;
}

/// Single filter with tau(k) = (1 / (lambda_k g(k) h' w(k)) - 1) / d1.
inline CirculantOperator full_support_solve(const CirculantOperator& k_hat, const CirculantOperator& g_hat,
                                            const CirculantOperator& w_hat, double h_prime, double d1) {
    const Eigen::Index n = k_hat.size();
    if (g_hat.size() != n || w_hat.size() != n) throw InputError("full_support_solve: operator sizes differ");
    if (d1 == 0.0 || h_prime == 0.0) throw DegenerateError("full_support_solve: d1 and h' must be nonzero");
    const CVector denom = k_hat.eigenvalues.cwiseProduct(g_hat.eigenvalues).cwiseProduct(w_hat.eigenvalues) * h_prime;
    const double floor = 1e-12 * denom.cwiseAbs().maxCoeff();
    CVector tau(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(std::abs(denom[k]) > floor))
            throw DegenerateError("full_support_solve: vanishing lambda_k, g(k) or w(k) at k = " + std::to_string(k));
        tau[k] = (1.0 / denom[k] - 1.0) / d1;
    }
    return CirculantOperator::from_eigenvalues(tau);
}

/// max_k |J(k) lambda_k - 1| for the single full-support layer.
inline double full_support_residual(const CirculantOperator& filter, const CirculantOperator& k_hat,
                                    const CirculantOperator& g_hat, const CirculantOperator& w_hat, double h_prime,
                                    double d1) {
    const auto jac = circulant_jacobian({filter}, {d1}, w_hat, g_hat, h_prime);
    return (jac.eigenvalues.cwiseProduct(k_hat.eigenvalues) - CVector::Ones(k_hat.size())).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Depth-support tradeoff

struct DepthSupportEntry {
    double epsilon = 0.0;         ///< relative to |K^{-1}| = 1 / lambda_min
    int trig_degree = -1;         ///< smallest cosine degree within epsilon / lambda_min (-1: beyond range)
    int required_depth = -1;      ///< constructed Chebyshev CNN depth reaching the same accuracy
    Eigen::Index reach = 0;       ///< required_depth * floor(p/2)
    bool inequality_holds = false;  ///< reach >= trig_degree
    bool full_support = false;
};

struct DepthSupportReport {
    Eigen::Index n = 0;
    Eigen::Index support = 0;
    double kappa = 0.0;
    std::vector<double> trig_minimax;  ///< error at degree D = 0, 1, ...
    std::vector<DepthSupportEntry> entries;
    double decay_slope = 0.0;          ///< d log E / d D over the geometric range
    double predicted_slope = 0.0;      ///< log rho / floor(q/2), q the symbol's support
    bool all_hold = false;
};

/// Discrete cosine minimax of 1/lambda on the frequencies 0..n/2 at degree D.
inline double trig_minimax(const Vector& lam, Eigen::Index degree) {
    const Eigen::Index n = lam.size();
    const Eigen::Index m = n / 2 + 1;
    if (degree + 2 > m) throw InputError("trig_minimax: degree must be below n/2");
    Matrix basis(m, degree + 1);
    Vector target(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double om = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        for (Eigen::Index j = 0; j <= degree; ++j) basis(k, j) = std::cos(static_cast<double>(j) * om);
        target[k] = 1.0 / lam[k];
    }
    return discrete_minimax(basis, target, chebyshev_reference(m, degree + 1)).error;
}

/// `symbol` is the circulant to invert, with support q = 2 floor(q/2) + 1 taps;
/// CNN filters of support p realize it only when q <= p. p >= n uses the
/// full-support single layer.
inline DepthSupportReport depth_support_experiment(const CirculantOperator& symbol, Eigen::Index support,
                                                   const std::vector<double>& eps_targets, int max_depth = 200) {
    const Eigen::Index n = symbol.size();
    const Vector lam = symbol.real_eigenvalues();
    if (!(lam.minCoeff() > 0.0)) throw InputError("depth_support_experiment: symbol must be positive definite");
    DepthSupportReport r;
    r.n = n;
    r.support = support;
    const double lo = lam.minCoeff(), hi = lam.maxCoeff();
    r.kappa = hi / lo;
    const Eigen::Index half = support / 2;

    Eigen::Index q_half = 0;
    for (Eigen::Index m = 1; m <= n / 2; ++m)
        if (symbol.column[m] != 0.0 || symbol.column[(n - m) % n] != 0.0) q_half = m;
    if (support < n && 2 * q_half + 1 > support)
        throw InputError("depth_support_experiment: symbol support exceeds the filter support");

    const Eigen::Index max_degree = n / 2 - 1;
    for (Eigen::Index dgr = 0; dgr <= max_degree; ++dgr) {
        const double e = trig_minimax(lam, dgr);
        r.trig_minimax.push_back(e);
        if (e <= 1e-10 / lo) break;  // exchange loses accuracy beyond this
    }

    std::vector<double> degs, errs;
    for (std::size_t dgr = 1; dgr < r.trig_minimax.size(); ++dgr) {
        if (r.trig_minimax[dgr] <= 1e-11 / lo) break;
        degs.push_back(static_cast<double>(dgr));
        errs.push_back(r.trig_minimax[dgr]);
    }
    r.decay_slope = degs.size() >= 2 ? log_slope(degs, errs) : 0.0;
    r.predicted_slope = q_half > 0 && r.kappa > 1.0 ? std::log(chebyshev_rate(r.kappa)) / static_cast<double>(q_half) : 0.0;

    r.all_hold = true;
    for (double eps : eps_targets) {
        DepthSupportEntry e;
        e.epsilon = eps;
        const double tol = eps / lo;
        for (std::size_t dgr = 0; dgr < r.trig_minimax.size(); ++dgr)
            if (r.trig_minimax[dgr] <= tol) {
                e.trig_degree = static_cast<int>(dgr);
                break;
            }
        if (support >= n) {
            e.full_support = true;
            const auto one = identity_operator(n);
            const auto f = full_support_solve(symbol, one, one, 1.0, 1.0);
            e.required_depth = full_support_residual(f, symbol, one, one, 1.0, 1.0) <= eps ? 1 : -1;
            e.reach = n / 2;
        } else if ((lam.cwiseInverse().array() - 1.0).abs().maxCoeff() <= tol) {
            e.required_depth = 0;  // no filter needed: the chain already inverts
            e.reach = 0;
        } else {
            for (int l = 1; l <= max_depth; ++l) {
                const auto s = chebyshev_schedule(lo, hi, l);
                double worst = 0.0;
                for (Eigen::Index k = 0; k < n; ++k)
                    worst = std::max(worst, std::abs(schedule_polynomial(s, lam[k]) - 1.0 / lam[k]));
                if (worst <= tol) {
                    e.required_depth = l;
                    break;
                }
            }
            if (e.required_depth > 0) {
                e.reach = e.required_depth * half;
                if (n <= 2 * e.reach)
                    throw InputError("depth_support_experiment: need n > 2 L floor(p/2) for every tested depth");
            }
        }
        e.inequality_holds = e.required_depth >= 0 && e.trig_degree >= 0 && e.reach >= e.trig_degree;
        if (!e.inequality_holds) r.all_hold = false;
        r.entries.push_back(e);
    }
    return r;
}

inline DepthSupportReport depth_support_experiment(const KernelSpec& spec, const GridSpec& grid, Eigen::Index support,
                                                   const std::vector<double>& eps_targets) {
    grid.validate();
    if (!grid.periodic) throw InputError("depth_support_experiment: periodic grid required");
    const auto symbol = support >= grid.n ? wrapped_kernel_operator(spec, grid)
                                          : truncated_kernel_operator(spec, grid, support);
    return depth_support_experiment(symbol, support, eps_targets);
}

/// a + b cos(omega): three taps (b/2, a, b/2), spectrum [a - b, a + b].
inline CirculantOperator three_tap_symbol(Eigen::Index n, double a, double b) {
    Vector taps(3);
    taps << 0.5 * b, a, 0.5 * b;
    return filter_operator(taps, n);
}

// ---------------------------------------------------------------------------
// Separation witnesses

struct NoGpReport {
    double convcnp_a = 0.0;
    double convcnp_b = 0.0;
    double convcnp_gap = 0.0;
    double gp_a = 0.0;
    double gp_b = 0.0;
    double gp_gap = 0.0;
};

/// x_t = 0, contexts {-1, 2} and {-1, -2} on the unit grid, y = (1, 1). The
/// pure ConvCNP sees only query displacements, equal up to sign.
inline NoGpReport convcnp_no_gp(const KernelSpec& spec) {
    const auto a = ContextSet::scalar({-1.0, 2.0}, {1.0, 1.0});
    const auto b = ContextSet::scalar({-1.0, -2.0}, {1.0, 1.0});
    Matrix q(1, 1);
    q(0, 0) = 0.0;
    NoGpReport r;
    r.convcnp_a = smoother_readout(channels(spec, a, q, value_with_one()))[0];
    r.convcnp_b = smoother_readout(channels(spec, b, q, value_with_one()))[0];
    r.convcnp_gap = std::abs(r.convcnp_a - r.convcnp_b);
    r.gp_a = posterior_mean(spec, a.locations, a.y_column(), point1(0.0));
    r.gp_b = posterior_mean(spec, b.locations, b.y_column(), point1(0.0));
    r.gp_gap = std::abs(r.gp_a - r.gp_b);
    return r;
}

/// Largest |F(C + tau, x_t + tau) - F(C, x_t)| of the kernel smoother with a
/// non-stationary kernel, over the given shifts.
inline double equivariance_defect(const KernelSpec& spec, const ContextSet& c, const Point& x_t,
                                  const std::vector<double>& shifts) {
    const double base = nadaraya_watson(spec, c, x_t);
    double worst = 0.0;
    for (double tau : shifts) {
        ContextSet shifted = c;
        shifted.locations.array() += tau;
        Point xt = x_t;
        xt.array() += tau;
        worst = std::max(worst, std::abs(nadaraya_watson(spec, shifted, xt) - base));
    }
    return worst;
}

}  // namespace nplab
