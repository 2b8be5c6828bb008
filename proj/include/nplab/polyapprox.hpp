#pragma once

/// @file polyapprox.hpp
/// Matrix-polynomial approximations of K^{-1}: truncated Neumann series,
/// Chebyshev iteration, product-form schedules, and the discrete minimax
/// oracle for the best polynomial approximation of 1/mu.

#include "nplab/core.hpp"
#include "nplab/jacobi.hpp"
#include "nplab/kernels.hpp"
#include "nplab/minimax.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace nplab {

enum class ScheduleForm { NeumannSum, ChebyshevIteration, ProductForm };

inline std::string to_string(ScheduleForm f) {
    switch (f) {
        case ScheduleForm::NeumannSum: return "neumann";
        case ScheduleForm::ChebyshevIteration: return "chebyshev";
        case ScheduleForm::ProductForm: return "product";
    }
    return "?";
}

/// Coefficients of a depth-L matrix polynomial.
///
/// NeumannSum:          coefficients = {1/lambda_max}, depth = number of terms.
/// ChebyshevIteration:  coefficients = 1/x_l for the shifted Chebyshev nodes
///                      x_l, stored in Leja order (the polynomial does not
///                      depend on the order, the iteration's stability does).
/// ProductForm:         coefficients = alpha_l of prod (I + alpha_l K).
struct PolySchedule {
    ScheduleForm form = ScheduleForm::ChebyshevIteration;
    std::vector<double> coefficients;
    double lo = 0.0;
    double hi = 0.0;
    int depth = 0;
    double rho = 0.0;

    std::vector<double> nodes() const {
        std::vector<double> out;
        for (double c : coefficients) out.push_back(1.0 / c);
        return out;
    }
};

inline double chebyshev_rate(double kappa) {
    const double s = std::sqrt(kappa);
    return (s - 1.0) / (s + 1.0);
}

inline double neumann_rate(double kappa) { return 1.0 - 1.0 / kappa; }

/// Greedy Leja ordering: start from the largest-magnitude node, then always
/// take the node maximizing the product of distances to those already chosen.
inline std::vector<double> leja_order(std::vector<double> nodes) {
    std::vector<double> out;
    if (nodes.empty()) return out;
    std::size_t first = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (std::abs(nodes[i]) > std::abs(nodes[first])) first = i;
    out.push_back(nodes[first]);
    nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(first));
    while (!nodes.empty()) {
        std::size_t best = 0;
        double best_log = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double s = 0.0;
            for (double o : out) s += std::log(std::abs(nodes[i] - o) + 1e-300);
            if (s > best_log) {
                best_log = s;
                best = i;
            }
        }
        out.push_back(nodes[best]);
        nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return out;
}

inline PolySchedule chebyshev_schedule(double lambda_min, double lambda_max, int depth) {
    if (depth <= 0) throw InputError("chebyshev_schedule: empty schedule (L must be >= 1)");
    if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
        throw InputError("chebyshev_schedule: need 0 < lambda_min <= lambda_max");
    const double c = 0.5 * (lambda_max + lambda_min);
    const double h = 0.5 * (lambda_max - lambda_min);
    std::vector<double> nodes;
    for (int l = 1; l <= depth; ++l) {
        const double theta = (2.0 * l - 1.0) * std::numbers::pi / (2.0 * depth);
        nodes.push_back(c + h * std::cos(theta));
    }
    PolySchedule s;
    s.form = ScheduleForm::ChebyshevIteration;
    for (double x : leja_order(nodes)) s.coefficients.push_back(1.0 / x);
    s.lo = lambda_min;
    s.hi = lambda_max;
    s.depth = depth;
    s.rho = chebyshev_rate(lambda_max / lambda_min);
    return s;
}

inline PolySchedule neumann_schedule(double lambda_min, double lambda_max, int depth) {
    if (depth < 0) throw InputError("neumann_schedule: negative depth");
    if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
        throw InputError("neumann_schedule: need 0 < lambda_min <= lambda_max");
    PolySchedule s;
    s.form = ScheduleForm::NeumannSum;
    s.coefficients = {1.0 / lambda_max};
    s.lo = lambda_min;
    s.hi = lambda_max;
    s.depth = depth;
    s.rho = neumann_rate(lambda_max / lambda_min);
    return s;
}

inline PolySchedule product_schedule(std::vector<double> alphas, double lo = 0.0, double hi = 0.0) {
    PolySchedule s;
    s.form = ScheduleForm::ProductForm;
    s.depth = static_cast<int>(alphas.size());
    s.coefficients = std::move(alphas);
    s.lo = lo;
    s.hi = hi;
    return s;
}

/// The literal product-form weights alpha_l = -1/x_l built from the Chebyshev
/// nodes. prod(1 + alpha_l lambda) is then the Chebyshev residual polynomial,
/// which is small on the interval rather than close to 1/lambda.
inline PolySchedule chebyshev_product_schedule(double lambda_min, double lambda_max, int depth) {
    const auto cheb = chebyshev_schedule(lambda_min, lambda_max, depth);
    std::vector<double> alphas;
    for (double c : cheb.coefficients) alphas.push_back(-c);
    auto s = product_schedule(std::move(alphas), lambda_min, lambda_max);
    s.rho = cheb.rho;
    return s;
}

/// Scalar polynomial p(lambda) approximating 1/lambda (or, for ProductForm,
/// the polynomial prod(1 + alpha_l lambda) itself).
inline double schedule_polynomial(const PolySchedule& s, double lambda) {
    switch (s.form) {
        case ScheduleForm::NeumannSum: {
            if (s.depth == 0) return 0.0;
            const double step = s.coefficients.at(0);
            const double a = 1.0 - lambda * step;
            double acc = 1.0;  // Horner on sum_{m<L} a^m
            for (int m = 1; m < s.depth; ++m) acc = 1.0 + a * acc;
            return step * acc;
        }
        case ScheduleForm::ChebyshevIteration: {
            double residual = 1.0;
            for (double c : s.coefficients) residual *= (1.0 - lambda * c);
            return (1.0 - residual) / lambda;
        }
        case ScheduleForm::ProductForm: {
            double p = 1.0;
            for (double a : s.coefficients) p *= (1.0 + a * lambda);
            return p;
        }
    }
    return 0.0;
}

/// Residual polynomial r(lambda) = 1 - lambda p(lambda).
inline double residual_polynomial(const PolySchedule& s, double lambda) {
    return 1.0 - lambda * schedule_polynomial(s, lambda);
}

namespace detail {

inline void require_interval(const GramSpectrum& k, const PolySchedule& s) {
    const double slack = 1e-12 * std::max(1.0, std::abs(k.lambda_max));
    if (k.lambda_min < s.lo - slack || k.lambda_max > s.hi + slack)
        throw ContractError("schedule interval [" + std::to_string(s.lo) + ", " + std::to_string(s.hi) +
                            "] does not contain the spectrum [" + std::to_string(k.lambda_min) + ", " +
                            std::to_string(k.lambda_max) + "]");
}

}  // namespace detail

/// Materializes the schedule's matrix polynomial at K.
///   NeumannSum:          Horner-style affine recurrence S <- I + A S, A = I - K/lambda_max
///   ChebyshevIteration:  q_L(K) evaluated on the spectrum of K
///   ProductForm:         prod_l (I + alpha_l K)
inline Matrix apply_inverse_schedule(const GramSpectrum& k, const PolySchedule& s) {
    const Eigen::Index n = k.size();
    if (s.form != ScheduleForm::ProductForm || s.hi > 0.0) detail::require_interval(k, s);
    switch (s.form) {
        case ScheduleForm::NeumannSum: {
            if (s.depth == 0) return Matrix::Zero(n, n);
            const double step = s.coefficients.at(0);
            const Matrix a = Matrix::Identity(n, n) - step * k.matrix;
            Matrix acc = Matrix::Identity(n, n);
            for (int m = 1; m < s.depth; ++m) acc = Matrix::Identity(n, n) + a * acc;
            return step * acc;
        }
        case ScheduleForm::ChebyshevIteration:
            return spectral_apply(SymmetricEigen{k.eigenvalues, k.eigenvectors, 0},
                                  [&](double l) { return schedule_polynomial(s, l); });
        case ScheduleForm::ProductForm: {
            Matrix acc = Matrix::Identity(n, n);
            for (double a : s.coefficients) acc = acc + a * (k.matrix * acc);
            return acc;
        }
    }
    return Matrix();
}

/// ||approx - K^{-1}||_2 through the spectrum of the symmetrized difference.
inline double inverse_error(const GramSpectrum& k, const Matrix& approx) {
    if (approx.rows() != k.size() || approx.cols() != k.size())
        throw InputError("inverse_error: shape mismatch");
    return symmetric_norm2(symmetrize(approx - k.inverse()));
}

/// Sup-norm error of the schedule's scalar polynomial against 1/lambda on a
/// uniform grid over [lo, hi] (endpoints included).
inline double scalar_inverse_error(const PolySchedule& s, double lo, double hi, int grid = 4001) {
    double worst = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double l = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
        worst = std::max(worst, std::abs(schedule_polynomial(s, l) - 1.0 / l));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Minimax oracle for 1/mu

struct MinimaxResult {
    int degree = 0;
    double a = 0.0;
    double b = 0.0;
    double error = 0.0;          ///< best sup-norm error on the grid
    double levelled = 0.0;       ///< lower bracket from the last reference
    Vector witness_coefficients; ///< Chebyshev-basis coefficients on [a, b]
    int grid_size = 0;
    int alternations = 0;
    int iterations = 0;

    /// Evaluate the witness polynomial at mu.
    double operator()(double mu) const {
        const double t = (2.0 * mu - a - b) / (b - a);
        double t0 = 1.0, t1 = t, acc = witness_coefficients[0];
        if (witness_coefficients.size() > 1) acc += witness_coefficients[1] * t1;
        for (Eigen::Index j = 2; j < witness_coefficients.size(); ++j) {
            const double t2 = 2.0 * t * t1 - t0;
            acc += witness_coefficients[j] * t2;
            t0 = t1;
            t1 = t2;
        }
        return acc;
    }
};

inline constexpr int kDefaultMinimaxGrid = 2000;

/// Best degree-`degree` polynomial approximation of 1/mu on a uniform grid of
/// `grid_size` points over [a, b], by discrete Remez exchange.
inline MinimaxResult minimax_oracle(double a, double b, int degree, int grid_size = kDefaultMinimaxGrid) {
    if (!(a > 0.0) || !(b > a)) throw InputError("minimax_oracle: need 0 < a < b");
    if (degree < 0) throw InputError("minimax_oracle: negative degree");
    if (grid_size < 10 * (degree + 2)) throw InputError("minimax_oracle: grid_size < 10 (degree + 2)");
    const Eigen::Index n = grid_size;
    const Eigen::Index m = degree + 1;
    Matrix basis(n, m);
    Vector target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double t = (2.0 * mu - a - b) / (b - a);
        target[i] = 1.0 / mu;
        double t0 = 1.0, t1 = t;
        basis(i, 0) = 1.0;
        if (m > 1) basis(i, 1) = t;
        for (Eigen::Index j = 2; j < m; ++j) {
            const double t2 = 2.0 * t * t1 - t0;
            basis(i, j) = t2;
            t0 = t1;
            t1 = t2;
        }
    }
    const auto mm = discrete_minimax(basis, target, chebyshev_reference(n, m));
    MinimaxResult r;
    r.degree = degree;
    r.a = a;
    r.b = b;
    r.error = mm.error;
    r.levelled = mm.levelled;
    r.witness_coefficients = mm.coefficients;
    r.grid_size = grid_size;
    r.alternations = mm.alternations;
    r.iterations = mm.iterations;
    return r;
}

/// (2 / (a + b)) rho^L with rho = (sqrt(b/a) - 1) / (sqrt(b/a) + 1).
inline double chebyshev_barrier(double a, double b, int degree) {
    if (!(a > 0.0) || !(b > a)) throw InputError("chebyshev_barrier: need 0 < a < b");
    return 2.0 / (a + b) * std::pow(chebyshev_rate(b / a), degree);
}

/// Least-squares slope of log(errors) against degrees.
inline double log_slope(const std::vector<double>& degrees, const std::vector<double>& errors) {
    const auto n = static_cast<double>(degrees.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        const double y = std::log(errors[i]);
        sx += degrees[i];
        sy += y;
        sxx += degrees[i] * degrees[i];
        sxy += degrees[i] * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Product form

/// e_0..e_L of the alphas: prod(1 + alpha_l z) = sum_m e_m z^m.
inline std::vector<double> elementary_symmetric(const std::vector<double>& alphas) {
    std::vector<double> e(alphas.size() + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t l = 0; l < alphas.size(); ++l)
        for (std::size_t m = l + 1; m >= 1; --m) e[m] += alphas[l] * e[m - 1];
    return e;
}

/// sum_m e_m K^m H.
inline Matrix expanded_product(const std::vector<double>& alphas, const Matrix& k, const Matrix& h) {
    const auto e = elementary_symmetric(alphas);
    Matrix power = h;
    Matrix acc = e[0] * h;
    for (std::size_t m = 1; m < e.size(); ++m) {
        power = k * power;
        acc += e[m] * power;
    }
    return acc;
}

struct ProductFormFit {
    int depth = 0;
    double error = 0.0;              ///< sup |p - 1/lambda| on the grid for the best p with p(0) = 1
    std::vector<double> coefficients;  ///< p(lambda) = 1 + sum_m c_m lambda^m, m = 1..L
    bool realizable = false;         ///< all roots real, so p = prod(1 + alpha_l lambda)
    std::vector<double> alphas;      ///< valid when realizable
    double literal_error = 0.0;      ///< error of alpha_l = -1/x_l (Chebyshev nodes)
};

/// Best sup-norm approximation of 1/lambda on [lo, hi] over degree-L
/// polynomials with p(0) = 1 (the closure of the product-form family), plus
/// the error of the literal Chebyshev-node product for comparison.
inline ProductFormFit best_product_form(double lo, double hi, int depth, int grid_size = kDefaultMinimaxGrid) {
    if (depth < 1) throw InputError("best_product_form: depth must be >= 1");
    if (!(lo > 0.0) || !(hi > lo)) throw InputError("best_product_form: need 0 < lo < hi");
    const Eigen::Index n = grid_size;
    const Eigen::Index m = depth;
    Matrix basis(n, m);
    Vector target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double u = l / hi;  // scaled monomials u^m keep the basis O(1)
        double pw = 1.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            pw *= u;
            basis(i, j) = pw;
        }
        target[i] = 1.0 / l - 1.0;
    }
    const auto mm = discrete_minimax(basis, target, chebyshev_reference(n, m));
    ProductFormFit fit;
    fit.depth = depth;
    fit.error = mm.error;
    for (Eigen::Index j = 0; j < m; ++j) fit.coefficients.push_back(mm.coefficients[j] / std::pow(hi, j + 1));

    // roots of 1 + sum c_m lambda^m via the companion matrix
    const double lead = fit.coefficients.back();
    if (lead != 0.0) {
        Matrix comp = Matrix::Zero(m, m);
        for (Eigen::Index i = 1; i < m; ++i) comp(i, i - 1) = 1.0;
        comp(0, m - 1) = -1.0 / lead;
        for (Eigen::Index j = 1; j < m; ++j) comp(j, m - 1) = -fit.coefficients[static_cast<std::size_t>(j - 1)] / lead;
        const Eigen::EigenSolver<Matrix> es(comp, false);
        fit.realizable = true;
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto root = es.eigenvalues()[i];
            if (std::abs(root.imag()) > 1e-9 * std::max(1.0, std::abs(root))) {
                fit.realizable = false;
                break;
            }
            fit.alphas.push_back(-1.0 / root.real());
        }
        if (!fit.realizable) fit.alphas.clear();
    }
    fit.literal_error = scalar_inverse_error(chebyshev_product_schedule(lo, hi, depth), lo, hi);
    return fit;
}

/// Smallest depth whose scalar polynomial reaches sup |p - 1/lambda| <= eps / lo
/// on [lo, hi] (error relative to ||K^{-1}||). Returns -1 if max_depth is hit.
inline int required_depth(ScheduleForm form, double lo, double hi, double eps, int max_depth = 5000) {
    for (int l = 1; l <= max_depth; ++l) {
        const PolySchedule s =
            form == ScheduleForm::NeumannSum ? neumann_schedule(lo, hi, l) : chebyshev_schedule(lo, hi, l);
        if (scalar_inverse_error(s, lo, hi, 2001) <= eps / lo) return l;
    }
    return -1;
}

}  // namespace nplab
