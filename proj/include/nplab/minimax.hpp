#pragma once

/// @file minimax.hpp
/// Discrete linear minimax (Chebyshev) approximation by Remez exchange.
///
/// Given samples f(x_i) on a sorted grid and a Haar basis evaluated on the
/// grid (N x M matrix), finds c minimizing max_i |f(x_i) - (B c)_i|.
/// Used for polynomial approximation of 1/mu and for cosine-series
/// approximation of 1/K^(omega).

#include "nplab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <cstdio>
#include <limits>
#include <vector>

namespace nplab {

struct DiscreteMinimax {
    Vector coefficients;
    Vector residual;          ///< f - B c on the whole grid
    double error = 0.0;       ///< max |residual|: the achieved sup-norm error
    double levelled = 0.0;    ///< |E| of the last reference: a lower bracket
    int iterations = 0;
    int alternations = 0;     ///< sign-alternating extrema of the residual
    std::vector<Eigen::Index> reference;
};

struct MinimaxOptions {
    int max_iterations = 100;
    double relative_tolerance = 1e-10;
};

namespace detail {

/// Indices of the max-|r| point (leftmost on ties) of each constant-sign run.
inline std::vector<Eigen::Index> sign_run_extrema(const Vector& r) {
    std::vector<Eigen::Index> out;
    const Eigen::Index n = r.size();
    Eigen::Index i = 0;
    while (i < n) {
        // zero-valued samples join whichever run they touch first
        int sign = r[i] > 0 ? 1 : (r[i] < 0 ? -1 : 0);
        Eigen::Index best = i;
        Eigen::Index j = i + 1;
        while (j < n) {
            const int s = r[j] > 0 ? 1 : (r[j] < 0 ? -1 : 0);
            if (sign == 0) sign = s;
            if (s != 0 && s != sign) break;
            if (std::abs(r[j]) > std::abs(r[best])) best = j;
            ++j;
        }
        out.push_back(best);
        i = j;
    }
    return out;
}

inline int count_alternations(const Vector& r, double level) {
    // extrema of magnitude >= level (minus rounding) with alternating signs
    const auto ext = sign_run_extrema(r);
    int count = 0;
    int last = 0;
    for (auto idx : ext) {
        if (std::abs(r[idx]) < level * (1.0 - 1e-6)) continue;
        const int s = r[idx] > 0 ? 1 : -1;
        if (s != last) {
            ++count;
            last = s;
        }
    }
    return count;
}

inline std::vector<Eigen::Index> thin_reference(std::vector<Eigen::Index> cand, const Vector& r,
                                                std::size_t want) {
    while (cand.size() > want) {
        std::size_t k = 0;
        for (std::size_t i = 1; i < cand.size(); ++i)
            if (std::abs(r[cand[i]]) < std::abs(r[cand[k]])) k = i;
        const std::size_t excess = cand.size() - want;
        if (k == 0 || k + 1 == cand.size()) {
            cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(k));
        } else if (excess == 1) {
            // removing an interior point would break alternation; drop an end
            if (std::abs(r[cand.front()]) <= std::abs(r[cand.back()]))
                cand.erase(cand.begin());
            else
                cand.pop_back();
        } else {
            const std::size_t partner =
                std::abs(r[cand[k - 1]]) <= std::abs(r[cand[k + 1]]) ? k - 1 : k + 1;
            const std::size_t lo = std::min(k, partner);
            cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(lo),
                       cand.begin() + static_cast<std::ptrdiff_t>(lo + 2));
        }
    }
    return cand;
}

}  // namespace detail

/// Remez exchange on a discrete grid. `initial_reference` holds M+1 sorted
/// grid indices. Throws NumericError (value = current max error) if the
/// exchange does not settle within the iteration budget.
inline DiscreteMinimax discrete_minimax(const Matrix& basis, const Vector& target,
                                        std::vector<Eigen::Index> initial_reference,
                                        MinimaxOptions opts = {}) {
    const Eigen::Index n = basis.rows();
    const Eigen::Index m = basis.cols();
    if (target.size() != n) throw InputError("discrete_minimax: target/basis size mismatch");
    if (n < m + 1) throw InputError("discrete_minimax: grid smaller than basis size + 1");
    if (static_cast<Eigen::Index>(initial_reference.size()) != m + 1)
        throw InputError("discrete_minimax: reference must hold basis size + 1 points");

    DiscreteMinimax out;
    std::vector<Eigen::Index> ref = std::move(initial_reference);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        Matrix sys(m + 1, m + 1);
        Vector rhs(m + 1);
        for (Eigen::Index i = 0; i <= m; ++i) {
            sys.row(i).head(m) = basis.row(ref[static_cast<std::size_t>(i)]);
            sys(i, m) = (i % 2 == 0) ? 1.0 : -1.0;
            rhs[i] = target[ref[static_cast<std::size_t>(i)]];
        }
        const Vector sol = sys.fullPivLu().solve(rhs);
        out.coefficients = sol.head(m);
        out.levelled = std::abs(sol[m]);
        out.residual = target - basis * out.coefficients;
        out.error = out.residual.cwiseAbs().maxCoeff();
        out.iterations = it;
        out.reference = ref;

        // bracket narrower than the roundoff in evaluating the residual counts as settled
        const double floor = 100.0 * std::numeric_limits<double>::epsilon() *
                             (target.cwiseAbs().maxCoeff() + (basis.cwiseAbs() * out.coefficients.cwiseAbs()).maxCoeff());
        if (out.error - out.levelled <= std::max(opts.relative_tolerance * out.error, floor) || out.error < 1e-300) {
            out.alternations = detail::count_alternations(out.residual, out.levelled);
            return out;
        }

        auto cand = detail::sign_run_extrema(out.residual);
        Eigen::Index global = 0;
        out.residual.cwiseAbs().maxCoeff(&global);
        std::vector<Eigen::Index> next;
        if (static_cast<Eigen::Index>(cand.size()) >= m + 1) {
            next = detail::thin_reference(cand, out.residual, static_cast<std::size_t>(m + 1));
        } else {
            // single-point exchange: swap the global maximum into the reference
            next = ref;
            auto pos = std::lower_bound(next.begin(), next.end(), global);
            const auto sgn = [&](Eigen::Index i) { return out.residual[i] > 0 ? 1 : -1; };
            if (pos == next.end()) {
                if (sgn(next.back()) == sgn(global))
                    next.back() = global;
                else {
                    next.erase(next.begin());
                    next.push_back(global);
                }
            } else if (pos == next.begin()) {
                if (sgn(next.front()) == sgn(global))
                    next.front() = global;
                else {
                    next.pop_back();
                    next.insert(next.begin(), global);
                }
            } else {
                auto prev = pos - 1;
                if (sgn(*prev) == sgn(global))
                    *prev = global;
                else
                    *pos = global;
            }
        }
        if (next == ref) {
            out.alternations = detail::count_alternations(out.residual, out.levelled);
            return out;
        }
        ref = std::move(next);
    }
    char msg[96];
    std::snprintf(msg, sizeof msg, "discrete_minimax: exchange did not converge; bracket [%.3e, %.3e]", out.levelled,
                  out.error);
    throw NumericError(msg, out.error);
}

/// M+1 grid indices nearest to the Chebyshev-Lobatto points of the index range.
inline std::vector<Eigen::Index> chebyshev_reference(Eigen::Index grid_size, Eigen::Index basis_size) {
    std::vector<Eigen::Index> ref;
    const Eigen::Index k = basis_size;  // k+1 points
    for (Eigen::Index i = 0; i <= k; ++i) {
        const double t = k == 0 ? 0.0 : 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(k)));
        auto idx = static_cast<Eigen::Index>(std::lround(t * static_cast<double>(grid_size - 1)));
        if (!ref.empty() && idx <= ref.back()) idx = ref.back() + 1;
        ref.push_back(idx);
    }
    // push back inside the grid if rounding ran off the end
    for (Eigen::Index i = k; i >= 0; --i) {
        const Eigen::Index cap = grid_size - 1 - (k - i);
        auto& r = ref[static_cast<std::size_t>(i)];
        if (r > cap) r = cap;
    }
    return ref;
}

}  // namespace nplab
