#pragma once

/// @file jacobi.hpp
/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Every spectral quantity in the library (condition numbers, operator norms,
/// covariance ranks) goes through this routine so that all modules measure the
/// same spectrum. Intended for n <= 256.

#include "nplab/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace nplab {

struct SymmetricEigen {
    Vector values;   ///< ascending
    Matrix vectors;  ///< orthonormal columns, vectors.col(i) pairs with values[i]
    int sweeps = 0;
};

struct JacobiOptions {
    double tolerance = 1e-12;  ///< on off(A)_F / ||A||_F
    int max_sweeps = 100;
};

namespace detail {

inline double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace detail

/// Eigendecomposition of the symmetric part of `input`.
/// Throws NumericError carrying the remaining off-diagonal norm when the sweep
/// budget is exhausted.
inline SymmetricEigen jacobi_eigen(const Matrix& input, JacobiOptions opts = {}) {
    if (input.rows() != input.cols()) throw InputError("jacobi_eigen: matrix is not square");
    const Eigen::Index n = input.rows();
    Matrix a = symmetrize(input);
    Matrix v = Matrix::Identity(n, n);

    const double scale = a.norm();
    int sweep = 0;
    if (n > 1 && scale > 0.0) {
        const double target = opts.tolerance * scale;
        while (detail::off_diagonal_norm(a) > target) {
            if (sweep == opts.max_sweeps)
                throw NumericError("jacobi_eigen: no convergence within sweep budget",
                                   detail::off_diagonal_norm(a));
            ++sweep;
            for (Eigen::Index p = 0; p < n - 1; ++p) {
                for (Eigen::Index q = p + 1; q < n; ++q) {
                    const double apq = a(p, q);
                    if (apq == 0.0) continue;
                    // skip entries already negligible against both diagonals
                    if (std::abs(apq) < 1e-300 ||
                        (sweep > 3 && std::abs(apq) * 1e18 < std::abs(a(p, p)) &&
                         std::abs(apq) * 1e18 < std::abs(a(q, q)))) {
                        a(p, q) = a(q, p) = 0.0;
                        continue;
                    }
                    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                    const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                     (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    const double c = 1.0 / std::sqrt(t * t + 1.0);
                    const double s = t * c;
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double akp = a(k, p);
                        const double akq = a(k, q);
                        a(k, p) = c * akp - s * akq;
                        a(k, q) = s * akp + c * akq;
                    }
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double apk = a(p, k);
                        const double aqk = a(q, k);
                        a(p, k) = c * apk - s * aqk;
                        a(q, k) = s * apk + c * aqk;
                    }
                    a(p, q) = a(q, p) = 0.0;
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double vkp = v(k, p);
                        const double vkq = v(k, q);
                        v(k, p) = c * vkp - s * vkq;
                        v(k, q) = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    out.sweeps = sweep;
    return out;
}

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
inline double symmetric_norm2(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    const auto eig = jacobi_eigen(a);
    return std::max(std::abs(eig.values[0]), std::abs(eig.values[eig.values.size() - 1]));
}

/// f(A) = V f(Lambda) V^T for a symmetric eigendecomposition.
template <class F>
Matrix spectral_apply(const SymmetricEigen& eig, F&& f) {
    Vector fv(eig.values.size());
    for (Eigen::Index i = 0; i < fv.size(); ++i) fv[i] = f(eig.values[i]);
    return eig.vectors * fv.asDiagonal() * eig.vectors.transpose();
}

}  // namespace nplab
