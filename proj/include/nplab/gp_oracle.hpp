#pragma once

/// @file gp_oracle.hpp
/// Exact GP posterior quantities: the reference every architecture is
/// measured against. All solves go through GramSpectrum so that the
/// condition number of the system is always at hand.

#include "nplab/core.hpp"
#include "nplab/kernels.hpp"

#include <cmath>
#include <utility>

namespace nplab {

/// lambda_min below which a Gram matrix is treated as singular.
inline constexpr double kMinGramEigenvalue = 1e-8;

struct PosteriorWeights {
    Vector weights;  ///< w = K^{-1} k(X_C, x_t)
    Point target;
    double lambda_min = 0.0;

    double mean(const Vector& y) const { return weights.dot(y); }
};

/// Weights of the GP posterior mean mu(x_t|C) = k(x_t, X_C) K^{-1} y_C.
inline PosteriorWeights posterior_weights(const GramSpectrum& gram, const KernelSpec& spec,
                                          const Matrix& context, const Point& target) {
    if (gram.lambda_min <= kMinGramEigenvalue)
        throw NumericError("posterior_weights: near-singular Gram, lambda_min", gram.lambda_min);
    const Vector k = kernel_vector(spec, context, target);
    PosteriorWeights out;
    out.weights = gram.solve(k);
    out.target = target;
    out.lambda_min = gram.lambda_min;
    const double residual = (gram.matrix * out.weights - k).norm();
    if (residual > 1e-8 * k.norm() + 1e-300)
        throw NumericError("posterior_weights: solve residual too large", residual);
    return out;
}

inline PosteriorWeights posterior_weights(const KernelSpec& spec, const Matrix& context, const Point& target) {
    return posterior_weights(gram_spectrum(spec, context), spec, context, target);
}

inline double posterior_mean(const KernelSpec& spec, const Matrix& context, const Vector& y, const Point& target) {
    return posterior_weights(spec, context, target).mean(y);
}

namespace detail {

inline bool rows_coincide(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).norm() <= 1e-12 * (1.0 + a.row(i).norm());
}

inline void require_distinct(const Matrix& context, const Matrix& targets) {
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < targets.rows(); ++j)
            if (rows_coincide(targets, i, targets, j))
                throw DegenerateError("duplicated target locations");
        for (Eigen::Index j = 0; j < context.rows(); ++j)
            if (rows_coincide(targets, i, context, j))
                throw DegenerateError("target coincides with a context location");
    }
}

}  // namespace detail

/// Posterior covariance of f at the targets given noisy observations at the
/// context:  K_TT - K_TC (K_CC + (sigma2 + jitter) I)^{-1} K_CT.
inline Matrix posterior_cov(const KernelSpec& spec, const Matrix& context, const Matrix& targets,
                            double sigma2 = 0.0) {
    if (sigma2 < 0.0) throw InputError("posterior_cov: sigma2 must be nonnegative");
    if (targets.rows() == 0) return Matrix(0, 0);
    if (context.rows() > 0 && context.cols() != targets.cols())
        throw InputError("posterior_cov: dimension mismatch");
    detail::require_distinct(context, targets);
    const Matrix ktt = cross_gram(spec, targets, targets);
    if (context.rows() == 0) return ktt;
    Matrix kcc = gram_matrix(spec, context);
    kcc.diagonal().array() += sigma2;
    const GramSpectrum g = spectrum_of(kcc);
    if (g.lambda_min <= kMinGramEigenvalue)
        throw NumericError("posterior_cov: near-singular Gram, lambda_min", g.lambda_min);
    const Matrix kct = cross_gram(spec, context, targets);
    Matrix solved(kct.rows(), kct.cols());
    for (Eigen::Index j = 0; j < kct.cols(); ++j) solved.col(j) = g.solve(kct.col(j));
    return symmetrize(ktt - kct.transpose() * solved);
}

/// Closed-form two-point weights
///   w1 = (k_t1 k22 - k_t2 k12) / (k11 k22 - k12^2),
///   w2 = (k_t2 k11 - k_t1 k12) / (k11 k22 - k12^2),
/// with jitter on k11, k22.
inline std::pair<double, double> two_point_weight(const KernelSpec& spec, const Point& x1, const Point& x2,
                                                  const Point& target) {
    if ((x1 - x2).norm() <= 1e-12 * (1.0 + x1.norm()))
        throw DegenerateError("two_point_weight: context points coincide");
    const double k11 = eval_kernel(spec, x1, x1) + spec.jitter;
    const double k22 = eval_kernel(spec, x2, x2) + spec.jitter;
    const double k12 = eval_kernel(spec, x1, x2);
    const double kt1 = eval_kernel(spec, target, x1);
    const double kt2 = eval_kernel(spec, target, x2);
    const double det = k11 * k22 - k12 * k12;
    return {(kt1 * k22 - kt2 * k12) / det, (kt2 * k11 - kt1 * k12) / det};
}

}  // namespace nplab
