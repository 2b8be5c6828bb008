#pragma once

/// @file latent.hpp
/// Rank-k latent predictive distributions and the covariance, mean and
/// Mercer-tail bottlenecks they face against a GP posterior.

#include "nplab/cnp.hpp"
#include "nplab/core.hpp"
#include "nplab/gp_oracle.hpp"
#include "nplab/jacobi.hpp"
#include "nplab/kernels.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <vector>

namespace nplab {

using FeatureMap = std::function<Vector(const Point&)>;
using OffsetMap = std::function<double(const Point&)>;

/// a_j(x) = x_0^j, j = 0..k-1.
inline FeatureMap polynomial_features(Eigen::Index k) {
    return [k](const Point& x) {
        Vector a(k);
        double p = 1.0;
        for (Eigen::Index j = 0; j < k; ++j, p *= x[0]) a[j] = p;
        return a;
    };
}

/// 1, cos x, sin x, cos 2x, sin 2x, ... truncated to k entries.
inline FeatureMap fourier_features(Eigen::Index k) {
    return [k](const Point& x) {
        Vector a(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            const double f = static_cast<double>((j + 1) / 2);
            a[j] = j == 0 ? 1.0 : (j % 2 ? std::cos(f * x[0]) : std::sin(f * x[0]));
        }
        return a;
    };
}

inline OffsetMap zero_offset() {
    return [](const Point&) { return 0.0; };
}

struct RankKLatent {
    Eigen::Index k = 0;
    FeatureMap a;
    OffsetMap b = zero_offset();
    Vector m;
    Matrix S;
    double sigma2 = 0.0;

    void validate() const {
        if (k < 0) throw InputError("latent: k must be nonnegative");
        if (m.size() != k || S.rows() != k || S.cols() != k) throw InputError("latent: m and S must have size k");
        if (sigma2 < 0.0) throw InputError("latent: sigma2 must be nonnegative");
        if (k > 0 && !a) throw InputError("latent: feature map required");
        if (k == 0) return;
        if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + S.cwiseAbs().maxCoeff()))
            throw InputError("latent: S must be symmetric");
        if (jacobi_eigen(S).values.minCoeff() < -1e-10) throw InputError("latent: S must be positive semidefinite");
    }

    Matrix design(const Matrix& targets) const {
        Matrix A(targets.rows(), k);
        for (Eigen::Index i = 0; i < targets.rows(); ++i) {
            if (k == 0) continue;
            const Vector row = a(targets.row(i).transpose());
            if (row.size() != k) throw InputError("latent: feature map must return k values");
            A.row(i) = row.transpose();
        }
        return A;
    }
};

struct LatentPredictive {
    Vector mean;
    Matrix cov;
    Vector excess_eigenvalues;  ///< eigenvalues of cov - sigma2 I, descending
    double trace = 0.0;

    /// eigenvalue k+1 of cov - sigma2 I (0 when m <= k).
    double eigenvalue_after(Eigen::Index k) const {
        return k < excess_eigenvalues.size() ? excess_eigenvalues[k] : 0.0;
    }
};

/// mean = A m + b, cov = A S A^T + sigma2 I.
inline LatentPredictive latent_predictive(const RankKLatent& model, const Matrix& targets) {
    model.validate();
    const Matrix A = model.design(targets);
    LatentPredictive p;
    p.mean = model.k > 0 ? Vector(A * model.m) : Vector::Zero(targets.rows());
    for (Eigen::Index i = 0; i < targets.rows(); ++i) p.mean[i] += model.b(targets.row(i).transpose());
    const Matrix low = model.k > 0 ? symmetrize(A * model.S * A.transpose()) : Matrix::Zero(targets.rows(), targets.rows());
    p.cov = low + model.sigma2 * Matrix::Identity(targets.rows(), targets.rows());
    const Vector ev = jacobi_eigen(low).values;
    p.excess_eigenvalues = ev.reverse();
    p.trace = low.trace();
    return p;
}

/// Random rank-k model with S = G G^T / k.
inline RankKLatent random_latent(Rng& rng, Eigen::Index k, FeatureMap a, double sigma2 = 0.0) {
    RankKLatent model;
    model.k = k;
    model.a = std::move(a);
    model.m = rng.normal_vector(k);
    const Matrix g = rng.normal_matrix(k, k);
    model.S = k > 0 ? symmetrize(g * g.transpose() / static_cast<double>(k)) : Matrix(0, 0);
    model.sigma2 = sigma2;
    return model;
}

// ---------------------------------------------------------------------------
// GP posterior covariance rank

struct CovRankReport {
    Vector eigenvalues;  ///< descending
    double min_eig = 0.0;
    Eigen::Index rank = 0;  ///< eigenvalues > 1e-10 trace
};

inline CovRankReport gp_cov_rank_check(const KernelSpec& spec, const Matrix& context, const Matrix& targets) {
    const Matrix cov = posterior_cov(spec, context, targets);
    CovRankReport r;
    r.eigenvalues = jacobi_eigen(cov).values.reverse();
    r.min_eig = r.eigenvalues.size() ? r.eigenvalues.minCoeff() : 0.0;
    const double tol = 1e-10 * cov.trace();
    for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i)
        if (r.eigenvalues[i] > tol) ++r.rank;
    return r;
}

/// Smallest latent dimension whose rank can match the GP posterior covariance.
inline std::vector<Eigen::Index> required_latent_rank(const KernelSpec& spec, const Matrix& context,
                                                      const std::vector<Matrix>& target_sets) {
    std::vector<Eigen::Index> out;
    for (const auto& t : target_sets) out.push_back(gp_cov_rank_check(spec, context, t).rank);
    return out;
}

// ---------------------------------------------------------------------------
// Mean matching

struct MeanMatchingReport {
    double residual = 0.0;     ///< sqrt(sum_{i>k} sigma_i^2)
    double frobenius = 0.0;    ///< |Phi|_F
    Vector singular_values;
    Matrix phi;
};

/// Phi has rows phi(x_t)^T = (K^{-1} k(X_C, x_t))^T; the best rank-k
/// factorization leaves the trailing singular mass.
inline MeanMatchingReport mean_matching_residual(const KernelSpec& spec, const Matrix& context, const Matrix& targets,
                                                 Eigen::Index k) {
    if (context.rows() != targets.rows()) throw InputError("mean_matching_residual: need as many targets as context points");
    if (k < 0) throw InputError("mean_matching_residual: k must be nonnegative");
    const Eigen::Index n = context.rows();
    const auto g = gram_spectrum(spec, context);
    MeanMatchingReport r;
    r.phi.resize(n, n);
    for (Eigen::Index t = 0; t < n; ++t)
        r.phi.row(t) = posterior_weights(g, spec, context, targets.row(t).transpose()).weights.transpose();
    const Eigen::JacobiSVD<Matrix> svd(r.phi);
    r.singular_values = svd.singularValues();
    if (!(r.singular_values[n - 1] > 1e-12 * r.singular_values[0]))
        throw DegenerateError("mean_matching_residual: Phi is singular; reconfigure the targets");
    r.frobenius = r.phi.norm();
    double tail = 0.0;
    for (Eigen::Index i = k; i < n; ++i) tail += r.singular_values[i] * r.singular_values[i];
    r.residual = std::sqrt(tail);
    return r;
}

// ---------------------------------------------------------------------------
// Mercer tail

inline constexpr double kMercerZero = 1e-12;  ///< eigenvalues below this fraction of the trace are zero

struct MercerTail {
    Vector eigenvalues;  ///< descending, of the weighted grid Gram
    double tail_trace = 0.0;
    double best_rank_k_error = 0.0;  ///< trace norm of G - G_k
    double trace = 0.0;
};

/// Grid Gram with uniform weight 1/m as a proxy for the Mercer operator.
inline MercerTail mercer_tail(const KernelSpec& spec, const Matrix& grid, Eigen::Index k) {
    const Eigen::Index m = grid.rows();
    if (k < 0) throw InputError("mercer_tail: k must be nonnegative");
    if (m < 8 * k) throw InputError("mercer_tail: need m >= 8k grid points");
    const Matrix g = cross_gram(spec, grid, grid) / static_cast<double>(m);
    const auto eig = jacobi_eigen(g);
    MercerTail r;
    r.trace = g.trace();
    r.eigenvalues = eig.values.reverse();
    const double zero = kMercerZero * r.trace;
    for (Eigen::Index i = 0; i < m; ++i)
        if (std::abs(r.eigenvalues[i]) <= zero) r.eigenvalues[i] = 0.0;
    for (Eigen::Index i = k; i < m; ++i) r.tail_trace += r.eigenvalues[i];

    // best rank-k PSD approximation, measured independently in trace norm
    const Matrix vecs = eig.vectors.rowwise().reverse();
    Matrix gk = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < std::min(k, m); ++i)
        gk += std::max(r.eigenvalues[i], 0.0) * vecs.col(i) * vecs.col(i).transpose();
    const Eigen::SelfAdjointEigenSolver<Matrix> diff(symmetrize(g - gk), Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double v = diff.eigenvalues()[i];
        if (std::abs(v) > zero) r.best_rank_k_error += std::abs(v);
    }
    return r;
}

inline Matrix uniform_grid(Eigen::Index m, double lo, double hi) {
    Matrix x(m, 1);
    for (Eigen::Index i = 0; i < m; ++i) x(i, 0) = m == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    return x;
}

// ---------------------------------------------------------------------------
// Encoder bottleneck

using LatentBuilder = std::function<RankKLatent(const Vector& hbar)>;

/// k = |hbar| Fourier features with m = tanh(hbar) and S = 0.1 I + u u^T, u = sin(hbar).
inline LatentBuilder encoding_latent() {
    return [](const Vector& h) {
        RankKLatent model;
        model.k = h.size();
        model.a = fourier_features(h.size());
        model.m = h.array().tanh();
        const Vector u = h.array().sin();
        model.S = 0.1 * Matrix::Identity(h.size(), h.size()) + u * u.transpose();
        model.sigma2 = 0.01;
        return model;
    };
}

struct BottleneckReport {
    double encoding_gap = 0.0;
    double mean_gap = 0.0;  ///< max over target sets
    double cov_gap = 0.0;
    bool identical(double tol = 1e-6) const { return mean_gap <= tol && cov_gap <= tol; }
};

/// Routes both contexts through the same mean encoding and latent builder.
inline BottleneckReport encoder_bottleneck_lift(const Encoder& enc, const ContextSet& a, const ContextSet& b,
                                                const LatentBuilder& build, const std::vector<Matrix>& target_sets) {
    const Vector ha = mean_encoding(enc, a), hb = mean_encoding(enc, b);
    BottleneckReport r;
    r.encoding_gap = (ha - hb).norm();
    const auto ma = build(ha), mb = build(hb);
    for (const auto& t : target_sets) {
        const auto pa = latent_predictive(ma, t), pb = latent_predictive(mb, t);
        r.mean_gap = std::max(r.mean_gap, (pa.mean - pb.mean).cwiseAbs().maxCoeff());
        r.cov_gap = std::max(r.cov_gap, (pa.cov - pb.cov).cwiseAbs().maxCoeff());
    }
    return r;
}

}  // namespace nplab
