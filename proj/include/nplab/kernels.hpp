#pragma once

/// @file kernels.hpp
/// Kernel families, Gram assembly and Gram spectra.

#include "nplab/core.hpp"
#include "nplab/jacobi.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>

namespace nplab {

enum class KernelFamily { RBF, Matern12, Matern32, Matern52, Polynomial, ScaledNonstationary };

inline std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::RBF: return "rbf";
        case KernelFamily::Matern12: return "matern12";
        case KernelFamily::Matern32: return "matern32";
        case KernelFamily::Matern52: return "matern52";
        case KernelFamily::Polynomial: return "polynomial";
        case KernelFamily::ScaledNonstationary: return "scaled";
    }
    return "?";
}

/// Positive definite kernel k(x, x').
///
/// Stationary families are functions of r = |x - x'|:
///   RBF       v exp(-r^2 / 2l^2)
///   Matern12  v exp(-r/l)
///   Matern32  v (1 + sqrt3 r/l) exp(-sqrt3 r/l)
///   Matern52  v (1 + sqrt5 r/l + 5r^2/3l^2) exp(-sqrt5 r/l)
/// Polynomial is v (1 + <x,x'>/l^2)^degree. ScaledNonstationary is
/// s(x) s(x') base(x, x') for a positive amplitude s.
struct KernelSpec {
    KernelFamily family = KernelFamily::RBF;
    double lengthscale = 1.0;
    double variance = 1.0;
    double jitter = 1e-10;  ///< added to the Gram diagonal only
    int degree = 2;         ///< Polynomial only
    std::shared_ptr<const KernelSpec> base;              ///< ScaledNonstationary only
    std::function<double(const Point&)> amplitude;       ///< ScaledNonstationary only

    bool stationary() const {
        return family != KernelFamily::Polynomial && family != KernelFamily::ScaledNonstationary;
    }

    void validate() const {
        if (!(lengthscale > 0.0)) throw InputError("kernel: lengthscale must be positive");
        if (!(variance > 0.0)) throw InputError("kernel: variance must be positive");
        if (!(jitter >= 0.0)) throw InputError("kernel: jitter must be nonnegative");
        if (family == KernelFamily::Polynomial && degree < 0)
            throw InputError("kernel: polynomial degree must be nonnegative");
        if (family == KernelFamily::ScaledNonstationary && (!base || !amplitude))
            throw InputError("kernel: scaled kernel needs a base kernel and an amplitude");
    }

    KernelSpec with_jitter(double j) const {
        KernelSpec s = *this;
        s.jitter = j;
        return s;
    }
};

inline KernelSpec rbf_kernel(double lengthscale = 1.0, double variance = 1.0) {
    KernelSpec s;
    s.family = KernelFamily::RBF;
    s.lengthscale = lengthscale;
    s.variance = variance;
    s.jitter = 1e-10 * variance;
    return s;
}

/// nu in {0.5, 1.5, 2.5}.
inline KernelSpec matern_kernel(double nu, double lengthscale = 1.0, double variance = 1.0) {
    KernelSpec s;
    if (nu == 0.5)
        s.family = KernelFamily::Matern12;
    else if (nu == 1.5)
        s.family = KernelFamily::Matern32;
    else if (nu == 2.5)
        s.family = KernelFamily::Matern52;
    else
        throw InputError("matern_kernel: nu must be 1/2, 3/2 or 5/2");
    s.lengthscale = lengthscale;
    s.variance = variance;
    s.jitter = 1e-10 * variance;
    return s;
}

inline KernelSpec polynomial_kernel(int degree, double lengthscale = 1.0, double variance = 1.0) {
    KernelSpec s;
    s.family = KernelFamily::Polynomial;
    s.degree = degree;
    s.lengthscale = lengthscale;
    s.variance = variance;
    s.jitter = 1e-10 * variance;
    return s;
}

inline KernelSpec scaled_kernel(const KernelSpec& base, std::function<double(const Point&)> amplitude) {
    KernelSpec s;
    s.family = KernelFamily::ScaledNonstationary;
    s.base = std::make_shared<const KernelSpec>(base);
    s.amplitude = std::move(amplitude);
    s.lengthscale = base.lengthscale;
    s.variance = base.variance;
    s.jitter = base.jitter;
    return s;
}

/// Stationary profile k(r) for r >= 0.
inline double stationary_profile(const KernelSpec& spec, double r) {
    const double u = r / spec.lengthscale;
    switch (spec.family) {
        case KernelFamily::RBF: return spec.variance * std::exp(-0.5 * u * u);
        case KernelFamily::Matern12: return spec.variance * std::exp(-u);
        case KernelFamily::Matern32: {
            const double a = std::sqrt(3.0) * u;
            return spec.variance * (1.0 + a) * std::exp(-a);
        }
        case KernelFamily::Matern52: {
            const double a = std::sqrt(5.0) * u;
            return spec.variance * (1.0 + a + a * a / 3.0) * std::exp(-a);
        }
        default: throw InputError("stationary_profile: kernel is not stationary");
    }
}

inline double eval_kernel(const KernelSpec& spec, const Point& x, const Point& xp) {
    if (x.size() != xp.size()) throw InputError("eval_kernel: dimension mismatch");
    switch (spec.family) {
        case KernelFamily::Polynomial: {
            const double base = 1.0 + x.dot(xp) / (spec.lengthscale * spec.lengthscale);
            return spec.variance * std::pow(base, spec.degree);
        }
        case KernelFamily::ScaledNonstationary:
            return spec.amplitude(x) * spec.amplitude(xp) * eval_kernel(*spec.base, x, xp);
        default: return stationary_profile(spec, (x - xp).norm());
    }
}

/// log k(x, x'), evaluated analytically where possible so that distant pairs
/// do not underflow. Throws InputError when the kernel value is not positive.
inline double log_kernel(const KernelSpec& spec, const Point& x, const Point& xp) {
    if (x.size() != xp.size()) throw InputError("log_kernel: dimension mismatch");
    const double lv = std::log(spec.variance);
    switch (spec.family) {
        case KernelFamily::RBF: {
            const double u = (x - xp).norm() / spec.lengthscale;
            return lv - 0.5 * u * u;
        }
        case KernelFamily::Matern12: return lv - (x - xp).norm() / spec.lengthscale;
        case KernelFamily::Matern32: {
            const double a = std::sqrt(3.0) * (x - xp).norm() / spec.lengthscale;
            return lv + std::log1p(a) - a;
        }
        case KernelFamily::Matern52: {
            const double a = std::sqrt(5.0) * (x - xp).norm() / spec.lengthscale;
            return lv + std::log1p(a + a * a / 3.0) - a;
        }
        case KernelFamily::ScaledNonstationary: {
            const double sx = spec.amplitude(x);
            const double sxp = spec.amplitude(xp);
            if (!(sx > 0.0) || !(sxp > 0.0))
                throw InputError("log_kernel: amplitude must be positive");
            return std::log(sx) + std::log(sxp) + log_kernel(*spec.base, x, xp);
        }
        case KernelFamily::Polynomial: {
            const double k = eval_kernel(spec, x, xp);
            if (!(k > 0.0)) throw InputError("log_kernel: kernel value is not positive");
            return std::log(k);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Rows of `locations` are points.
inline Matrix cross_gram(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw InputError("cross_gram: dimension mismatch");
    Matrix k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            k(i, j) = eval_kernel(spec, a.row(i).transpose(), b.row(j).transpose());
    return k;
}

/// k(X, x) as a column vector.
inline Vector kernel_vector(const KernelSpec& spec, const Matrix& locations, const Point& x) {
    if (locations.cols() != x.size()) throw InputError("kernel_vector: dimension mismatch");
    Vector k(locations.rows());
    for (Eigen::Index i = 0; i < locations.rows(); ++i)
        k[i] = eval_kernel(spec, locations.row(i).transpose(), x);
    return k;
}

/// K(X, X) + jitter I.
inline Matrix gram_matrix(const KernelSpec& spec, const Matrix& locations) {
    const Eigen::Index n = locations.rows();
    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = eval_kernel(spec, locations.row(i).transpose(), locations.row(j).transpose());
            k(i, j) = v;
            k(j, i) = v;
        }
        k(i, i) += spec.jitter;
    }
    return k;
}

/// A symmetric matrix together with its full eigendecomposition.
struct GramSpectrum {
    Matrix matrix;
    Vector eigenvalues;  ///< ascending
    Matrix eigenvectors;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double kappa = 0.0;

    Eigen::Index size() const { return matrix.rows(); }

    /// Inverse through the spectrum.
    Matrix inverse() const {
        return spectral_apply(SymmetricEigen{eigenvalues, eigenvectors, 0}, [](double l) { return 1.0 / l; });
    }

    /// K^{-1} b through the spectrum with one step of iterative refinement.
    Vector solve(const Vector& b) const {
        const Matrix& v = eigenvectors;
        auto apply_inv = [&](const Vector& r) -> Vector {
            return v * (v.transpose() * r).cwiseQuotient(eigenvalues);
        };
        Vector x = apply_inv(b);
        x += apply_inv(b - matrix * x);
        return x;
    }
};

/// Spectrum of an arbitrary symmetric matrix.
inline GramSpectrum spectrum_of(const Matrix& m) {
    if (m.rows() == 0) throw InputError("spectrum_of: empty matrix");
    auto eig = jacobi_eigen(m);
    GramSpectrum g;
    g.matrix = symmetrize(m);
    g.eigenvalues = std::move(eig.values);
    g.eigenvectors = std::move(eig.vectors);
    g.lambda_min = g.eigenvalues[0];
    g.lambda_max = g.eigenvalues[g.eigenvalues.size() - 1];
    g.kappa = g.lambda_min > 0.0 ? g.lambda_max / g.lambda_min : std::numeric_limits<double>::infinity();
    return g;
}

inline GramSpectrum gram_spectrum(const KernelSpec& spec, const Matrix& locations) {
    spec.validate();
    if (locations.rows() < 1) throw InputError("gram_spectrum: need at least one location");
    if (!locations.allFinite()) throw InputError("gram_spectrum: locations must be finite");
    return spectrum_of(gram_matrix(spec, locations));
}

}  // namespace nplab
