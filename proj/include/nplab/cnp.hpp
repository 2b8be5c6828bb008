#pragma once

/// @file cnp.hpp
/// Mean-aggregation conditional neural processes: prediction, encoder
/// collisions, the optimal-linear-encoder lower bound and the OLS moment
/// encoder.

#include "nplab/core.hpp"
#include "nplab/gp_oracle.hpp"
#include "nplab/jacobi.hpp"
#include "nplab/kernels.hpp"
#include "nplab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace nplab {

/// Multiset of (location, value) pairs. Row i of `locations` pairs with row i
/// of `values`.
struct ContextSet {
    Matrix locations;  ///< n x d_x
    Matrix values;     ///< n x d_y

    ContextSet() = default;
    ContextSet(Matrix x, Matrix y) : locations(std::move(x)), values(std::move(y)) {}

    /// One-dimensional inputs and scalar outputs.
    static ContextSet scalar(const std::vector<double>& xs, const std::vector<double>& ys) {
        if (xs.size() != ys.size()) throw InputError("ContextSet: size mismatch");
        const auto n = static_cast<Eigen::Index>(xs.size());
        Matrix x(n, 1), y(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, 0) = xs[static_cast<std::size_t>(i)];
            y(i, 0) = ys[static_cast<std::size_t>(i)];
        }
        return {x, y};
    }

    Eigen::Index size() const { return locations.rows(); }
    Eigen::Index dx() const { return locations.cols(); }
    Eigen::Index dy() const { return values.cols(); }

    Point x(Eigen::Index i) const { return locations.row(i).transpose(); }
    Vector y(Eigen::Index i) const { return values.row(i).transpose(); }
    Vector y_column() const { return values.col(0); }

    /// Concatenated (x_i, y_i).
    Vector pair(Eigen::Index i) const {
        Vector z(dx() + dy());
        z << x(i), y(i);
        return z;
    }

    void validate() const {
        if (size() < 1) throw InputError("context set is empty");
        if (values.rows() != locations.rows()) throw InputError("context set: locations/values row mismatch");
        if (!locations.allFinite() || !values.allFinite()) throw InputError("context set: non-finite entries");
    }

    ContextSet permuted(const std::vector<Eigen::Index>& perm) const {
        ContextSet out{Matrix(size(), dx()), Matrix(size(), dy())};
        for (Eigen::Index i = 0; i < size(); ++i) {
            out.locations.row(i) = locations.row(perm[static_cast<std::size_t>(i)]);
            out.values.row(i) = values.row(perm[static_cast<std::size_t>(i)]);
        }
        return out;
    }
};

enum class EncoderKind { LinearIdentity, LinearMap, SmoothTest };

/// Per-pair encoder h: X x Y -> R^d acting on z = (x, y).
///   LinearIdentity  h(z) = z
///   LinearMap       h(z) = W z + b
///   SmoothTest      h(z) = W z + b + a sin(Omega z), elementwise sine
struct Encoder {
    EncoderKind kind = EncoderKind::LinearIdentity;
    Eigen::Index dx = 1;
    Eigen::Index dy = 1;
    Matrix weight;      ///< d x (dx+dy); unused for LinearIdentity
    Vector bias;        ///< d
    Matrix frequency;   ///< d x (dx+dy); SmoothTest only
    double amplitude = 0.0;

    Eigen::Index input_dim() const { return dx + dy; }
    Eigen::Index output_dim() const { return kind == EncoderKind::LinearIdentity ? input_dim() : weight.rows(); }

    Vector operator()(const Vector& z) const {
        if (z.size() != input_dim()) throw InputError("encoder: input dimension mismatch");
        switch (kind) {
            case EncoderKind::LinearIdentity: return z;
            case EncoderKind::LinearMap: return weight * z + bias;
            case EncoderKind::SmoothTest:
                return weight * z + bias + amplitude * (frequency * z).array().sin().matrix();
        }
        return z;
    }
};

inline Encoder identity_encoder(Eigen::Index dx = 1, Eigen::Index dy = 1) {
    Encoder e;
    e.kind = EncoderKind::LinearIdentity;
    e.dx = dx;
    e.dy = dy;
    return e;
}

inline Encoder linear_encoder(Matrix w, Vector b, Eigen::Index dx, Eigen::Index dy) {
    if (w.cols() != dx + dy || b.size() != w.rows()) throw InputError("linear_encoder: shape mismatch");
    Encoder e;
    e.kind = EncoderKind::LinearMap;
    e.dx = dx;
    e.dy = dy;
    e.weight = std::move(w);
    e.bias = std::move(b);
    return e;
}

/// Fixed analytic test encoder with output dimension d. Row j of W picks input
/// coordinate j mod (dx+dy); frequencies are 1 + ((j + 2k) mod 3) / 2.
inline Encoder smooth_test_encoder(Eigen::Index dx, Eigen::Index dy, Eigen::Index d, double amplitude = 0.2) {
    Encoder e;
    e.kind = EncoderKind::SmoothTest;
    e.dx = dx;
    e.dy = dy;
    const Eigen::Index m = dx + dy;
    e.weight = Matrix::Zero(d, m);
    e.frequency = Matrix(d, m);
    for (Eigen::Index j = 0; j < d; ++j) {
        e.weight(j, j % m) = 1.0;
        for (Eigen::Index k = 0; k < m; ++k) e.frequency(j, k) = 1.0 + 0.5 * static_cast<double>((j + 2 * k) % 3);
    }
    e.bias = Vector::Zero(d);
    e.amplitude = amplitude;
    return e;
}

using Decoder = std::function<double(const Vector& r, const Point& x_t)>;

inline Decoder coordinate_decoder(Eigen::Index j = 0) {
    return [j](const Vector& r, const Point&) { return r[j]; };
}

/// (1/n) sum_i h(x_i, y_i).
inline Vector mean_encoding(const Encoder& enc, const ContextSet& c) {
    c.validate();
    if (c.dx() != enc.dx || c.dy() != enc.dy) throw InputError("mean_encoding: context/encoder dimension mismatch");
    Vector acc = Vector::Zero(enc.output_dim());
    for (Eigen::Index i = 0; i < c.size(); ++i) acc += enc(c.pair(i));
    return acc / static_cast<double>(c.size());
}

inline double cnp_predict(const Encoder& enc, const Decoder& dec, const ContextSet& c, const Point& x_t) {
    return dec(mean_encoding(enc, c), x_t);
}

// ---------------------------------------------------------------------------
// Collisions

namespace detail {

/// Minimum-cost perfect assignment (Hungarian, O(n^3)). Returns the total cost.
inline double min_cost_assignment(const Matrix& cost) {
    const auto n = static_cast<std::size_t>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j)
        total += cost(static_cast<Eigen::Index>(p[j] - 1), static_cast<Eigen::Index>(j - 1));
    return total;
}

}  // namespace detail

/// min over permutations pi of sqrt(sum_i |z_i - z'_pi(i)|^2), z = (x, y).
inline double matching_distance(const ContextSet& a, const ContextSet& b) {
    if (a.size() != b.size() || a.dx() != b.dx() || a.dy() != b.dy())
        throw InputError("matching_distance: context sets differ in shape");
    Matrix cost(a.size(), a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < a.size(); ++j) cost(i, j) = (a.pair(i) - b.pair(j)).squaredNorm();
    return std::sqrt(std::max(0.0, detail::min_cost_assignment(cost)));
}

inline constexpr double kCollisionGap = 1e-8;
inline constexpr double kCollisionSeparation = 0.1;

struct CollisionCheck {
    double encoding_gap = 0.0;      ///< |h_C - h_C'|
    double matching_distance = 0.0;
    bool distinct = false;          ///< matching distance >= kCollisionSeparation
    bool collides() const { return distinct && encoding_gap <= kCollisionGap; }
};

inline CollisionCheck check_collision(const Encoder& enc, const ContextSet& a, const ContextSet& b) {
    CollisionCheck out;
    out.encoding_gap = (mean_encoding(enc, a) - mean_encoding(enc, b)).norm();
    out.matching_distance = matching_distance(a, b);
    out.distinct = out.matching_distance >= kCollisionSeparation;
    return out;
}

struct CollisionSearch {
    bool found = false;
    ContextSet first;
    ContextSet second;
    CollisionCheck check;
    int restarts = 0;
    int iterations = 0;
    std::string message;
};

/// Searches for distinct contexts of size n with equal mean encodings.
/// C is drawn uniformly from [-2, 2]; C' starts from a perturbed copy and is
/// driven onto the level set {h_C' = h_C} by minimum-norm Gauss-Newton steps,
/// which move as little as possible and so keep C' away from C. Restarts whose
/// end point is not separated by kCollisionSeparation count as failures.
inline CollisionSearch find_collision(const Encoder& enc, Eigen::Index n, std::uint64_t seed, int restarts = 10) {
    const Eigen::Index m = enc.input_dim();
    const Eigen::Index d = enc.output_dim();
    if (n < 1) throw InputError("find_collision: n must be positive");
    if (n * m <= d) throw InputError("find_collision: need n (dx + dy) > d");

    auto unpack = [&](const Vector& z) {
        ContextSet c{Matrix(n, enc.dx), Matrix(n, enc.dy)};
        for (Eigen::Index i = 0; i < n; ++i) {
            c.locations.row(i) = z.segment(i * m, enc.dx).transpose();
            c.values.row(i) = z.segment(i * m + enc.dx, enc.dy).transpose();
        }
        return c;
    };
    auto encode = [&](const Vector& z) {
        Vector acc = Vector::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) acc += enc(z.segment(i * m, m));
        return Vector(acc / static_cast<double>(n));
    };

    CollisionSearch out;
    Rng base(seed, "cnp.find_collision");
    for (int r = 0; r < restarts; ++r) {
        Rng rng = base.split("restart", static_cast<std::uint64_t>(r));
        out.restarts = r + 1;
        Vector z0(n * m);
        for (Eigen::Index i = 0; i < z0.size(); ++i) z0[i] = rng.uniform(-2.0, 2.0);
        const Vector target = encode(z0);
        Vector z = z0 + 0.5 * rng.normal_vector(n * m);
        Vector res = encode(z) - target;
        int it = 0;
        for (; it < 100 && res.norm() > 1e-13; ++it) {
            Matrix jac(d, n * m);
            for (Eigen::Index k = 0; k < n * m; ++k) {
                const double h = 1e-6 * (1.0 + std::abs(z[k]));
                Vector zp = z, zm = z;
                zp[k] += h;
                zm[k] -= h;
                jac.col(k) = (encode(zp) - encode(zm)) / (2.0 * h);
            }
            const Vector step = jac.completeOrthogonalDecomposition().solve(res);
            double t = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
                const Vector trial = z - t * step;
                const Vector tres = encode(trial) - target;
                if (tres.norm() < res.norm()) {
                    z = trial;
                    res = tres;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
        out.iterations += it;
        const ContextSet a = unpack(z0), b = unpack(z);
        const auto chk = check_collision(enc, a, b);
        if (chk.collides()) {
            out.found = true;
            out.first = a;
            out.second = b;
            out.check = chk;
            out.message = "collision found";
            return out;
        }
        out.check = chk;
    }
    out.message = "no separated collision within " + std::to_string(restarts) + " restarts";
    return out;
}

/// C = {(0,1),(2,1)}, C' = {(0.5,0.5),(1.5,1.5)}: both mean-encode to (1,1)
/// under the identity encoder.
inline std::pair<ContextSet, ContextSet> example_collision_pair() {
    return {ContextSet::scalar({0.0, 2.0}, {1.0, 1.0}), ContextSet::scalar({0.5, 1.5}, {0.5, 1.5})};
}

/// |mu(x_t|C) - mu(x_t|C')| with each context's own y values.
inline double collision_separation(const KernelSpec& spec, const ContextSet& a, const ContextSet& b, const Point& x_t) {
    a.validate();
    b.validate();
    if (a.size() != b.size()) throw InputError("collision_separation: context sizes differ");
    const double ma = posterior_weights(spec, a.locations, x_t).mean(a.y_column());
    const double mb = posterior_weights(spec, b.locations, x_t).mean(b.y_column());
    return std::abs(ma - mb);
}

// ---------------------------------------------------------------------------
// Optimal linear encoders

enum class PcaMode { SyntheticIsotropic, MonteCarloStationary };

struct MonteCarloSetup {
    KernelSpec spec = rbf_kernel();
    int n_targets = 2000;
    int input_dim = 1;
    double domain = 64.0;  ///< locations uniform in [0, domain]^input_dim
    std::uint64_t seed = 0;
};

struct PcaBoundReport {
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    double measured_ratio = 0.0;     ///< relative MSE of the PCA encoder, from the projection
    double bound = 0.0;              ///< 1 - d/n
    double generalized_bound = 0.0;  ///< sum_{i>d} lambda_i / sum_i lambda_i of W W^T
    Eigen::Index effective_rank = 0;
    bool rank_deficient = false;
    Vector spectrum;                 ///< eigenvalues of W W^T, descending
    Matrix weights;                  ///< whitened weight matrix W (n x targets)
};

/// Relative MSE of the best linear decoder reading the d-dim code A y:
/// |W^T (I - P_A)|_F^2 / |W|_F^2, with P_A the projector onto the row space of A.
inline double encoder_relative_mse(const Matrix& w, const Matrix& a) {
    if (a.cols() != w.rows()) throw InputError("encoder_relative_mse: shape mismatch");
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a.transpose());
    const Eigen::Index r = cod.rank();
    const Matrix q = Matrix(cod.householderQ()).leftCols(r);  // orthonormal basis of range(A^T)
    const Matrix residual = w.transpose() - (w.transpose() * q) * q.transpose();
    return residual.squaredNorm() / w.squaredNorm();
}

/// Top-d left singular directions of W as rows (d x n).
inline Matrix pca_encoder(const Matrix& w, Eigen::Index d) {
    const auto eig = jacobi_eigen(symmetrize(w * w.transpose()));
    const Eigen::Index n = w.rows();
    Matrix a(d, n);
    for (Eigen::Index i = 0; i < d; ++i) a.row(i) = eig.vectors.col(n - 1 - i).transpose();
    return a;
}

namespace detail {

inline PcaBoundReport pca_report(Matrix w, Eigen::Index d) {
    PcaBoundReport r;
    r.n = w.rows();
    r.d = d;
    r.bound = 1.0 - static_cast<double>(d) / static_cast<double>(r.n);
    const auto eig = jacobi_eigen(symmetrize(w * w.transpose()));
    r.spectrum = eig.values.reverse().cwiseMax(0.0);
    const double total = r.spectrum.sum();
    r.generalized_bound = total > 0.0 ? r.spectrum.tail(r.n - d).sum() / total : 0.0;
    const double cut = 1e-12 * r.spectrum[0];
    r.effective_rank = (r.spectrum.array() > cut).count();
    r.rank_deficient = r.effective_rank < r.n;
    r.measured_ratio = d == r.n ? 0.0 : encoder_relative_mse(w, pca_encoder(w, d));
    r.weights = std::move(w);
    return r;
}

}  // namespace detail

/// Synthetic mode: W has orthonormal rows (exact isotropy, W W^T = I), so
/// every singular value is 1 and the PCA ratio is 1 - d/n.
inline PcaBoundReport pca_bound_synthetic(Eigen::Index n, Eigen::Index d, std::uint64_t seed = 0,
                                          Eigen::Index targets = 0) {
    if (d < 1 || d > n) throw InputError("pca_bound_experiment: need 1 <= d <= n");
    if (targets < n) targets = 2 * n;
    Rng rng(seed, "cnp.pca_bound.synthetic");
    const Matrix q = random_orthogonal(rng, targets);
    return detail::pca_report(q.topRows(n), d);
}

/// Monte Carlo mode: i.i.d. uniform context and target locations; column j of
/// W is the whitened GP weight K^{-1/2} k(X, t_j).
inline PcaBoundReport pca_bound_monte_carlo(Eigen::Index n, Eigen::Index d, const MonteCarloSetup& mc) {
    if (d < 1 || d > n) throw InputError("pca_bound_experiment: need 1 <= d <= n");
    if (mc.n_targets < 1) throw InputError("pca_bound_experiment: need at least one target");
    Rng rng(mc.seed, "cnp.pca_bound.monte_carlo");
    const Matrix x = rng.uniform_matrix(n, mc.input_dim, 0.0, mc.domain);
    const Matrix t = rng.uniform_matrix(mc.n_targets, mc.input_dim, 0.0, mc.domain);
    const auto g = gram_spectrum(mc.spec, x);
    // |K^{-1/2} k|^2 = k^T K^{-1} k <= k(t, t), so only a nonpositive spectrum is fatal here
    if (g.lambda_min <= 0.0)
        throw NumericError("pca_bound_experiment: context Gram not positive definite, lambda_min", g.lambda_min);
    const Matrix inv_sqrt = spectral_apply(SymmetricEigen{g.eigenvalues, g.eigenvectors, 0},
                                           [](double l) { return 1.0 / std::sqrt(l); });
    return detail::pca_report(inv_sqrt * cross_gram(mc.spec, x, t), d);
}

inline PcaBoundReport pca_bound_experiment(Eigen::Index n, Eigen::Index d, PcaMode mode,
                                           const MonteCarloSetup& mc = {}) {
    return mode == PcaMode::SyntheticIsotropic ? pca_bound_synthetic(n, d, mc.seed)
                                               : pca_bound_monte_carlo(n, d, mc);
}

/// Smallest relative MSE over `count` Gaussian random d x n encoders.
inline double best_random_encoder_mse(const Matrix& w, Eigen::Index d, int count, Rng& rng) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i) best = std::min(best, encoder_relative_mse(w, rng.normal_matrix(d, w.rows())));
    return best;
}

// ---------------------------------------------------------------------------
// Linear regression through moment encodings

using Feature = std::function<double(const Point&)>;

struct MomentPrediction {
    double prediction = 0.0;
    Vector encoding;  ///< mean of (vech(psi psi^T), psi y)
    Eigen::Index dimension = 0;
};

inline Eigen::Index moment_dimension(Eigen::Index k) { return k * (k + 3) / 2; }

/// OLS prediction psi(x_t)^T G^{-1} m, reconstructed from the mean encoding
/// (vech of psi psi^T, psi y). Throws NumericError when G is singular.
inline MomentPrediction ols_moment_encoder(const std::vector<Feature>& features, const ContextSet& c, const Point& x_t) {
    c.validate();
    if (features.empty()) throw InputError("ols_moment_encoder: no features");
    if (c.dy() != 1) throw InputError("ols_moment_encoder: scalar outputs only");
    const auto k = static_cast<Eigen::Index>(features.size());
    auto psi = [&](const Point& x) {
        Vector v(k);
        for (Eigen::Index j = 0; j < k; ++j) v[j] = features[static_cast<std::size_t>(j)](x);
        return v;
    };
    MomentPrediction out;
    out.dimension = moment_dimension(k);
    out.encoding = Vector::Zero(out.dimension);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const Vector p = psi(c.x(i));
        Eigen::Index pos = 0;
        for (Eigen::Index a = 0; a < k; ++a)
            for (Eigen::Index b = a; b < k; ++b) out.encoding[pos++] += p[a] * p[b];
        out.encoding.segment(pos, k) += p * c.values(i, 0);
    }
    out.encoding /= static_cast<double>(c.size());

    // decoder: unpack the moments and solve the normal equations
    Matrix gram(k, k);
    Eigen::Index pos = 0;
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a; b < k; ++b) gram(a, b) = gram(b, a) = out.encoding[pos++];
    const Vector moment = out.encoding.segment(pos, k);
    const auto g = spectrum_of(gram);
    if (g.lambda_min <= 1e-12 * std::max(1.0, g.lambda_max))
        throw NumericError("ols_moment_encoder: singular feature Gram, lambda_min", g.lambda_min);
    out.prediction = psi(x_t).dot(g.solve(moment));
    return out;
}

}  // namespace nplab
