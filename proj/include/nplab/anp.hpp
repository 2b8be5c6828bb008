#pragma once

/// @file anp.hpp
/// Cross-attention ANPs with injected scores, the Nadaraya-Watson smoother
/// and the two-point factorization counterexample.

#include "nplab/cnp.hpp"
#include "nplab/core.hpp"
#include "nplab/gp_oracle.hpp"
#include "nplab/kernels.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace nplab {

enum class ScoreKind { LogKernel, Uniform, Custom };

/// s(x_t, x_i, y_i) / tau.
struct ScoreFunction {
    ScoreKind kind = ScoreKind::Uniform;
    KernelSpec spec;
    std::function<double(const Point& x_t, const Point& x, const Vector& y)> custom;
    double temperature = 1.0;

    double operator()(const Point& x_t, const Point& x, const Vector& y) const {
        switch (kind) {
            case ScoreKind::LogKernel: return log_kernel(spec, x_t, x) / temperature;
            case ScoreKind::Uniform: return 0.0;
            case ScoreKind::Custom: return custom(x_t, x, y) / temperature;
        }
        return 0.0;
    }
};

inline ScoreFunction log_kernel_score(const KernelSpec& spec, double temperature = 1.0) {
    ScoreFunction s;
    s.kind = ScoreKind::LogKernel;
    s.spec = spec;
    s.temperature = temperature;
    return s;
}

inline ScoreFunction uniform_score() { return ScoreFunction{}; }

inline ScoreFunction custom_score(std::function<double(const Point&, const Point&, const Vector&)> f,
                                  double temperature = 1.0) {
    ScoreFunction s;
    s.kind = ScoreKind::Custom;
    s.custom = std::move(f);
    s.temperature = temperature;
    return s;
}

/// Value map v(x, y) in R^{d_v}.
using ValueMap = std::function<Vector(const Point& x, const Vector& y)>;
/// Decoder g(x_t, r).
using AttentionDecoder = std::function<double(const Point& x_t, const Vector& r)>;

/// (y, 1): paired with ratio_decoder this realizes a kernel smoother.
inline ValueMap value_and_one() {
    return [](const Point&, const Vector& y) {
        Vector v(2);
        v << y[0], 1.0;
        return v;
    };
}

inline AttentionDecoder ratio_decoder() {
    return [](const Point&, const Vector& r) { return r[0] / r[1]; };
}

inline AttentionDecoder first_component() {
    return [](const Point&, const Vector& r) { return r[0]; };
}

/// Softmax over the scores, with max subtraction.
inline Vector attention_weights(const ScoreFunction& score, const ContextSet& c, const Point& x_t) {
    c.validate();
    if (x_t.size() != c.dx()) throw InputError("attention_weights: query dimension mismatch");
    Vector s(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) s[i] = score(x_t, c.x(i), c.y(i));
    if (!s.allFinite()) throw NumericError("attention_weights: non-finite score", s.maxCoeff());
    const Vector e = (s.array() - s.maxCoeff()).exp().matrix();
    return e / e.sum();
}

/// r_C(x_t) = sum_i alpha_i v(x_i, y_i).
inline Vector attention_readout(const ScoreFunction& score, const ValueMap& value, const ContextSet& c,
                                const Point& x_t) {
    const Vector a = attention_weights(score, c, x_t);
    Vector r = a[0] * value(c.x(0), c.y(0));
    for (Eigen::Index i = 1; i < c.size(); ++i) r += a[i] * value(c.x(i), c.y(i));
    return r;
}

inline double anp_predict(const ScoreFunction& score, const ValueMap& value, const AttentionDecoder& dec,
                          const ContextSet& c, const Point& x_t) {
    return dec(x_t, attention_readout(score, value, c, x_t));
}

/// sum_i k(x_t, x_i) y_i / sum_i k(x_t, x_i).
inline double nadaraya_watson(const KernelSpec& spec, const ContextSet& c, const Point& x_t) {
    c.validate();
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        const double k = eval_kernel(spec, x_t, c.x(i));
        num += k * c.values(i, 0);
        den += k;
    }
    if (!(den > 1e-300))
        throw NumericError("nadaraya_watson: total kernel weight underflows; use a larger lengthscale", den);
    return num / den;
}

// ---------------------------------------------------------------------------
// Factorization counterexample

struct FactorizationReport {
    ContextSet config_a;
    ContextSet config_b;
    Point target;
    double gp_w1_a = 0.0;
    double gp_w1_b = 0.0;
    double gp_weight_gap = 0.0;     ///< |gp_w1_a - gp_w1_b|
    double anp_weight_gap = 0.0;    ///< |alpha_1^A - alpha_1^B| under the log-kernel score
    bool identical_score_inputs = false;
    double angle_a = 0.0;           ///< degrees
    double angle_b = 0.0;
};

/// Two contexts on the unit circle around x_t = (0, 0): x_1 = (1, 0) and x_2 at
/// angle_a or angle_b degrees, y = (1, 1) in both. Query distances and values
/// coincide, so any score s(x_t, x_i, y_i) depending only on them assigns the
/// same weights; only |x_1 - x_2| changes.
inline FactorizationReport factorization_counterexample(const KernelSpec& spec, double angle_a = 180.0,
                                                        double angle_b = 60.0) {
    spec.validate();
    if (!spec.stationary()) throw InputError("factorization_counterexample: stationary kernel required");
    FactorizationReport r;
    r.target = point2(0.0, 0.0);
    r.angle_a = angle_a;
    r.angle_b = angle_b;
    auto config = [](double deg) {
        const double t = deg * std::numbers::pi / 180.0;
        Matrix x(2, 2);
        x << 1.0, 0.0, std::cos(t), std::sin(t);
        return ContextSet(x, Matrix::Ones(2, 1));
    };
    r.config_a = config(angle_a);
    r.config_b = config(angle_b);
    r.gp_w1_a = two_point_weight(spec, r.config_a.x(0), r.config_a.x(1), r.target).first;
    r.gp_w1_b = two_point_weight(spec, r.config_b.x(0), r.config_b.x(1), r.target).first;
    r.gp_weight_gap = std::abs(r.gp_w1_a - r.gp_w1_b);

    // certificate: the per-element score inputs (|x_t - x_i|, y_i) agree
    r.identical_score_inputs = true;
    for (Eigen::Index i = 0; i < 2; ++i) {
        const double da = (r.config_a.x(i) - r.target).norm(), db = (r.config_b.x(i) - r.target).norm();
        if (std::abs(da - db) > 1e-12 || r.config_a.values(i, 0) != r.config_b.values(i, 0))
            r.identical_score_inputs = false;
    }
    const auto score = log_kernel_score(spec);
    r.anp_weight_gap = std::abs(attention_weights(score, r.config_a, r.target)[0] -
                                attention_weights(score, r.config_b, r.target)[0]);
    return r;
}

/// |r_C(x_t) - r_C'(x_t)| for each query.
inline Vector anp_equivalence_probe(const ScoreFunction& score, const ValueMap& value, const ContextSet& a,
                                    const ContextSet& b, const std::vector<Point>& queries) {
    Vector gaps(static_cast<Eigen::Index>(queries.size()));
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const Vector ra = attention_readout(score, value, a, queries[q]);
        const Vector rb = attention_readout(score, value, b, queries[q]);
        if (ra.size() != rb.size()) throw InputError("anp_equivalence_probe: value dimensions differ");
        gaps[static_cast<Eigen::Index>(q)] = (ra - rb).norm();
    }
    return gaps;
}

/// Identity value map v(x, y) = (x, y), matching the identity CNP encoder.
inline ValueMap pair_value() {
    return [](const Point& x, const Vector& y) {
        Vector v(x.size() + y.size());
        v << x, y;
        return v;
    };
}

}  // namespace nplab
