#pragma once

/// @file experiments.hpp
/// The experiment registry. Each entry states its claim, parameter schema and
/// tolerances, and fills a report from (params, seed).

#include "nplab/anp.hpp"
#include "nplab/cnp.hpp"
#include "nplab/convcnp.hpp"
#include "nplab/lab/config.hpp"
#include "nplab/latent.hpp"
#include "nplab/polyapprox.hpp"
#include "nplab/tnp.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace nplab::lab {

using RunFn = std::function<void(const Params&, std::uint64_t seed, ExperimentReport&)>;

struct Experiment {
    std::string id;
    std::string claim;
    std::string tolerances;
    Schema schema;
    RunFn run;
};

namespace detail {

inline ParamSpec integer(std::string name, long fallback, std::string help, double min = 1, std::optional<double> max = {}) {
    return {std::move(name), ParamType::Integer, fallback, std::move(help), {}, min, max};
}

inline ParamSpec number(std::string name, double fallback, std::string help, std::optional<double> min = {},
                        std::optional<double> max = {}) {
    return {std::move(name), ParamType::Number, fallback, std::move(help), {}, min, max};
}

inline ParamSpec numbers(std::string name, std::vector<double> fallback, std::string help, std::optional<double> min = {}) {
    return {std::move(name), ParamType::NumberList, fallback, std::move(help), {}, min, {}};
}

inline ParamSpec choice(std::string name, std::string fallback, std::vector<std::string> choices, std::string help) {
    return {std::move(name), ParamType::String, fallback, std::move(help), std::move(choices), {}, {}};
}

inline Rng task_rng(std::uint64_t seed, const std::string& id, std::uint64_t index = 0) { return Rng(seed, id, index); }

inline Vector cyclic_shift(const Vector& v, Eigen::Index s) {
    const Eigen::Index n = v.size();
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[(i + s) % n] = v[i];
    return out;
}

inline Matrix spaced_points(Rng& rng, Eigen::Index count, double lo, double hi, double gap) {
    Matrix x(count, 1);
    for (Eigen::Index i = 0; i < count;) {
        const double v = rng.uniform(lo, hi);
        bool ok = true;
        for (Eigen::Index j = 0; j < i; ++j) ok = ok && std::abs(x(j, 0) - v) >= gap;
        if (ok) x(i++, 0) = v;
    }
    return x;
}

// ---------------------------------------------------------------------------
// cnp

inline Experiment cnp_collision() {
    return {"cnp.collision",
            "Mean-pooled CNP encoders collide: two distinct contexts share a mean encoding, so every decoder "
            "returns the same prediction while the GP posterior means differ.",
            "encoding gap == 0 and CNP output gap == 0 (bitwise); GP mean gap >= 0.01",
            {number("target", 1.0, "query location x_t"), number("lengthscale", 1.0, "RBF lengthscale", 1e-6)},
            [](const Params& p, std::uint64_t, ExperimentReport& r) {
                const auto [c, cp] = example_collision_pair();
                const auto enc = identity_encoder();
                const Vector h = mean_encoding(enc, c), hp = mean_encoding(enc, cp);
                const Point xt = point1(p.num("target"));
                r.info("encoding_0", h[0]);
                r.info("encoding_1", h[1]);
                r.at_most("encoding_gap", (h - hp).cwiseAbs().maxCoeff(), "exact_zero", 0.0);
                double out_gap = 0.0;
                for (Eigen::Index j = 0; j < 2; ++j)
                    out_gap = std::max(out_gap, std::abs(cnp_predict(enc, coordinate_decoder(j), c, xt) -
                                                         cnp_predict(enc, coordinate_decoder(j), cp, xt)));
                r.at_most("cnp_output_gap", out_gap, "exact_zero", 0.0);
                r.at_least("gp_mean_gap", collision_separation(rbf_kernel(p.num("lengthscale")), c, cp, xt),
                           "min_gp_gap", 0.01);
            }};
}

inline Experiment cnp_find_collision() {
    return {"cnp.find_collision",
            "A smooth encoder with more context degrees of freedom than encoding dimensions admits collisions; "
            "a Gauss-Newton search finds one.",
            "encoding gap <= 1e-8; matching distance >= 0.1",
            {integer("n", 3, "context size"), integer("d", 2, "encoding dimension"),
             integer("restarts", 10, "random restarts")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                const auto enc = smooth_test_encoder(1, 1, p.integer("d"));
                const auto res = find_collision(enc, p.integer("n"), seed, static_cast<int>(p.integer("restarts")));
                r.info("restarts_used", res.restarts);
                r.at_most("encoding_gap", res.found ? res.check.encoding_gap : 1.0, "collision_gap", kCollisionGap);
                r.at_least("matching_distance", res.found ? res.check.matching_distance : 0.0, "min_separation",
                           kCollisionSeparation);
            }};
}

inline Experiment cnp_pca_bound() {
    return {"cnp.pca_bound",
            "A d-dimensional linear encoder of n whitened observations keeps at most a d/n share of the "
            "predictive signal; PCA attains the bound and random encoders never beat it.",
            "SyntheticIsotropic: |ratio - (1 - d/n)| <= 1e-10; MonteCarlo: ratio <= 1 - d/n + 1e-12; "
            "random encoders >= PCA - 1e-9",
            {integer("n", 4, "context size"), integer("d", 2, "encoding dimension"),
             choice("mode", "SyntheticIsotropic", {"SyntheticIsotropic", "MonteCarlo"}, "weight model"),
             integer("encoders", 30, "random encoders compared with PCA", 0),
             integer("targets", 2000, "Monte Carlo target count"),
             number("domain", 64.0, "Monte Carlo location range [0, domain]", 1e-6)},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                const auto n = p.integer("n"), d = p.integer("d");
                if (d > n) throw UsageError("cnp.pca_bound: parameter 'd' must not exceed 'n'");
                MonteCarloSetup mc;
                mc.seed = seed;
                mc.n_targets = p.integer("targets");
                mc.domain = p.num("domain");
                const bool synthetic = p.str("mode") == "SyntheticIsotropic";
                const auto rep = synthetic ? pca_bound_synthetic(n, d, seed)
                                           : pca_bound_monte_carlo(n, d, mc);
                r.info("measured_ratio", rep.measured_ratio);
                r.info("generalized_bound", rep.generalized_bound);
                if (synthetic) {
                    r.at_most("ratio_deviation", std::abs(rep.measured_ratio - rep.bound), "ratio_tolerance", 1e-10);
                } else {
                    r.at_most("ratio", rep.measured_ratio, "isotropic_value", rep.bound + 1e-12);
                    r.at_most("generalized_deviation", std::abs(rep.measured_ratio - rep.generalized_bound),
                              "ratio_tolerance", 1e-10);
                }
                if (p.integer("encoders") > 0) {
                    Rng rng = task_rng(seed, "cnp.pca_bound.encoders");
                    const double best = best_random_encoder_mse(rep.weights, d, static_cast<int>(p.integer("encoders")), rng);
                    r.at_least("random_minus_pca", best - rep.measured_ratio, "pca_margin", -1e-9);
                }
            }};
}

// ---------------------------------------------------------------------------
// anp

inline Experiment anp_kernel_smoother() {
    return {"anp.kernel_smoother",
            "Softmax attention with a log-kernel score and values (y, 1) is the Nadaraya-Watson kernel smoother.",
            "max |anp - smoother| <= 1e-10 over random configurations",
            {integer("configs", 500, "random configurations"), integer("max_n", 16, "largest context")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double worst = 0.0;
                for (long t = 0; t < p.integer("configs"); ++t) {
                    Rng rng = task_rng(seed, "anp.kernel_smoother", static_cast<std::uint64_t>(t));
                    const auto n = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(p.integer("max_n"))));
                    const KernelSpec spec = t % 2 ? rbf_kernel(rng.uniform(0.3, 2)) : matern_kernel(1.5, rng.uniform(0.3, 2));
                    const ContextSet c(rng.uniform_matrix(n, 2, -2, 2), rng.normal_matrix(n, 1));
                    const Point xt = rng.uniform_matrix(2, 1, -2, 2).col(0);
                    worst = std::max(worst, std::abs(anp_predict(log_kernel_score(spec), value_and_one(), ratio_decoder(), c, xt) -
                                                     nadaraya_watson(spec, c, xt)));
                }
                r.at_most("max_gap", worst, "tolerance", 1e-10);
            }};
}

inline Experiment anp_factorization() {
    return {"anp.factorization",
            "Attention weights factorize over context points, GP weights do not: two configurations with "
            "identical per-point score inputs have different GP weights.",
            "GP weight gap >= min_gap; attention weight gap <= 1e-15; identical score inputs",
            {number("angle_a", 180.0, "angle of x2 in configuration A (degrees)"),
             number("angle_b", 60.0, "angle of x2 in configuration B (degrees)"),
             number("lengthscale", 1.0, "RBF lengthscale", 1e-6), number("min_gap", 0.15, "required GP weight gap")},
            [](const Params& p, std::uint64_t, ExperimentReport& r) {
                const auto rep = factorization_counterexample(rbf_kernel(p.num("lengthscale")), p.num("angle_a"), p.num("angle_b"));
                r.info("gp_w1_a", rep.gp_w1_a);
                r.info("gp_w1_b", rep.gp_w1_b);
                r.at_least("gp_weight_gap", rep.gp_weight_gap, "min_gap", p.num("min_gap"));
                r.at_most("anp_weight_gap", rep.anp_weight_gap, "anp_tolerance", 1e-15);
                r.at_least("identical_score_inputs", rep.identical_score_inputs ? 1.0 : 0.0, "required", 1.0);
            }};
}

// ---------------------------------------------------------------------------
// tnp

inline Experiment tnp_polynomial_structure() {
    return {"tnp.polynomial_structure",
            "A depth-L linear attention stack H <- H + alpha A H computes a degree-L polynomial in the attention matrix.",
            "max |layerwise - expanded| <= 1e-10",
            {integer("matrices", 20, "random attention matrices"), integer("max_depth", 8, "largest depth")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double worst = 0.0;
                for (long t = 0; t < p.integer("matrices"); ++t) {
                    Rng rng = task_rng(seed, "tnp.polynomial_structure", static_cast<std::uint64_t>(t));
                    const auto n = static_cast<Eigen::Index>(3 + rng.below(10));
                    const auto att = normalize_attention(gram_spectrum(rbf_kernel(), rng.uniform_matrix(n, 1, -2, 2)));
                    const Matrix h = rng.normal_matrix(n, 2);
                    for (long l = 1; l <= p.integer("max_depth"); ++l) {
                        std::vector<double> al;
                        for (long i = 0; i < l; ++i) al.push_back(rng.uniform(-1, 1));
                        const Matrix lw = tnp_forward(att, product_schedule(al), h);
                        worst = std::max(worst, (lw - expanded_product(al, att.k_tilde, h)).cwiseAbs().maxCoeff());
                    }
                }
                r.at_most("max_gap", worst, "tolerance", 1e-10);
            }};
}

inline Experiment tnp_chebyshev_bound() {
    return {"tnp.chebyshev_bound",
            "The depth-L Chebyshev iteration approximates K^{-1} within (2/lambda_min) rho^L.",
            "max over matrices and depths of error / bound <= 1 (bound includes 1e-12/lambda_min roundoff)",
            {integer("matrices", 50, "random SPD matrices"), integer("max_n", 32, "largest size", 2),
             number("max_kappa", 100.0, "largest condition number", 1.0), integer("max_depth", 40, "largest depth")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double worst = 0.0;
                for (long t = 0; t < p.integer("matrices"); ++t) {
                    Rng rng = task_rng(seed, "tnp.chebyshev_bound", static_cast<std::uint64_t>(t));
                    const auto n = static_cast<Eigen::Index>(2 + rng.below(static_cast<std::uint64_t>(p.integer("max_n") - 1)));
                    const double kappa = std::exp(rng.uniform(0.0, std::log(p.num("max_kappa"))));
                    const auto g = spectrum_of(random_spd(rng, n, kappa, rng.uniform(0.1, 2.0)));
                    for (long l = 1; l <= p.integer("max_depth"); ++l) {
                        const auto s = chebyshev_schedule(g.lambda_min, g.lambda_max, static_cast<int>(l));
                        const double err = inverse_error(g, apply_inverse_schedule(g, s));
                        const double bound = 2.0 / g.lambda_min * std::pow(s.rho, static_cast<double>(l)) + 1e-12 / g.lambda_min;
                        worst = std::max(worst, err / bound);
                    }
                }
                r.at_most("worst_error_over_bound", worst, "unit", 1.0);
            }};
}

inline Experiment tnp_depth_scaling() {
    return {"tnp.depth_scaling",
            "The best degree-L polynomial approximation of 1/mu on [1/kappa, 1] decays like rho^L with "
            "rho = (sqrt(kappa) - 1)/(sqrt(kappa) + 1), bounded below by (2/(a+b)) rho^L, and Chebyshev depth "
            "beats Neumann depth by about sqrt(kappa).",
            "|slope/log rho - 1| <= 0.05 over the degree range; min oracle/barrier over degrees >= 2 is >= 1; "
            "Chebyshev/Neumann depth ratio <= 2/sqrt(kappa) + 0.2",
            {number("kappa", 16.0, "condition number", 1.0 + 1e-9), integer("min_degree", 6, "first fitted degree", 0),
             integer("max_degree", 24, "last fitted degree", 1), number("epsilon", 1e-6, "depth target", 1e-15, 1.0)},
            [](const Params& p, std::uint64_t, ExperimentReport& r) {
                const double kappa = p.num("kappa"), a = 1.0 / kappa;
                const auto lo = p.integer("min_degree"), hi = p.integer("max_degree");
                if (hi - lo < 1) throw UsageError("tnp.depth_scaling: parameter 'max_degree' must exceed 'min_degree'");
                std::vector<double> ls, es;
                double margin = std::numeric_limits<double>::infinity();
                for (long l = std::min(2L, lo); l <= hi; ++l) {
                    const double e = minimax_oracle(a, 1.0, static_cast<int>(l)).error;
                    if (l >= lo) {
                        ls.push_back(static_cast<double>(l));
                        es.push_back(e);
                    }
                    if (l >= 2) margin = std::min(margin, e / chebyshev_barrier(a, 1.0, static_cast<int>(l)));
                }
                const double lr = std::log(chebyshev_rate(kappa));
                const double slope = log_slope(ls, es);
                r.info("slope", slope);
                r.info("log_rho", lr);
                r.at_most("slope_relative_error", std::abs(slope / lr - 1.0), "slope_tolerance", 0.05);
                r.at_least("min_oracle_over_barrier", margin, "unit", 1.0);
                const int cheb = required_depth(ScheduleForm::ChebyshevIteration, a, 1.0, p.num("epsilon"));
                const int neu = required_depth(ScheduleForm::NeumannSum, a, 1.0, p.num("epsilon"));
                r.info("chebyshev_depth", cheb);
                r.info("neumann_depth", neu);
                r.at_most("depth_ratio", cheb > 0 && neu > 0 ? double(cheb) / neu : 1e300, "depth_ratio_limit",
                          2.0 / std::sqrt(kappa) + 0.2);
            }};
}

inline Experiment tnp_depth_barrier() {
    return {"tnp.depth_barrier",
            "On the eigenvalue family the depth-L TNP output is a univariate polynomial of degree L in the "
            "varying eigenvalue, so depth is bounded below by the minimax degree.",
            "polynomial fit residual <= 1e-8; oracle error >= barrier; implied depth reported",
            {number("kappa", 16.0, "condition number", 1.0 + 1e-9), integer("n", 6, "matrix size", 2),
             integer("depth", 4, "network depth"), number("epsilon", 1e-2, "accuracy target", 1e-15)},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                const int l = static_cast<int>(p.integer("depth"));
                const auto rep = depth_barrier_experiment(p.num("kappa"), p.integer("n"), l, 4 * l + 4, p.num("epsilon"), seed);
                r.at_most("fit_residual", rep.fit_residual, "fit_tolerance", 1e-8);
                r.at_least("oracle_error", rep.oracle_error, "barrier", rep.barrier);
                r.info("implied_min_depth", rep.implied_min_depth);
                r.info("depth_sufficient", rep.depth_sufficient ? 1 : 0);
                r.info("decay_slope", rep.decay_slope);
                r.info("log_rho", rep.log_rho);
            }};
}

inline Experiment tnp_eigenvalue_family() {
    return {"tnp.eigenvalue_family",
            "A family of row-stochastic SPD matrices with one eigenvalue 1/kappa + t and all others equal to 1.",
            "row sums, mu_1 and the remaining eigenvalues within 1e-10 on the t grid",
            {number("kappa", 16.0, "condition number", 1.0 + 1e-9), integer("n", 6, "matrix size", 2),
             integer("points", 20, "t grid size", 2)},
            [](const Params& p, std::uint64_t, ExperimentReport& r) {
                const double kappa = p.num("kappa");
                const auto n = p.integer("n");
                const auto pts = p.integer("points");
                double rows = 0, mu = 0, rest = 0;
                for (long i = 0; i < pts; ++i) {
                    const double t = (1 - 1 / kappa) * static_cast<double>(i) / static_cast<double>(pts - 1);
                    const auto m = eig_family(kappa, n, t);
                    rows = std::max(rows, (m.matrix.rowwise().sum() - Vector::Ones(n)).cwiseAbs().maxCoeff());
                    const Vector ev = jacobi_eigen(m.matrix).values;
                    // the eigenvalue nearest 1/kappa + t is mu_1; the rest must be 1
                    Eigen::Index at = 0;
                    for (Eigen::Index j = 0; j < n; ++j)
                        if (std::abs(ev[j] - m.mu1) < std::abs(ev[at] - m.mu1)) at = j;
                    mu = std::max(mu, std::abs(ev[at] - (1 / kappa + t)));
                    for (Eigen::Index j = 0; j < n; ++j)
                        if (j != at) rest = std::max(rest, std::abs(ev[j] - 1.0));
                }
                r.at_most("row_sum_error", rows, "tolerance", 1e-10);
                r.at_most("mu1_error", mu, "tolerance", 1e-10);
                r.at_most("unit_eigenvalue_error", rest, "tolerance", 1e-10);
            }};
}

inline Experiment tnp_linearization() {
    return {"tnp.linearization",
            "The linear TNP pipeline's Jacobian is the polynomial GP row; a perturbed nonlinear map's Jacobian "
            "stays within 2 eps + L2/2 of the GP row.",
            "FD Jacobian error <= 1e-6; Jacobian gap <= bound at every eta; gap monotone in eta",
            {integer("contexts", 6, "context size"), integer("depth", 6, "Chebyshev depth"),
             numbers("etas", {1e-3, 1e-2, 1e-1}, "perturbation sizes", 0.0), integer("samples", 500, "sup samples")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                Rng rng = task_rng(seed, "tnp.linearization");
                const auto n = p.integer("contexts");
                const ContextSet c(rng.uniform_matrix(n, 1, 0, 8), rng.normal_matrix(n, 1));
                const auto rep = linearization_experiment(rbf_kernel(), c, point1(3.3), static_cast<int>(p.integer("depth")),
                                                          p.list("etas"), seed, static_cast<int>(p.integer("samples")));
                r.at_most("fd_error", rep.fd_error, "fd_tolerance", 1e-6);
                double excess = -std::numeric_limits<double>::infinity();
                for (const auto& pt : rep.points) excess = std::max(excess, pt.jacobian_gap - pt.bound);
                r.at_most("max_gap_minus_bound", excess, "zero", 0.0);
                r.at_least("monotone", rep.monotone ? 1.0 : 0.0, "required", 1.0);
            }};
}

// ---------------------------------------------------------------------------
// convcnp

inline Experiment convcnp_grid_gp() {
    return {"convcnp.grid_gp",
            "A ConvCNP whose CNN runs the Chebyshev iteration with circulant kernel filters reproduces the GP "
            "mean on a periodic grid within (2/lambda_min) rho^L |k| |y|.",
            "max over grids and depths of error / (bound + 1e-6) <= 1",
            {numbers("sizes", {8, 16, 32, 64}, "grid sizes", 1), number("spacing", 1.0, "grid spacing", 1e-9),
             number("lengthscale", 1.0, "RBF lengthscale", 1e-9), integer("max_depth", 40, "largest depth")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double worst = 0.0;
                std::uint64_t task = 0;
                for (double sz : p.list("sizes")) {
                    Rng rng = task_rng(seed, "convcnp.grid_gp", task++);
                    const GridSpec g{static_cast<Eigen::Index>(sz), p.num("spacing"), true};
                    const Vector y = rng.normal_vector(g.n);
                    const double xt = rng.uniform(0.0, g.period());
                    for (long l = 1; l <= p.integer("max_depth"); ++l) {
                        const auto res = grid_cnn_gp(rbf_kernel(p.num("lengthscale")), g, y, xt, static_cast<int>(l));
                        worst = std::max(worst, res.error / (res.bound + res.slack));
                    }
                }
                r.at_most("worst_error_over_bound", worst, "unit", 1.0);
            }};
}

inline Experiment convcnp_fourier_jacobian() {
    return {"convcnp.fourier_jacobian",
            "At a uniform input the Jacobian of a grid ConvCNP is circulant with spectrum "
            "g(k) prod_l (1 + d_l tau_l(k)) h' w(k).",
            "max per-frequency |FD - factorized| <= 1e-5 over random filter stacks",
            {integer("stacks", 20, "random filter stacks"), integer("max_n", 64, "largest grid", 8)},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double worst = 0.0;
                const auto steps = static_cast<std::uint64_t>((p.integer("max_n") - 8) / 4 + 1);
                for (long t = 0; t < p.integer("stacks"); ++t) {
                    Rng rng = task_rng(seed, "convcnp.fourier_jacobian", static_cast<std::uint64_t>(t));
                    const Eigen::Index n = 8 + 4 * static_cast<Eigen::Index>(rng.below(steps));
                    const auto w = wrapped_kernel_operator(rbf_kernel(rng.uniform(0.5, 2)), GridSpec{n, 1.0, true});
                    std::vector<CirculantOperator> filters;
                    const auto layers = 1 + rng.below(4);
                    for (std::uint64_t l = 0; l < layers; ++l) {
                        const Eigen::Index q = rng.below(2) ? 3 : 5;
                        filters.push_back(filter_operator(rng.uniform_matrix(q, 1, -0.3, 0.3).col(0), n));
                    }
                    const auto net = GridConvCnp::build(w, filters);
                    const Matrix fd = fd_jacobian([&](const Vector& y) { return net(y); }, Vector::Zero(n), 1e-5);
                    worst = std::max(worst, (frequency_response(fd) - net.analytic_jacobian().eigenvalues).cwiseAbs().maxCoeff());
                }
                r.at_most("max_frequency_gap", worst, "tolerance", 1e-5);
            }};
}

inline Experiment convcnp_full_support() {
    return {"convcnp.full_support",
            "With a single full-support filter a ConvCNP inverts any nonsingular circulant Gram exactly.",
            "max_k |J(k) lambda_k - 1| <= 1e-8",
            {numbers("sizes", {8, 32, 128}, "grid sizes", 1), number("spacing", 1.0, "grid spacing", 1e-9),
             number("lengthscale", 1.0, "RBF lengthscale", 1e-9)},
            [](const Params& p, std::uint64_t, ExperimentReport& r) {
                double worst = 0.0;
                for (double sz : p.list("sizes")) {
                    const auto n = static_cast<Eigen::Index>(sz);
                    const auto k = wrapped_kernel_operator(rbf_kernel(p.num("lengthscale")), GridSpec{n, p.num("spacing"), true});
                    const CirculantOperator g(Vector::Unit(n, 0) / k.column.sum());
                    const auto f = full_support_solve(k, g, k, 1.0, 0.5);
                    worst = std::max(worst, full_support_residual(f, k, g, k, 1.0, 0.5));
                }
                r.at_most("max_residual", worst, "tolerance", 1e-8);
            }};
}

inline Experiment convcnp_depth_support() {
    return {"convcnp.depth_support",
            "Filters of support p and depth L realize trigonometric polynomials of degree L floor(p/2), so "
            "L floor(p/2) must reach the trigonometric approximation degree of 1/K(omega).",
            "L floor(p/2) >= measured degree at every epsilon; decay slope reported against log rho",
            {integer("n", 256, "grid size", 4), integer("support", 7, "filter support (odd)"),
             number("lengthscale", 1.0, "RBF lengthscale", 1e-9), number("spacing", 1.0, "grid spacing", 1e-9),
             numbers("epsilons", {1e-1, 1e-2, 1e-3}, "relative accuracy targets", 1e-15)},
            [](const Params& p, std::uint64_t, ExperimentReport& r) {
                if (p.integer("support") % 2 == 0) throw UsageError("convcnp.depth_support: parameter 'support' must be odd");
                const auto rep = depth_support_experiment(rbf_kernel(p.num("lengthscale")),
                                                          GridSpec{p.integer("n"), p.num("spacing"), true},
                                                          p.integer("support"), p.list("epsilons"));
                r.info("kappa", rep.kappa);
                r.info("decay_slope", rep.decay_slope);
                r.info("predicted_slope", rep.predicted_slope);
                for (std::size_t i = 0; i < rep.entries.size(); ++i) {
                    const auto& e = rep.entries[i];
                    const std::string tag = "eps" + std::to_string(i);
                    r.info(tag + "_trig_degree", e.trig_degree);
                    r.info(tag + "_depth", e.required_depth);
                    r.at_least(tag + "_reach", static_cast<double>(e.reach), tag + "_required_degree",
                               e.trig_degree < 0 ? std::numeric_limits<double>::infinity() : e.trig_degree);
                }
            }};
}

inline Experiment convcnp_equivariance() {
    return {"convcnp.equivariance",
            "ConvCNP forward maps commute with grid shifts; a smoother with a position-dependent kernel "
            "(an attention model) does not.",
            "shift gap <= 1e-10 for the grid pipeline and the nonlinear forward; smoother defect >= 1e-2",
            {integer("n", 16, "grid size", 4), integer("depth", 6, "Chebyshev depth")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                Rng rng = task_rng(seed, "convcnp.equivariance");
                const auto n = p.integer("n");
                const GridSpec g{n, 0.5, true};
                const Vector y = rng.normal_vector(n);
                double gp_gap = 0.0, fwd_gap = 0.0;
                const auto net = GridConvCnp::build(wrapped_kernel_operator(rbf_kernel(), g),
                                                    {filter_operator(rng.normal_vector(3), n), filter_operator(rng.normal_vector(5), n)});
                for (Eigen::Index s : {Eigen::Index{1}, n / 3, n - 1}) {
                    const double a = grid_cnn_gp(rbf_kernel(), g, y, 1.3, static_cast<int>(p.integer("depth"))).prediction;
                    const double b = grid_cnn_gp(rbf_kernel(), g, cyclic_shift(y, s), 1.3 + s * g.spacing,
                                                 static_cast<int>(p.integer("depth"))).prediction;
                    gp_gap = std::max(gp_gap, std::abs(a - b));
                    fwd_gap = std::max(fwd_gap, (net(cyclic_shift(y, s)) - cyclic_shift(net(y), s)).cwiseAbs().maxCoeff());
                }
                r.at_most("grid_pipeline_shift_gap", gp_gap, "tolerance", 1e-10);
                r.at_most("forward_shift_gap", fwd_gap, "tolerance", 1e-10);
                const auto spec = scaled_kernel(rbf_kernel(), [](const Point& x) { return 1 + 0.5 * std::sin(x[0]); });
                const auto c = ContextSet::scalar({-1, 0.5, 2}, {1, -1, 2});
                r.at_least("smoother_defect", equivariance_defect(spec, c, point1(0.2), {0.5, 1.0, 2.0}), "min_defect", 1e-2);
            }};
}

inline Experiment convcnp_incomparability() {
    return {"convcnp.incomparability",
            "ConvCNPs and ANPs are incomparable: the grid ConvCNP reaches GP weights that no factorized "
            "attention reaches, and a pure ConvCNP cannot tell apart contexts whose GP means differ.",
            "grid GP error <= 1e-4; factorization gap >= 0.05; pure ConvCNP gap == 0; GP gap >= 0.05",
            {integer("n", 32, "grid size", 4), integer("depth", 80, "Chebyshev depth")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                Rng rng = task_rng(seed, "convcnp.incomparability");
                const GridSpec g{p.integer("n"), 1.0, true};
                const auto res = grid_cnn_gp(rbf_kernel(), g, rng.normal_vector(g.n), 0.37 * g.period(),
                                             static_cast<int>(p.integer("depth")));
                r.at_most("grid_gp_error", res.error, "gp_tolerance", 1e-4);
                r.at_least("factorization_gap", factorization_counterexample(rbf_kernel()).gp_weight_gap, "min_gap", 0.05);
                const auto ng = convcnp_no_gp(rbf_kernel());
                r.at_most("pure_convcnp_gap", ng.convcnp_gap, "exact_zero", 0.0);
                r.at_least("gp_mean_gap", ng.gp_gap, "min_gap", 0.05);
            }};
}

// ---------------------------------------------------------------------------
// latent

inline Experiment latent_cov_rank() {
    return {"latent.cov_rank",
            "A rank-k latent model's predictive covariance minus noise has rank at most k.",
            "eigenvalue k+1 of cov - sigma2 I <= 1e-8 trace",
            {integer("models", 100, "random models"), integer("max_k", 5, "largest latent dimension")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double worst = 0.0;
                for (long t = 0; t < p.integer("models"); ++t) {
                    Rng rng = task_rng(seed, "latent.cov_rank", static_cast<std::uint64_t>(t));
                    const auto k = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(p.integer("max_k"))));
                    const auto model = random_latent(rng, k, t % 2 ? fourier_features(k) : polynomial_features(k), rng.uniform(0, 1));
                    const auto pr = latent_predictive(model, rng.uniform_matrix(k + 3, 1, -1.5, 1.5));
                    worst = std::max(worst, pr.eigenvalue_after(k) / pr.trace);
                }
                r.at_most("max_excess_eigenvalue_over_trace", worst, "tolerance", 1e-8);
            }};
}

inline Experiment latent_gp_rank() {
    return {"latent.gp_rank",
            "The GP posterior covariance at m distinct targets has full rank m, so matching it needs a latent "
            "dimension that grows without bound.",
            "min eigenvalue > 1e-10 on random configs; numerical rank equals m for m in {4, 8, 16, 32}",
            {integer("configs", 100, "random configurations")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double worst = std::numeric_limits<double>::infinity();
                for (long t = 0; t < p.integer("configs"); ++t) {
                    Rng rng = task_rng(seed, "latent.gp_rank", static_cast<std::uint64_t>(t));
                    const KernelSpec spec = t % 2 ? rbf_kernel(rng.uniform(0.5, 1.5)) : matern_kernel(1.5, rng.uniform(0.5, 1.5));
                    const Matrix pts = spaced_points(rng, 8, -6, 6, 0.4);
                    worst = std::min(worst, gp_cov_rank_check(spec, pts.topRows(4), pts.bottomRows(4)).min_eig);
                }
                r.at_least("min_posterior_eigenvalue", worst, "positivity_floor", 1e-10);
                std::vector<Matrix> sets;
                const std::vector<Eigen::Index> ms{4, 8, 16, 32};
                for (auto m : ms) sets.push_back(uniform_grid(m, 10.3, 10.3 + 2.0 * static_cast<double>(m - 1)));
                const auto ranks = required_latent_rank(rbf_kernel(), uniform_grid(3, 0, 2), sets);
                double shortfall = 0.0;
                for (std::size_t i = 0; i < ms.size(); ++i) {
                    r.info("rank_m" + std::to_string(ms[i]), static_cast<double>(ranks[i]));
                    shortfall = std::max(shortfall, static_cast<double>(ms[i] - ranks[i]));
                }
                r.at_most("rank_shortfall", shortfall, "exact_zero", 0.0);
            }};
}

inline Experiment latent_mean_matching() {
    return {"latent.mean_matching",
            "Matching the GP mean at n targets through a k-dimensional bottleneck leaves the trailing singular "
            "mass of the weight matrix, which vanishes only at k = n.",
            "residual <= 1e-8 at k = n; residual > 0.01 |Phi|_F for k <= n/2",
            {integer("configs", 50, "random configurations")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                double full = 0.0, low = std::numeric_limits<double>::infinity();
                for (long t = 0; t < p.integer("configs"); ++t) {
                    Rng rng = task_rng(seed, "latent.mean_matching", static_cast<std::uint64_t>(t));
                    const auto n = static_cast<Eigen::Index>(4 + rng.below(5));
                    const Matrix c = spaced_points(rng, n, -2.0 * n, 2.0 * n, 0.8);
                    const Matrix tg = c.array() + rng.uniform(0.1, 0.3);
                    full = std::max(full, mean_matching_residual(rbf_kernel(), c, tg, n).residual);
                    for (Eigen::Index k = 0; k <= n / 2; ++k) {
                        const auto m = mean_matching_residual(rbf_kernel(), c, tg, k);
                        low = std::min(low, m.residual / m.frobenius);
                    }
                }
                r.at_most("full_rank_residual", full, "tolerance", 1e-8);
                r.at_least("min_relative_residual_half_rank", low, "min_fraction", 0.01);
            }};
}

inline Experiment latent_mercer_tail() {
    return {"latent.mercer_tail",
            "Rank-k truncation error equals the Mercer spectral tail; a degree-p polynomial kernel in one "
            "dimension has exactly p + 1 terms; smooth kernels have lighter tails.",
            "quadratic-kernel tail == 0 for k >= 3; |tail - best rank-k error| <= 1e-10; RBF tail < Matern-1/2 tail",
            {integer("grid", 128, "grid points", 8)},
            [](const Params& p, std::uint64_t, ExperimentReport& r) {
                const auto m = p.integer("grid");
                const Matrix g = uniform_grid(m, -1, 1);
                double tail = 0.0, ey = 0.0;
                for (Eigen::Index k = 3; k <= m / 8; ++k) tail = std::max(tail, mercer_tail(polynomial_kernel(2), g, k).tail_trace);
                r.at_most("quadratic_tail_k_ge_3", tail, "exact_zero", 0.0);
                const Matrix wide = uniform_grid(m, 0, 10);
                for (const auto& spec : {rbf_kernel(), matern_kernel(0.5), polynomial_kernel(2)})
                    for (Eigen::Index k : {Eigen::Index{1}, Eigen::Index{4}, m / 8}) {
                        const auto t = mercer_tail(spec, spec.stationary() ? wide : g, k);
                        ey = std::max(ey, std::abs(t.tail_trace - t.best_rank_k_error));
                    }
                r.at_most("eckart_young_gap", ey, "tolerance", 1e-10);
                const auto kk = std::min<Eigen::Index>(10, m / 8);
                const double rt = mercer_tail(rbf_kernel(), wide, kk).tail_trace;
                const double mt = mercer_tail(matern_kernel(0.5), wide, kk).tail_trace;
                r.at_most("rbf_tail", rt, "matern_half_tail", mt);
            }};
}

inline Experiment latent_bottleneck() {
    return {"latent.bottleneck",
            "A latent model built from the mean encoding inherits its collisions: colliding contexts give "
            "identical predictive distributions whatever the decoder.",
            "encoding gap <= 1e-8; mean and covariance gaps <= 1e-6; non-colliding gap > 1e-3",
            {integer("target_sets", 20, "random target sets"), integer("targets", 4, "targets per set")},
            [](const Params& p, std::uint64_t seed, ExperimentReport& r) {
                const auto [c, cp] = example_collision_pair();
                Rng rng = task_rng(seed, "latent.bottleneck");
                std::vector<Matrix> sets;
                for (long i = 0; i < p.integer("target_sets"); ++i) sets.push_back(rng.normal_matrix(p.integer("targets"), 1));
                const auto same = encoder_bottleneck_lift(identity_encoder(), c, cp, encoding_latent(), sets);
                r.at_most("encoding_gap", same.encoding_gap, "collision_tolerance", 1e-8);
                r.at_most("predictive_gap", std::max(same.mean_gap, same.cov_gap), "tolerance", 1e-6);
                const auto far = ContextSet::scalar({0.0, 3.0}, {1.0, 1.0});
                r.at_least("non_colliding_gap", encoder_bottleneck_lift(identity_encoder(), c, far, encoding_latent(), sets).mean_gap,
                           "min_gap", 1e-3);
            }};
}

}  // namespace detail

inline const std::vector<Experiment>& registry() {
    static const std::vector<Experiment> all = [] {
        using namespace detail;
        std::vector<Experiment> v{cnp_collision(),        cnp_find_collision(),     cnp_pca_bound(),
                                  anp_kernel_smoother(),  anp_factorization(),      tnp_polynomial_structure(),
                                  tnp_chebyshev_bound(),  tnp_depth_scaling(),      tnp_depth_barrier(),
                                  tnp_eigenvalue_family(), tnp_linearization(),     convcnp_grid_gp(),
                                  convcnp_fourier_jacobian(), convcnp_full_support(), convcnp_depth_support(),
                                  convcnp_equivariance(), convcnp_incomparability(), latent_cov_rank(),
                                  latent_gp_rank(),       latent_mean_matching(),   latent_mercer_tail(),
                                  latent_bottleneck()};
        std::sort(v.begin(), v.end(), [](const Experiment& a, const Experiment& b) { return a.id < b.id; });
        return v;
    }();
    return all;
}

inline const char* kHierarchySuite = "hierarchy.suite";

/// The separation and incomparability witnesses.
inline std::vector<std::string> hierarchy_members() {
    return {"cnp.collision",        "cnp.find_collision",   "anp.kernel_smoother",     "anp.factorization",
            "tnp.depth_barrier",    "tnp.eigenvalue_family", "convcnp.equivariance",   "convcnp.incomparability",
            "convcnp.full_support", "latent.cov_rank",      "latent.gp_rank",          "latent.mean_matching",
            "latent.bottleneck"};
}

inline const Experiment* find_experiment(const std::string& id) {
    for (const auto& e : registry())
        if (e.id == id) return &e;
    return nullptr;
}

}  // namespace nplab::lab
