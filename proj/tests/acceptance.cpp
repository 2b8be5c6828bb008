// Acceptance checks: one PASS/FAIL line per criterion, exit 1 if any fails.

#include "nplab/lab/runner.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

namespace {

using namespace nplab;
using namespace nplab::lab;

using Clock = std::chrono::steady_clock;

struct Criterion {
    Criterion(int i, std::string t, double limit) : id(i), title(std::move(t)), time_limit_s(limit) {}

    int id;
    std::string title;
    double time_limit_s;
    bool ok = true;
    std::vector<std::string> notes;

    void check(bool cond, const std::string& what) {
        ok = ok && cond;
        notes.push_back((cond ? "ok: " : "FAILED: ") + what);
    }
};

ExperimentReport run(const std::string& id, Json params, std::uint64_t seed = kDefaultSeed) {
    ExperimentConfig c;
    c.experiment_id = id;
    c.params = std::move(params);
    c.seed = seed;
    return run_experiment(c, seed);
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

/// Every verdict of the report must pass; each is listed as a note.
void require(Criterion& c, const ExperimentReport& r, const std::string& label) {
    if (r.failure != Failure::None) {
        c.check(false, label + " error: " + r.error);
        return;
    }
    for (const auto& v : r.verdicts) {
        if (v.outcome == Outcome::Informational) continue;
        c.check(v.outcome == Outcome::Pass, label + " " + v.measurement + " = " + num(r.measurement(v.measurement)) + " " +
                                                to_string(v.comparison) + " " + num(r.bound_value(v.bound)));
    }
}

void criterion1(Criterion& c) {
    const auto [a, b] = example_collision_pair();
    const auto enc = identity_encoder();
    const Vector ha = mean_encoding(enc, a), hb = mean_encoding(enc, b);
    c.check(ha[0] == 1.0 && ha[1] == 1.0 && hb[0] == 1.0 && hb[1] == 1.0,
            "mean encodings (" + num(ha[0]) + "," + num(ha[1]) + ") and (" + num(hb[0]) + "," + num(hb[1]) + ") equal (1,1)");
    bool bit_equal = true;
    for (Eigen::Index j = 0; j < 2; ++j)
        bit_equal = bit_equal && cnp_predict(enc, coordinate_decoder(j), a, point1(1.0)) ==
                                     cnp_predict(enc, coordinate_decoder(j), b, point1(1.0));
    c.check(bit_equal, "CNP outputs bit-equal at x_t = 1");
    const double gap = collision_separation(rbf_kernel(1.0), a, b, point1(1.0));
    c.check(gap > 0.01, "GP mean gap " + num(gap) + " > 0.01");
}

void criterion2(Criterion& c) {
    for (auto [n, d] : {std::pair{4, 2}, std::pair{8, 2}, std::pair{16, 4}}) {
        const auto r = run("cnp.pca_bound", {{"n", n}, {"d", d}, {"mode", "SyntheticIsotropic"}, {"encoders", 30}});
        require(c, r, "n=" + std::to_string(n) + " d=" + std::to_string(d));
        if (r.failure == Failure::None) {
            const double dev = std::abs(r.measurement("measured_ratio") - (1.0 - double(d) / n));
            c.check(dev <= 1e-10, "|ratio - (1 - d/n)| = " + num(dev) + " <= 1e-10");
        }
    }
}

void criterion3(Criterion& c) { require(c, run("anp.kernel_smoother", {{"configs", 500}, {"max_n", 16}}), "500 configs"); }

void criterion4(Criterion& c) {
    const auto rep = factorization_counterexample(rbf_kernel(1.0), 180.0, 60.0);
    c.check(rep.gp_weight_gap >= 0.15, "GP weight gap " + num(rep.gp_weight_gap) + " >= 0.15");
    c.check(std::abs(rep.gp_weight_gap - 0.1567) <= 1e-4, "GP weight gap within 1e-4 of 0.1567");
    c.check(rep.identical_score_inputs, "factorized score inputs identical");
    c.check(rep.anp_weight_gap <= 1e-15, "attention weight gap " + num(rep.anp_weight_gap) + " <= 1e-15");
}

void criterion5(Criterion& c) {
    require(c, run("tnp.polynomial_structure", {{"matrices", 20}, {"max_depth", 8}}), "20 Grams, L <= 8");
}

void criterion6(Criterion& c) {
    require(c, run("tnp.chebyshev_bound", {{"matrices", 50}, {"max_n", 32}, {"max_kappa", 100.0}, {"max_depth", 40}}),
            "50 SPD matrices");
    require(c, run("convcnp.grid_gp", {{"sizes", {8, 16, 32, 64}}, {"max_depth", 40}}), "periodic grids n <= 64");
}

void criterion7(Criterion& c) {
    for (double kappa : {4.0, 16.0, 64.0}) {
        const auto r = run("tnp.depth_scaling", {{"kappa", kappa}, {"min_degree", 6}, {"max_degree", 24}, {"epsilon", 1e-6}});
        const std::string tag = "kappa=" + num(kappa);
        if (r.failure != Failure::None) {
            c.check(false, tag + " error: " + r.error);
            continue;
        }
        c.check(r.measurement("slope_relative_error") <= 0.05,
                tag + " slope " + num(r.measurement("slope")) + " vs log rho " + num(r.measurement("log_rho")) + " within 5%");
        c.check(r.measurement("min_oracle_over_barrier") >= 1.0,
                tag + " min oracle/barrier over degrees >= 2 = " + num(r.measurement("min_oracle_over_barrier")) + " >= 1");
        if (kappa >= 16.0)
            c.check(r.measurement("depth_ratio") <= 2.0 / std::sqrt(kappa) + 0.2,
                    tag + " Chebyshev/Neumann depth " + num(r.measurement("depth_ratio")) + " <= " +
                        num(2.0 / std::sqrt(kappa) + 0.2));
    }
}

void criterion8(Criterion& c) {
    const auto lin = run("tnp.linearization", Json::object());
    if (lin.failure != Failure::None) c.check(false, "linear TNP error: " + lin.error);
    else c.check(lin.measurement("fd_error") <= 1e-6, "linear TNP FD Jacobian error " + num(lin.measurement("fd_error")) + " <= 1e-6");
    require(c, run("convcnp.fourier_jacobian", {{"stacks", 20}, {"max_n", 64}}), "grid ConvCNP");
}

void criterion9(Criterion& c) {
    for (double kappa : {4.0, 16.0, 64.0})
        require(c, run("tnp.eigenvalue_family", {{"kappa", kappa}, {"points", 20}}), "kappa=" + num(kappa));
}

void criterion10(Criterion& c) { require(c, run("convcnp.full_support", {{"sizes", {8, 32, 128}}}), "n in {8,32,128}"); }

void criterion11(Criterion& c) {
    require(c, run("latent.cov_rank", {{"models", 100}}), "rank-k models");
    require(c, run("latent.gp_rank", {{"configs", 100}}), "GP posterior");
    require(c, run("latent.mean_matching", Json::object()), "mean matching");
    const Matrix g = uniform_grid(128, -1, 1);
    double tail = 0.0;
    for (Eigen::Index k = 3; k <= 16; ++k) tail = std::max(tail, mercer_tail(polynomial_kernel(2), g, k).tail_trace);
    c.check(tail == 0.0, "quadratic kernel Mercer tail for k >= 3 = " + num(tail) + " == 0");
}

void criterion12(Criterion& c) {
    const auto result = run_suite(hierarchy_tasks(), 0);
    c.check(result.exit_status == 0, "hierarchy suite exit status " + std::to_string(result.exit_status) + " == 0");
    for (const auto& r : result.reports) c.check(r.passed(), r.experiment_id + (r.passed() ? " passed" : " failed"));
}

}  // namespace

int main() {
    std::vector<std::pair<Criterion, void (*)(Criterion&)>> all{
        {{1, "CNP collisions", 1}, criterion1},
        {{2, "CNP PCA lower bound", 10}, criterion2},
        {{3, "ANP kernel smoother", 5}, criterion3},
        {{4, "ANP factorization barrier", 1}, criterion4},
        {{5, "TNP polynomial structure", 5}, criterion5},
        {{6, "Chebyshev upper bound", 30}, criterion6},
        {{7, "depth scaling", 60}, criterion7},
        {{8, "linearization and Jacobians", 30}, criterion8},
        {{9, "eigenvalue family", 5}, criterion9},
        {{10, "full-support trivialization", 5}, criterion10},
        {{11, "latent bottlenecks", 30}, criterion11},
        {{12, "hierarchy suite", 300}, criterion12},
    };
    int failed = 0;
    for (auto& [c, fn] : all) {
        const auto start = Clock::now();
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        c.check(secs < c.time_limit_s, "runtime " + num(secs) + " s < " + num(c.time_limit_s) + " s");
        std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << "\n";
        for (const auto& n : c.notes) std::cout << "    " << n << "\n";
        failed += !c.ok;
    }
    std::cout << (all.size() - failed) << "/" << all.size() << " criteria passed\n";
    return failed ? 1 : 0;
}
