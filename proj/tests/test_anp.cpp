#include "nplab/anp.hpp"

#include <gtest/gtest.h>

using namespace nplab;

TEST(AttentionWeights, SimplexOnRandomInputs) {
    Rng rng(51, "simplex");
    const auto score = log_kernel_score(rbf_kernel(1.0), 0.7);
    for (int t = 0; t < 200; ++t) {
        const ContextSet c(rng.normal_matrix(9, 2), rng.normal_matrix(9, 1));
        const Vector a = attention_weights(score, c, rng.normal_vector(2));
        EXPECT_NEAR(a.sum(), 1.0, 1e-12);
        EXPECT_GT(a.minCoeff(), 0.0);
    }
}

TEST(AttentionWeights, LargeScoresDoNotOverflow) {
    const auto score = custom_score([](const Point&, const Point& x, const Vector&) { return 1e4 * x[0]; });
    const auto a = attention_weights(score, ContextSet::scalar({1, 1.01}, {0, 0}), point1(0));
    EXPECT_TRUE(a.allFinite());
    EXPECT_NEAR(a[1], 1.0, 1e-12);
}

TEST(AnpPredict, UniformScoreIsACnp) {
    Rng rng(52, "uniform");
    const ContextSet c(rng.normal_matrix(6, 1), rng.normal_matrix(6, 1));
    const double anp = anp_predict(uniform_score(), pair_value(), first_component(), c, point1(0.3));
    const double cnp = cnp_predict(identity_encoder(), coordinate_decoder(0), c, point1(0.3));
    EXPECT_NEAR(anp, cnp, 1e-14);
}

TEST(AnpPredict, SingleContext) {
    const auto c = ContextSet::scalar({2.0}, {-0.5});
    EXPECT_DOUBLE_EQ(anp_predict(log_kernel_score(rbf_kernel()), value_and_one(), ratio_decoder(), c, point1(7)), -0.5);
}

TEST(AnpPredict, EmptyContextIsInputError) {
    EXPECT_THROW(anp_predict(uniform_score(), value_and_one(), ratio_decoder(), ContextSet(Matrix(0, 1), Matrix(0, 1)),
                             point1(0)),
                 InputError);
}

TEST(AnpPredict, LogKernelEqualsKernelSmoother) {
    Rng rng(53, "smoother");
    double worst = 0;
    for (int t = 0; t < 500; ++t) {
        const auto n = static_cast<Eigen::Index>(1 + rng.below(16));
        const KernelSpec spec = t % 2 ? rbf_kernel(rng.uniform(0.3, 2)) : matern_kernel(1.5, rng.uniform(0.3, 2));
        const ContextSet c(rng.uniform_matrix(n, 2, -2, 2), rng.normal_matrix(n, 1));
        const Point xt = rng.uniform_matrix(2, 1, -2, 2).col(0);
        worst = std::max(worst, std::abs(anp_predict(log_kernel_score(spec), value_and_one(), ratio_decoder(), c, xt) -
                                         nadaraya_watson(spec, c, xt)));
    }
    EXPECT_LE(worst, 1e-10);
}

TEST(NadarayaWatson, Values) {
    const auto s = rbf_kernel();
    EXPECT_DOUBLE_EQ(nadaraya_watson(s, ContextSet::scalar({0, 1, 4}, {3, 3, 3}), point1(2)), 3.0);
    EXPECT_NEAR(nadaraya_watson(s, ContextSet::scalar({-1, 1}, {2, 5}), point1(0)), 3.5, 1e-15);
    EXPECT_NEAR(nadaraya_watson(s, ContextSet::scalar({0, 1}, {0, 1}), point1(0)),
                std::exp(-0.5) / (1 + std::exp(-0.5)), 1e-15);
    EXPECT_NEAR(nadaraya_watson(s, ContextSet::scalar({0, 1}, {0, 1}), point1(0)), 0.37754, 1e-5);
}

TEST(NadarayaWatson, StaysInRange) {
    Rng rng(54, "range");
    for (int t = 0; t < 200; ++t) {
        const ContextSet c(rng.normal_matrix(5, 1), rng.normal_matrix(5, 1));
        const double v = nadaraya_watson(matern_kernel(0.5), c, rng.normal_vector(1));
        EXPECT_GE(v, c.values.minCoeff() - 1e-14);
        EXPECT_LE(v, c.values.maxCoeff() + 1e-14);
    }
}

TEST(NadarayaWatson, UnderflowIsNumericError) {
    EXPECT_THROW(nadaraya_watson(rbf_kernel(0.1), ContextSet::scalar({100}, {1}), point1(0)), NumericError);
    // the attention route stays finite through the log-kernel score
    EXPECT_DOUBLE_EQ(anp_predict(log_kernel_score(rbf_kernel(0.1)), value_and_one(), ratio_decoder(),
                                 ContextSet::scalar({100}, {1}), point1(0)),
                     1.0);
}

TEST(Factorization, RbfCounterexample) {
    const auto r = factorization_counterexample(rbf_kernel());
    const double a = std::exp(-0.5) / (1 + std::exp(-2.0)), b = std::exp(-0.5) / (1 + std::exp(-0.5));
    EXPECT_NEAR(r.gp_w1_a, a, 1e-9);
    EXPECT_NEAR(r.gp_w1_b, b, 1e-9);
    EXPECT_NEAR(r.gp_weight_gap, 0.1567, 1e-4);
    EXPECT_TRUE(r.identical_score_inputs);
    EXPECT_LE(r.anp_weight_gap, 1e-15);
}

TEST(Factorization, IdenticalAnglesGiveNoGap) {
    const auto r = factorization_counterexample(rbf_kernel(), 90, 90);
    EXPECT_EQ(r.gp_weight_gap, 0.0);
}

TEST(Factorization, MaternHalfAlsoSeparates) {
    const auto r = factorization_counterexample(matern_kernel(0.5));
    const double k2a = std::exp(-2.0), k2b = std::exp(-1.0), kt = std::exp(-1.0);
    EXPECT_NEAR(r.gp_weight_gap, std::abs(kt / (1 + k2a) - kt / (1 + k2b)), 1e-9);
    EXPECT_GT(r.gp_weight_gap, 0.0);
}

TEST(Factorization, NonStationaryRejected) {
    EXPECT_THROW(factorization_counterexample(polynomial_kernel(2)), InputError);
}

TEST(EquivalenceProbe, QueryDependence) {
    const auto [c, cp] = example_collision_pair();
    std::vector<Point> qs;
    for (int i = 0; i < 50; ++i) qs.push_back(point1(-1 + 4.0 * i / 49));
    EXPECT_EQ(anp_equivalence_probe(uniform_score(), pair_value(), c, c, qs).maxCoeff(), 0.0);
    EXPECT_LE(anp_equivalence_probe(uniform_score(), pair_value(), c, cp, qs).maxCoeff(), 1e-8);
    EXPECT_GT(anp_equivalence_probe(log_kernel_score(rbf_kernel()), pair_value(), c, cp, qs).maxCoeff(), 1e-3);
}

TEST(EquivalenceProbe, FoundCollisionUnderUniformScore) {
    const auto res = find_collision(identity_encoder(2, 1), 3, 5);
    ASSERT_TRUE(res.found);
    std::vector<Point> qs{point2(0, 0), point2(1, -1), point2(3, 2)};
    EXPECT_LE(anp_equivalence_probe(uniform_score(), pair_value(), res.first, res.second, qs).maxCoeff(), 1e-8);
}
