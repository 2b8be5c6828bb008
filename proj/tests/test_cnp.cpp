#include "nplab/cnp.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>

using namespace nplab;

TEST(CnpPredict, ExamplePairMeanEncodesToOneOne) {
    const auto [c, cp] = example_collision_pair();
    const auto enc = identity_encoder();
    const Vector h = mean_encoding(enc, c), hp = mean_encoding(enc, cp);
    EXPECT_EQ(h, Vector::Ones(2));
    EXPECT_EQ(hp, Vector::Ones(2));
    EXPECT_EQ(cnp_predict(enc, coordinate_decoder(0), c, point1(1)), 1.0);
}

TEST(CnpPredict, SingletonAndDuplicates) {
    const auto enc = linear_encoder((Matrix(2, 2) << 1, 2, 3, 4).finished(), Vector::Ones(2), 1, 1);
    const auto dec = [](const Vector& r, const Point& x) { return r[0] * x[0] + r[1]; };
    const auto one = ContextSet::scalar({0.3}, {-1.0});
    Vector z(2);
    z << 0.3, -1.0;
    EXPECT_DOUBLE_EQ(cnp_predict(enc, dec, one, point1(2)), dec(enc(z), point1(2)));
    const auto two = ContextSet::scalar({0.3, 0.3}, {-1.0, -1.0});
    EXPECT_DOUBLE_EQ(cnp_predict(enc, dec, two, point1(2)), cnp_predict(enc, dec, one, point1(2)));
}

TEST(CnpPredict, EmptyContextIsInputError) {
    EXPECT_THROW(cnp_predict(identity_encoder(), coordinate_decoder(), ContextSet(Matrix(0, 1), Matrix(0, 1)), point1(0)),
                 InputError);
}

TEST(CnpPredict, PermutationInvariant) {
    Rng rng(41, "perm");
    const auto enc = smooth_test_encoder(2, 1, 4);
    const auto dec = [](const Vector& r, const Point& x) { return r.squaredNorm() + r[0] * x[0]; };
    const ContextSet c(rng.normal_matrix(7, 2), rng.normal_matrix(7, 1));
    const double ref = cnp_predict(enc, dec, c, point2(0.5, 1));
    std::vector<Eigen::Index> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    for (int t = 0; t < 100; ++t) {
        for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        EXPECT_NEAR(cnp_predict(enc, dec, c.permuted(perm), point2(0.5, 1)), ref, 1e-13);
    }
}

TEST(Encoder, SmoothTestIsLipschitzOnABox) {
    const auto enc = smooth_test_encoder(1, 1, 2);
    Rng rng(42, "lipschitz");
    double worst = 0;
    for (int t = 0; t < 2000; ++t) {
        const Vector z = rng.uniform_matrix(2, 1, -3, 3).col(0), dz = 1e-4 * rng.normal_vector(2);
        worst = std::max(worst, (enc(z + dz) - enc(z)).norm() / dz.norm());
    }
    // |W| + a |Omega| bounds the Lipschitz constant
    EXPECT_LT(worst, 1.0 + 0.2 * enc.frequency.norm());
}

TEST(MatchingDistance, PermutationsAreNotDistinct) {
    const ContextSet c = ContextSet::scalar({0, 1, 2, 5}, {1, 1, 0, 3});
    const auto p = c.permuted({2, 0, 3, 1});
    EXPECT_NEAR(matching_distance(c, p), 0.0, 1e-15);
    EXPECT_FALSE(check_collision(identity_encoder(), c, p).collides());
}

TEST(MatchingDistance, AgreesWithBruteForce) {
    Rng rng(43, "matching");
    for (int t = 0; t < 30; ++t) {
        const ContextSet a(rng.normal_matrix(5, 1), rng.normal_matrix(5, 1));
        const ContextSet b(rng.normal_matrix(5, 1), rng.normal_matrix(5, 1));
        std::vector<Eigen::Index> perm{0, 1, 2, 3, 4};
        double best = 1e300;
        do {
            double s = 0;
            for (Eigen::Index i = 0; i < 5; ++i) s += (a.pair(i) - b.pair(perm[static_cast<std::size_t>(i)])).squaredNorm();
            best = std::min(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        EXPECT_NEAR(matching_distance(a, b), std::sqrt(best), 1e-12);
    }
}

TEST(FindCollision, ExamplePairIsACollision) {
    const auto [c, cp] = example_collision_pair();
    const auto chk = check_collision(identity_encoder(), c, cp);
    EXPECT_TRUE(chk.collides());
    EXPECT_EQ(chk.encoding_gap, 0.0);
}

TEST(FindCollision, SmoothEncoderThreePoints) {
    const auto enc = smooth_test_encoder(1, 1, 2);
    const auto res = find_collision(enc, 3, 7);
    ASSERT_TRUE(res.found) << res.message;
    // independent re-check by direct averaging
    Vector ha = Vector::Zero(2), hb = Vector::Zero(2);
    for (Eigen::Index i = 0; i < 3; ++i) {
        ha += enc(res.first.pair(i)) / 3.0;
        hb += enc(res.second.pair(i)) / 3.0;
    }
    EXPECT_LE((ha - hb).norm(), 1e-8);
    EXPECT_GE(matching_distance(res.first, res.second), 0.1);
}

TEST(FindCollision, IndistinguishableThroughAnyDecoder) {
    const auto enc = smooth_test_encoder(1, 1, 3);
    const auto res = find_collision(enc, 4, 11);
    ASSERT_TRUE(res.found);
    const auto dec = [](const Vector& r, const Point& x) { return std::sin(r[0] * x[0]) + r[1] * r[2]; };
    Rng rng(44, "queries");
    for (int q = 0; q < 20; ++q) {
        const Point xt = rng.normal_vector(1);
        EXPECT_LE(std::abs(cnp_predict(enc, dec, res.first, xt) - cnp_predict(enc, dec, res.second, xt)), 1e-6);
    }
}

TEST(FindCollision, DimensionConditionEnforced) {
    EXPECT_THROW(find_collision(smooth_test_encoder(1, 1, 4), 2, 0), InputError);
}

TEST(CollisionSeparation, ExamplePair) {
    const auto [c, cp] = example_collision_pair();
    const auto s = rbf_kernel();
    EXPECT_GT(collision_separation(s, c, cp, point1(1)), 0.01);
    EXPECT_EQ(collision_separation(s, c, c, point1(1)), 0.0);
    const auto enc = identity_encoder();
    EXPECT_EQ(cnp_predict(enc, coordinate_decoder(1), c, point1(1)), cnp_predict(enc, coordinate_decoder(1), cp, point1(1)));
}

TEST(CollisionSeparation, FarApartContextsMerge) {
    const auto s = rbf_kernel();
    const auto a = ContextSet::scalar({100, 200}, {1, 1}), b = ContextSet::scalar({300, 400}, {1, 1});
    EXPECT_LT(collision_separation(s, a, b, point1(0)), 1e-12);
}

TEST(PcaBound, SyntheticRatioIsExact) {
    for (auto [n, d] : {std::pair{4, 2}, {8, 2}, {16, 4}}) {
        const auto r = pca_bound_synthetic(n, d, 3);
        EXPECT_NEAR(r.measured_ratio, 1.0 - double(d) / n, 1e-10);
        EXPECT_NEAR(r.generalized_bound, 1.0 - double(d) / n, 1e-10);
    }
    EXPECT_NEAR(pca_bound_synthetic(4, 2).measured_ratio, 0.5, 1e-12);
    EXPECT_EQ(pca_bound_synthetic(5, 5).measured_ratio, 0.0);
    EXPECT_THROW(pca_bound_synthetic(4, 5), InputError);
    EXPECT_THROW(pca_bound_synthetic(4, 0), InputError);
}

TEST(PcaBound, RandomEncodersNeverBeatPca) {
    for (auto [n, d] : {std::pair{4, 2}, {8, 2}, {16, 4}}) {
        const auto r = pca_bound_synthetic(n, d, 5);
        Rng rng(45, "encoders", static_cast<std::uint64_t>(n));
        EXPECT_GE(best_random_encoder_mse(r.weights, d, 30, rng), r.measured_ratio - 1e-9);
    }
}

TEST(PcaBound, RelativeMseMatchesSvdOracle) {
    Rng rng(46, "svd");
    const Matrix w = rng.normal_matrix(6, 40);
    const Eigen::JacobiSVD<Matrix> svd(w);
    const Vector s2 = svd.singularValues().array().square();
    EXPECT_NEAR(encoder_relative_mse(w, pca_encoder(w, 2)), s2.tail(4).sum() / s2.sum(), 1e-12);
}

TEST(PcaBound, MonteCarloStaysBelowIsotropicValue) {
    MonteCarloSetup mc;
    mc.seed = 1;
    const auto r = pca_bound_monte_carlo(16, 4, mc);
    EXPECT_NEAR(r.measured_ratio, r.generalized_bound, 1e-10);
    EXPECT_LE(r.measured_ratio, r.bound + 1e-12);
    EXPECT_GT(r.measured_ratio, 0.5);
    EXPECT_FALSE(r.rank_deficient);
}

TEST(OlsMoment, InterceptOnlyIsTheMean) {
    const std::vector<Feature> f{[](const Point&) { return 1.0; }};
    const auto c = ContextSet::scalar({0, 1, 5}, {2, 4, 9});
    const auto r = ols_moment_encoder(f, c, point1(3));
    EXPECT_NEAR(r.prediction, 5.0, 1e-12);
    EXPECT_EQ(r.dimension, 2);
}

TEST(OlsMoment, SimpleLinearRegression) {
    const std::vector<Feature> f{[](const Point&) { return 1.0; }, [](const Point& x) { return x[0]; }};
    const auto c = ContextSet::scalar({0, 1, 3}, {1, 2, 2.5});
    const double mx = 4.0 / 3, my = 5.5 / 3;
    const double sxy = (0 - mx) * (1 - my) + (1 - mx) * (2 - my) + (3 - mx) * (2.5 - my);
    const double sxx = mx * mx + (1 - mx) * (1 - mx) + (3 - mx) * (3 - mx);
    const double slope = sxy / sxx, intercept = my - slope * mx;
    EXPECT_NEAR(ols_moment_encoder(f, c, point1(2)).prediction, intercept + 2 * slope, 1e-10);
}

TEST(OlsMoment, MatchesLeastSquares) {
    Rng rng(47, "ols");
    const std::vector<Feature> f{[](const Point&) { return 1.0; }, [](const Point& x) { return x[0]; },
                                 [](const Point& x) { return std::sin(x[0]); }};
    EXPECT_EQ(moment_dimension(3), 9);
    for (int t = 0; t < 20; ++t) {
        const ContextSet c(rng.normal_matrix(10, 1), rng.normal_matrix(10, 1));
        Matrix design(10, 3);
        for (Eigen::Index i = 0; i < 10; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) design(i, j) = f[static_cast<std::size_t>(j)](c.x(i));
        const Vector beta = design.colPivHouseholderQr().solve(c.y_column());
        const Point xt = point1(0.7);
        const double ref = beta[0] + beta[1] * 0.7 + beta[2] * std::sin(0.7);
        const auto r = ols_moment_encoder(f, c, xt);
        EXPECT_NEAR(r.prediction, ref, 1e-8);
        EXPECT_EQ(r.encoding.size(), 9);
    }
}

TEST(OlsMoment, SingularGramThrows) {
    const std::vector<Feature> f{[](const Point&) { return 1.0; }, [](const Point& x) { return x[0]; }};
    EXPECT_THROW(ols_moment_encoder(f, ContextSet::scalar({1, 1}, {0, 2}), point1(0)), NumericError);
}
