#include "nplab/jacobi.hpp"
#include "nplab/kernels.hpp"
#include "nplab/rng.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

using namespace nplab;

namespace {

Matrix line(std::initializer_list<double> xs) {
    Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

std::vector<KernelSpec> all_families() {
    return {rbf_kernel(0.7, 1.3), matern_kernel(0.5, 0.8), matern_kernel(1.5, 1.1), matern_kernel(2.5, 0.6, 2.0),
            polynomial_kernel(2, 1.0, 1.0),
            scaled_kernel(rbf_kernel(), [](const Point& x) { return 1.0 + 0.5 * std::sin(x[0]); })};
}

}  // namespace

TEST(Jacobi, DiagonalMatrixIsAlreadySolved) {
    Matrix a = Vector::LinSpaced(5, 5.0, 1.0).asDiagonal();
    const auto e = jacobi_eigen(a);
    for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(e.values[i], 1.0 + i);
}

TEST(Jacobi, MatchesEigenOnRandomSymmetric) {
    Rng rng(11, "jacobi");
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 2 + trial;
        const Matrix g = rng.normal_matrix(n, n);
        const Matrix a = symmetrize(g);
        const auto mine = jacobi_eigen(a);
        Eigen::SelfAdjointEigenSolver<Matrix> ref(a);
        EXPECT_LE((mine.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10 * a.norm());
        const Matrix recon = mine.vectors * mine.values.asDiagonal() * mine.vectors.transpose();
        EXPECT_LE((recon - a).norm(), 1e-8 * a.norm());
        EXPECT_LE((mine.vectors.transpose() * mine.vectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Jacobi, SweepBudgetExhaustionThrows) {
    Rng rng(3, "budget");
    const Matrix a = symmetrize(rng.normal_matrix(12, 12));
    EXPECT_THROW(jacobi_eigen(a, JacobiOptions{1e-12, 1}), NumericError);
}

TEST(Rng, StreamsAreReproducibleAndIndependent) {
    Rng a(42, "exp", 0), b(42, "exp", 0), c(42, "exp", 1), d(42, "other", 0);
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
    Rng p(7);
    const auto s1 = p.split("task", 3).next_u64();
    p.next_u64();
    EXPECT_EQ(s1, p.split("task", 3).next_u64());
}

TEST(Rng, UniformAndNormalMoments) {
    Rng rng(5, "moments");
    double su = 0, sn = 0, sn2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, RandomSpdHitsRequestedCondition) {
    Rng rng(9, "spd");
    const Matrix k = random_spd(rng, 10, 64.0, 0.5);
    const auto g = spectrum_of(k);
    EXPECT_NEAR(g.lambda_min, 0.5, 1e-10);
    EXPECT_NEAR(g.kappa, 64.0, 1e-8);
}

TEST(Kernels, ClosedFormValues) {
    const auto rbf = rbf_kernel();
    EXPECT_DOUBLE_EQ(eval_kernel(rbf, point1(0), point1(0)), 1.0);
    EXPECT_NEAR(eval_kernel(rbf, point1(0), point1(2)), 0.1353352832366127, 1e-15);
    EXPECT_NEAR(eval_kernel(matern_kernel(0.5), point1(0), point1(3)), 0.049787068367863944, 1e-15);
    EXPECT_NEAR(eval_kernel(matern_kernel(1.5), point1(0), point1(1)), (1 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0)),
                1e-15);
    EXPECT_NEAR(eval_kernel(matern_kernel(2.5), point1(0), point1(1)),
                (1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0)), 1e-15);
    EXPECT_DOUBLE_EQ(eval_kernel(polynomial_kernel(2), point1(1), point1(2)), 9.0);
}

TEST(Kernels, DiagonalIsVarianceWithoutJitter) {
    for (const auto& s : all_families()) {
        if (!s.stationary()) continue;
        EXPECT_DOUBLE_EQ(eval_kernel(s, point2(0.3, -1), point2(0.3, -1)), s.variance);
    }
}

TEST(Kernels, DimensionMismatchAndBadParameters) {
    EXPECT_THROW(eval_kernel(rbf_kernel(), point1(0), point2(0, 0)), InputError);
    EXPECT_THROW(matern_kernel(1.0), InputError);
    EXPECT_THROW(rbf_kernel(-1.0).validate(), InputError);
    EXPECT_THROW(rbf_kernel(1.0, 0.0).validate(), InputError);
    EXPECT_THROW(rbf_kernel().with_jitter(-1).validate(), InputError);
}

TEST(Kernels, SymmetryAndStationarity) {
    Rng rng(1, "stationarity");
    for (const auto& s : all_families()) {
        for (int t = 0; t < 50; ++t) {
            const Point x = rng.normal_vector(2), xp = rng.normal_vector(2), tau = rng.normal_vector(2);
            EXPECT_NEAR(eval_kernel(s, x, xp), eval_kernel(s, xp, x), 1e-14);
            if (s.stationary()) {
                EXPECT_NEAR(eval_kernel(s, x, xp), eval_kernel(s, x - xp, Point::Zero(2)), 1e-14);
                EXPECT_NEAR(eval_kernel(s, x + tau, xp + tau), eval_kernel(s, x, xp), 1e-12);
            }
        }
    }
}

TEST(Kernels, ScaledKernelFactorizesPointwise) {
    const auto sigma = [](const Point& x) { return 1.0 + 0.5 * std::sin(x[0]); };
    const auto base = matern_kernel(1.5, 0.9);
    const auto s = scaled_kernel(base, sigma);
    Rng rng(2, "scaled");
    for (int t = 0; t < 50; ++t) {
        const Point x = rng.normal_vector(1), xp = rng.normal_vector(1);
        EXPECT_NEAR(eval_kernel(s, x, xp), sigma(x) * sigma(xp) * eval_kernel(base, x, xp), 1e-15);
        EXPECT_NEAR(log_kernel(s, x, xp), std::log(eval_kernel(s, x, xp)), 1e-12);
    }
}

TEST(Kernels, LogKernelAvoidsUnderflow) {
    const auto rbf = rbf_kernel();
    EXPECT_DOUBLE_EQ(eval_kernel(rbf, point1(0), point1(100)), 0.0);
    EXPECT_NEAR(log_kernel(rbf, point1(0), point1(100)), -5000.0, 1e-9);
    for (double nu : {0.5, 1.5, 2.5}) {
        const auto m = matern_kernel(nu);
        EXPECT_NEAR(log_kernel(m, point1(0), point1(0.7)), std::log(eval_kernel(m, point1(0), point1(0.7))), 1e-13);
    }
}

TEST(GramSpectrum, TwoPointClosedForm) {
    const auto s = rbf_kernel().with_jitter(0.0);
    const auto g = gram_spectrum(s, line({0.0, 1.0}));
    const double c = std::exp(-0.5);
    EXPECT_NEAR(g.eigenvalues[0], 1 - c, 1e-14);
    EXPECT_NEAR(g.eigenvalues[1], 1 + c, 1e-14);
    EXPECT_NEAR(g.kappa, (1 + c) / (1 - c), 1e-12);
}

TEST(GramSpectrum, WellSeparatedPointsGiveNearIdentity) {
    const auto g = gram_spectrum(rbf_kernel(), line({0.0, 100.0, 200.0, 300.0}));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(g.eigenvalues[i], 1.0, 1e-6);
}

TEST(GramSpectrum, ConditionMatchesCharacteristicPolynomialRoots) {
    // independent oracle: roots of det(K - lambda I) via Faddeev-LeVerrier and a companion matrix
    const auto s = rbf_kernel();
    const Matrix x = line({0.0, 0.5, 1.0, 1.5});
    const auto g = gram_spectrum(s, x);
    const Matrix k = gram_matrix(s, x);
    const int n = 4;
    std::vector<double> c(n + 1);
    c[n] = 1.0;
    Matrix m = Matrix::Zero(n, n);
    for (int j = 1; j <= n; ++j) {
        m = k * m + c[n - j + 1] * Matrix::Identity(n, n);
        c[n - j] = -(k * m).trace() / j;
    }
    Matrix comp = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i];
    Eigen::EigenSolver<Matrix> es(comp);
    double lo = 1e300, hi = 0;
    for (int i = 0; i < n; ++i) {
        lo = std::min(lo, es.eigenvalues()[i].real());
        hi = std::max(hi, es.eigenvalues()[i].real());
    }
    EXPECT_NEAR(g.kappa / (hi / lo), 1.0, 1e-6);
}

TEST(GramSpectrum, PositiveDefiniteAfterJitterEveryFamily) {
    Rng rng(4, "spd-families");
    for (const auto& s : all_families()) {
        if (s.family == KernelFamily::Polynomial) continue;  // rank-limited, covered in latent tests
        for (int t = 0; t < 100; ++t) {
            const Matrix x = rng.uniform_matrix(6, 1, -3, 3);
            const auto g = gram_spectrum(s, x);
            EXPECT_GT(g.lambda_min, 0.0);
            const Matrix recon = g.eigenvectors * g.eigenvalues.asDiagonal() * g.eigenvectors.transpose();
            EXPECT_LE((recon - g.matrix).norm(), 1e-8 * g.matrix.norm());
        }
    }
}

TEST(GramSpectrum, ShiftInvariantForStationaryKernels) {
    Rng rng(6, "shift");
    for (const auto& s : all_families()) {
        if (!s.stationary()) continue;
        for (int t = 0; t < 20; ++t) {
            const Matrix x = rng.normal_matrix(5, 2);
            const Matrix shifted = x.rowwise() + rng.normal_vector(2).transpose();
            EXPECT_LE((gram_matrix(s, x) - gram_matrix(s, shifted)).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(GramSpectrum, SolveHasSmallResidual) {
    Rng rng(8, "solve");
    const auto g = spectrum_of(random_spd(rng, 16, 1e4));
    const Vector b = rng.normal_vector(16);
    EXPECT_LE((g.matrix * g.solve(b) - b).norm(), 1e-12 * b.norm());
    EXPECT_LE((g.matrix * g.inverse() - Matrix::Identity(16, 16)).norm(), 1e-9);
}

TEST(GramSpectrum, RejectsEmptyOrNonFinite) {
    EXPECT_THROW(gram_spectrum(rbf_kernel(), Matrix(0, 1)), InputError);
    Matrix bad = line({0.0, std::nan("")});
    EXPECT_THROW(gram_spectrum(rbf_kernel(), bad), InputError);
}
