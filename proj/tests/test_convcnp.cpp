#include "nplab/convcnp.hpp"

#include <gtest/gtest.h>

using namespace nplab;

namespace {

Vector shift(const Vector& v, Eigen::Index s) {
    const Eigen::Index n = v.size();
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[(i + s) % n] = v[i];
    return out;
}

Matrix fd_matrix(const std::function<Vector(const Vector&)>& f, Eigen::Index n, double h) {
    Matrix j(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Vector e = Vector::Zero(n);
        e[c] = h;
        j.col(c) = (f(e) - f(-e)) / (2 * h);
    }
    return j;
}

}  // namespace

TEST(Dft, MatchesMatrixDefinitionAndInverts) {
    Rng rng(61, "dft");
    const Vector x = rng.normal_vector(7);
    const CVector xf = dft(x);
    for (Eigen::Index k = 0; k < 7; ++k) {
        Complex ref = 0;
        for (Eigen::Index m = 0; m < 7; ++m) ref += x[m] * std::polar(1.0, -2 * std::numbers::pi * k * m / 7.0);
        EXPECT_NEAR(std::abs(xf[k] - ref), 0.0, 1e-12);
    }
    EXPECT_LE((idft(xf).real() - x).norm(), 1e-13);
    EXPECT_LE(idft(xf).imag().norm(), 1e-13);
}

TEST(Circulant, EigenvaluesMatchMaterializedMatrix) {
    Rng rng(62, "circ");
    const CirculantOperator c(rng.normal_vector(9));
    const Matrix m = c.matrix();
    const Eigen::ComplexEigenSolver<Matrix> es(m);
    for (Eigen::Index k = 0; k < 9; ++k) {
        double best = 1e300;
        for (Eigen::Index j = 0; j < 9; ++j) best = std::min(best, std::abs(es.eigenvalues()[j] - c.eigenvalues[k]));
        EXPECT_LE(best, 1e-10);
    }
    const Vector v = rng.normal_vector(9);
    EXPECT_LE((c.apply(v) - m * v).norm(), 1e-12);
}

TEST(Circulant, AlgebraIsPerFrequency) {
    Rng rng(63, "alg");
    const CirculantOperator a(rng.normal_vector(8)), b(rng.normal_vector(8));
    EXPECT_LE(((a * b).eigenvalues - a.eigenvalues.cwiseProduct(b.eigenvalues)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(((a + b).eigenvalues - a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(((a * b).matrix() - a.matrix() * b.matrix()).norm(), 1e-12);
}

TEST(Circulant, NonConjugateSymmetricSpectrumRejected) {
    CVector ev = CVector::Ones(4);
    ev[1] = Complex(1, 1);
    EXPECT_THROW(CirculantOperator::from_eigenvalues(ev), NumericError);
}

TEST(Circulant, FourPointFilterSpectrum) {
    // taps (b, a, b) on n = 4: lambda_k = a + 2 b cos(pi k / 2)
    Vector taps(3);
    taps << 0.25, 1.0, 0.25;
    const auto f = filter_operator(taps, 4);
    EXPECT_EQ(f.column, (Vector(4) << 1.0, 0.25, 0.0, 0.25).finished());
    const Vector lam = f.real_eigenvalues();
    EXPECT_NEAR(lam[0], 1.5, 1e-15);
    EXPECT_NEAR(lam[1], 1.0, 1e-15);
    EXPECT_NEAR(lam[2], 0.5, 1e-15);
    EXPECT_THROW(filter_operator(Vector::Ones(2), 4), InputError);
}

TEST(WrappedKernel, SymmetricAndImageSum) {
    const GridSpec g{8, 1.0, true};
    const auto k = wrapped_kernel_operator(rbf_kernel().with_jitter(0), g);
    for (Eigen::Index j = 1; j < 8; ++j) EXPECT_DOUBLE_EQ(k.column[j], k.column[8 - j]);
    EXPECT_NEAR(k.column[4], 2 * std::exp(-8.0), 1e-18);
    EXPECT_NEAR(k.column[1], std::exp(-0.5), 1e-18);
    EXPECT_LE(k.eigenvalues.imag().cwiseAbs().maxCoeff(), 1e-13);
}

TEST(WrappedKernel, DistantPointsGiveIdentity) {
    const auto k = wrapped_kernel_operator(rbf_kernel(), GridSpec{6, 100.0, true});
    EXPECT_LE((k.matrix() - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Channels, DensityAndSignalValues) {
    const auto c = ContextSet::scalar({0, 1}, {2, -1});
    Matrix q(2, 1);
    q << 0, 0.5;
    const auto ch = channels(rbf_kernel(), c, q, value_with_one());
    EXPECT_NEAR(ch.density[0], 1 + std::exp(-0.5), 1e-15);
    EXPECT_NEAR(ch.signal(0, 0), 2 - std::exp(-0.5), 1e-15);
    EXPECT_NEAR(ch.signal(1, 1), 2 * std::exp(-0.125), 1e-15);
    EXPECT_NEAR(smoother_readout(ch)[1], 0.5, 1e-15);
}

TEST(Channels, PermutationInvariant) {
    Rng rng(64, "chperm");
    const ContextSet c(rng.normal_matrix(6, 1), rng.normal_matrix(6, 1));
    const Matrix q = rng.normal_matrix(5, 1);
    const auto a = channels(rbf_kernel(0.7), c, q, value_with_one());
    const auto b = channels(rbf_kernel(0.7), c.permuted({3, 1, 5, 0, 2, 4}), q, value_with_one());
    EXPECT_LE((a.density - b.density).norm(), 1e-14);
    EXPECT_LE((a.signal - b.signal).norm(), 1e-14);
}

TEST(RecoverContext, RoundTripsOnGridContexts) {
    const auto w = rbf_kernel(1.0);
    Matrix grid(161, 1);
    for (Eigen::Index i = 0; i < 161; ++i) grid(i, 0) = -10 + 0.125 * i;
    const auto c = ContextSet::scalar({-6.0, -2.5, 1.0, 4.75}, {0.3, -1.2, 2.0, 0.5});
    const auto ch = channels(w, c, grid, identity_value());
    const auto r = recover_context(w, ch.density, ch.signal, grid);
    ASSERT_EQ(r.size(), 4);
    EXPECT_LE((r.locations - c.locations).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((r.values - c.values).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(RecoverContext, CoincidentOrCoarseRejected) {
    const auto w = rbf_kernel(1.0);
    Matrix grid(81, 1);
    for (Eigen::Index i = 0; i < 81; ++i) grid(i, 0) = -5 + 0.125 * i;
    const auto c = ContextSet::scalar({0.0, 0.0}, {1.0, 2.0});
    const auto ch = channels(w, c, grid, identity_value());
    EXPECT_THROW(recover_context(w, ch.density, ch.signal, grid), DegenerateError);
    Matrix coarse(21, 1);
    for (Eigen::Index i = 0; i < 21; ++i) coarse(i, 0) = -5 + 0.5 * i;
    const auto cc = channels(w, ContextSet::scalar({0.0}, {1.0}), coarse, identity_value());
    EXPECT_THROW(recover_context(w, cc.density, cc.signal, coarse), InputError);
}

TEST(GridCnnGp, MatchesOracleWithinBound) {
    Rng rng(65, "gridgp");
    for (Eigen::Index n : {8, 16, 32, 64}) {
        const GridSpec g{n, 0.5, true};
        const Vector y = rng.normal_vector(n);
        for (int depth : {1, 4, 8, 16, 32}) {
            const auto r = grid_cnn_gp(rbf_kernel(), g, y, 0.37 * g.period(), depth);
            EXPECT_TRUE(r.within_bound()) << "n=" << n << " L=" << depth << " err=" << r.error << " bound=" << r.bound;
        }
        const auto deep = grid_cnn_gp(rbf_kernel(), GridSpec{n, 1.0, true}, y, 0.37 * n, 128);
        EXPECT_LE(deep.error, 1e-6 * std::max(1.0, std::abs(deep.oracle)));
    }
}

TEST(GridCnnGp, IdentityGramIsOneLayerExact) {
    const GridSpec g{6, 100.0, true};
    Vector y(6);
    y << 1, 2, 3, 4, 5, 6;
    const auto r = grid_cnn_gp(rbf_kernel(), g, y, 200.0, 1);
    EXPECT_NEAR(r.kappa, 1.0, 1e-9);
    EXPECT_NEAR(r.prediction, 3.0, 1e-9);
    EXPECT_NEAR(r.error, 0.0, 1e-12);
}

TEST(GridCnnGp, TranslationEquivariant) {
    Rng rng(66, "equiv");
    const GridSpec g{16, 0.5, true};
    const Vector y = rng.normal_vector(16);
    for (Eigen::Index s : {1, 3, 7}) {
        const double a = grid_cnn_gp(rbf_kernel(), g, y, 1.3, 6).prediction;
        const double b = grid_cnn_gp(rbf_kernel(), g, shift(y, s), 1.3 + s * g.spacing, 6).prediction;
        EXPECT_NEAR(a, b, 1e-10);
    }
}

TEST(GridCnnGp, RejectsAperiodicAndSingular) {
    EXPECT_THROW(grid_cnn_gp(rbf_kernel(), GridSpec{8, 0.5, false}, Vector::Zero(8), 0, 3), InputError);
    EXPECT_THROW(grid_cnn_gp(rbf_kernel().with_jitter(0), GridSpec{32, 0.05, true}, Vector::Zero(32), 0, 3),
                 NumericError);
    EXPECT_THROW(grid_cnn_gp(rbf_kernel(), GridSpec{8, 0.5, true}, Vector::Zero(8), 0, 0), InputError);
}

TEST(FourierJacobian, MatchesFiniteDifferencesOfNonlinearForward) {
    Rng rng(67, "jac");
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 8 + 4 * static_cast<Eigen::Index>(rng.below(15));
        const auto w = wrapped_kernel_operator(rbf_kernel(rng.uniform(0.5, 2)), GridSpec{n, 1.0, true});
        std::vector<CirculantOperator> filters;
        const auto layers = 1 + rng.below(4);
        for (std::uint64_t l = 0; l < layers; ++l) {
            const Eigen::Index p = rng.below(2) ? 3 : 5;
            filters.push_back(filter_operator(rng.uniform_matrix(p, 1, -0.3, 0.3).col(0), n));
        }
        const auto net = GridConvCnp::build(w, filters);
        const Matrix fd = fd_matrix(net, n, 1e-5);
        const auto jac = net.analytic_jacobian();
        EXPECT_LE((fd - jac.matrix()).cwiseAbs().maxCoeff(), 1e-7);
        worst = std::max(worst, (frequency_response(fd) - jac.eigenvalues).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 1e-5);
}

TEST(FourierJacobian, ForwardIsTranslationEquivariant) {
    Rng rng(68, "fwd");
    const Eigen::Index n = 12;
    const auto net = GridConvCnp::build(wrapped_kernel_operator(rbf_kernel(), GridSpec{n, 1.0, true}),
                                        {filter_operator(rng.normal_vector(3), n), filter_operator(rng.normal_vector(5), n)});
    const Vector y = rng.normal_vector(n);
    for (Eigen::Index s : {1, 5}) EXPECT_LE((net(shift(y, s)) - shift(net(y), s)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FullSupport, InvertsWrappedRbf) {
    for (Eigen::Index n : {8, 32, 128}) {
        const auto k = wrapped_kernel_operator(rbf_kernel(), GridSpec{n, 1.0, true});
        const auto g = CirculantOperator(Vector::Unit(n, 0) / k.column.sum());
        const auto f = full_support_solve(k, g, k, 1.0, 0.5);
        EXPECT_LE(full_support_residual(f, k, g, k, 1.0, 0.5), 1e-10) << n;
        // independent check: the materialized Jacobian times K is the identity
        const Matrix j = g.matrix() * (Matrix::Identity(n, n) + 0.5 * f.matrix()) * k.matrix();
        EXPECT_LE((j * k.matrix() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-8) << n;
    }
}

TEST(FullSupport, VanishingFrequencyIsDegenerate) {
    Vector taps(3);
    taps << 0.5, 1.0, 0.5;  // lambda = 0 at the Nyquist frequency
    const auto k = filter_operator(taps, 8);
    const auto one = identity_operator(8);
    EXPECT_THROW(full_support_solve(k, one, one, 1.0, 0.5), DegenerateError);
}

TEST(DepthSupport, ThreeTapDecayMatchesChebyshevRate) {
    const auto sym = three_tap_symbol(64, 2.5, 1.5);
    const auto r = depth_support_experiment(sym, 3, {1e-2, 1e-4, 1e-6});
    EXPECT_NEAR(r.kappa, 4.0, 1e-12);
    EXPECT_NEAR(r.predicted_slope, std::log(1.0 / 3.0), 1e-12);
    EXPECT_NEAR(r.decay_slope, r.predicted_slope, 0.05);
    EXPECT_TRUE(r.all_hold);
    for (const auto& e : r.entries) EXPECT_GE(e.reach, e.trig_degree);
}

TEST(DepthSupport, TrigMinimaxMatchesPolynomialMinimax) {
    // cos(D w) = T_D(cos w): with lambda = a + b cos w the trig problem is the
    // polynomial minimax of 1/mu on the image of the frequency grid
    const auto sym = three_tap_symbol(256, 2.5, 1.5);
    const Vector lam = sym.real_eigenvalues();
    for (int d : {1, 3, 6}) {
        const double trig = trig_minimax(lam, d);
        const double cont = minimax_oracle(1.0, 4.0, d).error;
        EXPECT_LE(trig, cont * (1 + 1e-9));
        EXPECT_GE(trig, 0.97 * cont);
    }
}

TEST(DepthSupport, WrappedRbfRespectsInequality) {
    const auto r = depth_support_experiment(rbf_kernel(), GridSpec{256, 1.0, true}, 7, {1e-1, 1e-2, 1e-3});
    EXPECT_TRUE(r.all_hold);
    EXPECT_GT(r.kappa, 1.0);
}

TEST(DepthSupport, ConstantSpectrumNeedsNoDepthAtUnitScale) {
    const auto one = identity_operator(16);
    const auto r = depth_support_experiment(one, 3, {1e-3});
    EXPECT_EQ(r.entries[0].trig_degree, 0);
    EXPECT_EQ(r.entries[0].required_depth, 0);
    const auto twice = CirculantOperator(2.0 * Vector::Unit(16, 0));
    const auto r2 = depth_support_experiment(twice, 3, {1e-3});
    EXPECT_EQ(r2.entries[0].required_depth, 1);
}

TEST(DepthSupport, FullSupportIsOneLayer) {
    const auto r = depth_support_experiment(rbf_kernel(), GridSpec{16, 1.0, true}, 16, {1e-6});
    EXPECT_TRUE(r.entries[0].full_support);
    EXPECT_EQ(r.entries[0].required_depth, 1);
}

TEST(DepthSupport, SmallGridRejected) {
    EXPECT_THROW(depth_support_experiment(three_tap_symbol(8, 2.5, 1.5), 3, {1e-8}), InputError);
}

TEST(Witness, NoGpTransplant) {
    const auto r = convcnp_no_gp(rbf_kernel());
    EXPECT_EQ(r.convcnp_gap, 0.0);
    const double num = std::exp(-0.5) + std::exp(-2.0);
    EXPECT_NEAR(r.gp_a, num / (1 + std::exp(-4.5)), 1e-9);
    EXPECT_NEAR(r.gp_b, num / (1 + std::exp(-0.5)), 1e-9);
    EXPECT_GT(r.gp_gap, 0.05);
}

TEST(Witness, ScaledSmootherIsNotEquivariant) {
    const auto spec = scaled_kernel(rbf_kernel(), [](const Point& x) { return 1 + 0.5 * std::sin(x[0]); });
    const auto c = ContextSet::scalar({-1, 0.5, 2}, {1, -1, 2});
    EXPECT_GT(equivariance_defect(spec, c, point1(0.2), {0.5, 1.0, 2.0}), 1e-2);
    // the stationary smoother has no defect
    EXPECT_LE(equivariance_defect(rbf_kernel(), c, point1(0.2), {0.5, 1.0, 2.0}), 1e-12);
}
