#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qpencil/analytic.hpp"
#include "qpencil/charfn.hpp"
#include "qpencil/random_problem.hpp"

using namespace qpencil;

TEST(CharFn, FreeClosedFormsAtHalf) {
    const auto pb = oracle::f0();
    EXPECT_NEAR(std::abs(eval_d(pb, 0.5) - 2.0), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(eval_d1(pb, 0.5)), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(eval_a(pb, 0.5) + 2.0), 0.0, 1e-11);
}

TEST(CharFn, FreeClosedFormsOffAxis) {
    const auto pb = oracle::f1();
    for (cplx rho : {cplx{1.0, 0.0}, cplx{2.7, 0.8}, cplx{-4.1, -1.3}}) {
        EXPECT_NEAR(std::abs(eval_d(pb, rho) - oracle::free_d(rho)), 0.0, 1e-10 * (1.0 + std::abs(oracle::free_d(rho))));
        EXPECT_NEAR(std::abs(eval_d1(pb, rho) - oracle::free_d1(rho)), 0.0, 1e-10 * (1.0 + std::abs(oracle::free_d1(rho))));
        const cplx a = oracle::free_a(rho, 2.0, 1.0);
        EXPECT_NEAR(std::abs(eval_a(pb, rho) - a), 0.0, 1e-10 * (1.0 + std::abs(a)));
    }
    EXPECT_NEAR(std::abs(eval_a(pb, 1.0) + 6.0), 0.0, 1e-10);
}

TEST(CharFn, ScalingJumpVanishesAtIntegers) {
    EXPECT_NEAR(std::abs(eval_d(oracle::j1(), 2.0)), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(eval_d(oracle::j1(), 0.5) - 2.5), 0.0, 1e-11);
}

TEST(CharFn, DFromBundleEqualsAPlusConstant) {
    const auto pb = oracle::f1();
    const auto b = make_forward_bundle(pb);
    EXPECT_NEAR(std::abs(eval_D(b, 2.0, 1.0, 1.0) + 3.0), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(eval_D(b, 2.0, 1.0, 2.0) - 3.0), 0.0, 1e-10);
    // cross-check alpha phi + beta S' = 2 (-1) + (-1) at rho = 1
    const auto S = propagate(pb, SolutionKind::S, 1.0, 0), phi = propagate(pb, SolutionKind::phi, 1.0, 0);
    EXPECT_NEAR(std::abs(2.0 * phi.y() + S.dy() + 3.0), 0.0, 1e-10);
    const auto b0 = make_forward_bundle(oracle::f0());
    for (double r : {0.3, 1.7, 2.2}) EXPECT_NEAR(std::abs(eval_D(b0, 1.0, 1.0, r) - 2.0 * std::cos(r * oracle::pi)), 0.0, 1e-10);
}

TEST(CharFn, QSquaredAtEigenvalues) {
    const auto b = make_forward_bundle(oracle::f1());
    EXPECT_NEAR(std::abs(eval_Q_squared(b, 2.0, 1.0, 1.0, true) - 1.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(eval_Q(oracle::f1(), 1.0) + 1.0), 0.0, 1e-10);  // Q = cos(rho pi)
    const auto b0 = make_forward_bundle(oracle::f0());
    for (int n : {1, 2, 3}) EXPECT_NEAR(std::abs(eval_Q_squared(b0, 1.0, 1.0, n, true)), 0.0, 1e-9);
    EXPECT_THROW(eval_Q_squared(b, 2.0, 1.0, 0.5, false), numerical_error);
}

TEST(CharFn, IdentityResidualsOnRandomProblems) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const auto pb = random_problem(rng);
        for (int k = 0; k < 10; ++k) {
            const cplx rho{10.0 * u(rng), 4.0 * u(rng)};
            EXPECT_LE(identity6_residual(pb, rho), 1e-8);
            EXPECT_LE(identity7_residual(pb, rho), 1e-7);
        }
    }
}

TEST(CharFn, CompositionBundleAgreesWithSweep) {
    const auto pb = oracle::load("n3_roundtrip.json");
    const auto a = make_forward_bundle(pb), b = make_composition_bundle(pb);
    for (cplx rho : {cplx{0.4, 0.2}, cplx{5.5, -1.0}}) {
        EXPECT_NEAR(std::abs(a.d(rho) - b.d(rho)), 0.0, 1e-10 * (1.0 + std::abs(a.d(rho))));
        EXPECT_NEAR(std::abs(a.d1(rho) - b.d1(rho)), 0.0, 1e-10 * (1.0 + std::abs(a.d1(rho))));
    }
}

TEST(DerivativeAt, FreeDAtFirstZero) {
    const auto h = make_forward_bundle(oracle::f0()).d;
    EXPECT_NEAR(std::abs(derivative_at(h, 1.0, 1, 0.25) + oracle::pi), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(derivative_at(h, 1.0, 0, 0.25)), 0.0, 1e-12);
}

TEST(DerivativeAt, CubeThirdDerivative) {
    const AnalyticHandle h([](cplx z) { return z * z * z; });
    EXPECT_NEAR(std::abs(derivative_at(h, 0.0, 3, 0.5) - 6.0), 0.0, 1e-12);
    const auto tc = taylor_coefficients(h, 1.0, 3, 0.5);  // (1 + t)^3
    EXPECT_NEAR(std::abs(tc[2] - 3.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(tc[3] - 1.0), 0.0, 1e-12);
}

TEST(Asymptotics, FreeSineLeadingTerm) {
    const auto rep = check_asymptotics(oracle::f0(), HalfPlane::upper, 0.3, {5, 10, 20, 40});
    for (const auto& s : rep.samples) {
        if (std::abs(s.ray_angle - oracle::pi / 2) > 1e-12) continue;
        // d (2 i rho) e^{i rho pi} = e^{2 i rho pi} - 1
        const cplx expect = std::exp(2.0 * cplx{0, 1} * s.rho * oracle::pi);
        EXPECT_NEAR(s.dev_d, std::abs(expect), 1e-9);
    }
}

TEST(Asymptotics, JumpAmplitudeEntersLeadingCoefficient) {
    const auto rep = check_asymptotics(oracle::j1(), HalfPlane::lower, 0.3, {10, 20, 40});
    EXPECT_NEAR(std::abs(rep.xi_product - 1.25), 0.0, 1e-15);
    for (const auto& s : rep.samples) EXPECT_LT(s.dev_d, 1e-3);
}

TEST(Asymptotics, PotentialGivesInverseFirstPowerDecay) {
    const auto pb = oracle::load("n3_roundtrip.json");
    for (auto hp : {HalfPlane::upper, HalfPlane::lower}) {
        const auto rep = check_asymptotics(pb, hp, 0.3, {8, 16, 32, 64, 128});
        for (const auto& r : rep.rays) {
            EXPECT_GE(r.slope_d, -1.3);
            EXPECT_LE(r.slope_d, -0.7);
            EXPECT_GE(r.slope_a, -1.3);
            EXPECT_LE(r.slope_a, -0.7);
        }
        EXPECT_GT(rep.bound_constant_S, 0.0);
    }
}
