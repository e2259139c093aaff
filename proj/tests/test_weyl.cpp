#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qpencil/inverse.hpp"
#include "qpencil/weyl.hpp"

using namespace qpencil;

namespace {

constexpr double pi = std::numbers::pi;

// d = (rho - 2)^2 e^rho, d1 = 1 + rho: M = -e^{-2} (3 - 2 t + ...) / t^2 with t = rho - 2.
AnalyticHandle double_zero_d() {
    return AnalyticHandle::from_jet([](cplx r) {
        const cplx t = r - 2.0;
        return ValueSlope{t * t * std::exp(r), (2.0 * t + t * t) * std::exp(r)};
    });
}
AnalyticHandle linear_d1() {
    return AnalyticHandle::from_jet([](cplx r) { return ValueSlope{1.0 + r, 1.0}; });
}

}  // namespace

TEST(EvalWeyl, FreeValues) {
    EXPECT_NEAR(std::abs(eval_weyl(oracle::f0(), 0.5)), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(eval_weyl(oracle::f0(), 0.25) + 0.25), 0.0, 1e-11);
}

TEST(EvalWeyl, JumpValueMatchesClosedFormAndBoundarySolve) {
    const auto pb = oracle::j1();
    const cplx expect = -oracle::j1_C(0.5) / oracle::j1_d(0.5);  // -0.75 / 2.5
    EXPECT_NEAR(std::abs(expect + 0.3), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(eval_weyl(pb, 0.5) - expect), 0.0, 1e-11);
    EXPECT_NEAR(std::abs(weyl_solution_to(pb, 0.5, 0.0).dy() - expect), 0.0, 1e-10);
    const cplx rho{1.3, 0.9};
    EXPECT_NEAR(std::abs(weyl_solution_to(pb, rho, 0.0).dy() - eval_weyl(pb, rho)), 0.0, 1e-10);
}

TEST(PrincipalPart, SimpleZeroIsRatio) {
    const auto p = principal_part({cplx{2.0, 1.0}}, {cplx{-3.0, 0.5}});
    ASSERT_EQ(p.size(), 1u);
    EXPECT_NEAR(std::abs(p[0] - cplx{3.0, -0.5} / cplx{2.0, 1.0}), 0.0, 1e-15);
}

TEST(PrincipalPart, DoublePoleMatchesLaurentExpansion) {
    const double e2 = std::exp(2.0);
    const auto p = principal_part({e2, e2}, {3.0, 1.0});  // d = t^2 e^2 (1 + t + ...), d1 = 3 + t
    EXPECT_NEAR(std::abs(p[0] - 2.0 / e2), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(p[1] + 3.0 / e2), 0.0, 1e-14);
    const auto dj = d_jets_at(double_zero_d(), 2.0, 2), d1j = d1_jets_at(linear_d1(), 2.0, 2);
    EXPECT_NEAR(std::abs(dj[0] - e2), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(dj[1] - e2), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(d1j[1] - 1.0), 0.0, 1e-12);
}

TEST(ResiduesViaContour, FreeFirstPole) {
    const auto b = make_forward_bundle(oracle::f0());
    const auto r = residues_via_contour(detail::weyl_handle(b), 1.0, 1, 0.4);
    EXPECT_NEAR(std::abs(r[0] + 1.0 / pi), 0.0, 1e-8);
}

TEST(ResiduesViaContour, DoublePole) {
    const AnalyticHandle M([](cplx r) { return -(1.0 + r) / ((r - 2.0) * (r - 2.0) * std::exp(r)); });
    const auto r = residues_via_contour(M, 2.0, 2, 0.5);
    const double e2 = std::exp(2.0);
    EXPECT_NEAR(std::abs(r[0] - 2.0 / e2), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(r[1] + 3.0 / e2), 0.0, 1e-10);
}

TEST(ResiduesViaContour, RemovablePointGivesZeros) {
    const AnalyticHandle M([](cplx r) { return -std::exp(-r) * (r - 2.0) * (r - 2.0) / ((r - 2.0) * (r - 2.0) + 1e-300); });
    const auto r = residues_via_contour(M, 2.0, 2, 0.5);
    for (const auto& c : r) EXPECT_NEAR(std::abs(c), 0.0, 1e-12);
    const auto p = principal_part({1.0, 0.3}, {0.0, 0.0});
    for (const auto& c : p) EXPECT_EQ(c, cplx{0.0});
}

TEST(WeylResidues, FreeSequence) {
    const auto b = make_forward_bundle(oracle::f0());
    const auto w = build_window(b.d, 5.5, 1.0);
    const auto wd = weyl_residues(b, w);
    ASSERT_EQ(wd.groups.size(), 10u);
    for (const auto& [n, M] : wd.sequence()) {
        EXPECT_NEAR(std::abs(M + n / pi) / (n / pi > 0 ? n / pi : -n / pi), 0.0, 1e-7) << "n=" << n;
    }
}

TEST(WeylResidues, BoundaryCoefficientsDoNotChangeTheSequence) {
    const auto b0 = make_forward_bundle(oracle::f0()), b1 = make_forward_bundle(oracle::f1());
    const auto w = build_window(b0.d, 3.5, 1.0);
    const auto s0 = weyl_residues(b0, w).sequence(), s1 = weyl_residues(b1, w).sequence();
    ASSERT_EQ(s0.size(), s1.size());
    for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_NEAR(std::abs(s0[i].second - s1[i].second), 0.0, 1e-12);
}

TEST(WeylResidues, JumpSequenceMatchesContourOracle) {
    const auto pb = oracle::load("j1_complex.json");
    const auto b = make_forward_bundle(pb);
    const auto w = build_window(b.d, 4.5, 1.5);
    const auto wd = weyl_residues(b, w);
    const auto M = detail::weyl_handle(make_composition_bundle(pb));
    for (const auto& g : wd.groups) {
        const auto c = residues_via_contour(M, g.nu, g.multiplicity, isolation_radius(w, g));
        EXPECT_NEAR(std::abs(c[0] - g.principal[0]), 0.0, 1e-8 * std::max(1.0, std::abs(c[0])));
    }
}

TEST(Branch, ArgumentRangeAndSnapping) {
    EXPECT_EQ(arg_0_2pi(cplx{1.0, 0.0}), 0.0);
    EXPECT_NEAR(arg_0_2pi(cplx{0.0, -1.0}), 1.5 * pi, 1e-15);
    EXPECT_EQ(arg_0_2pi(cplx{-1.0, -1e-13}, real_axis_snap), pi);
    EXPECT_EQ(arg_0_2pi(cplx{1.0, -1e-13}, real_axis_snap), 0.0);
    EXPECT_EQ(sign_class(cplx{-1.0, 0.0}, real_axis_snap), -1);
    EXPECT_EQ(sign_class(cplx{1.0, 0.0}, real_axis_snap), +1);
    EXPECT_EQ(sign_class(cplx{1.0, -1e-13}, real_axis_snap), +1);
}

TEST(Branch, SquareRootOnEveryQuadrantAndPositiveAxis) {
    struct Case {
        cplx z;
        double arg_root;
    };
    const Case cases[] = {
        {{4.0, 0.0}, 0.0},                   // positive real axis
        {{1.0, 1.0}, pi / 8},                // first quadrant
        {{-1.0, 1.0}, 3 * pi / 8},           // second
        {{-1.0, -1.0}, 5 * pi / 8},          // third
        {{1.0, -1.0}, 7 * pi / 8},           // fourth
        {{-4.0, 0.0}, pi / 2},               // negative real axis
        {{4.0, -1e-13}, 0.0},                // snapped onto the positive axis
    };
    for (const auto& c : cases) {
        const cplx r = paper_sqrt(c.z, 2 * real_axis_snap);
        EXPECT_NEAR(std::abs(r * r - c.z), 0.0, 1e-14 * std::abs(c.z) + 1e-12) << c.z;
        EXPECT_NEAR(arg_0_2pi(r), c.arg_root, 1e-14) << c.z;
    }
}

TEST(Branch, ReconstructedQReproducesSign) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<cplx> qs{1.0, -1.0, cplx{2.5, 0.0}, cplx{-0.3, 0.0}, cplx{0.0, 1.0}, cplx{0.0, -1.0}};
    for (int k = 0; k < 200; ++k) qs.push_back(std::polar(0.05 + 5.0 * u(rng), 2 * pi * u(rng)));
    for (const auto& Q : qs) {
        const int omega = sign_class(Q, real_axis_snap);
        const cplx back = reconstruct_Q(Q * Q, omega);
        EXPECT_EQ(sign_class(back, real_axis_snap), omega) << Q;
        EXPECT_NEAR(std::abs(back - Q), 0.0, 1e-13 * std::abs(Q)) << Q;
    }
}

TEST(ExtractOmega, AlternatingSignsForAsymmetricBoundary) {
    const auto pb = oracle::f1();
    auto w = build_window(make_forward_bundle(pb).d, 4.5, 1.0);
    const auto om = extract_omega(pb, w);
    for (const auto& e : om.entries) {
        const int parity = (e.n % 2 == 0) ? 1 : -1;
        EXPECT_EQ(e.omega, parity) << "n=" << e.n;
        EXPECT_NEAR(std::abs(*e.Q - static_cast<double>(parity)), 0.0, 1e-10);
        // d1(nu_n) = (D + Q) / (2 alpha) with D = 3 (-1)^n
        EXPECT_NEAR(std::abs(*e.omega_n0 - (3.0 * parity + *e.Q) / 4.0), 0.0, 1e-10);
    }
    EXPECT_TRUE(w.omega_installed);
}

TEST(ExtractOmega, SymmetricFreeProblemHasZeroSigns) {
    const auto pb = oracle::f0();
    auto w = build_window(make_forward_bundle(pb).d, 4.5, 1.0);
    const auto om = extract_omega(pb, w);
    for (const auto& e : om.entries) {
        EXPECT_EQ(e.omega, 0);
        EXPECT_FALSE(e.ambiguous);
    }
}

TEST(ExtractOmega, ThresholdBandIsReported) {
    OmegaOptions opt;
    bool amb = false;
    EXPECT_EQ(classify_omega(cplx{5e-10, 0.0}, 0.0, opt, &amb), 0);
    EXPECT_FALSE(amb);
    EXPECT_EQ(classify_omega(cplx{-5e-9, 0.0}, 0.0, opt, &amb), -1);
    EXPECT_TRUE(amb);
    EXPECT_EQ(classify_omega(cplx{-1.0, 0.0}, 0.0, opt, &amb), -1);
    EXPECT_FALSE(amb);
}

TEST(ExtractOmega, JsonRoundTripAndStripping) {
    const auto pb = oracle::f1();
    auto w = build_window(make_forward_bundle(pb).d, 2.5, 1.0);
    const auto om = extract_omega(pb, w);
    const auto back = omega_from_json(omega_to_json(om));
    ASSERT_EQ(back.entries.size(), om.entries.size());
    for (std::size_t i = 0; i < om.entries.size(); ++i) EXPECT_EQ(back.entries[i].omega, om.entries[i].omega);
    const auto s = om.stripped();
    for (const auto& e : s.entries) {
        EXPECT_FALSE(e.omega_n0.has_value());
        EXPECT_FALSE(e.Q.has_value());
    }
    json bad = omega_to_json(om);
    bad[0]["omega_n"] = 2;
    EXPECT_THROW(omega_from_json(bad), validation_error);
}
