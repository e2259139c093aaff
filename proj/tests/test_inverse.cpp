#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qpencil/inverse.hpp"

using namespace qpencil;

namespace {

InverseInput input_for(const PencilProblem& pb, const Rect& window, SpectrumWindow* oracle_window = nullptr) {
    InverseInput in;
    const auto b = make_forward_bundle(pb);
    in.bundle.a = b.a;
    in.bundle.d = b.d;
    auto w = build_window(b.d, window);
    in.omega = extract_omega(pb, w).stripped();
    if (oracle_window) *oracle_window = w;
    in.alpha = pb.alpha;
    in.beta = pb.beta;
    for (const auto& j : pb.jumps) in.gammas.push_back(j.gamma);
    in.breakpoints = pb.breakpoints;
    in.window = window;
    in.T = pb.T;
    return in;
}

const EigenRecord& record(const std::vector<EigenRecord>& recs, int n) {
    for (const auto& r : recs)
        if (r.n == n) return r;
    throw std::runtime_error("no record");
}

}  // namespace

TEST(Step1, RecoversIntegerZeros) {
    const auto in = input_for(oracle::f1(), Rect::symmetric(4.5, 1.0));
    const auto w = step1_zeros(in);
    EXPECT_EQ(w.I, (std::vector<int>{-4, -3, -2, -1, 1, 2, 3, 4}));
    for (const auto& g : w.groups) EXPECT_NEAR(std::abs(g.nu - static_cast<double>(g.leader)), 0.0, 1e-10);
    const auto wj = step1_zeros(input_for(oracle::j1(), Rect::symmetric(4.5, 1.0)));
    for (const auto& g : wj.groups) EXPECT_NEAR(std::abs(g.nu - static_cast<double>(g.leader)), 0.0, 1e-10);
}

TEST(Step1, DetectsConstructedDoubleZero) {
    InverseInput in;
    in.bundle.d = AnalyticHandle::from_jet([](cplx r) {
        const cplx s = oracle::free_d(r);
        return ValueSlope{s * (r - 2.0), s + (r - 2.0) * (oracle::pi * std::cos(r * oracle::pi) - s) / r};
    });
    in.window = {1.5, 3.5, -1.0, 1.0};
    const auto w = step1_zeros(in);
    ASSERT_NE(w.group(1), nullptr);
    EXPECT_EQ(w.group(1)->multiplicity, 2);
    EXPECT_NEAR(std::abs(w.group(1)->nu - 2.0), 0.0, 1e-7);
}

TEST(Step2, HyperbolicRatioForAsymmetricBoundary) {
    const auto in = input_for(oracle::f1(), Rect::symmetric(2.5, 1.0));
    const double s = 10.0;
    const cplx ratio = in.bundle.a(cplx{0, s}) / (s * in.bundle.d(cplx{0, s}));
    const double closed = (3.0 * std::cosh(s * oracle::pi) - 3.0) / std::sinh(s * oracle::pi);
    EXPECT_NEAR(std::abs(ratio - closed), 0.0, 1e-10);
    EXPECT_NEAR(closed, 3.0, 1e-12);
    const auto r = step2_h_prime(in);
    EXPECT_NEAR(std::abs(r.z0_plus - 3.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(r.z0_minus - 3.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(r.h_prime), 0.0, 1e-9);
    EXPECT_TRUE(r.trace.plateau);
}

TEST(Step2, ImaginaryHPrime) {
    auto pb = oracle::f0();
    pb.h_prime = cplx{0.0, 0.3};
    const auto r = step2_h_prime(input_for(pb, Rect::symmetric(2.5, 1.0)));
    EXPECT_NEAR(std::abs(r.z0_plus - cplx{2.0, -0.3}), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(r.z0_minus - cplx{2.0, 0.3}), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(r.h_prime - cplx{0.0, 0.3}), 0.0, 1e-6);
}

TEST(Step2, MissingPlateauReportsTheTrace) {
    auto in = input_for(oracle::load("j1_complex.json"), Rect::symmetric(2.5, 1.0));
    InverseOptions opt;
    opt.sigma_schedule = {0.5, 0.75, 1.0};
    try {
        step2_h_prime(in, opt);
        FAIL();
    } catch (const algorithm_error& e) {
        EXPECT_EQ(e.step(), 2);
        EXPECT_NE(std::string(e.what()).find("sigma-trace"), std::string::npos);
    }
}

TEST(Step2, NevilleIsExactOnPolynomials) {
    const std::vector<double> u{0.1, 0.2, 0.35, 0.5};
    std::vector<cplx> f;
    for (double x : u) f.push_back(cplx{3.0, 1.0} - 2.0 * x + cplx{0, 5} * x * x * x);
    EXPECT_NEAR(std::abs(detail::extrapolate_to_zero(u, f) - cplx{3.0, 1.0}), 0.0, 1e-13);
}

TEST(Step3, DIsAShiftedByConstant) {
    const auto in = input_for(oracle::f1(), Rect::symmetric(2.5, 1.0));
    const auto D = step3_build_D(in);
    EXPECT_NEAR(std::abs(D(1.0) + 3.0), 0.0, 1e-10);
    for (cplx r : {cplx{0.3, 0.2}, cplx{-1.7, 0.5}}) EXPECT_NEAR(std::abs(D(r) - in.bundle.a(r) - 3.0), 0.0, 1e-14);
    const auto D0 = step3_build_D(input_for(oracle::f0(), Rect::symmetric(2.5, 1.0)));
    EXPECT_NEAR(std::abs(D0(0.7) - 2.0 * std::cos(0.7 * oracle::pi)), 0.0, 1e-10);
}

TEST(Step4, SignedRootsAndOmegaN0) {
    const auto in = input_for(oracle::f1(), Rect::symmetric(2.5, 1.0));
    const auto w = step1_zeros(in);
    const auto recs = step4_Q_at_eigenvalues(in, w, step3_build_D(in));
    const auto& r1 = record(recs, 1);
    EXPECT_EQ(r1.omega, -1);
    EXPECT_NEAR(std::abs(r1.Q.value + 1.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(r1.omega_n0.value + 1.0), 0.0, 1e-9);
    EXPECT_EQ(r1.Q.step, 4);
    EXPECT_EQ(r1.omega_n0.step, 5);
    const auto& r2 = record(recs, 2);
    EXPECT_NEAR(std::abs(r2.Q.value - 1.0), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(r2.omega_n0.value - 1.0), 0.0, 1e-9);
}

TEST(Step4, SymmetricCaseUsesHalfOfD) {
    const auto in = input_for(oracle::f0(), Rect::symmetric(3.5, 1.0));
    const auto recs = step4_Q_at_eigenvalues(in, step1_zeros(in), step3_build_D(in));
    for (const auto& r : recs) {
        EXPECT_EQ(r.Q.value, cplx{0.0});
        EXPECT_NEAR(std::abs(r.omega_n0.value - ((r.n % 2 == 0) ? 1.0 : -1.0)), 0.0, 1e-9);
    }
}

TEST(Step4, IncompleteOmegaFailsAtStepFour) {
    auto in = input_for(oracle::f1(), Rect::symmetric(2.5, 1.0));
    in.omega.entries.erase(in.omega.entries.begin() + 1);
    const auto rep = run_inverse(in);
    EXPECT_EQ(rep.failed_step, 4);
    EXPECT_NE(rep.error.find("incomplete Omega"), std::string::npos);
    EXPECT_FALSE(rep.all_pass());
    EXPECT_EQ(report_to_json(rep)["status"], "failed");
}

TEST(Step4, MissingDerivativeDataForDegenerateMultipleZero) {
    auto in = input_for(oracle::load("double_zero_i0.json"), Rect::symmetric(4.2, 1.0));
    bool found = false;
    for (auto& e : in.omega.entries)
        if (e.multiplicity > 1 && e.omega == 0) {
            e.omega_nu.clear();
            found = true;
        }
    ASSERT_TRUE(found);
    const auto rep = run_inverse(in);
    EXPECT_EQ(rep.failed_step, 4);
}

TEST(Step6, JetSolveIsExactForPolynomials) {
    // Q = 1 + 2 t + 3 t^2: (Q'Q)(0) = 2, (Q'Q)'(0) = Q''Q + Q'^2 = 10
    const auto q = solve_Q_jets(1.0, {2.0, 10.0});
    EXPECT_NEAR(std::abs(q[0] - 2.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(q[1] - 6.0), 0.0, 1e-15);
    // one term: Q' = D' D / Q
    const auto q1 = solve_Q_jets(cplx{2.0, 1.0}, product_jets({cplx{3.0, 0.0}, cplx{0.5, -1.0}}, 1));
    EXPECT_NEAR(std::abs(q1[0] - cplx{0.5, -1.0} * 3.0 / cplx{2.0, 1.0}), 0.0, 1e-15);
}

TEST(Step6, NoOpWithoutMultipleZeros) {
    const auto in = input_for(oracle::f1(), Rect::symmetric(2.5, 1.0));
    auto recs = step4_Q_at_eigenvalues(in, step1_zeros(in), step3_build_D(in));
    step6_7_jets(in, step3_build_D(in), recs);
    for (const auto& r : recs) {
        EXPECT_EQ(r.Q_jets.step, 0);
        EXPECT_TRUE(r.omega_nu.value.empty());
    }
}

TEST(Steps678, DoubleZeroMatchesForwardOracles) {
    const auto pb = oracle::load("double_zero.json");
    SpectrumWindow w;
    const auto in = input_for(pb, Rect::symmetric(4.2, 1.0), &w);
    const auto rep = run_inverse(in);
    ASSERT_EQ(rep.failed_step, 0) << rep.error;
    const auto fwd = make_forward_bundle(pb);
    const auto Qh = make_Q_handle(pb);
    const auto M = detail::weyl_handle(fwd);
    int multiple = 0;
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        const auto& r = rep.records[i];
        if (r.multiplicity == 1) continue;
        ++multiple;
        EXPECT_NE(r.omega, 0);
        EXPECT_EQ(r.Q_jets.step, 6);
        EXPECT_EQ(r.omega_nu.step, 7);
        EXPECT_NEAR(std::abs(r.Q_jets.value[0] - derivative_at(Qh, r.nu, 1, 0.25)), 0.0, 1e-7);
        EXPECT_NEAR(std::abs(r.omega_nu.value[0] - derivative_at(fwd.d1, r.nu, 1, 0.25)), 0.0, 1e-7);
        const auto& g = rep.weyl.value.groups[i];
        const auto c = residues_via_contour(M, r.nu, r.multiplicity, 0.3);
        for (int k = 0; k < r.multiplicity; ++k) EXPECT_NEAR(std::abs(g.principal[k] - c[k]), 0.0, 1e-6);
    }
    EXPECT_GE(multiple, 1);
}

TEST(Step8, SimpleZeroRatios) {
    const auto in = input_for(oracle::f1(), Rect::symmetric(2.5, 1.0));
    const auto rep = run_inverse(in);
    ASSERT_EQ(rep.failed_step, 0) << rep.error;
    EXPECT_NEAR(std::abs(*rep.weyl.value.M(1) + 1.0 / oracle::pi), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(*rep.weyl.value.M(2) + 2.0 / oracle::pi), 0.0, 1e-9);
}

TEST(Step10, RealH) {
    auto pb = oracle::f0();
    pb.h = 2.0;
    const auto in = input_for(pb, Rect::symmetric(3.5, 1.0));
    const auto r = step10_recover_h(in, pb, 0.0, {0.5});
    EXPECT_NEAR(std::abs(r.h - 2.0), 0.0, 1e-9);
    const auto z = step10_recover_h(input_for(oracle::f1(), Rect::symmetric(3.5, 1.0)), oracle::f1(), 0.0, {0.5, 1.5, 2.5});
    EXPECT_LE(std::abs(z.h), 1e-9);
}

TEST(Step10, ComplexHAcrossFiveSamples) {
    auto pb = oracle::f1();
    pb.h = cplx{1.0, 1.0};
    SpectrumWindow w;
    const auto in = input_for(pb, Rect::symmetric(5.5, 1.0), &w);
    const auto pts = step10_sample_points(pb, w, 5);
    ASSERT_EQ(pts.size(), 5u);
    const auto r = step10_recover_h(in, pb, 0.0, pts);
    EXPECT_NEAR(std::abs(r.h - cplx{1.0, 1.0}), 0.0, 1e-8);
    EXPECT_LT(r.spread * r.spread, 1e-12);
}

TEST(Roundtrip, AsymmetricFreeProblemPasses) {
    RoundtripConfig cfg;
    cfg.window = Rect::symmetric(6.0, 2.0);
    const auto res = run_roundtrip(oracle::f1(), cfg);
    ASSERT_EQ(res.report.failed_step, 0) << res.report.error;
    EXPECT_TRUE(res.report.all_pass());
    for (const auto& c : res.report.comparisons) EXPECT_LT(c.delta, 1e-6) << c.name;
}

TEST(Roundtrip, ComplexJumpProblemPasses) {
    RoundtripConfig cfg;
    cfg.window = Rect::symmetric(6.0, 2.0);
    const auto res = run_roundtrip(oracle::load("j1_complex.json"), cfg);
    ASSERT_EQ(res.report.failed_step, 0) << res.report.error;
    for (const auto& c : res.report.comparisons) EXPECT_TRUE(c.pass) << c.name << " delta " << c.delta;
    ASSERT_TRUE(res.report.h.value.has_value());
    EXPECT_NEAR(std::abs(*res.report.h.value - cplx{0.0, 1.0}), 0.0, 1e-6);
}

TEST(Roundtrip, ZeroToleranceFailsComparison) {
    RoundtripConfig cfg;
    cfg.window = Rect::symmetric(3.5, 1.0);
    cfg.tol = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const auto res = run_roundtrip(oracle::f1(), cfg);
    EXPECT_EQ(res.report.failed_step, 0);
    EXPECT_FALSE(res.report.all_pass());
}

TEST(Roundtrip, ReportIsDeterministicAcrossRunsAndThreadCounts) {
    RoundtripConfig cfg;
    cfg.window = Rect::symmetric(3.5, 1.5);
    const auto pb = oracle::load("j1_complex.json");
    const auto a = report_to_json(run_roundtrip(pb, cfg).report).dump();
    const auto b = report_to_json(run_roundtrip(pb, cfg).report).dump();
    cfg.inverse.jobs = cfg.weyl.jobs = cfg.omega.jobs = 3;
    const auto c = report_to_json(run_roundtrip(pb, cfg).report).dump();
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
}
