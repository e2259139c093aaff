#pragma once

// Reconstruction of the boundary coefficients and the Weyl sequence from a(rho), d(rho) and the sign
// sequence, with alpha, beta and the gamma_j known. Steps, in order:
//
//   1   zeros nu_n of d, indexed into a window
//   2   z0^+- = lim a(+-i sigma) / (sigma d(+-i sigma)), h' = (z0^- - z0^+) / (2 alpha)
//   3   D = a + 1 + alpha beta
//   4   Q(nu_n) = omega_n sqrt(D^2 - 4 alpha beta), sqrt on the branch arg in [0, 2 pi)
//   5   omega_n0 = (D + Q) / (2 alpha) at nu_n
//   6   (Q' Q)^{(v-1)} = (D' D)^{(v-1)} at nu_n, solved upward for Q^{(v)}, for multiple zeros with Q != 0
//   7   omega_nv = (D^{(v)} + Q^{(v)}) / (2 alpha)
//   8   principal parts of M from omega and the d-jets
//   9   potentials and jump data: not reconstructed, see run_roundtrip
//   10  h from a(rho*) and reference C, S at real sample points rho*

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qpencil/charfn.hpp"
#include "qpencil/parallel.hpp"
#include "qpencil/rootfinder.hpp"
#include "qpencil/weyl.hpp"

namespace qpencil {

struct InverseInput {
    CharFnBundle bundle;  // only a and d are used
    OmegaSequence omega;
    cplx alpha{1.0}, beta{1.0};
    std::vector<cplx> gammas;
    std::vector<double> breakpoints;  // jump positions, known with the gamma_j; they set the sigma scale
    Rect window;
    double T = std::numbers::pi;

    /// Decay length of the subdominant terms in a(i sigma) / (sigma d(i sigma)): the constant 1 + alpha beta
    /// enters like exp(-sigma T) and reflections at the jumps like exp(-2 sigma ell) for the shortest
    /// subinterval ell.
    double sigma_scale() const {
        double ell = T, prev = 0.0;
        for (double b : breakpoints) {
            ell = std::min(ell, b - prev);
            prev = b;
        }
        ell = std::min(ell, T - prev);
        return std::min(T, 2.0 * ell);
    }
};

template <class V>
struct Step {
    V value{};
    int step = 0;
};

struct SigmaTrace {
    std::vector<double> sigma;
    std::vector<cplx> ratio_plus, ratio_minus;
    std::vector<cplx> estimates_plus, estimates_minus;  // extrapolants from the first k + 2 points
    bool plateau = false;
};

struct InverseOptions {
    RootfinderOptions rootfinder;
    std::vector<double> sigma_schedule{32.0, 40.0, 48.0, 64.0, 80.0, 96.0, 128.0};  // in units of 1 / sigma_scale()
    double plateau_tol = 1e-8;
    double jet_radius = 0.25;
    double q_guard = 1e-9;  // |Q(nu)| below q_guard (1 + |D|) in a multiple zero with omega != 0 is inconsistent
    int h_samples = 5;
    int jobs = 1;
};

struct EigenRecord {
    int n = 0;
    cplx nu;
    int multiplicity = 1;
    int omega = 0;
    cplx D, Q_squared;
    Step<cplx> Q;                     // step 4
    Step<cplx> omega_n0;              // step 5
    Step<std::vector<cplx>> Q_jets;   // step 6: Q^{(v)}, v = 1..m-1 (I1 only)
    Step<std::vector<cplx>> omega_nu; // step 7 for I1; step 0 (given) for I0
    std::vector<cplx> DD_jets;        // (D' D)^{(v-1)}, v = 1..m-1, the right side of step 6
};

struct HSample {
    double rho = 0.0;
    cplx h;
    bool used = true;
};

struct Comparison {
    std::string name;
    double delta = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::string detail;
};

struct ReconstructionReport {
    Step<SpectrumWindow> eigenvalues;  // step 1
    Step<cplx> z0_plus, z0_minus, h_prime;
    SigmaTrace sigma_trace;
    std::vector<EigenRecord> records;  // steps 4-7, one per group leader
    Step<WeylData> weyl;               // step 8
    std::string step9 = "not run";
    Step<std::optional<cplx>> h;       // step 10
    std::vector<HSample> h_samples;
    double h_spread = 0.0;
    std::vector<Comparison> comparisons;
    bool compared = false;
    int failed_step = 0;
    std::string error;

    bool all_pass() const {
        return failed_step == 0 && std::all_of(comparisons.begin(), comparisons.end(), [](const auto& c) { return c.pass; });
    }
};

// --- steps --------------------------------------------------------------------------------------

inline SpectrumWindow step1_zeros(const InverseInput& in, const InverseOptions& opt = {}) {
    try {
        return build_window(in.bundle.d, in.window, opt.rootfinder);
    } catch (const numerical_error& e) {
        throw algorithm_error(1, e.what());
    }
}

namespace detail {
/// Neville extrapolation to u = 0 of samples (u_i, f_i).
inline cplx extrapolate_to_zero(const std::vector<double>& u, const std::vector<cplx>& f) {
    std::vector<cplx> p = f;
    const std::size_t n = u.size();
    for (std::size_t k = 1; k < n; ++k)
        for (std::size_t i = 0; i + k < n; ++i) p[i] = (u[i + k] * p[i] - u[i] * p[i + 1]) / (u[i + k] - u[i]);
    return p[0];
}
}  // namespace detail

struct Step2Result {
    cplx z0_plus, z0_minus, h_prime;
    SigmaTrace trace;
};

inline Step2Result step2_h_prime(const InverseInput& in, const InverseOptions& opt = {}) {
    Step2Result r;
    auto& tr = r.trace;
    std::vector<double> u;
    const double ell = in.sigma_scale();
    for (double s : opt.sigma_schedule) {
        const double sigma = s / ell;
        tr.sigma.push_back(sigma);
        u.push_back(1.0 / sigma);
        const cplx up{0.0, sigma}, dn{0.0, -sigma};
        tr.ratio_plus.push_back(in.bundle.a(up) / (sigma * in.bundle.d(up)));
        tr.ratio_minus.push_back(in.bundle.a(dn) / (sigma * in.bundle.d(dn)));
    }
    const std::size_t n = u.size();
    if (n < 3) throw algorithm_error(2, "sigma schedule needs at least three points");
    for (std::size_t k = 2; k <= n; ++k) {
        const std::vector<double> uk(u.begin(), u.begin() + k);
        tr.estimates_plus.push_back(detail::extrapolate_to_zero(uk, {tr.ratio_plus.begin(), tr.ratio_plus.begin() + k}));
        tr.estimates_minus.push_back(detail::extrapolate_to_zero(uk, {tr.ratio_minus.begin(), tr.ratio_minus.begin() + k}));
    }
    r.z0_plus = tr.estimates_plus.back();
    r.z0_minus = tr.estimates_minus.back();
    const auto last_gap = [&](const std::vector<cplx>& e) {
        return std::abs(e[e.size() - 1] - e[e.size() - 2]) / std::max(1.0, std::abs(e.back()));
    };
    tr.plateau = last_gap(tr.estimates_plus) <= opt.plateau_tol && last_gap(tr.estimates_minus) <= opt.plateau_tol;
    if (!tr.plateau) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "extrapolation of a/(sigma d) did not reach a plateau; sigma-trace:";
        for (std::size_t i = 0; i < n; ++i)
            msg << " [sigma=" << tr.sigma[i] << " +:" << tr.ratio_plus[i] << " -:" << tr.ratio_minus[i] << "]";
        msg.precision(3);
        msg << " last gaps " << last_gap(tr.estimates_plus) << ", " << last_gap(tr.estimates_minus);
        throw algorithm_error(2, msg.str());
    }
    r.h_prime = (r.z0_minus - r.z0_plus) / (2.0 * in.alpha);
    return r;
}

/// D(rho) = a(rho) + 1 + alpha beta.
inline AnalyticHandle step3_build_D(const InverseInput& in) {
    const auto a = in.bundle.a;
    const cplx shift = 1.0 + in.alpha * in.beta;
    return AnalyticHandle::from_jet(
        [a, shift](cplx z) {
            const auto vs = a.with_derivative(z);
            return ValueSlope{vs.value + shift, vs.derivative};
        },
        "D");
}

/// Q(nu_n) from its square and the sign; the result re-classifies to `omega`.
inline cplx reconstruct_Q(cplx Q_squared, int omega) {
    if (omega == 0) return {};
    return static_cast<double>(omega) * paper_sqrt(Q_squared, 2.0 * real_axis_snap);
}

/// Steps 4 and 5 for every group of the window.
inline std::vector<EigenRecord> step4_Q_at_eigenvalues(const InverseInput& in, const SpectrumWindow& w, const AnalyticHandle& D) {
    std::vector<EigenRecord> out;
    for (const auto& g : w.groups) {
        const OmegaEntry* e = in.omega.find(g.leader);
        if (!e) throw algorithm_error(4, "incomplete Omega: no omega_n for n = " + std::to_string(g.leader));
        if (e->nu != cplx{} && std::abs(e->nu - g.nu) > 1e-6 * (1.0 + std::abs(g.nu)))
            throw algorithm_error(4, "Omega entry n = " + std::to_string(g.leader) + " refers to a different eigenvalue");
        if (e->omega == 0 && g.multiplicity > 1 && static_cast<int>(e->omega_nu.size()) < g.multiplicity - 1)
            throw algorithm_error(4, "incomplete Omega: omega_{n nu} missing for n = " + std::to_string(g.leader));
        EigenRecord r;
        r.n = g.leader;
        r.nu = g.nu;
        r.multiplicity = g.multiplicity;
        r.omega = e->omega;
        r.D = D(g.nu);
        r.Q_squared = r.D * r.D - 4.0 * in.alpha * in.beta;
        r.Q = {reconstruct_Q(r.Q_squared, r.omega), 4};
        r.omega_n0 = {(r.D + r.Q.value) / (2.0 * in.alpha), 5};
        if (r.omega == 0 && g.multiplicity > 1) r.omega_nu = {{e->omega_nu.begin(), e->omega_nu.begin() + (g.multiplicity - 1)}, 0};
        out.push_back(std::move(r));
    }
    return out;
}

/// Upward solve of (Q' Q)^{(j)} = R_j, j = 0..J-1, for Q^{(1..J)}, given Q^{(0)} != 0.
inline std::vector<cplx> solve_Q_jets(cplx Q0, const std::vector<cplx>& rhs) {
    const std::size_t J = rhs.size();
    std::vector<cplx> q(J + 1);
    q[0] = Q0;
    for (std::size_t j = 0; j < J; ++j) {
        // (Q'Q)^{(j)} = sum_i C(j,i) Q^{(i+1)} Q^{(j-i)}; the i = j term carries the unknown Q^{(j+1)} Q
        cplx acc = rhs[j];
        for (std::size_t i = 0; i < j; ++i) acc -= detail::binomial(static_cast<int>(j), static_cast<int>(i)) * q[i + 1] * q[j - i];
        q[j + 1] = acc / Q0;
    }
    return {q.begin() + 1, q.end()};
}

/// (D' D)^{(j)}, j = 0..J-1, from derivatives Dk[k] = D^{(k)}, k = 0..J.
inline std::vector<cplx> product_jets(const std::vector<cplx>& Dk, std::size_t J) {
    std::vector<cplx> out(J);
    for (std::size_t j = 0; j < J; ++j) {
        cplx acc{};
        for (std::size_t i = 0; i <= j; ++i) acc += detail::binomial(static_cast<int>(j), static_cast<int>(i)) * Dk[i + 1] * Dk[j - i];
        out[j] = acc;
    }
    return out;
}

/// Steps 6 and 7 for multiple zeros with omega_n != 0.
inline void step6_7_jets(const InverseInput& in, const AnalyticHandle& D, std::vector<EigenRecord>& recs, const InverseOptions& opt = {}) {
    parallel_for(recs.size(), opt.jobs, [&](std::size_t i) {
        auto& r = recs[i];
        if (r.multiplicity == 1 || r.omega == 0) return;
        if (std::abs(r.Q.value) <= opt.q_guard * (1.0 + std::abs(r.D)))
            throw algorithm_error(6, "Q(nu) vanishes for n = " + std::to_string(r.n) + " although omega_n != 0: Omega is inconsistent");
        const std::size_t J = static_cast<std::size_t>(r.multiplicity - 1);
        auto Dk = taylor_jets(D, r.nu, static_cast<int>(J), opt.jet_radius);
        Dk[0] = r.D;
        r.DD_jets = product_jets(Dk, J);
        r.Q_jets = {solve_Q_jets(r.Q.value, r.DD_jets), 6};
        std::vector<cplx> om(J);
        for (std::size_t v = 1; v <= J; ++v) om[v - 1] = (Dk[v] + r.Q_jets.value[v - 1]) / (2.0 * in.alpha);
        r.omega_nu = {om, 7};
    });
}

/// Step 8: principal parts of M from omega and the d-jets.
inline WeylData step8_weyl_sequence(const InverseInput& in, const std::vector<EigenRecord>& recs, const InverseOptions& opt = {}) {
    WeylData wd;
    wd.groups.resize(recs.size());
    WeylOptions wo;
    wo.jet_radius = opt.jet_radius;
    parallel_for(recs.size(), opt.jobs, [&](std::size_t i) {
        const auto& r = recs[i];
        WeylGroup g;
        g.leader = r.n;
        g.nu = r.nu;
        g.multiplicity = r.multiplicity;
        g.d_jets = d_jets_at(in.bundle.d, r.nu, r.multiplicity, wo);
        g.d1_jets.push_back(r.omega_n0.value);
        double f = 1.0;
        for (int v = 1; v < r.multiplicity; ++v) {
            f *= v;
            g.d1_jets.push_back(r.omega_nu.value.at(static_cast<std::size_t>(v - 1)) / f);
        }
        // the leading jet is compared with the size of d on the jet circle, d ~ d_0 r^m there
        const double ref = std::abs(in.bundle.d(r.nu + opt.jet_radius)) / std::pow(opt.jet_radius, r.multiplicity);
        if (!(std::abs(g.d_jets[0]) > 1e-8 * ref))
            throw algorithm_error(8, "d vanishes to higher order than claimed at n = " + std::to_string(r.n));
        g.principal = principal_part(g.d_jets, g.d1_jets);
        wd.groups[i] = std::move(g);
    });
    return wd;
}

/// Real sample points between consecutive real parts of the eigenvalues, ordered by |S(T)|.
inline std::vector<double> step10_sample_points(const PencilProblem& reference, const SpectrumWindow& w, int count,
                                                const IntegratorOptions& iopt = {}) {
    std::vector<double> re;
    for (const auto& g : w.groups) re.push_back(g.nu.real());
    std::sort(re.begin(), re.end());
    std::vector<double> cand;
    for (std::size_t i = 0; i + 1 < re.size(); ++i)
        if (re[i + 1] - re[i] > 1e-3) cand.push_back(0.5 * (re[i] + re[i + 1]));
    for (double x = w.window.re_min + 0.37; cand.size() < static_cast<std::size_t>(count) && x < w.window.re_max; x += 0.5)
        cand.push_back(x);
    std::vector<std::pair<double, double>> scored;
    for (double x : cand) scored.emplace_back(std::abs(eval_d(reference, x, iopt)), x);
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> out;
    for (std::size_t i = 0; i < scored.size() && out.size() < static_cast<std::size_t>(count); ++i) out.push_back(scored[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

struct Step10Result {
    cplx h;
    std::vector<HSample> samples;
    double spread = 0.0;
};

/// h = [a + 1 + alpha beta - alpha C - i rho h' alpha S - beta S'] / (alpha S) at T, with C and S from
/// `reference` (whose h and h' are ignored: C and S do not depend on them), median-screened and averaged.
inline Step10Result step10_recover_h(const InverseInput& in, const PencilProblem& reference, cplx h_prime,
                                     const std::vector<double>& points, const IntegratorOptions& iopt = {}) {
    Step10Result r;
    for (double x : points) {
        const cplx rho{x, 0.0};
        const auto S = propagate(reference, SolutionKind::S, rho, 0, iopt);
        const auto C = propagate(reference, SolutionKind::C, rho, 0, iopt);
        if (std::abs(S.y()) < 1e-8) continue;
        const cplx num = in.bundle.a(rho) + 1.0 + in.alpha * in.beta - in.alpha * C.y() - I_unit * rho * h_prime * in.alpha * S.y() -
                         in.beta * S.dy();
        r.samples.push_back({x, num / (in.alpha * S.y()), true});
    }
    if (r.samples.empty()) throw algorithm_error(10, "S(T, rho*) vanishes at every sample point");
    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t k = v.size() / 2;
        return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
    };
    std::vector<double> re, im;
    for (const auto& s : r.samples) {
        re.push_back(s.h.real());
        im.push_back(s.h.imag());
    }
    const cplx med{median_of(re), median_of(im)};
    std::vector<double> dev;
    for (const auto& s : r.samples) dev.push_back(std::abs(s.h - med));
    const double mad = median_of(dev);
    cplx sum{};
    int used = 0;
    for (auto& s : r.samples) {
        s.used = std::abs(s.h - med) <= 10.0 * mad + 1e-9 * (1.0 + std::abs(med));
        if (s.used) {
            sum += s.h;
            ++used;
        }
    }
    r.h = sum / static_cast<double>(used);
    for (const auto& s : r.samples)
        if (s.used) r.spread = std::max(r.spread, std::abs(s.h - r.h));
    return r;
}

/// Steps 1-8, and step 10 when a reference problem supplies C and S. Errors abort with a partial report.
inline ReconstructionReport run_inverse(const InverseInput& in, const InverseOptions& opt = {},
                                        const PencilProblem* reference = nullptr, const IntegratorOptions& iopt = {}) {
    ReconstructionReport rep;
    int current = 1;
    try {
        rep.eigenvalues = {step1_zeros(in, opt), 1};
        current = 2;
        auto s2 = step2_h_prime(in, opt);
        rep.z0_plus = {s2.z0_plus, 2};
        rep.z0_minus = {s2.z0_minus, 2};
        rep.h_prime = {s2.h_prime, 2};
        rep.sigma_trace = s2.trace;
        current = 3;
        const auto D = step3_build_D(in);
        current = 4;
        rep.records = step4_Q_at_eigenvalues(in, rep.eigenvalues.value, D);
        for (const auto& r : rep.records)
            if (r.multiplicity > 1) (r.omega == 0 ? rep.eigenvalues.value.I0 : rep.eigenvalues.value.I1).push_back(r.n);
        rep.eigenvalues.value.omega_installed = true;
        current = 6;
        step6_7_jets(in, D, rep.records, opt);
        current = 8;
        rep.weyl = {step8_weyl_sequence(in, rep.records, opt), 8};
        current = 10;
        if (reference) {
            const auto pts = step10_sample_points(*reference, rep.eigenvalues.value, opt.h_samples, iopt);
            auto s10 = step10_recover_h(in, *reference, rep.h_prime.value, pts, iopt);
            rep.h = {s10.h, 10};
            rep.h_samples = std::move(s10.samples);
            rep.h_spread = s10.spread;
        }
    } catch (const algorithm_error& e) {
        rep.failed_step = e.step();
        rep.error = e.what();
    } catch (const error& e) {
        rep.failed_step = current;
        rep.error = e.what();
    }
    return rep;
}

// --- round trip ---------------------------------------------------------------------------------

struct RoundtripTolerances {
    double h_prime = 1e-6;
    double eigenvalues = 1e-8;
    double omega_n0 = 1e-8;   // relative to max(1, |d1(nu)|)
    double omega_nu = 1e-7;   // relative to max(1, |d1^{(v)}(nu)|)
    double weyl = 1e-6;       // relative to the largest coefficient of the principal part
    double h = 1e-6;
};

struct RoundtripConfig {
    Rect window = Rect::symmetric(6.0, 2.0);
    InverseOptions inverse;
    WeylOptions weyl;
    OmegaOptions omega;
    IntegratorOptions integrator;
    RoundtripTolerances tol;
};

struct RoundtripResult {
    ReconstructionReport report;
    SpectrumWindow oracle_window;
    WeylData oracle_weyl;
    OmegaSequence oracle_omega;
};

namespace detail {
inline const WeylGroup* nearest_group(const WeylData& wd, cplx nu) {
    const WeylGroup* best = nullptr;
    for (const auto& g : wd.groups)
        if (!best || std::abs(g.nu - nu) < std::abs(best->nu - nu)) best = &g;
    return best;
}

inline Comparison compare(std::string name, double delta, double tol, std::string detail = {}) {
    return {std::move(name), delta, tol, delta <= tol, std::move(detail)};
}

/// Matches oracle zeros to reconstructed zeros as multisets: greedy nearest match with equal multiplicity.
inline double multiset_distance(const SpectrumWindow& a, const SpectrumWindow& b, std::string& detail) {
    if (a.total_multiplicity() != b.total_multiplicity()) {
        detail = "zero counts differ: " + std::to_string(a.total_multiplicity()) + " vs " + std::to_string(b.total_multiplicity());
        return std::numeric_limits<double>::infinity();
    }
    std::vector<bool> used(b.groups.size(), false);
    double worst = 0.0;
    for (const auto& g : a.groups) {
        std::size_t best = b.groups.size();
        for (std::size_t j = 0; j < b.groups.size(); ++j)
            if (!used[j] && b.groups[j].multiplicity == g.multiplicity &&
                (best == b.groups.size() || std::abs(b.groups[j].nu - g.nu) < std::abs(b.groups[best].nu - g.nu)))
                best = j;
        if (best == b.groups.size()) {
            detail = "no reconstructed zero of multiplicity " + std::to_string(g.multiplicity) + " near " + std::to_string(g.nu.real());
            return std::numeric_limits<double>::infinity();
        }
        used[best] = true;
        worst = std::max(worst, std::abs(b.groups[best].nu - g.nu));
    }
    return worst;
}
}  // namespace detail

/// Forward oracle (d and d1 by composition across the jumps), strip to (a, d, Omega, alpha, beta, gamma_j), reconstruct, compare. The potentials and
/// jump data (step 9) are not reconstructed: the comparison of {nu_n, M_n} with the oracle stands in for
/// them, since equal spectral data determine p, q, eta', eta uniquely.
inline RoundtripResult run_roundtrip(const PencilProblem& pb, const RoundtripConfig& cfg = {}) {
    require_valid(pb);
    RoundtripResult res;
    const auto bundle = make_forward_bundle(pb, cfg.integrator);
    const auto oracle = make_composition_bundle(pb, cfg.integrator);
    res.oracle_window = build_window(oracle.d, cfg.window, cfg.inverse.rootfinder);
    res.oracle_weyl = weyl_residues(oracle, res.oracle_window, cfg.weyl);
    res.oracle_omega = extract_omega(pb, res.oracle_window, cfg.omega, cfg.integrator);

    InverseInput in;
    in.bundle.a = bundle.a;
    in.bundle.d = bundle.d;
    in.bundle.provenance = bundle.provenance;
    in.omega = res.oracle_omega.stripped();
    in.alpha = pb.alpha;
    in.beta = pb.beta;
    for (const auto& j : pb.jumps) in.gammas.push_back(j.gamma);
    in.breakpoints = pb.breakpoints;
    in.window = cfg.window;
    in.T = pb.T;

    auto& rep = res.report;
    rep = run_inverse(in, cfg.inverse, &pb, cfg.integrator);
    if (rep.failed_step != 0) return res;
    rep.step9 = "verified by oracle equivalence of the spectral data {nu_n, M_n}";
    rep.compared = true;
    const auto& tol = cfg.tol;
    std::string detail;
    rep.comparisons.push_back(
        detail::compare("eigenvalues", detail::multiset_distance(res.oracle_window, rep.eigenvalues.value, detail), tol.eigenvalues, detail));
    rep.comparisons.push_back(detail::compare("h_prime", std::abs(rep.h_prime.value - pb.h_prime), tol.h_prime));

    double d_w0 = 0.0, d_wnu = 0.0, d_M = 0.0;
    int n_wnu = 0;
    for (std::size_t i = 0; i < rep.records.size(); ++i) {
        const auto& r = rep.records[i];
        const OmegaEntry* e = nullptr;
        for (const auto& o : res.oracle_omega.entries)
            if (!e || std::abs(o.nu - r.nu) < std::abs(e->nu - r.nu)) e = &o;
        if (!e || !e->omega_n0) continue;
        d_w0 = std::max(d_w0, std::abs(r.omega_n0.value - *e->omega_n0) / std::max(1.0, std::abs(*e->omega_n0)));
        if (r.omega_nu.step == 7)
            for (std::size_t v = 0; v < r.omega_nu.value.size() && v < e->omega_nu.size(); ++v, ++n_wnu)
                d_wnu = std::max(d_wnu, std::abs(r.omega_nu.value[v] - e->omega_nu[v]) / std::max(1.0, std::abs(e->omega_nu[v])));
        const auto& g = rep.weyl.value.groups[i];
        const WeylGroup* o = detail::nearest_group(res.oracle_weyl, r.nu);
        if (!o || o->multiplicity != g.multiplicity) {
            d_M = std::numeric_limits<double>::infinity();
            continue;
        }
        double scale = 0.0;
        for (const auto& c : o->principal) scale = std::max(scale, std::abs(c));
        for (int k = 0; k < g.multiplicity; ++k) d_M = std::max(d_M, std::abs(g.principal[k] - o->principal[k]) / scale);
    }
    rep.comparisons.push_back(detail::compare("omega_n0", d_w0, tol.omega_n0));
    if (n_wnu > 0) rep.comparisons.push_back(detail::compare("omega_n_nu", d_wnu, tol.omega_nu));
    rep.comparisons.push_back(detail::compare("weyl_sequence", d_M, tol.weyl));
    if (rep.h.value) rep.comparisons.push_back(detail::compare("h", std::abs(*rep.h.value - pb.h), tol.h));
    return res;
}

// --- report file ----------------------------------------------------------------------------------

inline json report_to_json(const ReconstructionReport& rep) {
    using io::to_json;
    auto cvec = [](const std::vector<cplx>& v) {
        json a = json::array();
        for (const auto& z : v) a.push_back(to_json(z));
        return a;
    };
    json j;
    j["status"] = rep.failed_step ? "failed" : "ok";
    if (rep.failed_step) {
        j["failed_step"] = rep.failed_step;
        j["error"] = rep.error;
    }
    if (rep.eigenvalues.step) j["eigenvalues"] = {{"step", 1}, {"spectrum", spectrum_to_json(rep.eigenvalues.value)}};
    if (rep.h_prime.step) {
        j["h_prime"] = {{"step", 2}, {"value", to_json(rep.h_prime.value)}};
        j["z0_plus"] = {{"step", 2}, {"value", to_json(rep.z0_plus.value)}};
        j["z0_minus"] = {{"step", 2}, {"value", to_json(rep.z0_minus.value)}};
        j["sigma_trace"] = {{"sigma", rep.sigma_trace.sigma},
                            {"ratio_plus", cvec(rep.sigma_trace.ratio_plus)},
                            {"ratio_minus", cvec(rep.sigma_trace.ratio_minus)},
                            {"plateau", rep.sigma_trace.plateau}};
    }
    json recs = json::array();
    for (const auto& r : rep.records) {
        json e{{"n", r.n},
               {"nu", to_json(r.nu)},
               {"m", r.multiplicity},
               {"omega_n", r.omega},
               {"D", to_json(r.D)},
               {"Q_squared", to_json(r.Q_squared)},
               {"Q", {{"step", r.Q.step}, {"value", to_json(r.Q.value)}}},
               {"omega_n0", {{"step", r.omega_n0.step}, {"value", to_json(r.omega_n0.value)}}}};
        if (!r.Q_jets.value.empty()) e["Q_jets"] = {{"step", r.Q_jets.step}, {"value", cvec(r.Q_jets.value)}};
        if (!r.omega_nu.value.empty())
            e["omega_n_nu"] = {{"step", r.omega_nu.step}, {"source", r.omega_nu.step == 7 ? "reconstructed" : "given"}, {"value", cvec(r.omega_nu.value)}};
        recs.push_back(e);
    }
    j["records"] = recs;
    if (rep.weyl.step) j["weyl"] = {{"step", 8}, {"spectral_data", spectral_data_to_json(rep.weyl.value)}};
    j["step9"] = rep.step9;
    if (rep.h.value) {
        json ss = json::array();
        for (const auto& s : rep.h_samples) ss.push_back({{"rho", s.rho}, {"h", to_json(s.h)}, {"used", s.used}});
        j["h"] = {{"step", 10}, {"value", to_json(*rep.h.value)}, {"samples", ss}, {"spread", rep.h_spread}};
    }
    if (rep.compared) {
        json cs = json::array();
        for (const auto& c : rep.comparisons) {
            json e{{"name", c.name}, {"delta", c.delta}, {"tol", c.tol}, {"pass", c.pass}};
            if (!c.detail.empty()) e["detail"] = c.detail;
            cs.push_back(e);
        }
        j["comparison"] = cs;
        j["all_pass"] = rep.all_pass();
    }
    return j;
}

}  // namespace qpencil
