#pragma once

// Weyl-type function M(rho) = -d1(rho) / d(rho), its principal parts at the zeros of d, and the
// sign sequence that classifies Q at those zeros.
//
// Near a zero nu of d of order m write d = (rho - nu)^m sum_j d_j (rho - nu)^j and
// d1 = sum_j d1_j (rho - nu)^j. The coefficients of
//   M(rho) = sum_{k<m} M_{n+k} / (rho - nu)^{k+1} + (regular)
// follow from matching powers in M d = -d1:
//   M_{n+m-1-v} = -(d1_v + sum_{k<v} M_{n+m-1-k} d_{v-k}) / d_0.

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qpencil/analytic.hpp"
#include "qpencil/charfn.hpp"
#include "qpencil/parallel.hpp"
#include "qpencil/rootfinder.hpp"

namespace qpencil {

/// Evaluation at (or numerically at) a pole of M.
class pole_signal : public numerical_error {
public:
    explicit pole_signal(const std::string& what) : numerical_error(what) {}
};

inline cplx eval_weyl(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    const cplx d = eval_d(pb, rho, opt);
    const cplx d1 = eval_d1(pb, rho, opt);
    if (std::abs(d) <= 1e-14 * std::abs(d1))
        throw pole_signal("M(rho) has a pole at rho = " + std::to_string(rho.real()) + (rho.imag() < 0 ? "" : "+") +
                          std::to_string(rho.imag()) + "i");
    return -d1 / d;
}

struct WeylOptions {
    double jet_radius = 0.25;  // circle radius for Taylor coefficients of the entire functions d, d1
    int contour_nodes = 128;   // initial trapezoid nodes for residue integrals of M
    double contour_tol = 1e-10;
    double report_gap = 1e-7;  // record the contour value next to the recurrence value above this gap
    int jobs = 1;
};

struct WeylGroup {
    int leader = 0;
    cplx nu;
    int multiplicity = 1;
    std::vector<cplx> principal;  // M_{leader+k}, k < multiplicity
    std::vector<cplx> d_jets;     // d^{(k+m)}(nu) / (k+m)!
    std::vector<cplx> d1_jets;    // d1^{(k)}(nu) / k!
    std::vector<cplx> contour;    // contour residues, kept only when they deviate by more than report_gap
};

struct WeylData {
    std::vector<WeylGroup> groups;  // ordered by leader

    std::optional<cplx> M(int n) const {
        for (const auto& g : groups)
            if (n >= g.leader && n < g.leader + g.multiplicity) return g.principal[n - g.leader];
        return std::nullopt;
    }

    /// (n, M_n) over every index of the window.
    std::vector<std::pair<int, cplx>> sequence() const {
        std::vector<std::pair<int, cplx>> out;
        for (const auto& g : groups)
            for (int k = 0; k < g.multiplicity; ++k) out.emplace_back(g.leader + k, g.principal[k]);
        return out;
    }
};

/// Descending recurrence for the principal-part coefficients. d_jets[0] must be nonzero.
inline std::vector<cplx> principal_part(const std::vector<cplx>& d_jets, const std::vector<cplx>& d1_jets) {
    const std::size_t m = d_jets.size();
    if (d1_jets.size() != m) throw numerical_error("principal_part: jet lengths differ");
    if (m == 0) return {};
    if (d_jets[0] == cplx{}) throw numerical_error("principal_part: leading d-jet vanishes: multiplicity misdetected");
    std::vector<cplx> c(m);  // c[v] = M_{n+m-1-v}
    for (std::size_t v = 0; v < m; ++v) {
        cplx acc = d1_jets[v];
        for (std::size_t k = 0; k < v; ++k) acc += c[k] * d_jets[v - k];
        c[v] = -acc / d_jets[0];
    }
    return {c.rbegin(), c.rend()};
}

/// Normalized d-jets d^{(k+m)}(nu) / (k+m)!, k < m. The simple case uses the exact derivative.
inline std::vector<cplx> d_jets_at(const AnalyticHandle& d, cplx nu, int m, const WeylOptions& opt = {}) {
    if (m == 1) return {d.with_derivative(nu).derivative};
    const auto t = taylor_coefficients(d, nu, 2 * m - 1, opt.jet_radius);
    return {t.begin() + m, t.end()};
}

/// Normalized d1-jets d1^{(k)}(nu) / k!, k < m.
inline std::vector<cplx> d1_jets_at(const AnalyticHandle& d1, cplx nu, int m, const WeylOptions& opt = {}) {
    if (m == 1) return {d1(nu)};
    auto t = taylor_coefficients(d1, nu, m - 1, opt.jet_radius);
    t[0] = d1(nu);
    return t;
}

/// Laurent coefficients of M at nu from (1/2 pi i) \oint M (rho - nu)^k d rho on a circle around nu.
/// `radius` must keep other poles outside the circle.
inline std::vector<cplx> residues_via_contour(const AnalyticHandle& M, cplx nu, int m, double radius,
                                              const WeylOptions& opt = {}) {
    std::vector<cplx> prev;
    for (int n = opt.contour_nodes; n <= 16 * opt.contour_nodes; n *= 2) {
        std::vector<cplx> out(static_cast<std::size_t>(m));
        std::vector<cplx> vals(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) vals[j] = M(nu + radius * std::polar(1.0, 2.0 * std::numbers::pi * j / n));
        double scale = 0.0;
        for (int k = 0; k < m; ++k) {
            cplx acc{};
            for (int j = 0; j < n; ++j) acc += vals[j] * std::pow(radius * std::polar(1.0, 2.0 * std::numbers::pi * j / n), k + 1);
            out[k] = acc / static_cast<double>(n);
            scale = std::max(scale, std::abs(out[k]));
        }
        if (!prev.empty()) {
            double diff = 0.0;
            for (int k = 0; k < m; ++k) diff = std::max(diff, std::abs(out[k] - prev[k]));
            if (diff <= opt.contour_tol * std::max(1.0, scale)) return out;
        }
        prev = std::move(out);
    }
    throw numerical_error("residue contour around nu did not converge: a pole lies close to the circle");
}

/// Largest circle radius around group g that keeps the other zeros of the window at a safe distance.
inline double isolation_radius(const SpectrumWindow& w, const WeylGroup& g) {
    double sep = 1.0;
    for (const auto& o : w.groups)
        if (o.leader != g.leader) sep = std::min(sep, std::abs(o.nu - g.nu));
    return 0.4 * sep;
}

namespace detail {
inline AnalyticHandle weyl_handle(const CharFnBundle& b) {
    auto d = b.d;
    auto d1 = b.d1;
    return AnalyticHandle([d, d1](cplx z) { return -d1(z) / d(z); }, {}, "M");
}
}  // namespace detail

/// Principal parts of M at every group of the window from the forward bundle (needs d1).
inline WeylData weyl_residues(const CharFnBundle& b, const SpectrumWindow& w, const WeylOptions& opt = {}) {
    if (!b.d1) throw numerical_error("weyl_residues: bundle carries no d1 handle");
    WeylData out;
    out.groups.resize(w.groups.size());
    const auto M = detail::weyl_handle(b);
    parallel_for(w.groups.size(), opt.jobs, [&](std::size_t i) {
        const auto& zg = w.groups[i];
        WeylGroup g;
        g.leader = zg.leader;
        g.nu = zg.nu;
        g.multiplicity = zg.multiplicity;
        g.d_jets = d_jets_at(b.d, zg.nu, zg.multiplicity, opt);
        g.d1_jets = d1_jets_at(b.d1, zg.nu, zg.multiplicity, opt);
        g.principal = principal_part(g.d_jets, g.d1_jets);
        const auto c = residues_via_contour(M, g.nu, g.multiplicity, isolation_radius(w, g), opt);
        double gap = 0.0;
        for (int k = 0; k < g.multiplicity; ++k)
            gap = std::max(gap, std::abs(c[k] - g.principal[k]) / std::max(1.0, std::abs(g.principal[k])));
        if (gap > opt.report_gap) g.contour = c;
        out.groups[i] = std::move(g);
    });
    return out;
}

// --- sign sequence ------------------------------------------------------------------------------------

/// Principal argument mapped into [0, 2 pi); arguments within `snap` (relative) of the real axis are
/// snapped onto it, so that values which are real up to roundoff classify as real.
inline double arg_0_2pi(cplx z, double snap = 0.0) {
    if (std::abs(z.imag()) <= snap * std::abs(z)) return z.real() >= 0.0 ? 0.0 : std::numbers::pi;
    double a = std::arg(z);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    if (a >= 2.0 * std::numbers::pi) a = 0.0;
    return a;
}

/// +1 for arg in [0, pi), -1 for arg in [pi, 2 pi).
inline int sign_class(cplx z, double snap) { return arg_0_2pi(z, snap) < std::numbers::pi ? +1 : -1; }

/// sqrt with the branch arg z in [0, 2 pi), so the result has arg in [0, pi).
inline cplx paper_sqrt(cplx z, double snap = 0.0) {
    if (z == cplx{}) return {};
    return std::polar(std::sqrt(std::abs(z)), 0.5 * arg_0_2pi(z, snap));
}

inline constexpr double real_axis_snap = 1e-9;  // relative; sqrt of Q^2 uses twice this (arg doubles)

struct OmegaEntry {
    int n = 0;  // group leader
    cplx nu;
    int multiplicity = 1;
    int omega = 0;                 // omega_n in {-1, 0, +1}
    std::vector<cplx> omega_nu;    // d1^{(v)}(nu), v = 1..m-1; given for I0 only
    std::optional<cplx> omega_n0;  // d1(nu), recorded for verification
    std::optional<cplx> Q;         // forward Q(nu)
    bool ambiguous = false;        // |Q| within the band just above the zero threshold
};

struct OmegaSequence {
    std::vector<OmegaEntry> entries;  // ordered by n
    std::vector<std::string> reports;

    const OmegaEntry* find(int n) const {
        for (const auto& e : entries)
            if (e.n == n) return &e;
        return nullptr;
    }

    /// Only what the inverse problem is given: omega_n for all n, omega_{n v} for n in I0.
    OmegaSequence stripped() const {
        OmegaSequence s;
        for (const auto& e : entries) {
            OmegaEntry c;
            c.n = e.n;
            c.nu = e.nu;
            c.multiplicity = e.multiplicity;
            c.omega = e.omega;
            if (e.omega == 0 && e.multiplicity > 1) c.omega_nu = e.omega_nu;
            s.entries.push_back(c);
        }
        return s;
    }
};

struct OmegaOptions {
    double zero_threshold = 1e-9;   // |Q| <= zero_threshold (1 + |D|) means Q(nu) = 0
    double ambiguous_factor = 1e2;  // band (1, factor] x threshold is reported as sign-ambiguous
    double jet_radius = 0.25;
    int jobs = 1;
};

inline int classify_omega(cplx Q, cplx D, const OmegaOptions& opt, bool* ambiguous = nullptr) {
    const double thr = opt.zero_threshold * (1.0 + std::abs(D));
    if (ambiguous) *ambiguous = std::abs(Q) > thr && std::abs(Q) <= opt.ambiguous_factor * thr;
    if (std::abs(Q) <= thr) return 0;
    return sign_class(Q, real_axis_snap);
}

/// Sign sequence of the forward problem on the window; installs I0 and I1 into the window.
inline OmegaSequence extract_omega(const PencilProblem& pb, SpectrumWindow& w, const OmegaOptions& opt = {},
                                   const IntegratorOptions& iopt = {}) {
    const auto b = make_forward_bundle(pb, iopt);
    OmegaSequence out;
    out.entries.resize(w.groups.size());
    parallel_for(w.groups.size(), opt.jobs, [&](std::size_t i) {
        const auto& g = w.groups[i];
        OmegaEntry e;
        e.n = g.leader;
        e.nu = g.nu;
        e.multiplicity = g.multiplicity;
        const auto S = propagate(pb, SolutionKind::S, g.nu, 0, iopt);
        const auto phi = propagate(pb, SolutionKind::phi, g.nu, 0, iopt);
        const cplx Q = pb.alpha * phi.y() - pb.beta * S.dy();
        const cplx D = pb.alpha * phi.y() + pb.beta * S.dy();
        e.Q = Q;
        e.omega = classify_omega(Q, D, opt, &e.ambiguous);
        e.omega_n0 = eval_d1(pb, g.nu, iopt);
        if (g.multiplicity > 1) {
            const auto t = taylor_jets(b.d1, g.nu, g.multiplicity - 1, opt.jet_radius);
            e.omega_nu.assign(t.begin() + 1, t.end());
        }
        out.entries[i] = std::move(e);
    });
    w.I0.clear();
    w.I1.clear();
    for (const auto& e : out.entries) {
        if (e.ambiguous)
            out.reports.push_back("n=" + std::to_string(e.n) + ": |Q(nu)| = " + std::to_string(std::abs(*e.Q)) +
                                  " lies just above the zero threshold; sign " + std::to_string(e.omega) + " may be unstable");
        if (e.multiplicity > 1) (e.omega == 0 ? w.I0 : w.I1).push_back(e.n);
    }
    w.omega_installed = true;
    return out;
}

// --- files ------------------------------------------------------------------------------------------

inline json omega_to_json(const OmegaSequence& om) {
    json arr = json::array();
    for (const auto& e : om.entries) {
        json nu = json::array();
        for (const auto& v : e.omega_nu) nu.push_back(io::to_json(v));
        json j{{"n", e.n}, {"nu", io::to_json(e.nu)}, {"m", e.multiplicity}, {"omega_n", e.omega}, {"omega_n_nu", nu}};
        if (e.omega_n0) j["omega_n0"] = io::to_json(*e.omega_n0);
        if (e.Q) j["Q"] = io::to_json(*e.Q);
        if (e.ambiguous) j["ambiguous"] = true;
        arr.push_back(j);
    }
    return arr;
}

inline OmegaSequence omega_from_json(const json& arr) {
    if (!arr.is_array()) throw validation_error("key 'omega': expected an array");
    OmegaSequence om;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string w = "omega[" + std::to_string(i) + "]";
        const auto& j = arr[i];
        OmegaEntry e;
        e.n = io::require(j, "n", w).get<int>();
        e.omega = io::require(j, "omega_n", w).get<int>();
        if (e.omega < -1 || e.omega > 1) throw validation_error("key '" + w + ".omega_n': must be -1, 0 or +1");
        if (j.contains("nu")) e.nu = io::parse_complex(j["nu"], w + ".nu");
        e.multiplicity = j.value("m", 1);
        if (j.contains("omega_n_nu"))
            for (const auto& v : j["omega_n_nu"]) e.omega_nu.push_back(io::parse_complex(v, w + ".omega_n_nu"));
        if (j.contains("omega_n0")) e.omega_n0 = io::parse_complex(j["omega_n0"], w + ".omega_n0");
        om.entries.push_back(e);
    }
    return om;
}

/// Spectral-data file: entries per index of the window and the sign sequence.
inline json spectral_data_to_json(const WeylData& wd, const OmegaSequence* om = nullptr) {
    json entries = json::array();
    for (const auto& g : wd.groups)
        for (int k = 0; k < g.multiplicity; ++k) {
            json e{{"n", g.leader + k}, {"nu", io::to_json(g.nu)}, {"m", g.multiplicity}, {"M", io::to_json(g.principal[k])}};
            if (!g.contour.empty()) e["M_contour"] = io::to_json(g.contour[k]);
            entries.push_back(e);
        }
    json j{{"entries", entries}};
    j["omega"] = om ? omega_to_json(*om) : json::array();
    return j;
}

}  // namespace qpencil
