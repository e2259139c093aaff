#pragma once

// Zeros of analytic functions in a rectangle: argument-principle counting, Delves-Lyness moments,
// adaptive quadrisection, and Newton polishing (on f^{(m-1)} for clusters of multiplicity m).
//
// Zeros are numbered as in the inverse-problem indexing: zeros with Re >= 0 get n = 1, 2, ... moving
// outward, zeros with Re < 0 get n = -1, -2, ...; a zero of multiplicity m occupies m consecutive
// indices n, n+1, ..., n+m-1 and its group leader is the smallest of them.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qpencil/analytic.hpp"
#include "qpencil/problem_io.hpp"

namespace qpencil {

struct Rect {
    double re_min = -1.0, re_max = 1.0, im_min = -1.0, im_max = 1.0;

    static Rect symmetric(double R, double H) { return {-R, R, -H, H}; }
    double width() const { return re_max - re_min; }
    double height() const { return im_max - im_min; }
    double size() const { return std::max(width(), height()); }
    cplx center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
    bool contains(cplx z, double pad = 0.0) const {
        return z.real() >= re_min - pad && z.real() <= re_max + pad && z.imag() >= im_min - pad && z.imag() <= im_max + pad;
    }
    Rect shrunk(double by) const { return {re_min + by, re_max - by, im_min + by, im_max - by}; }
};

struct RootfinderOptions {
    double quad_tol = 1e-10;     // absolute accuracy target for the boundary moments
    int max_panel_depth = 28;    // bisection depth of the edge quadrature
    int max_depth = 40;          // quadrisection depth
    double nudge = 1e-3;         // split-point shift, relative to the cell size, when a zero sits on an edge
    double newton_tol = 1e-14;   // relative step size that stops Newton polishing
    double residual_tol = 1e-10; // |f(nu)| <= residual_tol * max(1, |f'(nu)|) certifies a simple zero
    double cluster_tol = 1e-4;   // sqrt|variance| below cluster_tol * cell size marks a single multiple zero
    int max_multiplicity = 4;
};

/// Raised when the argument-principle value is not close to an integer, i.e. a zero is near the contour.
class boundary_proximity : public numerical_error {
public:
    boundary_proximity(const std::string& what, cplx unrounded) : numerical_error(what), unrounded_(unrounded) {}
    cplx unrounded() const noexcept { return unrounded_; }

private:
    cplx unrounded_;
};

/// (1/2 pi i) \oint (z - c)^k f'/f dz for k = 0, 1, 2, with c the rectangle center.
struct BoundaryMoments {
    std::array<cplx, 3> s{};
    bool converged = true;
    long evaluations = 0;

    cplx count() const { return s[0]; }
};

namespace detail {

struct GaussLegendre {
    static constexpr int n = 12;
    std::array<double, n> x{}, w{};
    GaussLegendre() {
        for (int i = 0; i < n; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) {
                    x[i] = z;
                    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                    break;
                }
            }
        }
    }
    static const GaussLegendre& get() {
        static const GaussLegendre gl;
        return gl;
    }
};

using Moments3 = std::array<cplx, 3>;

struct Panel {
    Moments3 m{};
    double mass = 0.0;  // integral of |f'/f| |dz|, sets the roundoff floor
};

class EdgeIntegrator {
public:
    EdgeIntegrator(const AnalyticHandle& f, cplx center, double scale, const RootfinderOptions& opt)
        : f_(f), c_(center), scale_(scale), opt_(opt) {}

    Moments3 integrate(cplx z0, cplx z1, double weight_total) {
        const Panel whole = panel(z0, z1);
        return adapt(z0, z1, whole, 0, weight_total);
    }

    bool converged() const { return converged_; }
    long evaluations() const { return evals_; }

private:
    Panel panel(cplx z0, cplx z1) {
        const auto& gl = GaussLegendre::get();
        const cplx half = 0.5 * (z1 - z0);
        const cplx mid = 0.5 * (z0 + z1);
        Moments3 acc{};
        double mass = 0.0;
        for (int i = 0; i < GaussLegendre::n; ++i) {
            const cplx z = mid + half * gl.x[i];
            const ValueSlope vs = f_.with_derivative(z);
            ++evals_;
            const cplx g = vs.derivative / vs.value;
            if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) {
                converged_ = false;
                continue;
            }
            const cplx u = (z - c_) / scale_;
            acc[0] += gl.w[i] * g;
            acc[1] += gl.w[i] * g * u;
            acc[2] += gl.w[i] * g * u * u;
            mass += gl.w[i] * std::abs(g);
        }
        for (auto& a : acc) a *= half;
        return {acc, mass * std::abs(half)};
    }

    Moments3 adapt(cplx z0, cplx z1, const Panel& whole, int depth, double weight) {
        const cplx m = 0.5 * (z0 + z1);
        const Panel left = panel(z0, m);
        const Panel right = panel(m, z1);
        double err = 0.0;
        Moments3 sum{};
        for (int k = 0; k < 3; ++k) {
            sum[k] = left.m[k] + right.m[k];
            err = std::max(err, std::abs(sum[k] - whole.m[k]));
        }
        // tolerance shared along the contour in proportion to edge length (units of 2 pi), floored relative to
        // the panel mass because f'/f is only as accurate as f near a zero
        const double tol = std::max(2.0 * std::numbers::pi * opt_.quad_tol * weight, opt_.quad_tol * (left.mass + right.mass));
        if (err <= tol) return sum;
        if (depth >= opt_.max_panel_depth) {
            converged_ = false;
            return sum;
        }
        const Moments3 a = adapt(z0, m, left, depth + 1, 0.5 * weight);
        const Moments3 b = adapt(m, z1, right, depth + 1, 0.5 * weight);
        return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
    }

    const AnalyticHandle& f_;
    cplx c_;
    double scale_;
    const RootfinderOptions& opt_;
    bool converged_ = true;
    long evals_ = 0;
};

}  // namespace detail

/// Boundary moments of f'/f on the rectangle (counter-clockwise), centered at the rectangle center and
/// returned in absolute units.
inline BoundaryMoments boundary_moments(const AnalyticHandle& f, const Rect& r, const RootfinderOptions& opt = {}) {
    const cplx c = r.center();
    const double scale = 0.5 * r.size();
    detail::EdgeIntegrator ei(f, c, scale, opt);
    const std::array<cplx, 4> corners{cplx{r.re_min, r.im_min}, cplx{r.re_max, r.im_min}, cplx{r.re_max, r.im_max},
                                      cplx{r.re_min, r.im_max}};
    const double perimeter = 2.0 * (r.width() + r.height());
    detail::Moments3 total{};
    for (int e = 0; e < 4; ++e) {
        const cplx z0 = corners[e], z1 = corners[(e + 1) % 4];
        const auto part = ei.integrate(z0, z1, std::abs(z1 - z0) / perimeter);
        for (int k = 0; k < 3; ++k) total[k] += part[k];
    }
    BoundaryMoments bm;
    const cplx two_pi_i{0.0, 2.0 * std::numbers::pi};
    bm.s[0] = total[0] / two_pi_i;
    bm.s[1] = total[1] / two_pi_i * scale;
    bm.s[2] = total[2] / two_pi_i * (scale * scale);
    bm.converged = ei.converged();
    bm.evaluations = ei.evaluations();
    return bm;
}

namespace detail {
inline std::optional<int> rounded_count(const BoundaryMoments& bm) {
    const double re = bm.s[0].real();
    const long n = std::lround(re);
    if (!bm.converged || std::abs(bm.s[0] - cplx(static_cast<double>(n), 0.0)) > 0.1 || n < 0) return std::nullopt;
    return static_cast<int>(n);
}
}  // namespace detail

/// Number of zeros (with multiplicity) inside the rectangle.
inline int count_zeros(const AnalyticHandle& f, const Rect& r, const RootfinderOptions& opt = {}) {
    const auto bm = boundary_moments(f, r, opt);
    if (auto n = detail::rounded_count(bm)) return *n;
    throw boundary_proximity("argument principle value " + std::to_string(bm.s[0].real()) + (bm.s[0].imag() >= 0 ? "+" : "") +
                                 std::to_string(bm.s[0].imag()) + "i is not near an integer: a zero lies close to the contour",
                             bm.s[0]);
}

struct LocatedZero {
    cplx nu;
    int multiplicity = 1;
    bool certified = false;
    double residual = 0.0;  // simple: |f| / max(1, |f'|); multiple: max_k<m |f^(k)| r^k/k! relative to the m-th term
};

struct LocateResult {
    std::vector<LocatedZero> zeros;
    std::vector<Rect> unresolved;
    int total_count = 0;
    long evaluations = 0;
};

namespace detail {

class ZeroLocator {
public:
    ZeroLocator(const AnalyticHandle& f, const RootfinderOptions& opt) : f_(f), opt_(opt) {}

    void process(const Rect& r, const BoundaryMoments& bm, int count, int depth, LocateResult& out) {
        out.evaluations += bm.evaluations;
        if (count == 0) return;
        const cplx c = r.center();
        if (count == 1) {
            out.zeros.push_back(polish_simple(c + bm.s[1], r));
            return;
        }
        const double m = static_cast<double>(count);
        const cplx mean = bm.s[1] / m;
        const cplx var = bm.s[2] / m - mean * mean;
        if (std::sqrt(std::abs(var)) <= opt_.cluster_tol * r.size()) {
            if (count > opt_.max_multiplicity)
                throw numerical_error("zero of multiplicity " + std::to_string(count) + " near " + format(c + mean) +
                                      " exceeds the supported maximum " + std::to_string(opt_.max_multiplicity));
            out.zeros.push_back(polish_multiple(c + mean, count, r));
            return;
        }
        subdivide(r, count, depth, out);
    }

private:
    static std::string format(cplx z) { return "(" + std::to_string(z.real()) + "," + std::to_string(z.imag()) + ")"; }

    void subdivide(const Rect& r, int count, int depth, LocateResult& out) {
        if (depth >= opt_.max_depth) {
            out.unresolved.push_back(r);
            return;
        }
        for (int attempt = 0; attempt < 6; ++attempt) {
            // off-center split points keep cell edges away from lattice-like zero sets
            const double fx = 0.4870 + opt_.nudge * attempt * 7.0;
            const double fy = 0.4810 + opt_.nudge * attempt * 5.0;
            const double xs = r.re_min + fx * r.width();
            const double ys = r.im_min + fy * r.height();
            const std::array<Rect, 4> kids{Rect{r.re_min, xs, r.im_min, ys}, Rect{xs, r.re_max, r.im_min, ys},
                                           Rect{r.re_min, xs, ys, r.im_max}, Rect{xs, r.re_max, ys, r.im_max}};
            std::array<BoundaryMoments, 4> bms;
            std::array<int, 4> counts{};
            bool ok = true;
            int sum = 0;
            for (int i = 0; i < 4 && ok; ++i) {
                bms[i] = boundary_moments(f_, kids[i], opt_);
                auto n = rounded_count(bms[i]);
                if (!n) {
                    ok = false;
                    out.evaluations += bms[i].evaluations;
                    break;
                }
                counts[i] = *n;
                sum += *n;
            }
            if (!ok || sum != count) continue;
            for (int i = 0; i < 4; ++i) process(kids[i], bms[i], counts[i], depth + 1, out);
            return;
        }
        out.unresolved.push_back(r);
    }

    LocatedZero polish_simple(cplx start, const Rect& r) {
        cplx z = start;
        for (int it = 0; it < 40; ++it) {
            const auto vs = f_.with_derivative(z);
            if (vs.derivative == cplx{0.0}) break;
            const cplx step = vs.value / vs.derivative;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            z -= step;
            if (std::abs(step) <= opt_.newton_tol * std::max(1.0, std::abs(z))) break;
        }
        if (!r.contains(z, 0.05 * r.size())) z = start;  // Newton escaped the cell: keep the moment estimate
        const auto vs = f_.with_derivative(z);
        LocatedZero lz;
        lz.nu = z;
        lz.multiplicity = 1;
        lz.residual = std::abs(vs.value) / std::max(1.0, std::abs(vs.derivative));
        lz.certified = lz.residual <= opt_.residual_tol;
        return lz;
    }

    LocatedZero polish_multiple(cplx start, int m, const Rect& r) {
        const double radius = std::clamp(0.25 * std::min(r.width(), r.height()), 1e-3, 0.25);
        cplx z = start;
        for (int it = 0; it < 20; ++it) {
            const auto jets = taylor_jets(f_, z, m, radius);
            if (jets[m] == cplx{0.0}) break;
            const cplx step = jets[m - 1] / jets[m];
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            z -= step;
            if (std::abs(step) <= 1e-13 * std::max(1.0, std::abs(z))) break;
        }
        if (!r.contains(z, 0.05 * r.size())) z = start;
        const auto jets = taylor_jets(f_, z, m, radius);
        double lead = std::abs(jets[m]) * std::pow(radius, m);
        for (int k = 2; k <= m; ++k) lead /= k;
        double worst = 0.0;
        double fact = 1.0;
        for (int k = 0; k < m; ++k) {
            if (k > 1) fact *= k;
            worst = std::max(worst, std::abs(jets[k]) * std::pow(radius, k) / fact);
        }
        LocatedZero lz;
        lz.nu = z;
        lz.multiplicity = m;
        lz.residual = lead > 0.0 ? worst / lead : std::numeric_limits<double>::infinity();
        lz.certified = lz.residual <= 1e-6;
        return lz;
    }

    const AnalyticHandle& f_;
    const RootfinderOptions& opt_;
};

}  // namespace detail

/// All zeros in the rectangle, each with its multiplicity. Cells that cannot be resolved within the
/// depth limit are returned in `unresolved` rather than dropped.
inline LocateResult locate_zeros(const AnalyticHandle& f, const Rect& r, const RootfinderOptions& opt = {}) {
    LocateResult out;
    const auto bm = boundary_moments(f, r, opt);
    auto n = detail::rounded_count(bm);
    if (!n)
        throw boundary_proximity("argument principle value on the search rectangle is not near an integer", bm.s[0]);
    out.total_count = *n;
    detail::ZeroLocator loc(f, opt);
    loc.process(r, bm, *n, 0, out);
    return out;
}

// --- indexing --------------------------------------------------------------------------------------

struct ZeroGroup {
    int leader = 0;  // smallest index of the multiplicity block
    cplx nu;
    int multiplicity = 1;
    bool certified = false;
    double residual = 0.0;
};

struct SpectrumWindow {
    Rect window;
    std::vector<ZeroGroup> groups;  // ordered by leader index
    std::vector<int> I, I_prime, I0, I1;
    bool omega_installed = false;
    std::vector<std::string> diagnostics;

    const ZeroGroup* group(int leader) const {
        for (const auto& g : groups)
            if (g.leader == leader) return &g;
        return nullptr;
    }

    /// Expanded sequence nu_n over the window's index range (each multiple zero repeated).
    std::vector<std::pair<int, cplx>> indexed() const {
        std::vector<std::pair<int, cplx>> out;
        for (const auto& g : groups)
            for (int j = 0; j < g.multiplicity; ++j) out.emplace_back(g.leader + j, g.nu);
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    int total_multiplicity() const {
        int s = 0;
        for (const auto& g : groups) s += g.multiplicity;
        return s;
    }
};

/// Numbers located zeros: Re >= 0 outward from +1, Re < 0 outward from -1, lexicographic in (Re, Im).
inline SpectrumWindow window_from_zeros(const std::vector<LocatedZero>& zeros, const Rect& r) {
    SpectrumWindow w;
    w.window = r;
    auto tie = [](cplx a, cplx b) { return std::abs(a.real() - b.real()) <= 1e-9 * std::max(1.0, std::abs(a)); };
    auto is_positive = [](cplx z) { return z.real() >= -1e-12 * std::max(1.0, std::abs(z)); };
    std::vector<LocatedZero> pos, neg;
    for (const auto& z : zeros) (is_positive(z.nu) ? pos : neg).push_back(z);
    std::sort(pos.begin(), pos.end(), [&](const LocatedZero& a, const LocatedZero& b) {
        if (tie(a.nu, b.nu)) return a.nu.imag() < b.nu.imag();
        return a.nu.real() < b.nu.real();
    });
    std::sort(neg.begin(), neg.end(), [&](const LocatedZero& a, const LocatedZero& b) {
        if (tie(a.nu, b.nu)) return a.nu.imag() < b.nu.imag();
        return a.nu.real() > b.nu.real();
    });
    int next = 1;
    for (const auto& z : pos) {
        w.groups.push_back({next, z.nu, z.multiplicity, z.certified, z.residual});
        next += z.multiplicity;
    }
    next = -1;
    for (const auto& z : neg) {
        const int leader = next - z.multiplicity + 1;
        w.groups.push_back({leader, z.nu, z.multiplicity, z.certified, z.residual});
        next -= z.multiplicity;
    }
    std::sort(w.groups.begin(), w.groups.end(), [](const auto& a, const auto& b) { return a.leader < b.leader; });
    for (const auto& g : w.groups) {
        w.I.push_back(g.leader);
        if (g.multiplicity > 1) w.I_prime.push_back(g.leader);
    }
    int on_axis = 0;
    for (const auto& z : zeros)
        if (std::abs(z.nu.real()) <= 1e-12 * std::max(1.0, std::abs(z.nu))) ++on_axis;
    if (on_axis > 1)
        w.diagnostics.push_back("numbering ambiguity: " + std::to_string(on_axis) +
                                " zeros lie on the imaginary axis and were all assigned positive indices");
    return w;
}

/// Locates the zeros of f in the rectangle and indexes them. If the rectangle boundary passes through a
/// zero, the rectangle is shrunk inward by `nudge` of its size and the search repeated.
inline SpectrumWindow build_window(const AnalyticHandle& f, const Rect& r, const RootfinderOptions& opt = {}) {
    Rect cur = r;
    std::vector<std::string> notes;
    for (int attempt = 0; attempt < 4; ++attempt) {
        try {
            auto res = locate_zeros(f, cur, opt);
            if (!res.unresolved.empty())
                throw numerical_error("zero search left " + std::to_string(res.unresolved.size()) + " unresolved cells");
            auto w = window_from_zeros(res.zeros, cur);
            if (w.total_multiplicity() != res.total_count)
                throw numerical_error("located multiplicities do not add up to the argument-principle count");
            for (const auto& g : w.groups)
                if (!g.certified)
                    w.diagnostics.push_back("zero n=" + std::to_string(g.leader) + " not certified (residual " +
                                            std::to_string(g.residual) + ")");
            w.diagnostics.insert(w.diagnostics.begin(), notes.begin(), notes.end());
            return w;
        } catch (const boundary_proximity&) {
            const double by = opt.nudge * cur.size();
            cur = cur.shrunk(by);
            notes.push_back("search rectangle shrunk by " + std::to_string(by) + " to clear a zero on its boundary");
        }
    }
    throw boundary_proximity("could not clear zeros from the search rectangle boundary", cplx{});
}

inline SpectrumWindow build_window(const AnalyticHandle& f, double R, double H, const RootfinderOptions& opt = {}) {
    return build_window(f, Rect::symmetric(R, H), opt);
}

inline json to_json(const Rect& r) {
    return {{"re_min", r.re_min}, {"re_max", r.re_max}, {"im_min", r.im_min}, {"im_max", r.im_max}};
}

inline json spectrum_to_json(const SpectrumWindow& w) {
    json ev = json::array();
    for (const auto& g : w.groups)
        ev.push_back({{"n", g.leader}, {"nu", io::to_json(g.nu)}, {"m", g.multiplicity}, {"certified", g.certified}});
    json j{{"window", to_json(w.window)}, {"eigenvalues", ev}, {"I", w.I}, {"I_prime", w.I_prime}};
    if (w.omega_installed) {
        j["I0"] = w.I0;
        j["I1"] = w.I1;
    }
    j["diagnostics"] = w.diagnostics;
    return j;
}

inline SpectrumWindow spectrum_from_json(const json& j) {
    SpectrumWindow w;
    const auto& win = io::require(j, "window", "");
    w.window = {io::parse_real(io::require(win, "re_min", "window"), "window.re_min"),
                io::parse_real(io::require(win, "re_max", "window"), "window.re_max"),
                io::parse_real(io::require(win, "im_min", "window"), "window.im_min"),
                io::parse_real(io::require(win, "im_max", "window"), "window.im_max")};
    for (const auto& e : io::require(j, "eigenvalues", "")) {
        ZeroGroup g;
        g.leader = io::require(e, "n", "eigenvalues").get<int>();
        g.nu = io::parse_complex(io::require(e, "nu", "eigenvalues"), "eigenvalues.nu");
        g.multiplicity = io::require(e, "m", "eigenvalues").get<int>();
        g.certified = e.value("certified", true);
        w.groups.push_back(g);
    }
    w.I = io::require(j, "I", "").get<std::vector<int>>();
    w.I_prime = io::require(j, "I_prime", "").get<std::vector<int>>();
    if (j.contains("I0") && j.contains("I1")) {
        w.I0 = j["I0"].get<std::vector<int>>();
        w.I1 = j["I1"].get<std::vector<int>>();
        w.omega_installed = true;
    }
    if (j.contains("diagnostics")) w.diagnostics = j["diagnostics"].get<std::vector<std::string>>();
    return w;
}

}  // namespace qpencil
