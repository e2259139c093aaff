#pragma once

// Characteristic functions of the pencil problem:
//
//   d(rho)  = S(T, rho),           d1(rho) = C(T, rho),
//   a(rho)  = alpha phi(T, rho) + beta S'(T, rho) - (1 + alpha beta),
//   D(rho)  = a(rho) + 1 + alpha beta = alpha phi(T) + beta S'(T),
//   Q(rho)  = alpha phi(T, rho) - beta S'(T, rho),
//
// with phi = C + (i rho h' + h) S. D and Q satisfy
//   Q^2 = D^2 - 4 alpha beta (1 + phi'(T) S(T)).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "qpencil/analytic.hpp"
#include "qpencil/propagator.hpp"

namespace qpencil {

enum class Provenance { forward_model, sampled_data };

struct CharFnBundle {
    AnalyticHandle a;
    AnalyticHandle d;
    AnalyticHandle d1;  // empty for sampled data: only a and d are observable
    Provenance provenance = Provenance::forward_model;
};

/// S, C and phi at T - 0, with rho-jets up to jet_order.
struct EndpointFrames {
    SolutionFrame S, C, phi;
};

inline EndpointFrames endpoint_frames(const PencilProblem& pb, cplx rho, int jet_order = 0, const IntegratorOptions& opt = {}) {
    return {propagate(pb, SolutionKind::S, rho, jet_order, opt), propagate(pb, SolutionKind::C, rho, jet_order, opt),
            propagate(pb, SolutionKind::phi, rho, jet_order, opt)};
}

inline cplx eval_d(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    return propagate(pb, SolutionKind::S, rho, 0, opt).y();
}

inline cplx eval_d1(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    return propagate(pb, SolutionKind::C, rho, 0, opt).y();
}

inline cplx eval_a(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    const auto S = propagate(pb, SolutionKind::S, rho, 0, opt);
    const auto phi = propagate(pb, SolutionKind::phi, rho, 0, opt);
    return pb.alpha * phi.y() + pb.beta * S.dy() - (1.0 + pb.alpha * pb.beta);
}

inline cplx eval_D(const CharFnBundle& b, cplx alpha, cplx beta, cplx rho) { return b.a(rho) + 1.0 + alpha * beta; }

inline cplx eval_Q(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    const auto S = propagate(pb, SolutionKind::S, rho, 0, opt);
    const auto phi = propagate(pb, SolutionKind::phi, rho, 0, opt);
    return pb.alpha * phi.y() - pb.beta * S.dy();
}

/// Right side of Q^2 = D^2 - 4 alpha beta (1 + phi'(T) S(T)) from forward frames.
inline cplx eval_Q_squared(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    const auto S = propagate(pb, SolutionKind::S, rho, 0, opt);
    const auto phi = propagate(pb, SolutionKind::phi, rho, 0, opt);
    const cplx D = pb.alpha * phi.y() + pb.beta * S.dy();
    return D * D - 4.0 * pb.alpha * pb.beta * (1.0 + phi.dy() * S.y());
}

/// Q^2 from a bundle; only defined at zeros of d, where it reduces to D^2 - 4 alpha beta.
inline cplx eval_Q_squared(const CharFnBundle& b, cplx alpha, cplx beta, cplx rho, bool rho_is_zero_of_d) {
    if (!rho_is_zero_of_d)
        throw numerical_error("Q^2 needs phi'(T) S(T) off the zero set of d, which a bundle does not carry");
    const cplx D = eval_D(b, alpha, beta, rho);
    return D * D - 4.0 * alpha * beta;
}

inline CharFnBundle make_forward_bundle(const PencilProblem& pb, const IntegratorOptions& opt = {}) {
    require_valid(pb);
    CharFnBundle b;
    b.provenance = Provenance::forward_model;
    b.d = AnalyticHandle::from_jet(
        [pb, opt](cplx rho) {
            const auto S = propagate(pb, SolutionKind::S, rho, 1, opt);
            return ValueSlope{S.value[0], S.value[1]};
        },
        "d");
    b.d1 = AnalyticHandle::from_jet(
        [pb, opt](cplx rho) {
            const auto C = propagate(pb, SolutionKind::C, rho, 1, opt);
            return ValueSlope{C.value[0], C.value[1]};
        },
        "d1");
    b.a = AnalyticHandle::from_jet(
        [pb, opt](cplx rho) {
            const auto S = propagate(pb, SolutionKind::S, rho, 1, opt);
            const auto phi = propagate(pb, SolutionKind::phi, rho, 1, opt);
            return ValueSlope{pb.alpha * phi.value[0] + pb.beta * S.slope[0] - (1.0 + pb.alpha * pb.beta),
                              pb.alpha * phi.value[1] + pb.beta * S.slope[1]};
        },
        "a");
    return b;
}

/// d and d1 assembled from local fundamental solutions at the jumps instead of one sweep; an
/// independent route to the same functions, used as the oracle side of comparisons.
inline CharFnBundle make_composition_bundle(const PencilProblem& pb, const IntegratorOptions& opt = {}) {
    require_valid(pb);
    CharFnBundle b = make_forward_bundle(pb, opt);
    b.d = AnalyticHandle::from_jet(
        [pb, opt](cplx rho) {
            const auto S = propagate_by_composition(pb, SolutionKind::S, rho, 1, opt);
            return ValueSlope{S.value[0], S.value[1]};
        },
        "d (composition)");
    b.d1 = AnalyticHandle::from_jet(
        [pb, opt](cplx rho) {
            const auto C = propagate_by_composition(pb, SolutionKind::C, rho, 1, opt);
            return ValueSlope{C.value[0], C.value[1]};
        },
        "d1 (composition)");
    return b;
}

/// Q(rho) = alpha phi(T) - beta S'(T) as a handle with exact derivative (forward model only).
inline AnalyticHandle make_Q_handle(const PencilProblem& pb, const IntegratorOptions& opt = {}) {
    return AnalyticHandle::from_jet(
        [pb, opt](cplx rho) {
            const auto S = propagate(pb, SolutionKind::S, rho, 1, opt);
            const auto phi = propagate(pb, SolutionKind::phi, rho, 1, opt);
            return ValueSlope{pb.alpha * phi.value[0] - pb.beta * S.slope[0], pb.alpha * phi.value[1] - pb.beta * S.slope[1]};
        },
        "Q");
}

/// Relative residual of Q^2 = D^2 - 4 alpha beta (1 + phi'(T) S(T)), with Q and D formed directly from the
/// forward frames. Normalized by the magnitude of the largest term so that exponentially large values
/// off the real axis are measured at their own scale.
inline double identity6_residual(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    const auto S = propagate(pb, SolutionKind::S, rho, 0, opt);
    const auto phi = propagate(pb, SolutionKind::phi, rho, 0, opt);
    const cplx ab = pb.alpha * pb.beta;
    const cplx Q = pb.alpha * phi.y() - pb.beta * S.dy();
    const cplx D = pb.alpha * phi.y() + pb.beta * S.dy();
    const cplx t = 4.0 * ab * (1.0 + phi.dy() * S.y());
    const double scale = std::max({1.0, std::abs(Q * Q), std::abs(D * D), std::abs(t)});
    return std::abs(Q * Q - D * D + t) / scale;
}

/// Relative residual of dQ/drho Q - dD/drho D + 2 alpha beta (dphi'/drho S + phi' dS/drho) = 0 at T, from jets.
inline double identity7_residual(const PencilProblem& pb, cplx rho, const IntegratorOptions& opt = {}) {
    const auto S = propagate(pb, SolutionKind::S, rho, 1, opt);
    const auto phi = propagate(pb, SolutionKind::phi, rho, 1, opt);
    const cplx ab = pb.alpha * pb.beta;
    const cplx Q = pb.alpha * phi.value[0] - pb.beta * S.slope[0];
    const cplx Qd = pb.alpha * phi.value[1] - pb.beta * S.slope[1];
    const cplx D = pb.alpha * phi.value[0] + pb.beta * S.slope[0];
    const cplx Dd = pb.alpha * phi.value[1] + pb.beta * S.slope[1];
    const cplx t = 2.0 * ab * (phi.slope[1] * S.value[0] + phi.slope[0] * S.value[1]);
    const double scale = std::max({1.0, std::abs(Qd * Q), std::abs(Dd * D), std::abs(t)});
    return std::abs(Qd * Q - Dd * D + t) / scale;
}

// --- large-|rho| behaviour --------------------------------------------------------------------------

enum class HalfPlane { upper, lower };

inline const char* to_string(HalfPlane hp) { return hp == HalfPlane::upper ? "upper" : "lower"; }

struct AsymptoticSample {
    cplx rho;
    double ray_angle = 0.0;
    double dev_C = 0.0, dev_S = 0.0, dev_Phi = 0.0, dev_a = 0.0, dev_d = 0.0;
    double growth_S = 0.0;  // |S(T)| |rho| exp(-|Im rho| T), bounded by the growth estimate
    double growth_C = 0.0;  // |C(T)| exp(-|Im rho| T) / |rho|^0
};

struct RayFit {
    double angle = 0.0;
    double slope_a = 0.0, slope_d = 0.0, slope_C = 0.0, slope_S = 0.0, slope_Phi = 0.0;
};

struct AsymptoticReport {
    HalfPlane half_plane = HalfPlane::upper;
    double delta = 0.0;
    cplx z0, xi_product, omega_mean;
    std::vector<AsymptoticSample> samples;
    std::vector<RayFit> rays;
    double bound_constant_S = 0.0;  // fitted C in |S| <= C |rho|^{-1} e^{|tau| T}
    double bound_constant_C = 0.0;  // fitted C in |C| <= C e^{|tau| T}
};

namespace detail {
/// Least-squares slope of log(dev) against log|rho|; non-positive deviations are skipped.
inline double loglog_slope(const std::vector<double>& r, const std::vector<double>& dev) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (dev[i] > 0.0 && std::isfinite(dev[i])) {
            xs.push_back(std::log(r[i]));
            ys.push_back(std::log(dev[i]));
        }
    if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}
}  // namespace detail

/// Compares forward values with the leading large-|rho| terms in the sector delta <= arg rho <= pi - delta
/// (or its mirror in the lower half-plane), on the rays arg = delta, pi/2, pi - delta.
///
/// Leading terms with s = +1 (upper) / -1 (lower), xi = product of all xi_j^s, E = E(T):
///   C(T) ~ xi/2 e^{-s i (rho T + E)},   S(T) ~ -s xi/(2 i rho) e^{-s i (rho T + E)},
///   a ~ z0^s xi/2 e^{-s i (rho + omega) T},   d ~ S(T),
///   Phi(x) ~ e^{s i (rho x + E(x))} / (xi_1 ... xi_j)   for x in (b_j, b_{j+1}).
inline AsymptoticReport check_asymptotics(const PencilProblem& pb, HalfPlane hp, double delta, const std::vector<double>& radii,
                                          const IntegratorOptions& opt = {}) {
    const auto dc = derive_coefficients(pb);
    const int s = hp == HalfPlane::upper ? 1 : -1;
    AsymptoticReport rep;
    rep.half_plane = hp;
    rep.delta = delta;
    rep.z0 = s > 0 ? dc.z0_plus : dc.z0_minus;
    rep.xi_product = s > 0 ? dc.xi_product_plus : dc.xi_product_minus;
    rep.omega_mean = dc.omega_mean;
    const double pi = std::numbers::pi;
    const std::vector<double> angles = s > 0 ? std::vector<double>{delta, pi / 2, pi - delta}
                                             : std::vector<double>{pi + delta, 3 * pi / 2, 2 * pi - delta};
    // Phi is probed in the middle of the last subinterval so every jump contributes.
    const std::size_t last = pb.interval_count() - 1;
    const double x_phi = 0.5 * (pb.left(last) + pb.right(last));
    const cplx E_T = dc.calE(pb.T);
    const cplx E_x = dc.calE(x_phi);
    const cplx xi_x = dc.xi_product_up_to(x_phi, s);
    const double sd = static_cast<double>(s);
    for (double ang : angles) {
        std::vector<double> rs, da, dd, dC, dS, dP;
        for (double r : radii) {
            const cplx rho = std::polar(r, ang);
            const auto S = propagate(pb, SolutionKind::S, rho, 0, opt);
            const auto C = propagate(pb, SolutionKind::C, rho, 0, opt);
            const auto phi = propagate(pb, SolutionKind::phi, rho, 0, opt);
            const cplx a = pb.alpha * phi.y() + pb.beta * S.dy() - (1.0 + pb.alpha * pb.beta);
            const cplx ex = std::exp(-sd * I_unit * (rho * pb.T + E_T));
            const cplx lead_C = rep.xi_product / 2.0 * ex;
            const cplx lead_S = -sd * rep.xi_product / (2.0 * I_unit * rho) * ex;
            const cplx lead_a = rep.z0 / 2.0 * rep.xi_product * ex;
            const cplx Phi = weyl_solution_to(pb, rho, x_phi, opt).y();
            const cplx lead_Phi = std::exp(sd * I_unit * (rho * x_phi + E_x)) / xi_x;
            AsymptoticSample smp;
            smp.rho = rho;
            smp.ray_angle = ang;
            smp.dev_C = std::abs(C.y() / lead_C - 1.0);
            smp.dev_S = std::abs(S.y() / lead_S - 1.0);
            smp.dev_d = smp.dev_S;
            smp.dev_a = std::abs(a / lead_a - 1.0);
            smp.dev_Phi = std::abs(Phi / lead_Phi - 1.0);
            const double env = std::exp(std::abs(rho.imag()) * pb.T);
            smp.growth_S = std::abs(S.y()) * r / env;
            smp.growth_C = std::abs(C.y()) / env;
            rep.bound_constant_S = std::max(rep.bound_constant_S, smp.growth_S);
            rep.bound_constant_C = std::max(rep.bound_constant_C, smp.growth_C);
            rep.samples.push_back(smp);
            rs.push_back(r);
            da.push_back(smp.dev_a);
            dd.push_back(smp.dev_d);
            dC.push_back(smp.dev_C);
            dS.push_back(smp.dev_S);
            dP.push_back(smp.dev_Phi);
        }
        RayFit fit;
        fit.angle = ang;
        fit.slope_a = detail::loglog_slope(rs, da);
        fit.slope_d = detail::loglog_slope(rs, dd);
        fit.slope_C = detail::loglog_slope(rs, dC);
        fit.slope_S = detail::loglog_slope(rs, dS);
        fit.slope_Phi = detail::loglog_slope(rs, dP);
        rep.rays.push_back(fit);
    }
    return rep;
}

}  // namespace qpencil
