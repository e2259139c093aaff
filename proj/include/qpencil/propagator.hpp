#pragma once

// Solutions of the pencil equation across the transmission points, with their rho-derivatives.
//
// A frame carries (y, y') together with the rho-derivative jets d^k y / d rho^k, d^k y' / d rho^k for
// k <= jet_order. The jets solve the variational equations obtained by differentiating
// y'' + w y = 0, w = rho^2 + rho p + q, with respect to rho:
//
//   y1'' + w y1 + (2 rho + p) y  = 0,
//   y2'' + w y2 + 2 (2 rho + p) y1 + 2 y = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

#include <boost/numeric/odeint.hpp>

#include "qpencil/model.hpp"

namespace qpencil {

inline constexpr int max_jet_order = 2;

struct SolutionFrame {
    double x = 0.0;
    int jet_order = 0;
    std::array<cplx, max_jet_order + 1> value{};  // value[k] = d^k y / d rho^k
    std::array<cplx, max_jet_order + 1> slope{};  // slope[k] = d^k y' / d rho^k

    cplx y() const { return value[0]; }
    cplx dy() const { return slope[0]; }

    static SolutionFrame initial(double x, cplx y, cplx dy, int jet_order = 0) {
        SolutionFrame f;
        f.x = x;
        f.jet_order = jet_order;
        f.value[0] = y;
        f.slope[0] = dy;
        return f;
    }
};

/// Wronskian <u, v> = u v' - u' v.
inline cplx wronskian(const SolutionFrame& u, const SolutionFrame& v) { return u.y() * v.dy() - u.dy() * v.y(); }

/// |<u, v> - 1| relative to the larger of the two products, which grow like exp(2 |Im rho| x) off the real axis.
inline double wronskian_residual(const SolutionFrame& u, const SolutionFrame& v) {
    const double scale = std::max({1.0, std::abs(u.y() * v.dy()), std::abs(u.dy() * v.y())});
    return std::abs(wronskian(u, v) - 1.0) / scale;
}

struct JumpTransfer {
    cplx gamma{1.0};
    cplx eta_prime{0.0};
    cplx eta{0.0};
    cplx rho{0.0};

    static JumpTransfer identity(cplx rho) { return {1.0, 0.0, 0.0, rho}; }
    static JumpTransfer at(const JumpCondition& jc, cplx rho) { return {jc.gamma, jc.eta_prime, jc.eta, rho}; }

    cplx kick() const { return I_unit * rho * eta_prime + eta; }

    /// Matrix acting on (y, y'); its determinant is gamma / gamma = 1.
    std::array<cplx, 4> matrix() const { return {gamma, 0.0, kick(), 1.0 / gamma}; }
};

enum class SolutionKind { S, C, phi };

struct IntegratorOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double min_step_fraction = 1e-13;  // step-size underflow threshold relative to the subinterval length
    long max_steps = 2'000'000;
};

inline SolutionFrame initial_frame(const PencilProblem& pb, SolutionKind kind, cplx rho, int jet_order) {
    switch (kind) {
        case SolutionKind::S: return SolutionFrame::initial(0.0, 0.0, 1.0, jet_order);
        case SolutionKind::C: return SolutionFrame::initial(0.0, 1.0, 0.0, jet_order);
        case SolutionKind::phi: {
            // phi = C + (i rho h' + h) S
            auto f = SolutionFrame::initial(0.0, 1.0, I_unit * rho * pb.h_prime + pb.h, jet_order);
            if (jet_order >= 1) f.slope[1] = I_unit * pb.h_prime;
            return f;
        }
    }
    return {};
}

namespace detail {

template <int J>
struct VariationalSystem {
    static constexpr std::size_t dim = 4 * (J + 1);
    using state = std::array<double, dim>;

    const IntervalPotentials* pot;
    double length;
    bool reversed;  // integrate in s' = length - s (backward sweep); the equation is invariant
    cplx rho;

    void operator()(const state& u, state& du, double s) const {
        const double sl = reversed ? length - s : s;
        const cplx p = pot->p(sl, length);
        const cplx q = pot->q(sl, length);
        const cplx w = rho * rho + rho * p + q;
        const cplx w1 = 2.0 * rho + p;
        std::array<cplx, J + 1> y, yp;
        for (int k = 0; k <= J; ++k) {
            y[k] = {u[4 * k], u[4 * k + 1]};
            yp[k] = {u[4 * k + 2], u[4 * k + 3]};
        }
        for (int k = 0; k <= J; ++k) {
            cplx acc = -w * y[k];
            if (k >= 1) acc -= static_cast<double>(k) * w1 * y[k - 1];
            if (k >= 2) acc -= static_cast<double>(k * (k - 1)) * y[k - 2];  // d^2 w / d rho^2 = 2
            du[4 * k] = yp[k].real();
            du[4 * k + 1] = yp[k].imag();
            du[4 * k + 2] = acc.real();
            du[4 * k + 3] = acc.imag();
        }
    }
};

template <int J>
SolutionFrame integrate_span(const IntervalPotentials& pot, double length, double s_begin, double s_end, cplx rho,
                             const SolutionFrame& init, double x_end, const IntegratorOptions& opt,
                             bool reversed = false) {
    namespace ode = boost::numeric::odeint;
    using Sys = VariationalSystem<J>;
    typename Sys::state u{};
    for (int k = 0; k <= J; ++k) {
        const cplx y = k <= init.jet_order ? init.value[k] : cplx{0.0};
        const cplx yp = k <= init.jet_order ? init.slope[k] : cplx{0.0};
        u[4 * k] = y.real();
        u[4 * k + 1] = y.imag();
        u[4 * k + 2] = yp.real();
        u[4 * k + 3] = yp.imag();
    }
    Sys sys{&pot, length, reversed, rho};
    auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_fehlberg78<typename Sys::state>());
    double t = s_begin;
    const double span = s_end - s_begin;
    double dt = std::min(span, 0.5 / (1.0 + std::abs(rho)));
    const double min_dt = opt.min_step_fraction * std::max(length, 1e-300);
    long steps = 0;
    while (s_end - t > 1e-15 * std::max(1.0, length)) {
        if (dt > s_end - t) dt = s_end - t;
        const double t_before = t;
        const auto res = stepper.try_step(sys, u, t, dt);
        if (res == ode::success) {
            if (++steps > opt.max_steps) throw integration_failure("step budget exhausted", x_end - (s_end - t));
        } else if (dt < min_dt) {
            throw integration_failure("step size underflow", x_end - (s_end - t_before));
        }
    }
    SolutionFrame out;
    out.x = x_end;
    out.jet_order = J;
    for (int k = 0; k <= J; ++k) {
        out.value[k] = {u[4 * k], u[4 * k + 1]};
        out.slope[k] = {u[4 * k + 2], u[4 * k + 3]};
    }
    return out;
}

inline SolutionFrame integrate_span_dispatch(const IntervalPotentials& pot, double length, double s_end, cplx rho,
                                             const SolutionFrame& init, double x_end, int jet_order,
                                             const IntegratorOptions& opt) {
    switch (jet_order) {
        case 0: return integrate_span<0>(pot, length, 0.0, s_end, rho, init, x_end, opt);
        case 1: return integrate_span<1>(pot, length, 0.0, s_end, rho, init, x_end, opt);
        case 2: return integrate_span<2>(pot, length, 0.0, s_end, rho, init, x_end, opt);
        default: throw numerical_error("jet_order above " + std::to_string(max_jet_order) + " is not supported by the propagator");
    }
}

}  // namespace detail

/// Solves the equation on subinterval k from init (at b_{k-1}) up to b_k - 0.
inline SolutionFrame integrate_local(const PencilProblem& pb, std::size_t k, cplx rho, const SolutionFrame& init,
                                     int jet_order, const IntegratorOptions& opt = {}) {
    if (jet_order < 0) throw numerical_error("jet_order must be non-negative");
    const double len = pb.length(k);
    return detail::integrate_span_dispatch(pb.intervals[k], len, len, rho, init, pb.right(k), jet_order, opt);
}

/// Applies the transmission condition at a breakpoint; jets follow the rho-differentiated rule.
inline SolutionFrame apply_jump(const SolutionFrame& f, const JumpTransfer& tr) {
    SolutionFrame out = f;
    const cplx ginv = 1.0 / tr.gamma;
    const cplx kick = tr.kick();
    const cplx dkick = I_unit * tr.eta_prime;
    for (int k = 0; k <= f.jet_order; ++k) {
        out.value[k] = tr.gamma * f.value[k];
        cplx s = ginv * f.slope[k] + kick * f.value[k];
        if (k >= 1) s += static_cast<double>(k) * dkick * f.value[k - 1];
        out.slope[k] = s;
    }
    return out;
}

/// Solution of the given kind at x - 0, continued through every breakpoint below x.
inline SolutionFrame propagate_to(const PencilProblem& pb, SolutionKind kind, cplx rho, double x, int jet_order,
                                  const IntegratorOptions& opt = {}) {
    SolutionFrame f = initial_frame(pb, kind, rho, jet_order);
    const std::size_t last = pb.interval_of(x);
    for (std::size_t k = 0; k <= last; ++k) {
        if (k > 0) f = apply_jump(f, JumpTransfer::at(pb.jumps[k - 1], rho));
        if (k < last) {
            f = integrate_local(pb, k, rho, f, jet_order, opt);
        } else {
            const double s_end = x - pb.left(k);
            if (s_end > 0.0)
                f = detail::integrate_span_dispatch(pb.intervals[k], pb.length(k), s_end, rho, f, x, jet_order, opt);
            f.x = x;
        }
    }
    return f;
}

/// Solution of the given kind at T - 0.
inline SolutionFrame propagate(const PencilProblem& pb, SolutionKind kind, cplx rho, int jet_order,
                               const IntegratorOptions& opt = {}) {
    return propagate_to(pb, kind, rho, pb.T, jet_order, opt);
}

namespace detail {
inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}
}  // namespace detail

/// Continues a frame given at b_k - 0 across the jump and through subinterval k+1 using the local
/// fundamental solutions C_{k+1}, S_{k+1} evaluated at T_{k+1} (which carry their own rho-jets):
///
///   y^{(nu)}(b_{k+1} - 0) = gamma y C_{k+1}^{(nu)} + (y'/gamma + (i rho eta' + eta) y) S_{k+1}^{(nu)}.
inline SolutionFrame lemma1_compose(const SolutionFrame& left, const SolutionFrame& local_C, const SolutionFrame& local_S,
                                    const JumpTransfer& tr) {
    const SolutionFrame jumped = apply_jump(left, tr);  // (A, B) = (gamma y, y'/gamma + kick y) with jets
    SolutionFrame out;
    out.x = local_C.x;
    out.jet_order = std::min({left.jet_order, local_C.jet_order, local_S.jet_order});
    for (int k = 0; k <= out.jet_order; ++k) {
        cplx v{0.0}, s{0.0};
        for (int i = 0; i <= k; ++i) {
            const double c = detail::binomial(k, i);
            v += c * (jumped.value[i] * local_C.value[k - i] + jumped.slope[i] * local_S.value[k - i]);
            s += c * (jumped.value[i] * local_C.slope[k - i] + jumped.slope[i] * local_S.slope[k - i]);
        }
        out.value[k] = v;
        out.slope[k] = s;
    }
    return out;
}

/// Same result as propagate(), assembled from independently integrated local fundamental solutions.
inline SolutionFrame propagate_by_composition(const PencilProblem& pb, SolutionKind kind, cplx rho, int jet_order,
                                              const IntegratorOptions& opt = {}) {
    SolutionFrame f = initial_frame(pb, kind, rho, jet_order);
    for (std::size_t k = 0; k < pb.interval_count(); ++k) {
        const double a = pb.left(k);
        SolutionFrame c0 = SolutionFrame::initial(a, 1.0, 0.0, jet_order);
        SolutionFrame s0 = SolutionFrame::initial(a, 0.0, 1.0, jet_order);
        const auto lc = integrate_local(pb, k, rho, c0, jet_order, opt);
        const auto ls = integrate_local(pb, k, rho, s0, jet_order, opt);
        const auto tr = k == 0 ? JumpTransfer::identity(rho) : JumpTransfer::at(pb.jumps[k - 1], rho);
        f = lemma1_compose(f, lc, ls, tr);
    }
    return f;
}

/// Inverse of apply_jump on (y, y'), jet order 0: recovers the left limits from the right limits.
inline SolutionFrame undo_jump(const SolutionFrame& f, const JumpTransfer& tr) {
    SolutionFrame out = f;
    out.jet_order = 0;
    out.value[0] = f.value[0] / tr.gamma;
    out.slope[0] = tr.gamma * (f.slope[0] - tr.kick() * out.value[0]);
    return out;
}

/// Weyl-type solution Phi(x) with Phi(0) = 1, Phi(T) = 0, obtained by a backward sweep from T so that
/// the solution decaying towards T is never formed by cancellation. Returns Phi at x + 0 (x < T) and
/// at T - 0 for x = T; Phi'(0) is the Weyl function M(rho).
inline SolutionFrame weyl_solution_to(const PencilProblem& pb, cplx rho, double x, const IntegratorOptions& opt = {}) {
    auto reversed_sweep = [&](std::size_t k, const SolutionFrame& right_frame, double s_len, double x_end) {
        SolutionFrame r = right_frame;
        r.slope[0] = -r.slope[0];  // d/ds' = -d/dx
        SolutionFrame out = detail::integrate_span<0>(pb.intervals[k], pb.length(k), 0.0, s_len, rho, r, x_end, opt, true);
        out.slope[0] = -out.slope[0];
        return out;
    };
    SolutionFrame f = SolutionFrame::initial(pb.T, 0.0, 1.0);
    SolutionFrame at_x = f;
    bool found = x >= pb.T;
    for (std::size_t k = pb.interval_count(); k-- > 0;) {
        const double a = pb.left(k), b = pb.right(k);
        if (!found && x > a && x < b) {
            at_x = reversed_sweep(k, f, b - x, x);
            found = true;
        }
        f = reversed_sweep(k, f, b - a, a);
        if (!found && x == a) {  // right limit at a breakpoint, or Phi(0) itself
            at_x = f;
            found = true;
        }
        if (k > 0) f = undo_jump(f, JumpTransfer::at(pb.jumps[k - 1], rho));
    }
    const cplx norm = f.value[0];  // Psi(0)
    if (norm == cplx{0.0}) throw numerical_error("Weyl solution undefined: rho is a Dirichlet eigenvalue");
    at_x.value[0] /= norm;
    at_x.slope[0] /= norm;
    at_x.x = x;
    return at_x;
}

}  // namespace qpencil
