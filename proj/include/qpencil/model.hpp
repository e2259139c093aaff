#pragma once

// Boundary value problem for the quadratic pencil
//
//   y'' + (rho^2 + rho p(x) + q(x)) y = 0,   x in [0, T],
//   y(0) = alpha y(T),   y'(0) - (i rho h' + h) y(0) = beta y'(T),
//
// with interior transmission conditions at 0 < b_1 < ... < b_{N-1} < T:
//
//   y(b+0)  = gamma y(b-0),
//   y'(b+0) = y'(b-0) / gamma + (i rho eta' + eta) y(b-0).

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "qpencil/errors.hpp"

namespace qpencil {

using cplx = std::complex<double>;

inline constexpr cplx I_unit{0.0, 1.0};

enum class PotentialKind { polynomial, chebyshev_samples };

/// Potential on one subinterval, expressed in the local coordinate s = x - b_{k-1} in [0, length].
///
/// `polynomial`: coefficients c_0, c_1, ... of sum c_i s^i.
/// `chebyshev_samples`: values at the Chebyshev-Lobatto points s_j = length (1 - cos(j pi / n)) / 2,
/// j = 0..n, interpolated barycentrically.
struct PotentialSpec {
    PotentialKind kind = PotentialKind::polynomial;
    std::vector<cplx> coefficients{cplx{0.0}};

    static PotentialSpec constant(cplx c) { return {PotentialKind::polynomial, {c}}; }
    static PotentialSpec polynomial(std::vector<cplx> c) {
        return {PotentialKind::polynomial, std::move(c)};
    }

    bool is_zero() const {
        for (const auto& c : coefficients)
            if (c != cplx{0.0}) return false;
        return true;
    }

    cplx operator()(double s, double length) const {
        if (kind == PotentialKind::polynomial) {
            cplx acc{0.0};
            for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * s + *it;
            return acc;
        }
        return chebyshev_value(s, length);
    }

    /// Integral over [0, s].
    cplx integral_to(double s, double length) const {
        if (kind == PotentialKind::polynomial) {
            cplx acc{0.0};
            for (std::size_t i = coefficients.size(); i-- > 0;)
                acc = acc * s + coefficients[i] / static_cast<double>(i + 1);
            return acc * s;
        }
        return chebyshev_integral(s, length);
    }

private:
    cplx chebyshev_value(double s, double length) const {
        const std::size_t n = coefficients.size() - 1;
        if (n == 0) return coefficients[0];
        const double t = 2.0 * s / length - 1.0;
        cplx num{0.0};
        double den = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            // node t_j = -cos(j pi / n), ascending from -1 to 1
            const double tj = -std::cos(std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
            double w = (j % 2 == 0) ? 1.0 : -1.0;
            if (j == 0 || j == n) w *= 0.5;
            const double diff = t - tj;
            if (diff == 0.0) return coefficients[j];
            num += coefficients[j] * (w / diff);
            den += w / diff;
        }
        return num / den;
    }

    // Chebyshev coefficients of the interpolant, in t in [-1, 1].
    std::vector<cplx> chebyshev_coefficients() const {
        const std::size_t n = coefficients.size() - 1;
        std::vector<cplx> c(n + 1, cplx{0.0});
        for (std::size_t k = 0; k <= n; ++k) {
            cplx acc{0.0};
            for (std::size_t j = 0; j <= n; ++j) {
                // f at t_j = -cos(j pi/n) equals f at cos((n-j) pi/n)
                double w = (j == 0 || j == n) ? 0.5 : 1.0;
                const double ang = std::numbers::pi * static_cast<double>(k * (n - j)) / static_cast<double>(n);
                acc += coefficients[j] * (w * std::cos(ang));
            }
            c[k] = acc * (2.0 / static_cast<double>(n));
        }
        c[0] *= 0.5;
        c[n] *= 0.5;
        return c;
    }

    cplx chebyshev_integral(double s, double length) const {
        const std::size_t n = coefficients.size() - 1;
        if (n == 0) return coefficients[0] * s;
        auto c = chebyshev_coefficients();
        c.push_back(cplx{0.0});
        c.push_back(cplx{0.0});
        // antiderivative coefficients C_k = (c_{k-1} - c_{k+1}) / (2k), with c_0 counted twice for k = 1
        std::vector<cplx> anti(n + 2, cplx{0.0});
        for (std::size_t k = 1; k <= n + 1; ++k) {
            const cplx prev = (k == 1) ? 2.0 * c[0] : c[k - 1];
            anti[k] = (prev - c[k + 1]) / (2.0 * static_cast<double>(k));
        }
        auto eval = [&](double t) {
            cplx b1{0.0}, b2{0.0};
            for (std::size_t k = anti.size(); k-- > 1;) {
                const cplx b0 = anti[k] + 2.0 * t * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            return t * b1 - b2;  // Clenshaw with anti[0] = 0
        };
        const double t = 2.0 * s / length - 1.0;
        return (eval(t) - eval(-1.0)) * (0.5 * length);
    }
};

struct IntervalPotentials {
    PotentialSpec p;
    PotentialSpec q;
};

struct JumpCondition {
    cplx gamma{1.0};
    cplx eta_prime{0.0};
    cplx eta{0.0};
};

struct PencilProblem {
    double T = std::numbers::pi;
    std::vector<double> breakpoints;           // interior points b_1 .. b_{N-1}
    std::vector<IntervalPotentials> intervals;  // N entries
    cplx h_prime{0.0};
    cplx h{0.0};
    cplx alpha{1.0};
    cplx beta{1.0};
    std::vector<JumpCondition> jumps;  // N-1 entries, jumps[j] sits at breakpoints[j]

    std::size_t interval_count() const { return breakpoints.size() + 1; }
    double left(std::size_t k) const { return k == 0 ? 0.0 : breakpoints[k - 1]; }
    double right(std::size_t k) const { return k + 1 == interval_count() ? T : breakpoints[k]; }
    double length(std::size_t k) const { return right(k) - left(k); }

    /// Subinterval containing x; interior breakpoints belong to the interval on their left.
    std::size_t interval_of(double x) const {
        std::size_t k = 0;
        while (k + 1 < interval_count() && x > breakpoints[k]) ++k;
        return k;
    }
};

/// Free problem on [0, T] with zero potentials and no jumps.
inline PencilProblem free_problem(double T = std::numbers::pi, cplx alpha = 1.0, cplx beta = 1.0) {
    PencilProblem pb;
    pb.T = T;
    pb.alpha = alpha;
    pb.beta = beta;
    pb.intervals.resize(1);
    return pb;
}

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const {
        std::string s;
        for (const auto& v : violations) {
            if (!s.empty()) s += "; ";
            s += v;
        }
        return s;
    }
};

namespace detail {
inline bool effectively_zero(cplx z, double scale) { return std::abs(z) <= 1e-14 * scale; }
inline cplx xi_value(const JumpCondition& j, int sign) {
    // sign = +1 for xi^+, -1 for xi^-
    return (j.gamma + 1.0 / j.gamma) / 2.0 - static_cast<double>(sign) * j.eta_prime / 2.0;
}
}  // namespace detail

inline ValidationReport validate_problem(const PencilProblem& pb) {
    ValidationReport r;
    auto add = [&](std::string s) { r.violations.push_back(std::move(s)); };
    if (!(pb.T > 0.0) || !std::isfinite(pb.T)) add("T must be a positive finite length");
    double prev = 0.0;
    for (std::size_t j = 0; j < pb.breakpoints.size(); ++j) {
        const double b = pb.breakpoints[j];
        if (!(b > prev)) add("breakpoint b" + std::to_string(j + 1) + " not strictly increasing from 0");
        if (!(b < pb.T)) add("breakpoint b" + std::to_string(j + 1) + " not below T");
        prev = b;
    }
    if (pb.intervals.size() != pb.interval_count())
        add("expected " + std::to_string(pb.interval_count()) + " intervals, got " +
            std::to_string(pb.intervals.size()));
    if (pb.jumps.size() != pb.breakpoints.size())
        add("expected " + std::to_string(pb.breakpoints.size()) + " jumps, got " + std::to_string(pb.jumps.size()));
    for (std::size_t k = 0; k < pb.intervals.size(); ++k) {
        if (pb.intervals[k].p.coefficients.empty()) add("p on interval " + std::to_string(k + 1) + " has no coefficients");
        if (pb.intervals[k].q.coefficients.empty()) add("q on interval " + std::to_string(k + 1) + " has no coefficients");
    }
    if (pb.alpha == cplx{0.0}) add("alpha = 0");
    if (pb.beta == cplx{0.0}) add("beta = 0");
    const double zscale = std::abs(pb.alpha) * (1.0 + std::abs(pb.h_prime)) + std::abs(pb.beta);
    if (detail::effectively_zero(pb.alpha * (1.0 - pb.h_prime) + pb.beta, zscale)) add("z0^+ = 0");
    if (detail::effectively_zero(pb.alpha * (1.0 + pb.h_prime) + pb.beta, zscale)) add("z0^- = 0");
    for (std::size_t j = 0; j < pb.jumps.size(); ++j) {
        const auto& jc = pb.jumps[j];
        const std::string tag = std::to_string(j + 1);
        if (jc.gamma == cplx{0.0}) {
            add("gamma" + tag + " = 0");
            continue;
        }
        const double xscale = std::abs(jc.gamma) + std::abs(1.0 / jc.gamma) + std::abs(jc.eta_prime);
        if (detail::effectively_zero(detail::xi_value(jc, +1), xscale)) add("xi" + tag + "^+ = 0");
        if (detail::effectively_zero(detail::xi_value(jc, -1), xscale)) add("xi" + tag + "^- = 0");
    }
    return r;
}

inline void require_valid(const PencilProblem& pb) {
    auto r = validate_problem(pb);
    if (!r.ok()) throw validation_error("invalid problem: " + r.summary());
}

/// Closed-form quantities attached to a validated problem.
struct DerivedCoefficients {
    cplx z0_plus, z0_minus;
    std::vector<cplx> xi_plus, xi_minus;
    cplx xi_product_plus{1.0}, xi_product_minus{1.0};
    cplx omega_mean;  // (1 / 2T) int_0^T p

    /// E(x) = (1/2) int_0^x p, tabulated exactly per subinterval.
    cplx calE(double x) const {
        const std::size_t k = interval_of_(x);
        return cumulative_[k] + 0.5 * p_[k].integral_to(x - lefts_[k], lengths_[k]);
    }

    /// Product xi_1^{+-} ... xi_j^{+-} for x in (b_j, b_{j+1}).
    cplx xi_product_up_to(double x, int sign) const {
        cplx acc{1.0};
        const auto& xs = sign > 0 ? xi_plus : xi_minus;
        for (std::size_t j = 0; j < xs.size() && j < breakpoints_.size(); ++j)
            if (x > breakpoints_[j]) acc *= xs[j];
        return acc;
    }

    friend DerivedCoefficients derive_coefficients(const PencilProblem& pb);

private:
    std::size_t interval_of_(double x) const {
        std::size_t k = 0;
        while (k < breakpoints_.size() && x > breakpoints_[k]) ++k;
        return k;
    }
    std::vector<double> breakpoints_, lefts_, lengths_;
    std::vector<PotentialSpec> p_;
    std::vector<cplx> cumulative_;  // E at the left end of each interval
};

inline DerivedCoefficients derive_coefficients(const PencilProblem& pb) {
    require_valid(pb);
    DerivedCoefficients dc;
    dc.z0_plus = pb.alpha * (1.0 - pb.h_prime) + pb.beta;
    dc.z0_minus = pb.alpha * (1.0 + pb.h_prime) + pb.beta;
    for (const auto& jc : pb.jumps) {
        dc.xi_plus.push_back(detail::xi_value(jc, +1));
        dc.xi_minus.push_back(detail::xi_value(jc, -1));
        dc.xi_product_plus *= dc.xi_plus.back();
        dc.xi_product_minus *= dc.xi_minus.back();
    }
    dc.breakpoints_ = pb.breakpoints;
    cplx running{0.0};
    for (std::size_t k = 0; k < pb.interval_count(); ++k) {
        dc.lefts_.push_back(pb.left(k));
        dc.lengths_.push_back(pb.length(k));
        dc.p_.push_back(pb.intervals[k].p);
        dc.cumulative_.push_back(running);
        running += 0.5 * pb.intervals[k].p.integral_to(pb.length(k), pb.length(k));
    }
    dc.omega_mean = running / pb.T;
    return dc;
}

}  // namespace qpencil
