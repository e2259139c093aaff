#pragma once

// Evaluators for functions analytic in the rho-plane, and Cauchy-integral differentiation.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qpencil/model.hpp"

namespace qpencil {

struct ValueSlope {
    cplx value;
    cplx derivative;
};

/// A complex-analytic function known through an evaluator, optionally with an exact first derivative.
class AnalyticHandle {
public:
    using ValueFn = std::function<cplx(cplx)>;
    using JetFn = std::function<ValueSlope(cplx)>;

    AnalyticHandle() = default;
    explicit AnalyticHandle(ValueFn f, JetFn jet = {}, std::string name = {})
        : f_(std::move(f)), jet_(std::move(jet)), name_(std::move(name)) {}

    /// Handle whose derivative is taken from `jet`; values come from the same call.
    static AnalyticHandle from_jet(JetFn jet, std::string name = {}) {
        auto j = jet;
        return AnalyticHandle([j](cplx z) { return j(z).value; }, std::move(jet), std::move(name));
    }

    cplx operator()(cplx z) const { return f_(z); }
    explicit operator bool() const { return static_cast<bool>(f_); }
    bool has_derivative() const { return static_cast<bool>(jet_); }
    const std::string& name() const { return name_; }

    /// Value and derivative; falls back to a Cauchy integral when no exact derivative is attached.
    ValueSlope with_derivative(cplx z) const;

private:
    ValueFn f_;
    JetFn jet_;
    std::string name_;
};

struct DerivativeResult {
    cplx value;
    bool converged = false;
    int nodes = 0;
};

struct ContourOptions {
    int initial_nodes = 64;
    int max_nodes = 4096;
    double tol = 1e-9;
};

/// k-th derivative at `center` from k!/(2 pi i) \oint f(z) / (z - c)^{k+1} dz on the circle |z - c| = radius,
/// discretized with the trapezoid rule and doubled until successive estimates agree.
inline DerivativeResult derivative_at_checked(const AnalyticHandle& f, cplx center, int order, double radius,
                                              const ContourOptions& opt = {}) {
    if (!(radius > 0.0)) throw numerical_error("derivative_at: radius must be positive");
    if (order < 0) throw numerical_error("derivative_at: order must be non-negative");
    double factorial = 1.0;
    for (int i = 2; i <= order; ++i) factorial *= i;
    const double rk = std::pow(radius, order);

    std::vector<cplx> samples;  // f at nodes of the current grid, in angular order
    int n = opt.initial_nodes;
    samples.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) samples[j] = f(center + radius * std::polar(1.0, 2.0 * std::numbers::pi * j / n));

    auto estimate = [&](double& fmax) {
        cplx acc{0.0};
        fmax = 0.0;
        const int m = static_cast<int>(samples.size());
        for (int j = 0; j < m; ++j) {
            acc += samples[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j) * order / m);
            fmax = std::max(fmax, std::abs(samples[j]));
        }
        return acc * (factorial / (static_cast<double>(m) * rk));
    };

    double fmax = 0.0;
    cplx prev = estimate(fmax);
    DerivativeResult res{prev, false, n};
    while (2 * n <= opt.max_nodes) {
        std::vector<cplx> refined(static_cast<std::size_t>(2 * n));
        for (int j = 0; j < n; ++j) {
            refined[2 * j] = samples[j];
            refined[2 * j + 1] = f(center + radius * std::polar(1.0, 2.0 * std::numbers::pi * (2 * j + 1) / (2 * n)));
        }
        samples = std::move(refined);
        n *= 2;
        const cplx next = estimate(fmax);
        const double floor = 1e3 * std::numeric_limits<double>::epsilon() * factorial * fmax / rk;
        const double delta = std::abs(next - prev);
        res = {next, false, n};
        if (delta <= std::max(opt.tol * std::abs(next), floor)) {
            res.converged = true;
            return res;
        }
        prev = next;
    }
    return res;
}

inline cplx derivative_at(const AnalyticHandle& f, cplx center, int order, double radius, const ContourOptions& opt = {}) {
    return derivative_at_checked(f, center, order, radius, opt).value;
}

/// All derivatives of order 0..max_order from one set of contour samples.
inline std::vector<cplx> taylor_jets(const AnalyticHandle& f, cplx center, int max_order, double radius, int nodes = 256) {
    if (!(radius > 0.0)) throw numerical_error("taylor_jets: radius must be positive");
    std::vector<cplx> samples(static_cast<std::size_t>(nodes));
    for (int j = 0; j < nodes; ++j) samples[j] = f(center + radius * std::polar(1.0, 2.0 * std::numbers::pi * j / nodes));
    std::vector<cplx> out(static_cast<std::size_t>(max_order + 1));
    double factorial = 1.0;
    for (int k = 0; k <= max_order; ++k) {
        if (k > 1) factorial *= k;
        cplx acc{0.0};
        for (int j = 0; j < nodes; ++j)
            acc += samples[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(j) * k / nodes);
        out[k] = acc * (factorial / (static_cast<double>(nodes) * std::pow(radius, k)));
    }
    return out;
}

/// Taylor coefficients f^{(k)}(center) / k!, k = 0..max_order.
inline std::vector<cplx> taylor_coefficients(const AnalyticHandle& f, cplx center, int max_order, double radius, int nodes = 256) {
    auto out = taylor_jets(f, center, max_order, radius, nodes);
    double factorial = 1.0;
    for (int k = 2; k <= max_order; ++k) {
        factorial *= k;
        out[k] /= factorial;
    }
    return out;
}

inline ValueSlope AnalyticHandle::with_derivative(cplx z) const {
    if (jet_) return jet_(z);
    return {f_(z), derivative_at(*this, z, 1, 1e-2)};
}

}  // namespace qpencil
