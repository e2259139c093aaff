#pragma once

// Closed forms and problem builders shared by the test suites. Everything here is independent of the
// library's numerics: values come from elementary functions only.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "qpencil/model.hpp"
#include "qpencil/problem_io.hpp"

namespace oracle {

using qpencil::cplx;
inline constexpr double pi = std::numbers::pi;

inline std::string problem_path(const std::string& name) { return std::string(QPENCIL_PROBLEMS_DIR) + "/" + name; }

// Free problem on [0, pi]: d = sin(rho pi)/rho, d1 = cos(rho pi), a = (alpha + beta) cos(rho pi) - 1 - alpha beta.
inline cplx free_d(cplx rho) { return rho == cplx{0.0} ? cplx{pi} : std::sin(rho * pi) / rho; }
inline cplx free_d1(cplx rho) { return std::cos(rho * pi); }
inline cplx free_a(cplx rho, cplx alpha, cplx beta) { return (alpha + beta) * std::cos(rho * pi) - 1.0 - alpha * beta; }

// One jump at pi/2 with gamma = 2, no potentials: d = 1.25 sin(rho pi)/rho, C(T) = 2 cos^2 - sin^2 / 2.
inline cplx j1_d(cplx rho) { return 1.25 * free_d(rho); }
inline cplx j1_C(cplx rho) {
    const cplx c = std::cos(rho * pi / 2.0), s = std::sin(rho * pi / 2.0);
    return 2.0 * c * c - 0.5 * s * s;
}

inline qpencil::PencilProblem f0() { return qpencil::free_problem(); }
inline qpencil::PencilProblem f1() { return qpencil::free_problem(pi, 2.0, 1.0); }
inline qpencil::PencilProblem j1() {
    auto pb = qpencil::free_problem();
    pb.breakpoints = {pi / 2.0};
    pb.intervals.push_back({});
    pb.jumps = {{2.0, 0.0, 0.0}};
    return pb;
}
inline qpencil::PencilProblem load(const std::string& name) { return qpencil::load_problem(problem_path(name)); }

}  // namespace oracle
