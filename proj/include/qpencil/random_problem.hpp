#pragma once

// Random pencil problems for property checks: T = pi, one to three jumps, complex polynomial potentials,
// complex h, h', eta', eta. Draws are rejected until the problem validates, so every result is usable.

#include <numbers>
#include <random>

#include "qpencil/model.hpp"

namespace qpencil {

inline PencilProblem random_problem(std::mt19937_64& rng, int min_jumps = 1, int max_jumps = 3) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto c = [&](double s) { return cplx{s * u(rng), s * u(rng)}; };
    for (;;) {
        PencilProblem pb;
        pb.T = std::numbers::pi;
        const int jumps = min_jumps + static_cast<int>(rng() % static_cast<unsigned>(max_jumps - min_jumps + 1));
        for (int j = 1; j <= jumps; ++j) pb.breakpoints.push_back(pb.T * (j + 0.25 * u(rng)) / (jumps + 1));
        for (int k = 0; k <= jumps; ++k) {
            IntervalPotentials ip;
            ip.p.coefficients = {c(0.5), c(0.2)};
            ip.q.coefficients = {c(1.0), c(0.3), c(0.1)};
            pb.intervals.push_back(ip);
        }
        for (int j = 0; j < jumps; ++j) pb.jumps.push_back({cplx{1.0, 0.0} + c(0.4), c(0.3), c(0.5)});
        pb.h_prime = c(0.3);
        pb.h = c(1.0);
        pb.alpha = cplx{1.5, 0.0} + c(0.4);
        pb.beta = cplx{1.0, 0.0} + c(0.4);
        if (validate_problem(pb).ok()) return pb;
    }
}

}  // namespace qpencil
