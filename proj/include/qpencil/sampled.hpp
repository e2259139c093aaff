#pragma once

// Characteristic functions known only through samples. Values live on a uniform rectangular grid, plus
// isolated extra points (for example on the imaginary axis far from the grid). A query that hits a
// sample point exactly returns the stored value; otherwise a degree-10 polynomial in (rho - c) is
// fitted by least squares to the 6 x 6 block of grid nodes around the query and evaluated there. The
// same polynomial supplies the derivative, so value and slope are consistent.
//
// Accuracy contract: the fit error scales like (6 h)^11 |f^(11)| / 11! for grid spacing h; queries
// outside the grid and away from extra points are rejected.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qpencil/charfn.hpp"
#include "qpencil/parallel.hpp"
#include "qpencil/problem_io.hpp"
#include "qpencil/rootfinder.hpp"

namespace qpencil {

struct SampledFunction {
    std::string name;
    Rect grid;
    int nx = 0, ny = 0;               // nodes along Re and Im
    std::vector<cplx> values;         // row-major, index iy * nx + ix
    std::vector<std::pair<cplx, cplx>> extra;  // (rho, value)

    double dx() const { return grid.width() / (nx - 1); }
    double dy() const { return grid.height() / (ny - 1); }
    cplx node(int ix, int iy) const { return {grid.re_min + ix * dx(), grid.im_min + iy * dy()}; }
};

inline constexpr int sampled_fit_degree = 10;
inline constexpr int sampled_block = 6;

inline ValueSlope sampled_eval(const SampledFunction& f, cplx z) {
    for (const auto& [r, v] : f.extra)
        if (r == z) return {v, cplx{std::numeric_limits<double>::quiet_NaN()}};  // value only
    const double hx = f.dx(), hy = f.dy();
    const double fx = (z.real() - f.grid.re_min) / hx, fy = (z.imag() - f.grid.im_min) / hy;
    const double slack = 1e-9;
    if (fx < -slack || fy < -slack || fx > f.nx - 1 + slack || fy > f.ny - 1 + slack)
        throw numerical_error("sampled " + f.name + ": query outside the sampled grid");
    const int ix = static_cast<int>(std::lround(fx)), iy = static_cast<int>(std::lround(fy));
    const int half = sampled_block / 2;
    const int x0 = std::clamp(static_cast<int>(std::floor(fx)) - half + 1, 0, f.nx - sampled_block);
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)) - half + 1, 0, f.ny - sampled_block);
    const cplx c = f.node(x0, y0) + cplx{0.5 * (sampled_block - 1) * hx, 0.5 * (sampled_block - 1) * hy};
    const double scale = 0.5 * (sampled_block - 1) * std::max(hx, hy);
    constexpr int K = sampled_block * sampled_block, P = sampled_fit_degree + 1;
    Eigen::Matrix<cplx, K, P> A;
    Eigen::Matrix<cplx, K, 1> b;
    int row = 0;
    for (int j = 0; j < sampled_block; ++j)
        for (int i = 0; i < sampled_block; ++i, ++row) {
            const cplx u = (f.node(x0 + i, y0 + j) - c) / scale;
            cplx p{1.0};
            for (int k = 0; k < P; ++k, p *= u) A(row, k) = p;
            b(row) = f.values[static_cast<std::size_t>((y0 + j) * f.nx + x0 + i)];
        }
    const Eigen::Matrix<cplx, P, 1> coef = A.colPivHouseholderQr().solve(b);
    const cplx u = (z - c) / scale;
    cplx v{}, dv{};
    for (int k = P - 1; k >= 0; --k) {
        dv = dv * u + v;
        v = v * u + coef(k);
    }
    if (std::abs(fx - ix) < 1e-12 && std::abs(fy - iy) < 1e-12) v = f.values[static_cast<std::size_t>(iy * f.nx + ix)];
    return {v, dv / scale};
}

inline AnalyticHandle make_sampled_handle(std::shared_ptr<const SampledFunction> f) {
    return AnalyticHandle::from_jet(
        [f](cplx z) { return sampled_eval(*f, z); },
        "sampled " + f->name);
}

/// Samples `h` on an nx x ny grid over `grid` and at the extra points.
inline SampledFunction sample_function(const AnalyticHandle& h, const std::string& name, const Rect& grid, int nx, int ny,
                                       const std::vector<cplx>& extra_points, int jobs = 1) {
    if (nx < sampled_block || ny < sampled_block) throw validation_error("sampled grid needs at least 6 nodes per direction");
    SampledFunction f;
    f.name = name;
    f.grid = grid;
    f.nx = nx;
    f.ny = ny;
    f.values.resize(static_cast<std::size_t>(nx) * ny);
    parallel_for(f.values.size(), jobs, [&](std::size_t k) {
        f.values[k] = h(f.node(static_cast<int>(k % nx), static_cast<int>(k / nx)));
    });
    for (const auto& z : extra_points) f.extra.emplace_back(z, h(z));
    return f;
}

inline json sampled_to_json(const SampledFunction& f) {
    json vals = json::array();
    for (const auto& v : f.values) vals.push_back(io::to_json(v));
    json ex = json::array();
    for (const auto& [r, v] : f.extra) ex.push_back({{"rho", io::to_json(r)}, {"value", io::to_json(v)}});
    return {{"function", f.name}, {"grid", to_json(f.grid)}, {"nx", f.nx}, {"ny", f.ny}, {"values", vals}, {"extra", ex}};
}

inline SampledFunction sampled_from_json(const json& j) {
    SampledFunction f;
    f.name = io::require(j, "function", "").get<std::string>();
    const auto& g = io::require(j, "grid", "");
    f.grid = {io::parse_real(io::require(g, "re_min", "grid"), "grid.re_min"), io::parse_real(io::require(g, "re_max", "grid"), "grid.re_max"),
              io::parse_real(io::require(g, "im_min", "grid"), "grid.im_min"), io::parse_real(io::require(g, "im_max", "grid"), "grid.im_max")};
    f.nx = io::require(j, "nx", "").get<int>();
    f.ny = io::require(j, "ny", "").get<int>();
    if (f.nx < sampled_block || f.ny < sampled_block) throw validation_error("key 'nx'/'ny': at least 6 nodes per direction");
    const auto& vs = io::require(j, "values", "");
    if (!vs.is_array() || vs.size() != static_cast<std::size_t>(f.nx) * f.ny)
        throw validation_error("key 'values': expected nx * ny entries");
    for (std::size_t i = 0; i < vs.size(); ++i) f.values.push_back(io::parse_complex(vs[i], "values[" + std::to_string(i) + "]"));
    if (j.contains("extra"))
        for (const auto& e : j["extra"])
            f.extra.emplace_back(io::parse_complex(io::require(e, "rho", "extra"), "extra.rho"),
                                 io::parse_complex(io::require(e, "value", "extra"), "extra.value"));
    return f;
}

/// Bundle over sampled a and d; d1 is not observable in data mode.
inline CharFnBundle make_sampled_bundle(const SampledFunction& a, const SampledFunction& d) {
    CharFnBundle b;
    b.provenance = Provenance::sampled_data;
    b.a = make_sampled_handle(std::make_shared<const SampledFunction>(a));
    b.d = make_sampled_handle(std::make_shared<const SampledFunction>(d));
    return b;
}

}  // namespace qpencil
