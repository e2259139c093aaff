// qpencil: forward spectra, spectral-data extraction, reconstruction and self-checks for quadratic
// pencils with jump conditions.
//
// Exit codes: 0 ok, 2 validation, 3 numerics, 4 reconstruction step failed, 5 comparison failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qpencil/charfn.hpp"
#include "qpencil/inverse.hpp"
#include "qpencil/problem_io.hpp"
#include "qpencil/random_problem.hpp"
#include "qpencil/rootfinder.hpp"
#include "qpencil/sampled.hpp"
#include "qpencil/weyl.hpp"

using namespace qpencil;

namespace {

enum exit_code { ok = 0, validation = 2, numerics = 3, algorithm = 4, comparison = 5 };

struct RunConfig {
    std::string command;
    std::string problem_path;
    std::vector<double> window{6.0, 2.0};  // R, H
    std::map<std::string, double> tolerances{{"integration", 1e-12}, {"rootfind", 1e-10}, {"contour", 1e-10}};
    std::optional<double> compare_tol;
    std::string output_path;
    std::string emit_csv;
    std::string grid = "200x100";
    std::string emit_bundle;
    double bundle_spacing = 0.05;
    int jobs = 1;
    unsigned seed = 1;
    int count = 20;
    std::string roundtrip_path;
    std::vector<std::string> bundle_paths;
    std::string omega_path;
    std::string reference_path;
    double delta = 0.3;
    std::vector<double> radii{8, 16, 32, 64, 128};

    void validate() const {
        if (window.size() != 2 || !(window[0] > 0.0) || !(window[1] > 0.0))
            throw validation_error("--window: R and H must be positive");
        for (const auto& [k, v] : tolerances)
            if (!(v > 0.0)) throw validation_error("--tol-" + k + ": must be strictly positive");
        if (compare_tol && !(*compare_tol >= 0.0)) throw validation_error("--tol-compare: must be non-negative");
        if (jobs < 1) throw validation_error("--jobs: must be at least 1");
    }

    Rect rect() const { return Rect::symmetric(window[0], window[1]); }

    IntegratorOptions integrator() const {
        IntegratorOptions o;
        o.rel_tol = tolerances.at("integration");
        o.abs_tol = 1e-2 * o.rel_tol;
        return o;
    }

    RootfinderOptions rootfinder() const {
        RootfinderOptions o;
        o.quad_tol = tolerances.at("rootfind");
        return o;
    }
};

void emit(const json& j, const std::string& path) {
    if (path.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json_file(path, j);
}

std::pair<int, int> parse_grid(const std::string& s) {
    int nx = 0, ny = 0;
    char x = 0;
    std::istringstream in(s);
    if (!(in >> nx >> x >> ny) || (x != 'x' && x != 'X') || nx < 2 || ny < 2)
        throw validation_error("--grid: expected NXxNY with both at least 2, got '" + s + "'");
    return {nx, ny};
}

void write_csv(const PencilProblem& pb, const Rect& r, const std::string& grid, const std::string& path, const RunConfig& cfg) {
    const auto [nx, ny] = parse_grid(grid);
    const auto b = make_forward_bundle(pb, cfg.integrator());
    struct Row {
        cplx rho, d, a, d1;
    };
    std::vector<Row> rows(static_cast<std::size_t>(nx) * ny);
    parallel_for(rows.size(), cfg.jobs, [&](std::size_t k) {
        const int ix = static_cast<int>(k % nx), iy = static_cast<int>(k / nx);
        const cplx rho{r.re_min + ix * r.width() / (nx - 1), r.im_min + iy * r.height() / (ny - 1)};
        rows[k] = {rho, b.d(rho), b.a(rho), b.d1(rho)};
    });
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw error("cannot write '" + path + "'");
    std::fprintf(f, "re_rho,im_rho,re_d,im_d,re_a,im_a,re_d1,im_d1\n");
    for (const auto& row : rows)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.rho.real(), row.rho.imag(), row.d.real(), row.d.imag(),
                     row.a.real(), row.a.imag(), row.d1.real(), row.d1.imag());
    std::fclose(f);
}

json known_to_json(const PencilProblem& pb) {
    json g = json::array();
    for (const auto& j : pb.jumps) g.push_back(io::to_json(j.gamma));
    return {{"T", pb.T}, {"alpha", io::to_json(pb.alpha)}, {"beta", io::to_json(pb.beta)}, {"gammas", g}, {"breakpoints", pb.breakpoints}};
}

/// Sampled a, d over the window (with margin) and at the step-2 points on the imaginary axis, plus Omega.
void write_bundle(const PencilProblem& pb, const SpectrumWindow& w, const OmegaSequence& om, const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.emit_bundle);
    const auto b = make_forward_bundle(pb, cfg.integrator());
    const double margin = 0.5;
    const Rect g{w.window.re_min - margin, w.window.re_max + margin, w.window.im_min - margin, w.window.im_max + margin};
    const int nx = static_cast<int>(std::ceil(g.width() / cfg.bundle_spacing)) + 1;
    const int ny = static_cast<int>(std::ceil(g.height() / cfg.bundle_spacing)) + 1;
    InverseInput probe;
    probe.T = pb.T;
    probe.breakpoints = pb.breakpoints;
    std::vector<cplx> extra;
    for (double s : InverseOptions{}.sigma_schedule) {
        const double sigma = s / probe.sigma_scale();
        extra.emplace_back(0.0, sigma);
        extra.emplace_back(0.0, -sigma);
    }
    write_json_file((fs::path(cfg.emit_bundle) / "d.json").string(), sampled_to_json(sample_function(b.d, "d", g, nx, ny, extra, cfg.jobs)));
    write_json_file((fs::path(cfg.emit_bundle) / "a.json").string(), sampled_to_json(sample_function(b.a, "a", g, nx, ny, extra, cfg.jobs)));
    json o{{"known", known_to_json(pb)}, {"window", to_json(w.window)}, {"omega", omega_to_json(om.stripped())}};
    write_json_file((fs::path(cfg.emit_bundle) / "omega.json").string(), o);
}

int cmd_forward(const RunConfig& cfg) {
    const auto pb = load_problem(cfg.problem_path);
    require_valid(pb);
    const auto b = make_forward_bundle(pb, cfg.integrator());
    auto w = build_window(b.d, cfg.rect(), cfg.rootfinder());
    json out{{"spectrum", spectrum_to_json(w)}};
    if (!cfg.emit_csv.empty()) {
        write_csv(pb, cfg.rect(), cfg.grid, cfg.emit_csv, cfg);
        out["csv"] = cfg.emit_csv;
    }
    if (!cfg.emit_bundle.empty()) {
        OmegaOptions oo;
        oo.jobs = cfg.jobs;
        const auto om = extract_omega(pb, w, oo, cfg.integrator());
        write_bundle(pb, w, om, cfg);
        out["bundle"] = cfg.emit_bundle;
    }
    emit(out, cfg.output_path);
    return ok;
}

int cmd_extract(const RunConfig& cfg) {
    const auto pb = load_problem(cfg.problem_path);
    require_valid(pb);
    const auto b = make_forward_bundle(pb, cfg.integrator());
    auto w = build_window(b.d, cfg.rect(), cfg.rootfinder());
    WeylOptions wo;
    wo.contour_tol = cfg.tolerances.at("contour");
    wo.jobs = cfg.jobs;
    const auto wd = weyl_residues(b, w, wo);
    OmegaOptions oo;
    oo.jobs = cfg.jobs;
    const auto om = extract_omega(pb, w, oo, cfg.integrator());
    json out = spectral_data_to_json(wd, &om);
    out["spectrum"] = spectrum_to_json(w);
    if (!om.reports.empty()) out["reports"] = om.reports;
    emit(out, cfg.output_path);
    return ok;
}

InverseOptions inverse_options(const RunConfig& cfg) {
    InverseOptions o;
    o.rootfinder = cfg.rootfinder();
    o.jobs = cfg.jobs;
    return o;
}

int cmd_invert(const RunConfig& cfg) {
    if (!cfg.roundtrip_path.empty()) {
        const auto pb = load_problem(cfg.roundtrip_path);
        RoundtripConfig rc;
        rc.window = cfg.rect();
        rc.inverse = inverse_options(cfg);
        rc.integrator = cfg.integrator();
        rc.weyl.contour_tol = cfg.tolerances.at("contour");
        rc.weyl.jobs = cfg.jobs;
        rc.omega.jobs = cfg.jobs;
        if (cfg.compare_tol) {
            const double t = *cfg.compare_tol;
            rc.tol = {t, t, t, t, t, t};
        }
        const auto res = run_roundtrip(pb, rc);
        emit(report_to_json(res.report), cfg.output_path);
        if (res.report.failed_step) {
            std::cerr << "error: " << res.report.error << '\n';
            return algorithm;
        }
        if (!res.report.all_pass()) {
            for (const auto& c : res.report.comparisons)
                if (!c.pass) std::cerr << "comparison failed: " << c.name << " delta " << c.delta << " > tol " << c.tol << '\n';
            return comparison;
        }
        return ok;
    }
    if (cfg.bundle_paths.size() != 2 || cfg.omega_path.empty())
        throw validation_error("invert: give --roundtrip PROBLEM, or --bundle D.json A.json with --omega OMEGA.json");
    const auto d = sampled_from_json(read_json_file(cfg.bundle_paths[0]));
    const auto a = sampled_from_json(read_json_file(cfg.bundle_paths[1]));
    const auto oj = read_json_file(cfg.omega_path);
    InverseInput in;
    in.bundle = make_sampled_bundle(a, d);
    in.omega = omega_from_json(io::require(oj, "omega", ""));
    const auto& known = io::require(oj, "known", "");
    in.T = io::parse_real(io::require(known, "T", "known"), "known.T");
    in.alpha = io::parse_complex(io::require(known, "alpha", "known"), "known.alpha");
    in.beta = io::parse_complex(io::require(known, "beta", "known"), "known.beta");
    for (const auto& g : io::require(known, "gammas", "known")) in.gammas.push_back(io::parse_complex(g, "known.gammas"));
    if (known.contains("breakpoints")) in.breakpoints = known["breakpoints"].get<std::vector<double>>();
    in.window = cfg.rect();
    std::optional<PencilProblem> reference;
    if (!cfg.reference_path.empty()) reference = load_problem(cfg.reference_path);
    const auto rep = run_inverse(in, inverse_options(cfg), reference ? &*reference : nullptr, cfg.integrator());
    json out = report_to_json(rep);
    if (!reference) out["h"] = "not run: step 10 needs --reference potentials";
    emit(out, cfg.output_path);
    if (rep.failed_step) {
        std::cerr << "error: " << rep.error << '\n';
        return algorithm;
    }
    return ok;
}

int cmd_selftest(const RunConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst6 = 0.0, worst7 = 0.0, worst_w = 0.0;
    int branch_fail = 0;
    for (int i = 0; i < cfg.count; ++i) {
        auto pb = random_problem(rng);
        const cplx rho{10.0 * u(rng), 5.0 * u(rng)};
        worst6 = std::max(worst6, identity6_residual(pb, rho, cfg.integrator()));
        worst7 = std::max(worst7, identity7_residual(pb, rho, cfg.integrator()));
        const auto S = propagate(pb, SolutionKind::S, rho, 0, cfg.integrator());
        const auto C = propagate(pb, SolutionKind::C, rho, 0, cfg.integrator());
        const auto Phi = propagate(pb, SolutionKind::phi, rho, 0, cfg.integrator());
        worst_w = std::max({worst_w, wronskian_residual(C, S), wronskian_residual(Phi, S)});
        const cplx Q = std::polar(0.1 + 3.0 * std::abs(u(rng)), std::numbers::pi * (1.0 + u(rng)));
        const int omega = sign_class(Q, real_axis_snap);
        if (sign_class(reconstruct_Q(Q * Q, omega), real_axis_snap) != omega) ++branch_fail;
    }
    const bool pass6 = worst6 <= 1e-8, pass7 = worst7 <= 1e-7, pass_w = worst_w <= 1e-9, pass_b = branch_fail == 0;
    json out{{"seed", cfg.seed},
             {"count", cfg.count},
             {"identity6", {{"worst", worst6}, {"pass", pass6}}},
             {"identity7", {{"worst", worst7}, {"pass", pass7}}},
             {"wronskian", {{"worst", worst_w}, {"pass", pass_w}}},
             {"branch", {{"failures", branch_fail}, {"pass", pass_b}}}};
    emit(out, cfg.output_path);
    return pass6 && pass7 && pass_w && pass_b ? ok : comparison;
}

int cmd_asymptotics(const RunConfig& cfg) {
    const auto pb = load_problem(cfg.problem_path);
    require_valid(pb);
    json out = json::array();
    for (auto hp : {HalfPlane::upper, HalfPlane::lower}) {
        const auto rep = check_asymptotics(pb, hp, cfg.delta, cfg.radii, cfg.integrator());
        json rays = json::array();
        for (const auto& r : rep.rays)
            rays.push_back({{"angle", r.angle}, {"slope_a", r.slope_a}, {"slope_d", r.slope_d}, {"slope_C", r.slope_C}, {"slope_Phi", r.slope_Phi}});
        out.push_back({{"half_plane", to_string(hp)},
                       {"delta", rep.delta},
                       {"rays", rays},
                       {"bound_constant_S", rep.bound_constant_S},
                       {"bound_constant_C", rep.bound_constant_C}});
    }
    emit(out, cfg.output_path);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectra and inverse reconstruction for quadratic pencils with jump conditions"};
    app.require_subcommand(1);
    RunConfig cfg;
    double tol_int = 1e-12, tol_root = 1e-10, tol_contour = 1e-10;
    double tol_compare = -1.0;

    auto common = [&](CLI::App* c) {
        c->add_option("--window", cfg.window, "Search rectangle |Re| <= R, |Im| <= H")->expected(2);
        c->add_option("--output,-o", cfg.output_path, "Output JSON file (stdout if omitted)");
        c->add_option("--jobs,-j", cfg.jobs, "Worker threads");
        c->add_option("--tol-integration", tol_int, "Relative ODE tolerance");
        c->add_option("--tol-rootfind", tol_root, "Boundary-moment accuracy of the zero search");
        c->add_option("--tol-contour", tol_contour, "Convergence tolerance of residue contours");
    };

    auto* forward = app.add_subcommand("forward", "Locate eigenvalues; optionally emit a CSV grid or a sampled bundle");
    forward->add_option("--problem,-p", cfg.problem_path, "Problem JSON")->required();
    forward->add_option("--grid", cfg.grid, "CSV mesh NXxNY over the window");
    forward->add_option("--emit-csv", cfg.emit_csv, "Write d, a, d1 on the mesh to this CSV file");
    forward->add_option("--emit-bundle", cfg.emit_bundle, "Write sampled d.json, a.json and omega.json to this directory");
    forward->add_option("--bundle-spacing", cfg.bundle_spacing, "Grid spacing of the sampled bundle");
    common(forward);

    auto* extract = app.add_subcommand("extract", "Weyl sequence and sign sequence on the window");
    extract->add_option("--problem,-p", cfg.problem_path, "Problem JSON")->required();
    common(extract);

    auto* invert = app.add_subcommand("invert", "Reconstruct from a, d and the sign sequence");
    invert->add_option("--roundtrip", cfg.roundtrip_path, "Problem JSON: forward oracle, reconstruct, compare");
    invert->add_option("--bundle", cfg.bundle_paths, "Sampled d.json and a.json")->expected(2);
    invert->add_option("--omega", cfg.omega_path, "Sign sequence file with the known coefficients");
    invert->add_option("--reference", cfg.reference_path, "Problem JSON whose potentials supply C and S for step 10 in data mode");
    invert->add_option("--tol-compare", tol_compare, "Override every round-trip comparison tolerance");
    common(invert);

    auto* selftest = app.add_subcommand("selftest", "Randomized identity, Wronskian and branch checks");
    selftest->add_option("--seed", cfg.seed, "RNG seed");
    selftest->add_option("--count", cfg.count, "Number of random instances");
    common(selftest);

    auto* asym = app.add_subcommand("asymptotics", "Log-log decay of deviations from the leading terms");
    asym->add_option("--problem,-p", cfg.problem_path, "Problem JSON")->required();
    asym->add_option("--delta", cfg.delta, "Sector half-width away from the real axis");
    asym->add_option("--radii", cfg.radii, "Radii along each ray");
    common(asym);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation;
    }

    try {
        cfg.tolerances = {{"integration", tol_int}, {"rootfind", tol_root}, {"contour", tol_contour}};
        if (tol_compare != -1.0) cfg.compare_tol = tol_compare;
        cfg.validate();
        if (*forward) return cmd_forward(cfg);
        if (*extract) return cmd_extract(cfg);
        if (*invert) return cmd_invert(cfg);
        if (*selftest) return cmd_selftest(cfg);
        if (*asym) return cmd_asymptotics(cfg);
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return validation;
    } catch (const algorithm_error& e) {
        std::cerr << "algorithm error: " << e.what() << '\n';
        return algorithm;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerics;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerics;
    }
    return ok;
}
