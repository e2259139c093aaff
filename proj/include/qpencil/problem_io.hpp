#pragma once

// JSON problem files. Complex values are written as [re, im] with shortest round-trip decimal
// representation; on input each part may be a number or a decimal string.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qpencil/model.hpp"

namespace qpencil {

using json = nlohmann::json;

namespace io {

inline double parse_real(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        std::istringstream in(s);
        in.imbue(std::locale::classic());
        double v = 0.0;
        in >> v;
        if (in.fail() || !in.eof()) throw validation_error("key '" + where + "': '" + s + "' is not a decimal number");
        return v;
    }
    throw validation_error("key '" + where + "': expected a number");
}

inline cplx parse_complex(const json& j, const std::string& where) {
    if (j.is_number() || j.is_string()) return {parse_real(j, where), 0.0};
    if (!j.is_array() || j.size() != 2) throw validation_error("key '" + where + "': expected [re, im]");
    return {parse_real(j[0], where), parse_real(j[1], where)};
}

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) throw validation_error("key '" + where + "': expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw validation_error("missing key '" + (where.empty() ? key : where + "." + key) + "'");
    return *it;
}

inline PotentialSpec parse_potential(const json& j, const std::string& where) {
    PotentialSpec p;
    if (j.is_number()) {  // shorthand for a real constant
        p.coefficients = {parse_complex(j, where)};
        return p;
    }
    const std::string kind = j.value("kind", std::string("polynomial"));
    if (kind == "polynomial")
        p.kind = PotentialKind::polynomial;
    else if (kind == "chebyshev-samples")
        p.kind = PotentialKind::chebyshev_samples;
    else
        throw validation_error("key '" + where + ".kind': unknown potential kind '" + kind + "'");
    const auto& cs = require(j, "coefficients", where);
    if (!cs.is_array() || cs.empty()) throw validation_error("key '" + where + ".coefficients': expected a non-empty array");
    p.coefficients.clear();
    for (std::size_t i = 0; i < cs.size(); ++i)
        p.coefficients.push_back(parse_complex(cs[i], where + ".coefficients[" + std::to_string(i) + "]"));
    return p;
}

inline json potential_to_json(const PotentialSpec& p) {
    json cs = json::array();
    for (const auto& c : p.coefficients) cs.push_back(to_json(c));
    return {{"kind", p.kind == PotentialKind::polynomial ? "polynomial" : "chebyshev-samples"}, {"coefficients", cs}};
}

}  // namespace io

inline PencilProblem problem_from_json(const json& j) {
    using namespace io;
    if (!j.is_object()) throw validation_error("problem file: expected a JSON object");
    PencilProblem pb;
    pb.T = parse_real(require(j, "T", ""), "T");
    pb.breakpoints.clear();
    const auto& bs = require(j, "breakpoints", "");
    if (!bs.is_array()) throw validation_error("key 'breakpoints': expected an array");
    for (std::size_t i = 0; i < bs.size(); ++i) pb.breakpoints.push_back(parse_real(bs[i], "breakpoints[" + std::to_string(i) + "]"));
    const auto& ivs = require(j, "intervals", "");
    if (!ivs.is_array()) throw validation_error("key 'intervals': expected an array");
    for (std::size_t k = 0; k < ivs.size(); ++k) {
        const std::string w = "intervals[" + std::to_string(k) + "]";
        IntervalPotentials ip;
        ip.p = parse_potential(require(ivs[k], "p", w), w + ".p");
        ip.q = parse_potential(require(ivs[k], "q", w), w + ".q");
        pb.intervals.push_back(std::move(ip));
    }
    pb.h_prime = parse_complex(require(j, "h_prime", ""), "h_prime");
    pb.h = parse_complex(require(j, "h", ""), "h");
    pb.alpha = parse_complex(require(j, "alpha", ""), "alpha");
    pb.beta = parse_complex(require(j, "beta", ""), "beta");
    const auto& js = require(j, "jumps", "");
    if (!js.is_array()) throw validation_error("key 'jumps': expected an array");
    for (std::size_t i = 0; i < js.size(); ++i) {
        const std::string w = "jumps[" + std::to_string(i) + "]";
        JumpCondition jc;
        jc.gamma = parse_complex(require(js[i], "gamma", w), w + ".gamma");
        jc.eta_prime = parse_complex(require(js[i], "eta_prime", w), w + ".eta_prime");
        jc.eta = parse_complex(require(js[i], "eta", w), w + ".eta");
        pb.jumps.push_back(jc);
    }
    return pb;
}

inline json problem_to_json(const PencilProblem& pb) {
    using io::to_json;
    json ivs = json::array();
    for (const auto& ip : pb.intervals) ivs.push_back({{"p", io::potential_to_json(ip.p)}, {"q", io::potential_to_json(ip.q)}});
    json js = json::array();
    for (const auto& jc : pb.jumps)
        js.push_back({{"gamma", to_json(jc.gamma)}, {"eta_prime", to_json(jc.eta_prime)}, {"eta", to_json(jc.eta)}});
    return {{"T", pb.T},
            {"breakpoints", pb.breakpoints},
            {"intervals", ivs},
            {"h_prime", to_json(pb.h_prime)},
            {"h", to_json(pb.h)},
            {"alpha", to_json(pb.alpha)},
            {"beta", to_json(pb.beta)},
            {"jumps", js}};
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw validation_error("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline PencilProblem load_problem(const std::string& path) { return problem_from_json(read_json_file(path)); }

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace qpencil
