#pragma once

#include <complex>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "perclab/fraction.hpp"
#include "perclab/version.hpp"

namespace perclab {

/// Everything a run needs, kept in the exact string form the user typed
/// (fractions, hex seeds), so a manifest re-run parses identical values
/// and reproduces identical outputs.
struct RunConfig {
    std::string command;
    std::string mesh = "1/128";
    std::uint64_t n = 100000;
    std::string seed = "1";
    unsigned workers = 0;  // 0 = PERCLAB_WORKERS env or hardware concurrency

    std::vector<std::string> eps;        // arm radii
    std::vector<std::string> points;     // "re,im" pairs
    std::vector<std::string> bulk;       // multipoint bulk points, "re,im"
    std::vector<std::string> boundary;   // multipoint boundary abscissae
    std::string domain = "disk:0,0,1";
    std::string z = "0,1";               // images point
    std::string box_factor = "4";
    std::string scale = "2";
    std::string patch = "all";           // oracle patch selector (name)
    std::string event = "all";           // oracle patch selector (event kind)
    bool bootstrap = false;

    // Acceptance thresholds; defaults are per-command and documented.
    std::string slope_target;
    std::string slope_tol;
    std::string rel_tol;     // relative tolerance floor for ratio targets
    std::string z_max = "3"; // z-score bound for statistical checks

    std::string csv_out;
    std::string manifest_out;

    double mesh_value() const { return Fraction::parse(mesh).value(); }
    std::uint64_t seed_value() const { return parse_seed(seed); }
    double box_factor_value() const { return Fraction::parse(box_factor).value(); }
    double scale_value() const { return Fraction::parse(scale).value(); }
    double z_max_value() const { return Fraction::parse(z_max).value(); }
};

inline std::complex<double> parse_point(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("point must be 're,im': '" + text + "'");
    return {Fraction::parse(text.substr(0, comma)).value(),
            Fraction::parse(text.substr(comma + 1)).value()};
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["command"] = c.command;
    j["mesh"] = c.mesh;
    j["n"] = c.n;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["eps"] = c.eps;
    j["points"] = c.points;
    j["bulk"] = c.bulk;
    j["boundary"] = c.boundary;
    j["domain"] = c.domain;
    j["z"] = c.z;
    j["box_factor"] = c.box_factor;
    j["scale"] = c.scale;
    j["patch"] = c.patch;
    j["event"] = c.event;
    j["bootstrap"] = c.bootstrap;
    j["slope_target"] = c.slope_target;
    j["slope_tol"] = c.slope_tol;
    j["rel_tol"] = c.rel_tol;
    j["z_max"] = c.z_max;
    j["csv_out"] = c.csv_out;
    j["manifest_out"] = c.manifest_out;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.command = j.at("command").get<std::string>();
    c.mesh = j.at("mesh").get<std::string>();
    c.n = j.at("n").get<std::uint64_t>();
    c.seed = j.at("seed").get<std::string>();
    c.workers = j.at("workers").get<unsigned>();
    c.eps = j.at("eps").get<std::vector<std::string>>();
    c.points = j.at("points").get<std::vector<std::string>>();
    c.bulk = j.at("bulk").get<std::vector<std::string>>();
    c.boundary = j.at("boundary").get<std::vector<std::string>>();
    c.domain = j.at("domain").get<std::string>();
    c.z = j.at("z").get<std::string>();
    c.box_factor = j.at("box_factor").get<std::string>();
    c.scale = j.at("scale").get<std::string>();
    c.patch = j.at("patch").get<std::string>();
    c.event = j.at("event").get<std::string>();
    c.bootstrap = j.at("bootstrap").get<bool>();
    c.slope_target = j.at("slope_target").get<std::string>();
    c.slope_tol = j.at("slope_tol").get<std::string>();
    c.rel_tol = j.at("rel_tol").get<std::string>();
    c.z_max = j.at("z_max").get<std::string>();
    c.csv_out = j.at("csv_out").get<std::string>();
    c.manifest_out = j.at("manifest_out").get<std::string>();
    return c;
}

/// Full run manifest: configuration echo plus results summary.
inline nlohmann::json make_manifest(const RunConfig& config, const nlohmann::json& results,
                                    double wall_time_s) {
    nlohmann::json j;
    j["tool"] = "perclab";
    j["version"] = kVersion;
    j["config"] = config_to_json(config);
    j["results"] = results;
    j["wall_time_s"] = wall_time_s;
    return j;
}

inline void write_manifest(const nlohmann::json& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << manifest.dump(2) << "\n";
}

inline RunConfig load_manifest_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j.at("config"));
}

}  // namespace perclab
