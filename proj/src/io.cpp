// Copyright 2026-present the ris-locate project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "risloc/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "risloc/errors.hpp"
#include "risloc/montecarlo.hpp"

namespace risloc::io {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& scope) {
    for (const auto& item : obj.items()) {
        if (!known.contains(item.key())) {
            throw ConfigError("unknown config key '" + scope + item.key() + "'");
        }
    }
}

double require_number(const json& obj, const std::string& key,
                      const std::string& scope) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        throw ConfigError("config key '" + scope + key +
                          "' is missing or not a number");
    }
    return obj[key].get<double>();
}

int require_int(const json& obj, const std::string& key, const std::string& scope) {
    if (!obj.contains(key) || !obj[key].is_number_integer()) {
        throw ConfigError("config key '" + scope + key +
                          "' is missing or not an integer");
    }
    return obj[key].get<int>();
}

Vec2 require_vec2(const json& obj, const std::string& key,
                  const std::string& scope) {
    if (!obj.contains(key) || !obj[key].is_array() || obj[key].size() != 2 ||
        !obj[key][0].is_number() || !obj[key][1].is_number()) {
        throw ConfigError("config key '" + scope + key +
                          "' must be a 2-element number array");
    }
    return {obj[key][0].get<double>(), obj[key][1].get<double>()};
}

// Accepts exactly one of a linear-unit key and its dB/dBm twin.
double one_of(const json& obj, const std::string& linear_key,
              const std::string& db_key, double (*convert)(double),
              const std::string& scope) {
    const bool has_linear = obj.contains(linear_key);
    const bool has_db = obj.contains(db_key);
    if (has_linear == has_db) {
        throw ConfigError("config must set exactly one of '" + scope + linear_key +
                          "' and '" + scope + db_key + "'");
    }
    return has_linear ? require_number(obj, linear_key, scope)
                      : convert(require_number(obj, db_key, scope));
}

}  // namespace

est::SideHint ParsedConfig::resolve_side_hint() const {
    switch (side_hint) {
        case SideHintMode::kNone:
            return est::SideHint::kNone;
        case SideHintMode::kPositive:
            return est::SideHint::kPositive;
        case SideHintMode::kNegative:
            return est::SideHint::kNegative;
        case SideHintMode::kAuto:
        default:
            return est::side_of(pose.center, system.p_tx, system.p_rx);
    }
}

ParsedConfig parse_config_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown_keys(
        doc,
        {"wavelength_m", "element_spacing_m", "num_elements", "num_subcarriers",
         "num_transmissions", "subcarrier_spacing_hz", "tx_power_w",
         "tx_power_dbm", "tx_gain", "rx_gain", "noise_psd_w_hz",
         "noise_psd_dbm_hz", "noise_figure", "noise_figure_db",
         "noise_variance_w", "noise_variance_dbm", "ifft_size", "p_tx_m",
         "p_rx_m", "speed_of_light_m_s", "ris", "search"},
        "");

    ParsedConfig out;
    sig::SystemConfig& sys = out.system;
    sys.wavelength = require_number(doc, "wavelength_m", "");
    sys.element_spacing = require_number(doc, "element_spacing_m", "");
    sys.num_elements = require_int(doc, "num_elements", "");
    sys.num_subcarriers = require_int(doc, "num_subcarriers", "");
    sys.num_transmissions = require_int(doc, "num_transmissions", "");
    sys.subcarrier_spacing = require_number(doc, "subcarrier_spacing_hz", "");
    sys.tx_power = one_of(doc, "tx_power_w", "tx_power_dbm", mc::dbm_to_watts, "");
    sys.tx_gain = require_number(doc, "tx_gain", "");
    sys.rx_gain = require_number(doc, "rx_gain", "");
    sys.noise_psd =
        one_of(doc, "noise_psd_w_hz", "noise_psd_dbm_hz", mc::dbm_to_watts, "");
    sys.noise_figure =
        one_of(doc, "noise_figure", "noise_figure_db", mc::db_to_linear, "");
    sys.ifft_size = require_int(doc, "ifft_size", "");
    sys.p_tx = require_vec2(doc, "p_tx_m", "");
    sys.p_rx = require_vec2(doc, "p_rx_m", "");
    sys.speed_of_light = require_number(doc, "speed_of_light_m_s", "");

    if (doc.contains("noise_variance_w") && doc.contains("noise_variance_dbm")) {
        throw ConfigError(
            "config must set at most one of 'noise_variance_w' and "
            "'noise_variance_dbm'");
    }
    if (doc.contains("noise_variance_w")) {
        sys.noise_variance = require_number(doc, "noise_variance_w", "");
    } else if (doc.contains("noise_variance_dbm")) {
        sys.noise_variance =
            mc::dbm_to_watts(require_number(doc, "noise_variance_dbm", ""));
    } else {
        sys.noise_variance = sys.noise_figure * sys.noise_psd *
                             static_cast<double>(sys.num_subcarriers) *
                             sys.subcarrier_spacing;
    }

    if (!doc.contains("ris") || !doc["ris"].is_object()) {
        throw ConfigError("config key 'ris' is missing or not an object");
    }
    const json& ris = doc["ris"];
    reject_unknown_keys(ris, {"position_m", "alpha_rad", "side_hint"}, "ris.");
    out.pose.center = require_vec2(ris, "position_m", "ris.");
    out.pose.alpha = geom::wrap_angle(require_number(ris, "alpha_rad", "ris."));
    if (ris.contains("side_hint")) {
        const std::string hint = ris["side_hint"].get<std::string>();
        if (hint == "auto") {
            out.side_hint = SideHintMode::kAuto;
        } else if (hint == "none") {
            out.side_hint = SideHintMode::kNone;
        } else if (hint == "positive") {
            out.side_hint = SideHintMode::kPositive;
        } else if (hint == "negative") {
            out.side_hint = SideHintMode::kNegative;
        } else {
            throw ConfigError("ris.side_hint must be auto|none|positive|negative");
        }
    }

    if (doc.contains("search")) {
        if (!doc["search"].is_object()) {
            throw ConfigError("config key 'search' must be an object");
        }
        const json& search = doc["search"];
        reject_unknown_keys(search,
                            {"delta_grid", "omega_grid", "nu_grid",
                             "refine_iters_1d", "qn_max_iters", "qn_grad_tol"},
                            "search.");
        if (search.contains("delta_grid"))
            out.search.delta_grid = require_int(search, "delta_grid", "search.");
        if (search.contains("omega_grid"))
            out.search.omega_grid = require_int(search, "omega_grid", "search.");
        if (search.contains("nu_grid"))
            out.search.nu_grid = require_int(search, "nu_grid", "search.");
        if (search.contains("refine_iters_1d"))
            out.search.refine_iters_1d =
                require_int(search, "refine_iters_1d", "search.");
        if (search.contains("qn_max_iters"))
            out.search.qn_max_iters = require_int(search, "qn_max_iters", "search.");
        if (search.contains("qn_grad_tol"))
            out.search.qn_grad_tol = require_number(search, "qn_grad_tol", "search.");
    }

    out.system.validate();
    out.search.validate();
    return out;
}

ParsedConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
    return parse_config_json(doc);
}

nlohmann::json serialize_config(const ParsedConfig& cfg) {
    json doc;
    doc["wavelength_m"] = cfg.system.wavelength;
    doc["element_spacing_m"] = cfg.system.element_spacing;
    doc["num_elements"] = cfg.system.num_elements;
    doc["num_subcarriers"] = cfg.system.num_subcarriers;
    doc["num_transmissions"] = cfg.system.num_transmissions;
    doc["subcarrier_spacing_hz"] = cfg.system.subcarrier_spacing;
    doc["tx_power_w"] = cfg.system.tx_power;
    doc["tx_gain"] = cfg.system.tx_gain;
    doc["rx_gain"] = cfg.system.rx_gain;
    doc["noise_psd_w_hz"] = cfg.system.noise_psd;
    doc["noise_figure"] = cfg.system.noise_figure;
    doc["noise_variance_w"] = cfg.system.noise_variance;
    doc["ifft_size"] = cfg.system.ifft_size;
    doc["p_tx_m"] = {cfg.system.p_tx.x, cfg.system.p_tx.y};
    doc["p_rx_m"] = {cfg.system.p_rx.x, cfg.system.p_rx.y};
    doc["speed_of_light_m_s"] = cfg.system.speed_of_light;
    doc["ris"]["position_m"] = {cfg.pose.center.x, cfg.pose.center.y};
    doc["ris"]["alpha_rad"] = cfg.pose.alpha;
    switch (cfg.side_hint) {
        case SideHintMode::kAuto:
            doc["ris"]["side_hint"] = "auto";
            break;
        case SideHintMode::kNone:
            doc["ris"]["side_hint"] = "none";
            break;
        case SideHintMode::kPositive:
            doc["ris"]["side_hint"] = "positive";
            break;
        case SideHintMode::kNegative:
            doc["ris"]["side_hint"] = "negative";
            break;
    }
    doc["search"]["delta_grid"] = cfg.search.delta_grid;
    doc["search"]["omega_grid"] = cfg.search.omega_grid;
    doc["search"]["nu_grid"] = cfg.search.nu_grid;
    doc["search"]["refine_iters_1d"] = cfg.search.refine_iters_1d;
    doc["search"]["qn_max_iters"] = cfg.search.qn_max_iters;
    doc["search"]["qn_grad_tol"] = cfg.search.qn_grad_tol;
    return doc;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::string path, std::vector<std::string> header)
    : path_(std::move(path)), header_(std::move(header)) {}

void CsvWriter::row(const std::vector<double>& values) {
    std::ostringstream line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line << ',';
        line << format_double(values[i]);
    }
    lines_.push_back(line.str());
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    std::ostringstream line;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line << ',';
        line << values[i];
    }
    lines_.push_back(line.str());
}

void CsvWriter::write() const {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw Error("cannot write output file '" + path_ + "'");
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out << ',';
        out << header_[i];
    }
    out << '\n';
    for (const std::string& line : lines_) out << line << '\n';
}

std::string RunManifest::write(const std::string& csv_path) const {
    std::string manifest_path = csv_path;
    const auto dot = manifest_path.rfind('.');
    if (dot != std::string::npos) manifest_path.resize(dot);
    manifest_path += ".manifest.json";

    json doc;
    doc["tool"] = kToolName;
    doc["version"] = kToolVersion;
    const auto now = std::chrono::system_clock::now();
    doc["timestamp_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            now.time_since_epoch())
            .count();
    doc["command"] = command;
    doc["config_path"] = config_path;
    doc["output_path"] = output_path;
    doc["seed"] = seed;
    doc["threads"] = threads;
    doc["flags"] = flags;
    doc["resolved_config"] = resolved_config;

    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw Error("cannot write manifest file '" + manifest_path + "'");
    out << doc.dump(2) << '\n';
    return manifest_path;
}

}  // namespace risloc::io
