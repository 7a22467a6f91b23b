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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "risloc/estimator.hpp"
#include "risloc/signal.hpp"

namespace risloc::io {

inline constexpr const char* kToolName = "ris-locate";
inline constexpr const char* kToolVersion = "0.1.0";

enum class SideHintMode { kAuto, kNone, kPositive, kNegative };

struct ParsedConfig {
    sig::SystemConfig system;
    geom::RisPose pose;
    est::SearchSettings search;
    SideHintMode side_hint = SideHintMode::kAuto;

    // resolves kAuto against the configured pose
    est::SideHint resolve_side_hint() const;
};

// Parses a config document. Unknown keys are rejected; unit-suffixed dB/dBm
// variants are converted to linear once, here. The noise variance derives
// from noise_figure * noise_psd * N_c * subcarrier_spacing when not given
// explicitly. Validation reports every violated invariant at once.
ParsedConfig parse_config_json(const nlohmann::json& doc);
ParsedConfig parse_config(const std::string& path);

// Emits linear-unit keys so that parse(serialize(x)) == x bit for bit.
nlohmann::json serialize_config(const ParsedConfig& cfg);

// 17-significant-digit float formatting shared by all writers; infinities
// serialize as "inf"/"-inf".
std::string format_double(double v);

// One CSV output with a fixed, documented schema.
class CsvWriter {
  public:
    CsvWriter(std::string path, std::vector<std::string> header);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    void write() const;
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::vector<std::string> header_;
    std::vector<std::string> lines_;
};

struct RunManifest {
    std::string command;
    std::string config_path;
    std::string output_path;
    std::uint64_t seed = 0;
    int threads = 1;
    nlohmann::json flags = nlohmann::json::object();
    nlohmann::json resolved_config;

    // written next to the CSV as <output stem>.manifest.json
    std::string write(const std::string& csv_path) const;
};

}  // namespace risloc::io
