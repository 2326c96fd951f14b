// Copyright 2026 The Aimon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aimon/txn.hpp"

namespace aimon {

// Labeled synthetic workload scripts: a benign baseline population plus one
// scripted misuse pattern per detection indicator family.
enum class ScenarioId : std::uint8_t {
    BenignBaseline,
    SurveillanceRate,
    CrowdAnalysis,
    DistinctFacesOverTime,
    TargetTracking,
    BlacklistScreening,
    BehaviorDrift,
    InversionProbe,
};

inline constexpr std::size_t kScenarioCount = 8;

std::string_view scenario_name(ScenarioId id);
std::optional<ScenarioId> parse_scenario(std::string_view name);

struct ScenarioSpec {
    ScenarioId scenario = ScenarioId::BenignBaseline;
    // Overrides of the scenario's default params; unknown names are
    // rejected. All params are numeric.
    std::map<std::string, double> params;
    std::uint64_t seed = 0;
    // Prepended to every tenant id; lets multiple scenarios share one
    // stream without tenant collisions.
    std::string tenant_prefix;
};

struct GroundTruthLabel {
    std::string tenant_id;
    ScenarioId scenario = ScenarioId::BenignBaseline;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;

    bool operator==(const GroundTruthLabel&) const = default;
};

struct ScenarioInfo {
    ScenarioId id;
    std::string_view name;
    std::string_view description;
    std::map<std::string, double> default_params;
};

// Exactly one entry per ScenarioId, with the documented default params.
std::vector<ScenarioInfo> scenario_catalog();

struct Workload {
    std::vector<Transaction> transactions;  // ordered by (timestamp, txn_id)
    std::vector<GroundTruthLabel> labels;   // one per misuse tenant
};

// Deterministic: equal specs (including seed) produce byte-identical
// streams and labels. Benign tenants stay strictly below every default
// indicator threshold; misuse tenants exceed the targeted indicator's
// threshold by a 2x margin by default. Throws InvalidScenarioParams.
Workload generate_workload(const ScenarioSpec& spec);

// Stable merge of (timestamp, txn_id)-ordered streams; preserves the
// transaction multiset. Throws UnorderedInput.
std::vector<Transaction> merge_streams(std::vector<std::vector<Transaction>> streams);

inline constexpr std::string_view kLabelLogHeader = "#aimon-labels v1";

std::string encode_label(const GroundTruthLabel& label);
GroundTruthLabel decode_label(std::string_view line);
void write_label_log(std::ostream& out, std::span<const GroundTruthLabel> labels);
std::vector<GroundTruthLabel> read_label_log(std::istream& in);

// Scenario config: {"scenario": name, "seed": N, "tenant_prefix": "",
// "params": {...}}.
ScenarioSpec parse_scenario_spec(std::string_view json_text, const std::string& origin);
ScenarioSpec load_scenario_file(const std::string& path);

}  // namespace aimon
