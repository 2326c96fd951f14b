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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aimon/audit.hpp"
#include "aimon/detector.hpp"
#include "aimon/gateway.hpp"
#include "aimon/workload.hpp"

namespace aimon {

std::vector<std::string> default_blacklist();

// Full pipeline configuration: scenarios to simulate, gateway policy,
// detection ruleset, blacklist and monitoring level.
struct RunConfig {
    std::vector<ScenarioSpec> scenarios;
    PolicyTable policy;
    std::vector<IndicatorRule> rules;
    std::vector<std::string> blacklist;
    MonitoringLevel level = MonitoringLevel::FullContent;
    std::uint64_t seed = 0;  // redaction key; xor-ed into scenario seeds
    std::int64_t eval_interval_s = 60;
    unsigned distinct_precision = 12;
    std::size_t heavy_hitter_capacity = 1024;

    RunConfig();
};

// Config file: {"seed": N, "level": "full", "eval_interval_s": 60,
// "scenarios": [spec | {"file": path}], "policy": table | {"file": path},
// "ruleset": {"rules": [...]} | {"file": path}, "blacklist": [labels] |
// {"file": path}}. Relative paths resolve against the config directory.
RunConfig parse_run_config(std::string_view json_text, const std::string& origin,
                           const std::filesystem::path& base_dir);
RunConfig load_run_config_file(const std::filesystem::path& path);

// The indicator a scenario is scripted to trip; nullopt for the benign
// baseline.
std::optional<IndicatorId> scenario_target_indicator(ScenarioId id);

struct ScenarioOutcome {
    std::string scenario;
    std::string targeted_indicator;         // empty for benign
    std::vector<std::string> labeled;       // misuse tenants from ground truth
    std::vector<std::string> detected;      // labeled & flagged by the target
    std::vector<std::string> missed;        // labeled & not flagged
};

struct BenchMode {
    std::string mode;  // gateway | audit | detect
    std::uint64_t transactions = 0;
    double seconds = 0.0;
    double txns_per_s = 0.0;
    double ratio_vs_gateway = 1.0;  // this mode's throughput / gateway-only
};

struct RunReport {
    std::string mode;  // run | replay | bench
    MonitoringLevel level = MonitoringLevel::FullContent;
    std::uint64_t seed = 0;

    std::uint64_t transactions = 0;
    std::uint64_t admitted = 0;
    std::uint64_t denied = 0;
    std::uint64_t truncated = 0;
    std::uint64_t total_billable_units = 0;

    std::uint64_t alert_count = 0;
    std::map<std::string, std::uint64_t> alerts_by_indicator;

    std::vector<ScenarioOutcome> scenarios;
    std::uint64_t benign_rule_alert_count = 0;  // non-anomaly alerts on benign tenants
    std::vector<std::string> benign_tenants_alerted;

    std::map<std::string, std::string> digests;  // artifact name -> fnv-64 hex

    std::vector<BenchMode> bench_modes;
    std::uint64_t peak_audit_state_bytes = 0;
};

std::string report_to_json(const RunReport& report);

// In-memory pipeline results; the file artifacts are byte-for-byte the
// serialization of these vectors.
struct PipelineResult {
    std::vector<Transaction> transactions;  // final (post-gateway) stream
    std::vector<GroundTruthLabel> labels;
    std::vector<BillRecord> bills;
    std::vector<Alert> alerts;
    RunReport report;
};

// simulate -> gateway -> audit -> detect -> report. Writes txns.log,
// labels.tsv, bills.log, alerts.log, audit_state.txt and report.json into
// out_dir (creating it); pass an empty path to skip writing.
PipelineResult run_pipeline(const RunConfig& config,
                            const std::filesystem::path& out_dir);

// Re-drives audit + detection from a previously written transaction log.
// Produces the same alerts as the run that wrote the log when given the
// same config. Reads a sibling labels.tsv when present for the confusion
// section. Writes alerts.log, audit_state.txt, bills.log and report.json.
PipelineResult replay(const std::filesystem::path& log_path, const RunConfig& config,
                      const std::filesystem::path& out_dir);

// Monitoring overhead measurement: processes the same generated stream in
// gateway-only, gateway+audit and gateway+audit+detect modes and reports
// sustained throughput, ratios and peak derived-state memory. Timings vary
// run to run; transaction counts do not.
RunReport bench(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace aimon
