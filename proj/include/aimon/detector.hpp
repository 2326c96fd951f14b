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

#include "aimon/audit.hpp"
#include "aimon/profile.hpp"

namespace aimon {

enum class IndicatorId : std::uint8_t {
    HIGH_FACE_RATE,
    MANY_FACES_PER_INPUT,
    MANY_DISTINCT_FACES,
    TARGET_TRACKING,
    BLACKLIST_OBJECT,
    CROSS_SERVICE_COMBO,
    SELF_ANOMALY,
    PEER_ANOMALY,
    INVERSION_PROBE,
};

inline constexpr std::size_t kIndicatorCount = 9;

std::string_view indicator_name(IndicatorId id);
std::optional<IndicatorId> parse_indicator(std::string_view name);

// Anomaly-score indicators flag deviation, not a specific misuse pattern;
// they carry Info severity and are excluded from "rule indicator" counts.
bool is_anomaly_indicator(IndicatorId id);

enum class Severity : std::uint8_t { Info, Warn, Critical };

std::string_view severity_name(Severity severity);
std::optional<Severity> parse_severity(std::string_view name);

// A parameterized detection predicate. Thresholds are configuration; the
// evaluation procedure is fixed per indicator.
struct IndicatorRule {
    IndicatorId indicator = IndicatorId::HIGH_FACE_RATE;
    std::map<std::string, double> params;
    std::int64_t window_s = 60;
    std::string implication;
    Severity severity = Severity::Warn;

    bool operator==(const IndicatorRule&) const = default;
};

// One rule per specific indicator plus the anomaly and probe detectors,
// with the documented default thresholds. Size kIndicatorCount.
std::vector<IndicatorRule> default_ruleset();

// Ruleset file: {"rules": [{"indicator": ..., "window_s": ..., "severity":
// ..., "implication": ..., "params": {...}}]}. Omitted fields fall back to
// the default rule for that indicator.
std::vector<IndicatorRule> parse_ruleset(std::string_view json_text,
                                         const std::string& origin);
std::vector<IndicatorRule> load_ruleset_file(const std::string& path);

struct Alert {
    std::string alert_id;  // content hash; stable across replays
    std::vector<std::string> tenants;  // sorted; >1 only for INVERSION_PROBE
    IndicatorId indicator = IndicatorId::HIGH_FACE_RATE;
    Severity severity = Severity::Warn;
    std::int64_t window_start_ms = 0;
    std::int64_t window_end_ms = 0;
    std::map<std::string, std::string> evidence;  // statistic name -> value
    std::string implication;

    bool operator==(const Alert&) const = default;
};

inline constexpr std::string_view kAlertLogHeader = "#aimon-alerts v1";

std::string encode_alert(const Alert& alert);
Alert decode_alert(std::string_view line);
void write_alert_log(std::ostream& out, std::span<const Alert> alerts);
std::vector<Alert> read_alert_log(std::istream& in);

// Human-readable summary: per-indicator counts and one row per alert.
void print_alert_summary(std::ostream& out, std::span<const Alert> alerts);

struct AnomalyParams {
    std::size_t min_history = 24;
    std::size_t min_peers = 10;
    // Per-component denominator floor: max(fraction * |center|, min).
    double sigma_floor_fraction = 0.1;
    double sigma_floor_min = 1.0;
};

// Max over components of |current - mean| / max(std, floor). Population
// standard deviation over the history windows. Throws InsufficientHistory
// when history.size() < params.min_history.
double self_anomaly_score(std::span<const UsageProfile> history,
                          const UsageProfile& current,
                          const AnomalyParams& params = {});
// Same, also reporting the arg-max component.
double self_anomaly_score(std::span<const UsageProfile> history,
                          const UsageProfile& current, const AnomalyParams& params,
                          int& worst_component);

// Robust z-score of one tenant against the peer population: max over
// components of |x - median| / max(1.4826 * MAD, sqrt(|median|), floor).
// The sqrt term floors the denominator at the Poisson noise level of count
// components. Throws InsufficientPeers when profiles.size() <
// params.min_peers, UnknownTenant when the tenant is not in the map.
double peer_anomaly_score(const std::map<std::string, UsageProfile>& profiles,
                          const std::string& tenant,
                          const AnomalyParams& params = {});
double peer_anomaly_score(const std::map<std::string, UsageProfile>& profiles,
                          const std::string& tenant, const AnomalyParams& params,
                          int& worst_component);

// Evaluates every rule against the state as of now_ms. Pure: equal
// (state, rules, now) give equal alerts. Emits at most one alert per
// (tenant set, indicator, window); indicators whose inputs the monitoring
// level withholds are skipped. Stat windows trail now_ms; reported alert
// windows are the aligned [k*w, (k+1)*w) window containing now_ms - 1.
std::vector<Alert> evaluate_rules(const AuditState& state,
                                  std::span<const IndicatorRule> rules,
                                  std::int64_t now_ms);

// Clusters recent transactions across tenants by near-duplicate content
// fingerprint (Hamming distance <= max_hamming, transitively) per service
// kind; fires when a cluster spans >= min_accounts accounts and >=
// min_queries queries inside the rule window. Throws
// UnavailableAtMonitoringLevel at MetadataOnly.
std::vector<Alert> detect_inversion_probe(const AuditState& state,
                                          const IndicatorRule& rule,
                                          std::int64_t now_ms);

}  // namespace aimon
