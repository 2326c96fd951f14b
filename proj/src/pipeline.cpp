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

#include "aimon/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aimon/errors.hpp"
#include "aimon/hash.hpp"

namespace aimon {

namespace fs = std::filesystem;

std::vector<std::string> default_blacklist() {
    return {"placard", "weapon", "violence"};
}

RunConfig::RunConfig() : rules(default_ruleset()), blacklist(default_blacklist()) {}

std::optional<IndicatorId> scenario_target_indicator(ScenarioId id) {
    switch (id) {
        case ScenarioId::BenignBaseline: return std::nullopt;
        case ScenarioId::SurveillanceRate: return IndicatorId::HIGH_FACE_RATE;
        case ScenarioId::CrowdAnalysis: return IndicatorId::MANY_FACES_PER_INPUT;
        case ScenarioId::DistinctFacesOverTime: return IndicatorId::MANY_DISTINCT_FACES;
        case ScenarioId::TargetTracking: return IndicatorId::TARGET_TRACKING;
        case ScenarioId::BlacklistScreening: return IndicatorId::BLACKLIST_OBJECT;
        case ScenarioId::BehaviorDrift: return IndicatorId::SELF_ANOMALY;
        case ScenarioId::InversionProbe: return IndicatorId::INVERSION_PROBE;
    }
    return std::nullopt;
}

// --------------------------------------------------------------------------
// Config file
// --------------------------------------------------------------------------

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path resolve(const fs::path& base_dir, const std::string& ref) {
    fs::path p(ref);
    return p.is_absolute() ? p : base_dir / p;
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, const std::string& origin,
                           const fs::path& base_dir) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
    RunConfig config;
    try {
        if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("level")) {
            const auto level = parse_monitoring_level(doc["level"].get<std::string>());
            if (!level) throw ConfigError(origin, "level must be metadata|derived|full");
            config.level = *level;
        }
        if (doc.contains("eval_interval_s")) {
            config.eval_interval_s = doc["eval_interval_s"].get<std::int64_t>();
            if (config.eval_interval_s <= 0)
                throw ConfigError(origin, "eval_interval_s must be positive");
        }
        if (doc.contains("distinct_precision"))
            config.distinct_precision = doc["distinct_precision"].get<unsigned>();
        if (doc.contains("heavy_hitter_capacity"))
            config.heavy_hitter_capacity = doc["heavy_hitter_capacity"].get<std::size_t>();
        if (doc.contains("scenarios")) {
            for (const auto& node : doc["scenarios"]) {
                if (node.contains("file")) {
                    config.scenarios.push_back(load_scenario_file(
                        resolve(base_dir, node["file"].get<std::string>()).string()));
                } else {
                    config.scenarios.push_back(parse_scenario_spec(node.dump(), origin));
                }
            }
        }
        if (doc.contains("policy")) {
            if (doc["policy"].contains("file")) {
                config.policy = load_policy_file(
                    resolve(base_dir, doc["policy"]["file"].get<std::string>()).string());
            } else {
                config.policy = parse_policy(doc["policy"].dump(), origin);
            }
        }
        if (doc.contains("ruleset")) {
            if (doc["ruleset"].contains("file")) {
                config.rules = load_ruleset_file(
                    resolve(base_dir, doc["ruleset"]["file"].get<std::string>()).string());
            } else {
                config.rules = parse_ruleset(doc["ruleset"].dump(), origin);
            }
        }
        if (doc.contains("blacklist")) {
            if (doc["blacklist"].is_array()) {
                config.blacklist.clear();
                for (const auto& label : doc["blacklist"])
                    config.blacklist.push_back(fold_label(label.get<std::string>()));
            } else if (doc["blacklist"].contains("file")) {
                config.blacklist = load_blacklist_file(
                    resolve(base_dir, doc["blacklist"]["file"].get<std::string>()).string());
            } else {
                throw ConfigError(origin, "blacklist must be an array or {\"file\": ...}");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
    return config;
}

RunConfig load_run_config_file(const fs::path& path) {
    return parse_run_config(slurp(path), path.string(), path.parent_path());
}

// --------------------------------------------------------------------------
// Detection engine shared by run / replay / bench
// --------------------------------------------------------------------------

namespace {

struct DetectionOutput {
    std::vector<Alert> alerts;
    std::uint64_t peak_state_bytes = 0;
};

AuditConfig audit_config_for(const RunConfig& config) {
    AuditConfig audit;
    audit.level = config.level;
    audit.distinct_precision = config.distinct_precision;
    audit.heavy_hitter_capacity = config.heavy_hitter_capacity;
    audit.blacklist = config.blacklist;
    return audit;
}

// Feeds admitted transactions through redaction into the audit state,
// closing profile windows and (optionally) evaluating rules at every
// eval_interval boundary, including one final boundary past the stream end.
// The cross-tenant probe clustering is the one expensive rule; it runs at
// its own window boundaries and at the final boundary instead of every tick.
DetectionOutput drive_detection(std::span<const Transaction> txns,
                                const RunConfig& config, AuditState& state,
                                bool evaluate, bool track_memory) {
    DetectionOutput out;
    Redactor redactor(config.seed);
    const std::int64_t interval_ms = config.eval_interval_s * 1000;
    std::set<std::string> dedup;

    std::vector<IndicatorRule> tick_rules;
    std::vector<IndicatorRule> probe_rules;
    for (const auto& rule : config.rules) {
        (rule.indicator == IndicatorId::INVERSION_PROBE ? probe_rules : tick_rules)
            .push_back(rule);
    }

    auto emit = [&](std::vector<Alert> alerts) {
        for (auto& alert : alerts) {
            std::string key = std::string(indicator_name(alert.indicator));
            key += '|';
            key += std::to_string(alert.window_start_ms);
            for (const auto& tenant : alert.tenants) {
                key += '|';
                key += tenant;
            }
            if (dedup.insert(std::move(key)).second) out.alerts.push_back(std::move(alert));
        }
    };

    auto boundary = [&](std::int64_t b, bool final_boundary) {
        state.close_windows_until(b);
        if (track_memory)
            out.peak_state_bytes = std::max<std::uint64_t>(out.peak_state_bytes,
                                                           state.memory_bytes());
        if (!evaluate) return;
        emit(evaluate_rules(state, tick_rules, b));
        for (const auto& rule : probe_rules) {
            if (final_boundary || b % (rule.window_s * 1000) == 0)
                emit(evaluate_rules(state, std::span(&rule, 1), b));
        }
    };

    bool any = false;
    std::int64_t next_boundary = interval_ms;
    std::int64_t last_ts = 0;
    for (const auto& txn : txns) {
        while (next_boundary <= txn.meta.timestamp_ms) {
            boundary(next_boundary, false);
            next_boundary += interval_ms;
        }
        if (txn.response.status.code != ResponseStatus::Code::Denied) {
            state.ingest(redactor.apply(txn, config.level));
        }
        last_ts = txn.meta.timestamp_ms;
        any = true;
    }
    if (any) {
        while (next_boundary <= last_ts) {
            boundary(next_boundary, false);
            next_boundary += interval_ms;
        }
        boundary(next_boundary, true);  // final boundary past the stream end
    }
    if (track_memory)
        out.peak_state_bytes =
            std::max<std::uint64_t>(out.peak_state_bytes, state.memory_bytes());
    return out;
}

struct GatewayOutput {
    std::vector<Transaction> finals;
    std::vector<BillRecord> bills;
    std::uint64_t admitted = 0;
    std::uint64_t denied = 0;
    std::uint64_t truncated = 0;
};

GatewayOutput run_gateway(std::span<const Transaction> txns, const PolicyTable& policy) {
    GatewayOutput out;
    out.finals.reserve(txns.size());
    out.bills.reserve(txns.size());
    MeterState meter;
    for (const auto& txn : txns) {
        auto [decision, final_txn] = meter.admit(txn, policy.for_tenant(txn.meta.tenant_id));
        switch (decision.kind) {
            case AdmitDecision::Kind::Admit: ++out.admitted; break;
            case AdmitDecision::Kind::Deny: ++out.denied; break;
            case AdmitDecision::Kind::Truncate:
                ++out.admitted;
                ++out.truncated;
                break;
        }
        out.bills.push_back(MeterState::bill(final_txn));
        out.finals.push_back(std::move(final_txn));
    }
    return out;
}

std::string digest_hex(std::string_view bytes) {
    Fnv64 fnv;
    fnv.update(bytes);
    std::uint64_t h = fnv.value();
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xF];
        h >>= 4;
    }
    return out;
}

void write_artifact(const fs::path& out_dir, const std::string& name,
                    const std::string& bytes, RunReport& report) {
    report.digests[name] = digest_hex(bytes);
    if (out_dir.empty()) return;
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw ConfigError((out_dir / name).string(), "cannot write artifact");
    out << bytes;
}

bool windows_overlap(std::int64_t a_start, std::int64_t a_end, std::int64_t b_start,
                     std::int64_t b_end) {
    return a_start < b_end && a_end > b_start;
}

// Joins alerts against ground-truth labels and counts rule-indicator alerts
// that touched unlabeled (benign) tenants.
void fill_confusion(RunReport& report, std::span<const GroundTruthLabel> labels,
                    std::span<const Alert> alerts) {
    std::set<std::string> labeled_tenants;
    for (const auto& label : labels) labeled_tenants.insert(label.tenant_id);

    std::map<ScenarioId, std::vector<const GroundTruthLabel*>> by_scenario;
    for (const auto& label : labels) by_scenario[label.scenario].push_back(&label);

    for (const auto& [scenario, scenario_labels] : by_scenario) {
        ScenarioOutcome outcome;
        outcome.scenario = scenario_name(scenario);
        const auto target = scenario_target_indicator(scenario);
        if (target) outcome.targeted_indicator = indicator_name(*target);
        for (const auto* label : scenario_labels) {
            outcome.labeled.push_back(label->tenant_id);
            bool detected = false;
            if (target) {
                for (const auto& alert : alerts) {
                    if (alert.indicator != *target) continue;
                    if (!windows_overlap(alert.window_start_ms, alert.window_end_ms,
                                         label->start_ms, label->end_ms))
                        continue;
                    if (std::find(alert.tenants.begin(), alert.tenants.end(),
                                  label->tenant_id) != alert.tenants.end()) {
                        detected = true;
                        break;
                    }
                }
            }
            (detected ? outcome.detected : outcome.missed).push_back(label->tenant_id);
        }
        report.scenarios.push_back(std::move(outcome));
    }

    std::set<std::string> benign_alerted;
    for (const auto& alert : alerts) {
        if (is_anomaly_indicator(alert.indicator)) continue;
        for (const auto& tenant : alert.tenants) {
            if (!labeled_tenants.contains(tenant)) {
                ++report.benign_rule_alert_count;
                benign_alerted.insert(tenant);
            }
        }
    }
    report.benign_tenants_alerted.assign(benign_alerted.begin(), benign_alerted.end());
}

void count_alerts(RunReport& report, std::span<const Alert> alerts) {
    report.alert_count = alerts.size();
    for (const auto& alert : alerts)
        report.alerts_by_indicator[std::string(indicator_name(alert.indicator))]++;
}

template <typename WriteFn>
std::string serialize(WriteFn&& write) {
    std::ostringstream out;
    write(out);
    return std::move(out).str();
}

}  // namespace

// --------------------------------------------------------------------------
// run / replay / bench
// --------------------------------------------------------------------------

PipelineResult run_pipeline(const RunConfig& config, const fs::path& out_dir) {
    if (!out_dir.empty()) fs::create_directories(out_dir);

    // Simulate. Multiple scenarios get distinct tenant namespaces.
    std::vector<std::vector<Transaction>> streams;
    PipelineResult result;
    for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
        ScenarioSpec spec = config.scenarios[i];
        if (config.scenarios.size() > 1 && spec.tenant_prefix.empty())
            spec.tenant_prefix = "s" + std::to_string(i + 1) + "-";
        spec.seed ^= config.seed;
        Workload workload = generate_workload(spec);
        streams.push_back(std::move(workload.transactions));
        result.labels.insert(result.labels.end(), workload.labels.begin(),
                             workload.labels.end());
    }
    std::vector<Transaction> raw = merge_streams(std::move(streams));

    // Gateway.
    GatewayOutput gateway = run_gateway(raw, config.policy);
    result.transactions = std::move(gateway.finals);
    result.bills = std::move(gateway.bills);

    // Audit + detect.
    AuditState state(audit_config_for(config));
    DetectionOutput detection =
        drive_detection(result.transactions, config, state, true, false);
    result.alerts = std::move(detection.alerts);

    RunReport& report = result.report;
    report.mode = "run";
    report.level = config.level;
    report.seed = config.seed;
    report.transactions = result.transactions.size();
    report.admitted = gateway.admitted;
    report.denied = gateway.denied;
    report.truncated = gateway.truncated;
    for (const auto& bill : result.bills) report.total_billable_units += bill.billable_units;
    count_alerts(report, result.alerts);
    fill_confusion(report, result.labels, result.alerts);

    write_artifact(out_dir, "txns.log",
                   serialize([&](std::ostream& o) { write_txn_log(o, result.transactions); }),
                   report);
    write_artifact(out_dir, "labels.tsv",
                   serialize([&](std::ostream& o) { write_label_log(o, result.labels); }),
                   report);
    write_artifact(out_dir, "bills.log",
                   serialize([&](std::ostream& o) { write_bill_log(o, result.bills); }),
                   report);
    write_artifact(out_dir, "alerts.log",
                   serialize([&](std::ostream& o) { write_alert_log(o, result.alerts); }),
                   report);
    write_artifact(out_dir, "audit_state.txt",
                   serialize([&](std::ostream& o) { state.dump(o); }), report);
    write_artifact(out_dir, "report.json", report_to_json(report), report);
    return result;
}

PipelineResult replay(const fs::path& log_path, const RunConfig& config,
                      const fs::path& out_dir) {
    if (!out_dir.empty()) fs::create_directories(out_dir);

    PipelineResult result;
    {
        std::ifstream in(log_path, std::ios::binary);
        if (!in) throw ConfigError(log_path.string(), "cannot open transaction log");
        result.transactions = read_txn_log(in);
    }
    const fs::path labels_path = log_path.parent_path() / "labels.tsv";
    if (fs::exists(labels_path)) {
        std::ifstream in(labels_path, std::ios::binary);
        result.labels = read_label_log(in);
    }

    RunReport& report = result.report;
    report.mode = "replay";
    report.level = config.level;
    report.seed = config.seed;
    report.transactions = result.transactions.size();
    for (const auto& txn : result.transactions) {
        switch (txn.response.status.code) {
            case ResponseStatus::Code::Denied: ++report.denied; break;
            case ResponseStatus::Code::Truncated:
                ++report.truncated;
                ++report.admitted;
                break;
            case ResponseStatus::Code::Ok: ++report.admitted; break;
        }
        result.bills.push_back(MeterState::bill(txn));
    }
    for (const auto& bill : result.bills) report.total_billable_units += bill.billable_units;

    AuditState state(audit_config_for(config));
    DetectionOutput detection =
        drive_detection(result.transactions, config, state, true, false);
    result.alerts = std::move(detection.alerts);
    count_alerts(report, result.alerts);
    fill_confusion(report, result.labels, result.alerts);

    write_artifact(out_dir, "bills.log",
                   serialize([&](std::ostream& o) { write_bill_log(o, result.bills); }),
                   report);
    write_artifact(out_dir, "alerts.log",
                   serialize([&](std::ostream& o) { write_alert_log(o, result.alerts); }),
                   report);
    write_artifact(out_dir, "audit_state.txt",
                   serialize([&](std::ostream& o) { state.dump(o); }), report);
    write_artifact(out_dir, "report.json", report_to_json(report), report);
    return result;
}

RunReport bench(const RunConfig& config, const fs::path& out_dir) {
    if (!out_dir.empty()) fs::create_directories(out_dir);

    std::vector<std::vector<Transaction>> streams;
    for (std::size_t i = 0; i < config.scenarios.size(); ++i) {
        ScenarioSpec spec = config.scenarios[i];
        if (config.scenarios.size() > 1 && spec.tenant_prefix.empty())
            spec.tenant_prefix = "s" + std::to_string(i + 1) + "-";
        spec.seed ^= config.seed;
        streams.push_back(generate_workload(spec).transactions);
    }
    const std::vector<Transaction> raw = merge_streams(std::move(streams));

    RunReport report;
    report.mode = "bench";
    report.level = config.level;
    report.seed = config.seed;
    report.transactions = raw.size();

    using clock = std::chrono::steady_clock;
    const auto timed = [&](auto&& body) {
        const auto start = clock::now();
        body();
        return std::chrono::duration<double>(clock::now() - start).count();
    };

    double gateway_tps = 0.0;
    for (const std::string_view mode : {"gateway", "audit", "detect"}) {
        GatewayOutput gateway;
        double seconds = 0.0;
        if (mode == "gateway") {
            seconds = timed([&] { gateway = run_gateway(raw, config.policy); });
        } else {
            AuditState state(audit_config_for(config));
            const bool evaluate = mode == "detect";
            DetectionOutput detection;
            seconds = timed([&] {
                gateway = run_gateway(raw, config.policy);
                detection =
                    drive_detection(gateway.finals, config, state, evaluate, true);
            });
            report.peak_audit_state_bytes =
                std::max(report.peak_audit_state_bytes,
                         static_cast<std::uint64_t>(detection.peak_state_bytes));
        }
        BenchMode result;
        result.mode = mode;
        result.transactions = raw.size();
        result.seconds = seconds;
        result.txns_per_s =
            seconds > 0.0 ? static_cast<double>(raw.size()) / seconds : 0.0;
        if (mode == "gateway") gateway_tps = result.txns_per_s;
        result.ratio_vs_gateway =
            gateway_tps > 0.0 ? result.txns_per_s / gateway_tps : 1.0;
        report.bench_modes.push_back(std::move(result));
    }

    write_artifact(out_dir, "report.json", report_to_json(report), report);
    return report;
}

// --------------------------------------------------------------------------
// Report serialization
// --------------------------------------------------------------------------

std::string report_to_json(const RunReport& report) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["mode"] = report.mode;
    doc["level"] = monitoring_level_name(report.level);
    doc["seed"] = report.seed;
    doc["counts"] = {
        {"transactions", report.transactions},
        {"admitted", report.admitted},
        {"denied", report.denied},
        {"truncated", report.truncated},
    };
    doc["billing"] = {{"total_units", report.total_billable_units}};
    doc["alerts"] = {{"total", report.alert_count}};
    for (const auto& [indicator, count] : report.alerts_by_indicator)
        doc["alerts"]["by_indicator"][indicator] = count;
    for (const auto& outcome : report.scenarios) {
        nlohmann::json node = {
            {"scenario", outcome.scenario},
            {"targeted_indicator", outcome.targeted_indicator},
            {"labeled", outcome.labeled},
            {"detected", outcome.detected},
            {"missed", outcome.missed},
        };
        doc["scenarios"].push_back(std::move(node));
    }
    doc["benign"] = {
        {"rule_alert_count", report.benign_rule_alert_count},
        {"tenants_alerted", report.benign_tenants_alerted},
    };
    for (const auto& [name, digest] : report.digests) {
        if (name != "report.json") doc["digests"][name] = digest;
    }
    if (!report.bench_modes.empty()) {
        for (const auto& mode : report.bench_modes) {
            doc["bench"]["modes"].push_back({
                {"mode", mode.mode},
                {"transactions", mode.transactions},
                {"seconds", mode.seconds},
                {"txns_per_s", mode.txns_per_s},
                {"ratio_vs_gateway", mode.ratio_vs_gateway},
            });
        }
        doc["bench"]["peak_audit_state_bytes"] = report.peak_audit_state_bytes;
    }
    return doc.dump(2) + "\n";
}

}  // namespace aimon
