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

// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Every expected value comes from an exact oracle computed
// here, independent of the implementation path it checks.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "aimon/audit.hpp"
#include "aimon/detector.hpp"
#include "aimon/errors.hpp"
#include "aimon/gateway.hpp"
#include "aimon/pipeline.hpp"
#include "aimon/rng.hpp"
#include "aimon/sketch.hpp"
#include "aimon/workload.hpp"

using namespace aimon;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  %2d. %s: %s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

RunConfig scenario_config(ScenarioId id, std::uint64_t seed) {
    RunConfig config;
    config.seed = seed;
    ScenarioSpec spec;
    spec.scenario = id;
    config.scenarios.push_back(std::move(spec));
    return config;
}

// --- criteria 1 & 2: indicator recall and benign specificity --------------

void criteria_recall_and_specificity() {
    const ScenarioId scenarios[] = {
        ScenarioId::SurveillanceRate, ScenarioId::CrowdAnalysis,
        ScenarioId::DistinctFacesOverTime, ScenarioId::TargetTracking,
        ScenarioId::BlacklistScreening,
    };
    std::uint64_t labeled = 0;
    std::uint64_t detected = 0;
    std::uint64_t benign_rule_alerts = 0;
    std::string first_miss;
    for (ScenarioId id : scenarios) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const RunConfig config = scenario_config(id, 1000 + seed);
            const PipelineResult result = run_pipeline(config, {});
            for (const auto& outcome : result.report.scenarios) {
                labeled += outcome.labeled.size();
                detected += outcome.detected.size();
                if (!outcome.missed.empty() && first_miss.empty())
                    first_miss = outcome.scenario + "/" + outcome.missed.front() +
                                 " seed " + std::to_string(1000 + seed);
            }
            benign_rule_alerts += result.report.benign_rule_alert_count;
        }
    }
    report(1, "indicator recall on labeled tenants", labeled > 0 && detected == labeled,
           std::to_string(detected) + "/" + std::to_string(labeled) +
               " labeled tenants flagged by the targeted indicator across 100 runs" +
               (first_miss.empty() ? "" : "; first miss: " + first_miss));
    report(2, "benign specificity", benign_rule_alerts == 0,
           std::to_string(benign_rule_alerts) +
               " rule-indicator alerts on benign tenants (want 0)");
}

// --- criterion 3: sketch accuracy ------------------------------------------

void criterion_sketch_accuracy() {
    Rng rng(314159);
    const int trials = 100;
    int within = 0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t n = 10'000 + rng.next_u64() % 90'001;
        DistinctSketch sketch(12);
        for (std::uint64_t i = 0; i < n; ++i)
            sketch.insert("t" + std::to_string(t) + "-" + std::to_string(i));
        const double relative =
            std::abs(sketch.estimate().value - static_cast<double>(n)) /
            static_cast<double>(n);
        if (relative <= 0.049) ++within;
    }

    bool small_exact = true;
    for (std::uint64_t n : {1ULL, 17ULL, 128ULL, 256ULL}) {
        DistinctSketch sketch(12);
        for (std::uint64_t i = 0; i < n * 3; ++i)
            sketch.insert("s-" + std::to_string(i % n));
        const auto estimate = sketch.estimate();
        small_exact = small_exact && estimate.value == static_cast<double>(n) &&
                      estimate.relative_error == 0.0;
    }

    report(3, "distinct sketch accuracy at p=12", within >= 95 && small_exact,
           std::to_string(within) + "/100 trials within 4.9% of the exact oracle; " +
               std::string(small_exact ? "small sets exact" : "small sets NOT exact"));
}

// --- criterion 4: heavy-hitter guarantee -----------------------------------

void criterion_heavy_hitters() {
    Rng rng(271828);
    const std::uint64_t n = 100'000;
    const std::size_t k = 1024;

    // Zipf-ish identification stream over 20k targets.
    std::vector<double> cumulative(20'000);
    double total = 0.0;
    for (std::size_t i = 0; i < cumulative.size(); ++i) {
        total += 1.0 / std::pow(static_cast<double>(i + 1), 1.2);
        cumulative[i] = total;
    }
    for (double& c : cumulative) c /= total;

    HeavyHitterSketch sketch(k);
    std::unordered_map<std::string, std::uint64_t> oracle;
    for (std::uint64_t i = 0; i < n; ++i) {
        const double u = rng.next_double();
        const std::size_t idx = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) -
            cumulative.begin());
        std::string item = "target-" + std::to_string(idx);
        ++oracle[item];
        sketch.insert(item);
    }

    bool recall_ok = true;
    bool bound_ok = true;
    int qualifying_total = 0;
    for (double phi : {0.1, 0.01}) {
        std::set<std::string> reported;
        for (const auto& entry : sketch.heavy_hitters(phi)) {
            reported.insert(entry.item);
            const auto it = oracle.find(entry.item);
            const std::uint64_t truth = it == oracle.end() ? 0 : it->second;
            if (entry.count < truth || entry.count - truth > n / k) bound_ok = false;
        }
        for (const auto& [item, truth] : oracle) {
            if (static_cast<double>(truth) >= phi * static_cast<double>(n)) {
                ++qualifying_total;
                if (!reported.contains(item)) recall_ok = false;
            }
        }
    }
    report(4, "heavy-hitter recall and overestimation bound",
           recall_ok && bound_ok && qualifying_total > 0,
           std::string(recall_ok ? "recall 1.0" : "missed a frequent target") +
               " over phi in {0.1, 0.01} (" + std::to_string(qualifying_total) +
               " qualifying targets); overestimate " +
               (bound_ok ? "<= N/k" : "EXCEEDS N/k"));
}

// --- criterion 5: billing conservation --------------------------------------

void criterion_billing() {
    bool ok = true;
    std::uint64_t checked = 0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Rng rng(seed);
        MeterState meter;
        LimitPolicy policy;
        policy.rate_limit_per_min = 50;
        policy.max_faces_per_image = 10;

        std::uint64_t billed = 0;
        std::uint64_t admitted_features = 0;
        std::int64_t ts = 0;
        for (int i = 0; i < 20'000; ++i) {
            ts += static_cast<std::int64_t>(rng.next_u64() % 1500);
            Transaction txn;
            txn.meta.txn_id = "x" + std::to_string(i);
            txn.meta.tenant_id = "t" + std::to_string(rng.next_u64() % 7);
            txn.meta.timestamp_ms = ts;
            txn.meta.client_ip = "10.0.0.1";
            txn.request.service.kind =
                rng.next_bernoulli(0.7) ? ServiceKind::FaceDetect : ServiceKind::LabelDetect;
            txn.request.features_requested =
                static_cast<std::uint32_t>(rng.next_range(1, 5));
            txn.request.input_id = txn.meta.txn_id;
            const std::uint64_t faces = rng.next_u64() % 14;
            for (std::uint64_t f = 0; f < faces; ++f)
                txn.response.detected_face_ids.push_back("f" + std::to_string(f));
            const auto [decision, final_txn] = meter.admit(txn, policy);
            billed += MeterState::bill(final_txn).billable_units;
            if (decision.kind != AdmitDecision::Kind::Deny)
                admitted_features += txn.request.features_requested;
            ++checked;
        }
        ok = ok && billed == admitted_features && billed > 0;
    }
    report(5, "billing conservation (sum billed = sum features over admitted)", ok,
           "exact equality over " + std::to_string(checked) + " randomized transactions");
}

// --- criterion 6: enforcement ------------------------------------------------

void criterion_enforcement() {
    Rng rng(55);
    MeterState meter;
    LimitPolicy policy;
    policy.rate_limit_per_min = 100;

    std::map<std::string, std::vector<std::int64_t>> admits;
    std::int64_t ts = 0;
    for (int i = 0; i < 30'000; ++i) {
        ts += static_cast<std::int64_t>(rng.next_u64() % (i % 11 == 0 ? 15'000 : 120));
        Transaction txn;
        txn.meta.txn_id = "e" + std::to_string(i);
        txn.meta.tenant_id = "t" + std::to_string(rng.next_u64() % 4);
        txn.meta.timestamp_ms = ts;
        txn.meta.client_ip = "10.0.0.2";
        txn.request.service.kind = ServiceKind::FaceDetect;
        txn.request.features_requested = 1;
        txn.request.input_id = txn.meta.txn_id;
        const auto [decision, final_txn] = meter.admit(txn, policy);
        if (decision.kind != AdmitDecision::Kind::Deny)
            admits[txn.meta.tenant_id].push_back(ts);
    }
    bool rate_ok = true;
    for (const auto& [tenant, times] : admits) {
        for (std::size_t i = 0; i < times.size() && rate_ok; ++i) {
            std::size_t in_window = 0;
            for (std::size_t j = 0; j <= i; ++j)
                if (times[j] > times[i] - 60'000) ++in_window;
            if (in_window > 100) rate_ok = false;
        }
    }

    MeterState cap_meter;
    LimitPolicy default_policy;  // cap 100, truncate
    Transaction big;
    big.meta.txn_id = "big";
    big.meta.tenant_id = "crowd";
    big.meta.timestamp_ms = 0;
    big.meta.client_ip = "10.0.0.3";
    big.request.service.kind = ServiceKind::FaceDetect;
    big.request.features_requested = 1;
    big.request.input_id = "big-in";
    for (int i = 0; i < 150; ++i)
        big.response.detected_face_ids.push_back("f" + std::to_string(i));
    const auto [decision, final_txn] = cap_meter.admit(big, default_policy);
    const bool cap_ok = decision.kind == AdmitDecision::Kind::Truncate &&
                        final_txn.response.detected_face_ids.size() == 100 &&
                        final_txn.response.status == ResponseStatus::truncated(100);

    report(6, "gateway enforcement (sliding rate limit, 100-face truncation)",
           rate_ok && cap_ok,
           std::string(rate_ok ? "window scan <= limit for every 60 s interval"
                               : "rate limit VIOLATED") +
               "; " + (cap_ok ? "150-face response truncated to exactly 100" : "cap FAILED"));
}

// --- criterion 7: anomaly detection ------------------------------------------

void criterion_anomaly() {
    ScenarioSpec spec;
    spec.scenario = ScenarioId::BehaviorDrift;
    spec.seed = 4242;
    const Workload workload = generate_workload(spec);

    AuditState state;
    for (const auto& txn : workload.transactions) state.ingest(txn);
    const std::int64_t end =
        (workload.transactions.back().meta.timestamp_ms / 3'600'000 + 1) * 3'600'000;
    state.close_windows_until(end);

    const auto profiles = state.profile_snapshot("m001");
    const AnomalyParams params;
    bool prior_ok = true;
    double worst_prior = 0.0;
    double drift_score = 0.0;
    const std::size_t drift_window = 48;
    for (std::size_t w = params.min_history; w < profiles.size() && w <= drift_window; ++w) {
        const std::span<const UsageProfile> history(profiles.data(), w);
        const double score = self_anomaly_score(history, profiles[w], params);
        if (w < drift_window) {
            worst_prior = std::max(worst_prior, score);
            if (score > 3.0) prior_ok = false;
        } else {
            drift_score = score;
        }
    }
    const bool self_ok = prior_ok && drift_score > 3.0;

    // Peer comparison over the final closed window.
    std::map<std::string, UsageProfile> peers;
    for (const auto& tenant : state.tenants()) {
        const auto tenant_profiles = state.profile_snapshot(tenant);
        if (!tenant_profiles.empty()) peers.emplace(tenant, tenant_profiles.back());
    }
    bool peer_ok = peers.size() == 21;
    std::string flagged;
    for (const auto& [tenant, profile] : peers) {
        const double score = peer_anomaly_score(peers, tenant, params);
        if (score > 3.0) {
            if (!flagged.empty()) peer_ok = false;
            flagged = tenant;
        }
    }
    peer_ok = peer_ok && flagged == "m001";

    report(7, "anomaly detection (self drift + peer outlier)", self_ok && peer_ok,
           "drift-window score " + format_double(drift_score) + " > 3, max prior " +
               format_double(worst_prior) + " <= 3; peer outlier flagged: " +
               (flagged.empty() ? "(none)" : flagged));
}

// --- criterion 8: inversion probe --------------------------------------------

void criterion_inversion_probe() {
    const RunConfig config = scenario_config(ScenarioId::InversionProbe, 77);
    const PipelineResult result = run_pipeline(config, {});

    std::vector<const Alert*> probe_alerts;
    for (const auto& alert : result.alerts)
        if (alert.indicator == IndicatorId::INVERSION_PROBE) probe_alerts.push_back(&alert);

    std::set<std::string> expected_accounts;
    for (const auto& label : result.labels) expected_accounts.insert(label.tenant_id);

    bool alert_ok = probe_alerts.size() == 1 && expected_accounts.size() == 8;
    if (alert_ok) {
        const std::set<std::string> named(probe_alerts[0]->tenants.begin(),
                                          probe_alerts[0]->tenants.end());
        alert_ok = named == expected_accounts &&
                   probe_alerts[0]->severity == Severity::Critical;
    }

    // Exact pairwise-Hamming clustering oracle over the emitted stream.
    struct Event {
        std::string tenant;
        std::uint64_t fp;
    };
    std::vector<Event> events;
    for (const auto& txn : result.transactions)
        if (txn.request.service.kind == ServiceKind::FaceIdentify)
            events.push_back({txn.meta.tenant_id, txn.request.content_fingerprint});
    std::vector<std::uint64_t> fps;
    for (const auto& event : events) fps.push_back(event.fp);
    std::sort(fps.begin(), fps.end());
    fps.erase(std::unique(fps.begin(), fps.end()), fps.end());
    std::vector<std::size_t> parent(fps.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (std::size_t i = 0; i < fps.size(); ++i)
        for (std::size_t j = i + 1; j < fps.size(); ++j)
            if (std::popcount(fps[i] ^ fps[j]) <= 4) parent[find(i)] = find(j);
    std::map<std::size_t, std::pair<std::set<std::string>, std::uint64_t>> clusters;
    for (const auto& event : events) {
        const std::size_t idx = static_cast<std::size_t>(
            std::lower_bound(fps.begin(), fps.end(), event.fp) - fps.begin());
        auto& [accounts, queries] = clusters[find(idx)];
        accounts.insert(event.tenant);
        ++queries;
    }
    std::set<std::string> oracle_accounts;
    int qualifying = 0;
    for (const auto& [root, cluster] : clusters) {
        if (cluster.first.size() >= 5 && cluster.second >= 1000) {
            ++qualifying;
            oracle_accounts = cluster.first;
        }
    }
    const bool oracle_ok = qualifying == 1 && oracle_accounts == expected_accounts;

    // Benign control run.
    const PipelineResult benign =
        run_pipeline(scenario_config(ScenarioId::BenignBaseline, 78), {});
    bool benign_ok = true;
    for (const auto& alert : benign.alerts)
        if (alert.indicator == IndicatorId::INVERSION_PROBE) benign_ok = false;

    report(8, "inversion-probe clustering", alert_ok && oracle_ok && benign_ok,
           std::string(alert_ok ? "one critical alert naming all 8 accounts"
                                : "alert shape WRONG") +
               "; " + (oracle_ok ? "matches the exact Hamming-clustering oracle"
                                 : "oracle DISAGREES") +
               "; benign inversion alerts: " + (benign_ok ? "0" : ">0"));
}

// --- criterion 9: determinism & replay ----------------------------------------

void criterion_determinism() {
    RunConfig config;
    config.seed = 2026;
    for (ScenarioId id : {ScenarioId::SurveillanceRate, ScenarioId::CrowdAnalysis}) {
        ScenarioSpec spec;
        spec.scenario = id;
        spec.params["tenant_count"] = 25;
        config.scenarios.push_back(std::move(spec));
    }

    const fs::path base = fs::temp_directory_path() / "aimon-acceptance";
    fs::remove_all(base);
    const fs::path dir1 = base / "run1";
    const fs::path dir2 = base / "run2";
    const fs::path dir3 = base / "replay";
    (void)run_pipeline(config, dir1);
    (void)run_pipeline(config, dir2);
    (void)replay(dir1 / "txns.log", config, dir3);

    auto slurp = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };
    bool identical = true;
    for (const std::string name :
         {"txns.log", "labels.tsv", "bills.log", "alerts.log", "audit_state.txt",
          "report.json"}) {
        if (slurp(dir1 / name) != slurp(dir2 / name)) identical = false;
    }
    const bool replay_ok = slurp(dir1 / "alerts.log") == slurp(dir3 / "alerts.log");
    fs::remove_all(base);

    report(9, "determinism and replay equality", identical && replay_ok,
           std::string(identical ? "repeat runs byte-identical"
                                 : "repeat runs DIFFER") +
               "; replayed alerts " + (replay_ok ? "equal" : "DIFFER"));
}

// --- criterion 10: overhead report ---------------------------------------------

void criterion_overhead() {
    RunConfig config;
    config.seed = 1;
    ScenarioSpec spec;
    spec.scenario = ScenarioId::BenignBaseline;
    spec.params["tenant_count"] = 50;
    spec.params["base_rate_per_min"] = 40;
    spec.params["duration_s"] = 1800;
    config.scenarios.push_back(std::move(spec));

    const RunReport report_data = bench(config, {});
    bool shape_ok = report_data.bench_modes.size() == 3;
    double gateway_tps = 0.0;
    double detect_tps = 0.0;
    for (const auto& mode : report_data.bench_modes) {
        shape_ok = shape_ok && mode.transactions == report_data.transactions &&
                   mode.txns_per_s > 0.0 && mode.ratio_vs_gateway > 0.0;
        if (mode.mode == "gateway") gateway_tps = mode.txns_per_s;
        if (mode.mode == "detect") detect_tps = mode.txns_per_s;
    }
    const bool order_ok = gateway_tps >= detect_tps;
    std::ostringstream detail;
    detail << report_data.transactions << " txns; gateway "
           << static_cast<std::uint64_t>(gateway_tps) << " txn/s >= full pipeline "
           << static_cast<std::uint64_t>(detect_tps) << " txn/s; peak audit state "
           << report_data.peak_audit_state_bytes << " bytes";
    report(10, "monitoring overhead measurement", shape_ok && order_ok, detail.str());
}

}  // namespace

int main() {
    std::printf("aimon acceptance suite\n");
    criteria_recall_and_specificity();
    criterion_sketch_accuracy();
    criterion_heavy_hitters();
    criterion_billing();
    criterion_enforcement();
    criterion_anomaly();
    criterion_inversion_probe();
    criterion_determinism();
    criterion_overhead();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
