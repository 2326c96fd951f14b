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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "aimon/detector.hpp"
#include "aimon/errors.hpp"
#include "helpers.hpp"

using namespace aimon;

namespace {

Transaction txn_at(const std::string& tenant, std::int64_t ts, ServiceKind kind) {
    static int seq = 0;
    Transaction txn;
    txn.meta.txn_id = tenant + "-" + std::to_string(seq++);
    txn.meta.tenant_id = tenant;
    txn.meta.timestamp_ms = ts;
    txn.meta.client_ip = "10.3.3.3";
    txn.request.service.kind = kind;
    txn.request.features_requested = 1;
    txn.request.input_id = txn.meta.txn_id + "-in";
    if (is_identification_service(kind)) txn.request.target_face_id = "tg";
    return txn;
}

UsageProfile profile_with(int component, double value, std::int64_t start = 0) {
    UsageProfile profile;
    profile.window_start_ms = start;
    profile.window_end_ms = start + 3'600'000;
    profile.components[component] = value;
    return profile;
}

const IndicatorRule& rule_for(const std::vector<IndicatorRule>& rules, IndicatorId id) {
    for (const auto& rule : rules)
        if (rule.indicator == id) return rule;
    throw std::logic_error("rule not found");
}

}  // namespace

TEST_CASE("default ruleset covers every indicator with the documented mappings") {
    const auto rules = default_ruleset();
    CHECK(rules.size() == kIndicatorCount);
    std::set<IndicatorId> seen;
    for (const auto& rule : rules) seen.insert(rule.indicator);
    CHECK(seen.size() == kIndicatorCount);

    CHECK(rule_for(rules, IndicatorId::HIGH_FACE_RATE).implication ==
          "Population surveillance");
    CHECK(rule_for(rules, IndicatorId::MANY_FACES_PER_INPUT).implication ==
          "Population surveillance");
    CHECK(rule_for(rules, IndicatorId::MANY_DISTINCT_FACES).implication ==
          "Population surveillance");
    CHECK(rule_for(rules, IndicatorId::TARGET_TRACKING).implication ==
          "Privacy threats to an individual");
    CHECK(rule_for(rules, IndicatorId::BLACKLIST_OBJECT).implication ==
          "Controversial application");
    CHECK(rule_for(rules, IndicatorId::HIGH_FACE_RATE).params.at("rate_per_min") == 100.0);
    CHECK(rule_for(rules, IndicatorId::INVERSION_PROBE).severity == Severity::Critical);
    CHECK(rule_for(rules, IndicatorId::SELF_ANOMALY).severity == Severity::Info);
}

TEST_CASE("empty state fires nothing") {
    AuditState state;
    const auto rules = default_ruleset();
    CHECK(evaluate_rules(state, rules, 60'000).empty());
}

TEST_CASE("face rate over threshold fires one deduplicated alert") {
    AuditState state;
    for (int i = 0; i < 120; ++i)
        state.ingest(txn_at("spy", i * 450, ServiceKind::FaceDetect));
    const auto rules = default_ruleset();
    const auto alerts = evaluate_rules(state, rules, 60'000);
    REQUIRE(alerts.size() == 1);
    CHECK(alerts[0].indicator == IndicatorId::HIGH_FACE_RATE);
    CHECK(alerts[0].tenants == std::vector<std::string>{"spy"});
    CHECK(alerts[0].implication == "Population surveillance");
    CHECK(alerts[0].severity == Severity::Warn);
    CHECK(alerts[0].window_start_ms == 0);
    CHECK(alerts[0].window_end_ms == 60'000);
    CHECK(alerts[0].evidence.contains("rate_per_min"));
    CHECK(alerts[0].evidence.contains("threshold_per_min"));

    // Pure function: same inputs, same alerts.
    CHECK(evaluate_rules(state, rules, 60'000) == alerts);
}

TEST_CASE("rates at or below threshold do not fire") {
    AuditState state;
    for (int i = 0; i < 100; ++i)
        state.ingest(txn_at("busy", i * 500, ServiceKind::FaceDetect));
    CHECK(evaluate_rules(state, default_ruleset(), 60'000).empty());
}

TEST_CASE("cross-service combo cites both statistics") {
    AuditConfig config;
    config.blacklist = {"placard"};
    AuditState state(config);
    Transaction faces = txn_at("combo", 1000, ServiceKind::FaceDetect);
    for (int i = 0; i < 12; ++i)
        faces.response.detected_face_ids.push_back("f" + std::to_string(i));
    faces.by_products.face_encodings_count = 12;
    faces.request.input_id = "shared-input";
    state.ingest(faces);
    Transaction objects = txn_at("combo", 2000, ServiceKind::ObjectDetect);
    objects.request.input_id = "shared-input";
    objects.response.detected_labels = {{"placard", 0.9}};
    state.ingest(objects);

    const auto alerts = evaluate_rules(state, default_ruleset(), 60'000);
    REQUIRE(alerts.size() == 1);
    CHECK(alerts[0].indicator == IndicatorId::CROSS_SERVICE_COMBO);
    CHECK(alerts[0].severity == Severity::Critical);
    CHECK(alerts[0].evidence.at("max_faces") == "12");
    CHECK(alerts[0].evidence.at("blacklist_hit") == "1");
    CHECK(alerts[0].evidence.at("input_id") == "shared-input");
}

TEST_CASE("blacklist object rule needs the configured match count") {
    AuditConfig config;
    config.blacklist = {"placard"};
    AuditState state(config);
    for (int i = 0; i < 4; ++i) {
        Transaction txn = txn_at("screen", i * 1000, ServiceKind::ObjectDetect);
        txn.response.detected_labels = {{"placard", 0.9}};
        state.ingest(txn);
    }
    auto alerts = evaluate_rules(state, default_ruleset(), 60'000);
    // 4 matches + the combo rule not triggered (no faces): nothing fires.
    CHECK(alerts.empty());
    Transaction fifth = txn_at("screen", 5000, ServiceKind::ObjectDetect);
    fifth.response.detected_labels = {{"placard", 0.9}};
    state.ingest(fifth);
    alerts = evaluate_rules(state, default_ruleset(), 60'000);
    REQUIRE(alerts.size() == 1);
    CHECK(alerts[0].indicator == IndicatorId::BLACKLIST_OBJECT);
    CHECK(alerts[0].evidence.at("matches") == "5");
}

TEST_CASE("many-faces and many-distinct rules fire on constructed states") {
    AuditState state;
    Transaction crowd = txn_at("crowd", 1000, ServiceKind::FaceDetect);
    for (int i = 0; i < 60; ++i)
        crowd.response.detected_face_ids.push_back("cf" + std::to_string(i));
    crowd.by_products.face_encodings_count = 60;
    state.ingest(crowd);

    Transaction many = txn_at("harvest", 2000, ServiceKind::FaceDetect);
    state.ingest(many);
    for (int batch = 0; batch < 2400; ++batch) {
        Transaction txn = txn_at("harvest", 3000 + batch, ServiceKind::FaceDetect);
        for (int f = 0; f < 5; ++f)
            txn.response.detected_face_ids.push_back("hf" + std::to_string(batch * 5 + f));
        txn.by_products.face_encodings_count = 5;
        state.ingest(txn);
    }

    const auto alerts = evaluate_rules(state, default_ruleset(), 60'000);
    std::map<IndicatorId, int> counts;
    for (const auto& alert : alerts) counts[alert.indicator]++;
    CHECK(counts[IndicatorId::MANY_FACES_PER_INPUT] == 1);
    CHECK(counts[IndicatorId::MANY_DISTINCT_FACES] == 1);
    // The harvest tenant also trips the rate rule; that is expected.
    CHECK(counts[IndicatorId::HIGH_FACE_RATE] >= 1);
}

TEST_CASE("target tracking honors the minimum-call gate and phi") {
    const auto rules = default_ruleset();
    {
        AuditState state;
        for (int i = 0; i < 99; ++i) {
            Transaction txn = txn_at("stalker", i * 10, ServiceKind::FaceIdentify);
            txn.request.target_face_id = "victim";
            state.ingest(txn);
        }
        CHECK(evaluate_rules(state, rules, 60'000).empty());
    }
    {
        AuditState state;
        // Spaced out so the rate rule stays quiet and only the target rule fires.
        for (int i = 0; i < 200; ++i) {
            Transaction txn = txn_at("stalker", i * 1000, ServiceKind::FaceIdentify);
            txn.request.target_face_id =
                i % 2 == 0 ? "victim" : "other-" + std::to_string(i);
            state.ingest(txn);
        }
        const auto alerts = evaluate_rules(state, rules, 250'000);
        REQUIRE(alerts.size() == 1);
        CHECK(alerts[0].indicator == IndicatorId::TARGET_TRACKING);
        CHECK(alerts[0].evidence.at("target") == "victim");
        CHECK(alerts[0].implication == "Privacy threats to an individual");
    }
}

TEST_CASE("self anomaly score: zero deviation and the worked arithmetic example") {
    std::vector<UsageProfile> history;
    for (int i = 0; i < 24; ++i) history.push_back(profile_with(0, 10.0));
    CHECK(self_anomaly_score(history, profile_with(0, 10.0)) == 0.0);

    // mean 10, population std 2 (half 8s, half 12s), current 30 -> (30-10)/2.
    std::vector<UsageProfile> spread;
    for (int i = 0; i < 24; ++i) spread.push_back(profile_with(0, i % 2 == 0 ? 8.0 : 12.0));
    CHECK(self_anomaly_score(spread, profile_with(0, 30.0)) == doctest::Approx(10.0));

    std::vector<UsageProfile> three(3, profile_with(0, 10.0));
    CHECK_THROWS_AS(self_anomaly_score(three, profile_with(0, 10.0)),
                    InsufficientHistory);
}

TEST_CASE("self anomaly score is scale covariant when the floor is disabled") {
    AnomalyParams no_floor;
    no_floor.sigma_floor_fraction = 0.0;
    no_floor.sigma_floor_min = 0.0;
    Rng rng(8);
    std::vector<UsageProfile> history;
    for (int i = 0; i < 30; ++i)
        history.push_back(profile_with(3, 50.0 + static_cast<double>(rng.next_u64() % 20)));
    const UsageProfile current = profile_with(3, 90.0);
    const double base = self_anomaly_score(history, current, no_floor);

    const double c = 7.25;
    std::vector<UsageProfile> scaled = history;
    for (auto& profile : scaled) profile.components *= c;
    UsageProfile scaled_current = current;
    scaled_current.components *= c;
    CHECK(self_anomaly_score(scaled, scaled_current, no_floor) ==
          doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("peer anomaly score: identical profiles score zero, outlier scores high") {
    std::map<std::string, UsageProfile> peers;
    for (int i = 0; i < 20; ++i)
        peers.emplace("t" + std::to_string(i), profile_with(0, 120.0));
    for (const auto& [tenant, profile] : peers)
        CHECK(peer_anomaly_score(peers, tenant) == 0.0);

    // Tight cluster plus one 10x outlier on the face-rate component.
    std::map<std::string, UsageProfile> mixed;
    Rng rng(15);
    for (int i = 0; i < 20; ++i)
        mixed.emplace("t" + std::to_string(i),
                      profile_with(0, 115.0 + static_cast<double>(rng.next_u64() % 10)));
    mixed.emplace("outlier", profile_with(0, 1200.0));
    CHECK(peer_anomaly_score(mixed, "outlier") > 3.0);
    CHECK(peer_anomaly_score(mixed, "t3") <= 3.0);

    std::map<std::string, UsageProfile> two = {{"a", profile_with(0, 1.0)},
                                               {"b", profile_with(0, 2.0)}};
    CHECK_THROWS_AS(peer_anomaly_score(two, "a"), InsufficientPeers);
    CHECK_THROWS_AS(peer_anomaly_score(mixed, "nobody"), UnknownTenant);
}

TEST_CASE("inversion probe detection matches a brute-force clustering oracle") {
    AuditState state;
    Rng rng(33);
    const std::uint64_t base = rng.next_u64();

    // 8 coordinated accounts, 1500 near-duplicate queries within the hour.
    struct Event {
        std::string tenant;
        std::uint64_t fp;
    };
    std::vector<Event> events;
    for (int i = 0; i < 1500; ++i) {
        const std::string tenant = "p" + std::to_string(rng.next_u64() % 8);
        std::uint64_t fp = base;
        const std::uint64_t flips = rng.next_u64() % 3;
        for (std::uint64_t f = 0; f < flips; ++f) fp ^= 1ULL << (rng.next_u64() % 64);
        events.push_back({tenant, fp});
    }
    // Benign noise: 300 singleton fingerprints from 5 other tenants.
    for (int i = 0; i < 300; ++i)
        events.push_back({"b" + std::to_string(rng.next_u64() % 5), rng.next_u64()});

    std::int64_t ts = 0;
    for (const auto& event : events) {
        ts += 1;
        Transaction txn = txn_at(event.tenant, ts, ServiceKind::FaceIdentify);
        txn.request.target_face_id = "pv-" + std::to_string(ts);
        txn.request.content_fingerprint = event.fp;
        state.ingest(txn);
    }

    const auto rules = default_ruleset();
    const auto& rule = rule_for(rules, IndicatorId::INVERSION_PROBE);
    const auto alerts = detect_inversion_probe(state, rule, 3'600'000);
    REQUIRE(alerts.size() == 1);
    CHECK(alerts[0].severity == Severity::Critical);
    REQUIRE(alerts[0].tenants.size() == 8);

    // Oracle: exhaustive pairwise-Hamming union-find over the same events.
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
    auto fp_index = [&](std::uint64_t fp) {
        return static_cast<std::size_t>(
            std::lower_bound(fps.begin(), fps.end(), fp) - fps.begin());
    };
    for (const auto& event : events) {
        auto& [accounts, queries] = clusters[find(fp_index(event.fp))];
        accounts.insert(event.tenant);
        queries += 1;
    }
    std::set<std::string> oracle_accounts;
    std::uint64_t oracle_queries = 0;
    for (const auto& [root, cluster] : clusters) {
        if (cluster.first.size() >= 5 && cluster.second >= 1000) {
            oracle_accounts = cluster.first;
            oracle_queries = cluster.second;
        }
    }
    CHECK(std::set<std::string>(alerts[0].tenants.begin(), alerts[0].tenants.end()) ==
          oracle_accounts);
    CHECK(alerts[0].evidence.at("query_count") == std::to_string(oracle_queries));

    // The full rule evaluation path emits it too (as the only critical alert).
    const auto all = evaluate_rules(state, rules, 3'600'000);
    int probes = 0;
    for (const auto& alert : all)
        if (alert.indicator == IndicatorId::INVERSION_PROBE) ++probes;
    CHECK(probes == 1);
}

TEST_CASE("benign fingerprints never cluster into a probe alert") {
    AuditState state;
    Rng rng(44);
    for (int i = 0; i < 3000; ++i) {
        Transaction txn =
            txn_at("b" + std::to_string(rng.next_u64() % 10), i, ServiceKind::FaceIdentify);
        txn.request.target_face_id = "t";
        txn.request.content_fingerprint = rng.next_u64();
        state.ingest(txn);
    }
    const auto rules = default_ruleset();
    CHECK(detect_inversion_probe(state, rule_for(rules, IndicatorId::INVERSION_PROBE),
                                 3'600'000)
              .empty());
}

TEST_CASE("inversion probe is unavailable at metadata-only monitoring") {
    AuditConfig config;
    config.level = MonitoringLevel::MetadataOnly;
    AuditState state(config);
    const auto rules = default_ruleset();
    CHECK_THROWS_AS(detect_inversion_probe(
                        state, rule_for(rules, IndicatorId::INVERSION_PROBE), 60'000),
                    UnavailableAtMonitoringLevel);
    // evaluate_rules quietly skips payload rules instead of throwing.
    state.ingest(txn_at("a", 0, ServiceKind::FaceDetect));
    CHECK_NOTHROW(evaluate_rules(state, rules, 60'000));
}

TEST_CASE("alerts round-trip through the log format with stable ids") {
    Alert alert;
    alert.tenants = {"acme", "zeta"};
    alert.indicator = IndicatorId::INVERSION_PROBE;
    alert.severity = Severity::Critical;
    alert.window_start_ms = 0;
    alert.window_end_ms = 3'600'000;
    alert.evidence = {{"query_count", "2000"}, {"service", "face_identify"}};
    alert.implication = "Model inversion or extraction attempt";

    const std::string encoded = encode_alert(alert);
    const Alert decoded = decode_alert(encoded);
    CHECK(decoded.tenants == alert.tenants);
    CHECK(decoded.indicator == alert.indicator);
    CHECK(decoded.evidence == alert.evidence);
    CHECK(!decoded.alert_id.empty());
    // Ids derive from content: re-encoding reproduces them.
    CHECK(encode_alert(decoded) == encoded);

    std::ostringstream out;
    write_alert_log(out, std::vector<Alert>{decoded});
    std::istringstream in(out.str());
    const auto read_back = read_alert_log(in);
    REQUIRE(read_back.size() == 1);
    CHECK(encode_alert(read_back[0]) == encoded);
}

TEST_CASE("ruleset files override defaults and reject junk") {
    const std::string json = R"({"rules": [
        {"indicator": "HIGH_FACE_RATE", "params": {"rate_per_min": 50}},
        {"indicator": "SELF_ANOMALY", "severity": "critical"}
    ]})";
    const auto rules = parse_ruleset(json, "inline");
    REQUIRE(rules.size() == 2);
    CHECK(rules[0].params.at("rate_per_min") == 50.0);
    CHECK(rules[0].implication == "Population surveillance");  // default kept
    CHECK(rules[1].severity == Severity::Critical);

    CHECK_THROWS_AS(parse_ruleset(R"({"rules": [{"indicator": "NOPE"}]})", "x"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_ruleset(R"({"rules": [{"indicator": "HIGH_FACE_RATE", "params": {"rate_per_min": -4}}]})",
                      "x"),
        ConfigError);
    CHECK_THROWS_AS(parse_ruleset("{", "x"), ConfigError);
}
