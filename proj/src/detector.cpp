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

#include "aimon/detector.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "aimon/errors.hpp"
#include "aimon/hash.hpp"
#include "aimon/txn.hpp"

namespace aimon {

namespace {

struct IndicatorMeta {
    IndicatorId id;
    std::string_view name;
};

constexpr IndicatorMeta kIndicators[] = {
    {IndicatorId::HIGH_FACE_RATE, "HIGH_FACE_RATE"},
    {IndicatorId::MANY_FACES_PER_INPUT, "MANY_FACES_PER_INPUT"},
    {IndicatorId::MANY_DISTINCT_FACES, "MANY_DISTINCT_FACES"},
    {IndicatorId::TARGET_TRACKING, "TARGET_TRACKING"},
    {IndicatorId::BLACKLIST_OBJECT, "BLACKLIST_OBJECT"},
    {IndicatorId::CROSS_SERVICE_COMBO, "CROSS_SERVICE_COMBO"},
    {IndicatorId::SELF_ANOMALY, "SELF_ANOMALY"},
    {IndicatorId::PEER_ANOMALY, "PEER_ANOMALY"},
    {IndicatorId::INVERSION_PROBE, "INVERSION_PROBE"},
};

}  // namespace

std::string_view indicator_name(IndicatorId id) {
    for (const auto& meta : kIndicators)
        if (meta.id == id) return meta.name;
    return "unknown";
}

std::optional<IndicatorId> parse_indicator(std::string_view name) {
    for (const auto& meta : kIndicators)
        if (meta.name == name) return meta.id;
    return std::nullopt;
}

bool is_anomaly_indicator(IndicatorId id) {
    return id == IndicatorId::SELF_ANOMALY || id == IndicatorId::PEER_ANOMALY;
}

std::string_view severity_name(Severity severity) {
    switch (severity) {
        case Severity::Info: return "info";
        case Severity::Warn: return "warn";
        case Severity::Critical: return "critical";
    }
    return "unknown";
}

std::optional<Severity> parse_severity(std::string_view name) {
    if (name == "info") return Severity::Info;
    if (name == "warn") return Severity::Warn;
    if (name == "critical") return Severity::Critical;
    return std::nullopt;
}

std::vector<IndicatorRule> default_ruleset() {
    return {
        {IndicatorId::HIGH_FACE_RATE, {{"rate_per_min", 100.0}}, 60,
         "Population surveillance", Severity::Warn},
        {IndicatorId::MANY_FACES_PER_INPUT, {{"max_faces", 50.0}}, 3600,
         "Population surveillance", Severity::Warn},
        {IndicatorId::MANY_DISTINCT_FACES, {{"distinct_per_day", 10000.0}}, 86400,
         "Population surveillance", Severity::Warn},
        {IndicatorId::TARGET_TRACKING, {{"phi", 0.1}, {"min_calls", 100.0}}, 86400,
         "Privacy threats to an individual", Severity::Warn},
        {IndicatorId::BLACKLIST_OBJECT, {{"min_matches", 5.0}}, 3600,
         "Controversial application", Severity::Warn},
        {IndicatorId::CROSS_SERVICE_COMBO, {{"min_faces", 10.0}}, 3600,
         "Controversial application", Severity::Critical},
        {IndicatorId::SELF_ANOMALY, {{"z_threshold", 3.0}, {"min_history", 24.0}}, 3600,
         "Usage deviates from tenant baseline", Severity::Info},
        {IndicatorId::PEER_ANOMALY, {{"z_threshold", 3.0}, {"min_peers", 10.0}}, 3600,
         "Usage deviates from peer population", Severity::Info},
        {IndicatorId::INVERSION_PROBE,
         {{"max_hamming", 4.0}, {"min_accounts", 5.0}, {"min_queries", 1000.0}},
         3600, "Model inversion or extraction attempt", Severity::Critical},
    };
}

// --------------------------------------------------------------------------
// Ruleset file
// --------------------------------------------------------------------------

std::vector<IndicatorRule> parse_ruleset(std::string_view json_text,
                                         const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
    const auto defaults = default_ruleset();
    std::vector<IndicatorRule> rules;
    try {
        for (const auto& node : doc.at("rules")) {
            const auto name = node.at("indicator").get<std::string>();
            const auto id = parse_indicator(name);
            if (!id) throw ConfigError(origin, "unknown indicator " + name);
            IndicatorRule rule;
            for (const auto& d : defaults)
                if (d.indicator == *id) rule = d;
            if (node.contains("window_s")) {
                rule.window_s = node["window_s"].get<std::int64_t>();
                if (rule.window_s <= 0)
                    throw ConfigError(origin, "window_s must be positive");
            }
            if (node.contains("severity")) {
                const auto severity = parse_severity(node["severity"].get<std::string>());
                if (!severity) throw ConfigError(origin, "unknown severity");
                rule.severity = *severity;
            }
            if (node.contains("implication"))
                rule.implication = node["implication"].get<std::string>();
            if (node.contains("params")) {
                for (const auto& [key, value] : node["params"].items()) {
                    const double v = value.get<double>();
                    if (v <= 0.0)
                        throw ConfigError(origin, "threshold " + key + " must be positive");
                    rule.params[key] = v;
                }
            }
            rules.push_back(std::move(rule));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
    return rules;
}

std::vector<IndicatorRule> load_ruleset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open ruleset file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_ruleset(buffer.str(), path);
}

// --------------------------------------------------------------------------
// Alert codec
// --------------------------------------------------------------------------

namespace {

std::string alert_body(const Alert& alert) {
    std::string out;
    out += std::to_string(alert.window_start_ms);
    out += '\t';
    out += std::to_string(alert.window_end_ms);
    out += '\t';
    out += severity_name(alert.severity);
    out += '\t';
    out += indicator_name(alert.indicator);
    out += '\t';
    for (std::size_t i = 0; i < alert.tenants.size(); ++i) {
        if (i > 0) out += ',';
        out += escape_field(alert.tenants[i]);
    }
    out += '\t';
    out += escape_field(alert.implication);
    out += '\t';
    bool first = true;
    for (const auto& [key, value] : alert.evidence) {
        if (!first) out += ',';
        first = false;
        out += key;
        out += '=';
        out += escape_field(value);
    }
    return out;
}

}  // namespace

std::string encode_alert(const Alert& alert) {
    const std::string body = alert_body(alert);
    std::string id = alert.alert_id;
    if (id.empty()) {
        char buf[17];
        std::uint64_t h = hash64(body, 0x11a7c0de);
        static constexpr char hex[] = "0123456789abcdef";
        for (int i = 15; i >= 0; --i) {
            buf[i] = hex[h & 0xF];
            h >>= 4;
        }
        buf[16] = '\0';
        id = buf;
    }
    return id + '\t' + body;
}

Alert decode_alert(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (fields.size() < 7) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos)
            throw MalformedRecord(line.size(), "alert record truncated");
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    fields.push_back(line.substr(start));

    auto parse_ms = [](std::string_view s) {
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw MalformedRecord(0, "unparseable alert window timestamp");
        return value;
    };
    Alert alert;
    alert.alert_id = fields[0];
    alert.window_start_ms = parse_ms(fields[1]);
    alert.window_end_ms = parse_ms(fields[2]);
    const auto severity = parse_severity(fields[3]);
    if (!severity) throw MalformedRecord(0, "unknown severity in alert");
    alert.severity = *severity;
    const auto indicator = parse_indicator(fields[4]);
    if (!indicator) throw MalformedRecord(0, "unknown indicator in alert");
    alert.indicator = *indicator;
    std::size_t pos = 0;
    std::string_view tenants = fields[5];
    while (!tenants.empty()) {
        std::size_t comma = tenants.find(',', pos);
        std::string_view piece = comma == std::string_view::npos
                                     ? tenants.substr(pos)
                                     : tenants.substr(pos, comma - pos);
        alert.tenants.push_back(unescape_field(piece));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    alert.implication = unescape_field(fields[6]);
    std::string_view evidence = fields[7];
    pos = 0;
    while (pos < evidence.size()) {
        std::size_t comma = evidence.find(',', pos);
        std::string_view entry = comma == std::string_view::npos
                                     ? evidence.substr(pos)
                                     : evidence.substr(pos, comma - pos);
        std::size_t eq = entry.find('=');
        if (eq == std::string_view::npos)
            throw MalformedRecord(0, "evidence entry missing '='");
        alert.evidence.emplace(std::string(entry.substr(0, eq)),
                               unescape_field(entry.substr(eq + 1)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return alert;
}

void write_alert_log(std::ostream& out, std::span<const Alert> alerts) {
    out << kAlertLogHeader << '\n';
    for (const auto& alert : alerts) out << encode_alert(alert) << '\n';
}

std::vector<Alert> read_alert_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kAlertLogHeader)
        throw MalformedRecord(0, "missing or unsupported alert log header");
    std::vector<Alert> alerts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        alerts.push_back(decode_alert(line));
    }
    return alerts;
}

void print_alert_summary(std::ostream& out, std::span<const Alert> alerts) {
    std::map<std::string, std::size_t> per_indicator;
    for (const auto& alert : alerts)
        per_indicator[std::string(indicator_name(alert.indicator))]++;
    out << "alerts: " << alerts.size() << '\n';
    for (const auto& [name, count] : per_indicator)
        out << "  " << name << ": " << count << '\n';
    if (alerts.empty()) return;
    out << "  window_start  severity  indicator             tenants  implication\n";
    for (const auto& alert : alerts) {
        std::string tenants;
        for (std::size_t i = 0; i < alert.tenants.size(); ++i) {
            if (i > 0) tenants += '+';
            tenants += alert.tenants[i];
        }
        out << "  " << alert.window_start_ms << "  " << severity_name(alert.severity)
            << "  " << indicator_name(alert.indicator) << "  " << tenants << "  "
            << alert.implication << '\n';
    }
}

// --------------------------------------------------------------------------
// Anomaly scores
// --------------------------------------------------------------------------

namespace {

Eigen::VectorXd component_floors(const Eigen::VectorXd& center,
                                 const AnomalyParams& params) {
    return center.array()
        .abs()
        .matrix()
        .unaryExpr([&](double c) {
            return std::max(params.sigma_floor_fraction * c, params.sigma_floor_min);
        });
}

double max_component_score(const Eigen::VectorXd& deviation,
                           const Eigen::VectorXd& denom, int& worst_component) {
    double best = 0.0;
    worst_component = 0;
    for (int c = 0; c < deviation.size(); ++c) {
        const double d = denom[c] > 0.0 ? deviation[c] / denom[c]
                                        : (deviation[c] > 0.0
                                               ? std::numeric_limits<double>::infinity()
                                               : 0.0);
        if (d > best) {
            best = d;
            worst_component = c;
        }
    }
    return best;
}

}  // namespace

double self_anomaly_score(std::span<const UsageProfile> history,
                          const UsageProfile& current, const AnomalyParams& params,
                          int& worst_component) {
    if (history.size() < params.min_history)
        throw InsufficientHistory(params.min_history);
    const auto n = static_cast<Eigen::Index>(history.size());
    const Eigen::Index dim = current.components.size();
    Eigen::MatrixXd window_matrix(n, dim);
    for (Eigen::Index i = 0; i < n; ++i)
        window_matrix.row(i) = history[static_cast<std::size_t>(i)].components;
    const Eigen::VectorXd mean = window_matrix.colwise().mean();
    const Eigen::VectorXd stddev =
        ((window_matrix.rowwise() - mean.transpose()).array().square().colwise().sum() /
         static_cast<double>(n))
            .sqrt()
            .matrix();
    const Eigen::VectorXd denom = stddev.cwiseMax(component_floors(mean, params));
    const Eigen::VectorXd deviation = (current.components - mean).cwiseAbs();
    return max_component_score(deviation, denom, worst_component);
}

double self_anomaly_score(std::span<const UsageProfile> history,
                          const UsageProfile& current, const AnomalyParams& params) {
    int worst = 0;
    return self_anomaly_score(history, current, params, worst);
}

namespace {

double median_of(std::vector<double>& values) {
    const std::size_t n = values.size();
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(values.begin(), mid);
    return 0.5 * (lo + hi);
}

}  // namespace

double peer_anomaly_score(const std::map<std::string, UsageProfile>& profiles,
                          const std::string& tenant, const AnomalyParams& params,
                          int& worst_component) {
    if (profiles.size() < params.min_peers) throw InsufficientPeers(params.min_peers);
    auto self = profiles.find(tenant);
    if (self == profiles.end()) throw UnknownTenant(tenant);

    const Eigen::Index dim = self->second.components.size();
    Eigen::VectorXd median(dim);
    Eigen::VectorXd mad(dim);
    std::vector<double> values(profiles.size());
    for (Eigen::Index c = 0; c < dim; ++c) {
        std::size_t i = 0;
        for (const auto& [id, profile] : profiles) values[i++] = profile.components[c];
        median[c] = median_of(values);
        for (double& v : values) v = std::abs(v - median[c]);
        mad[c] = median_of(values);
    }
    // 1.4826 scales MAD to the normal-consistent sigma estimate. The extra
    // sqrt(center) floor is the Poisson noise level of count components,
    // which a small-sample MAD underestimates.
    const Eigen::VectorXd floors =
        component_floors(median, params)
            .cwiseMax(median.array().abs().sqrt().matrix());
    const Eigen::VectorXd denom = (mad * 1.4826).cwiseMax(floors);
    const Eigen::VectorXd deviation = (self->second.components - median).cwiseAbs();
    return max_component_score(deviation, denom, worst_component);
}

double peer_anomaly_score(const std::map<std::string, UsageProfile>& profiles,
                          const std::string& tenant, const AnomalyParams& params) {
    int worst = 0;
    return peer_anomaly_score(profiles, tenant, params, worst);
}

// --------------------------------------------------------------------------
// Rule evaluation
// --------------------------------------------------------------------------

namespace {

std::pair<std::int64_t, std::int64_t> aligned_window(std::int64_t now_ms,
                                                     std::int64_t window_ms) {
    const std::int64_t anchor = now_ms > 0 ? now_ms - 1 : 0;
    const std::int64_t index = anchor / window_ms;
    return {index * window_ms, (index + 1) * window_ms};
}

double param_or(const IndicatorRule& rule, const std::string& key, double fallback) {
    auto it = rule.params.find(key);
    return it == rule.params.end() ? fallback : it->second;
}

Alert make_alert(const IndicatorRule& rule, std::vector<std::string> tenants,
                 std::pair<std::int64_t, std::int64_t> window,
                 std::map<std::string, std::string> evidence) {
    Alert alert;
    alert.tenants = std::move(tenants);
    std::sort(alert.tenants.begin(), alert.tenants.end());
    alert.indicator = rule.indicator;
    alert.severity = rule.severity;
    alert.window_start_ms = window.first;
    alert.window_end_ms = window.second;
    alert.evidence = std::move(evidence);
    alert.implication = rule.implication;
    // Content-derived id, stable across replays and monitoring levels.
    const std::string encoded = encode_alert(alert);
    alert.alert_id = encoded.substr(0, encoded.find('\t'));
    return alert;
}

AnomalyParams anomaly_params_from(const IndicatorRule& rule) {
    AnomalyParams params;
    params.min_history =
        static_cast<std::size_t>(param_or(rule, "min_history", 24.0));
    params.min_peers = static_cast<std::size_t>(param_or(rule, "min_peers", 10.0));
    params.sigma_floor_fraction = param_or(rule, "sigma_floor_fraction", 0.1);
    params.sigma_floor_min = param_or(rule, "sigma_floor_min", 1.0);
    return params;
}

}  // namespace

std::vector<Alert> detect_inversion_probe(const AuditState& state,
                                          const IndicatorRule& rule,
                                          std::int64_t now_ms) {
    if (!state.fingerprints_available())
        throw UnavailableAtMonitoringLevel("content fingerprints");

    const auto max_hamming = static_cast<int>(param_or(rule, "max_hamming", 4.0));
    const auto min_accounts = static_cast<std::size_t>(param_or(rule, "min_accounts", 5.0));
    const auto min_queries = static_cast<std::uint64_t>(param_or(rule, "min_queries", 1000.0));
    const std::int64_t window_ms = rule.window_s * 1000;
    const std::int64_t from_ms = now_ms - window_ms;
    const auto window = aligned_window(now_ms, window_ms);

    std::vector<Alert> alerts;
    for (int k = 0; k < 9; ++k) {
        const auto kind = static_cast<ServiceKind>(k);

        // Distinct fingerprints with per-fingerprint query counts and accounts.
        struct FpStats {
            std::uint64_t queries = 0;
            std::set<std::uint32_t> accounts;
        };
        std::vector<std::uint64_t> fps;
        std::unordered_map<std::uint64_t, FpStats> stats;
        for (const auto& event : state.fingerprint_events(kind)) {
            if (event.ts_ms < from_ms || event.ts_ms >= now_ms) continue;
            auto [it, fresh] = stats.try_emplace(event.fingerprint);
            if (fresh) fps.push_back(event.fingerprint);
            it->second.queries++;
            it->second.accounts.insert(event.tenant_index);
        }
        if (fps.empty()) continue;
        std::sort(fps.begin(), fps.end());

        // Union-find over distinct fingerprints; near-duplicate pairs share
        // at least one of max_hamming+1 exact bit chunks (pigeonhole), which
        // prunes the pairwise comparisons.
        std::vector<std::size_t> parent(fps.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t x) {
            while (parent[x] != x) {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        auto unite = [&](std::size_t a, std::size_t b) {
            a = find(a);
            b = find(b);
            if (a != b) parent[std::max(a, b)] = std::min(a, b);
        };

        const int chunks = max_hamming + 1;
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (int c = 0; c < chunks; ++c) {
            const int width = 64 / chunks + (c < 64 % chunks ? 1 : 0);
            const int shift = c * (64 / chunks) + std::min(c, 64 % chunks);
            const std::uint64_t mask =
                width >= 64 ? ~0ULL : ((1ULL << width) - 1) << shift;
            buckets.clear();
            for (std::size_t i = 0; i < fps.size(); ++i)
                buckets[fps[i] & mask].push_back(i);
            for (const auto& [key, members] : buckets) {
                for (std::size_t a = 0; a < members.size(); ++a)
                    for (std::size_t b = a + 1; b < members.size(); ++b)
                        if (std::popcount(fps[members[a]] ^ fps[members[b]]) <= max_hamming)
                            unite(members[a], members[b]);
            }
        }

        struct Cluster {
            std::uint64_t queries = 0;
            std::set<std::uint32_t> accounts;
        };
        std::map<std::size_t, Cluster> clusters;  // root -> cluster, ordered
        for (std::size_t i = 0; i < fps.size(); ++i) {
            auto& cluster = clusters[find(i)];
            const auto& fp_stats = stats[fps[i]];
            cluster.queries += fp_stats.queries;
            cluster.accounts.insert(fp_stats.accounts.begin(), fp_stats.accounts.end());
        }

        for (const auto& [root, cluster] : clusters) {
            if (cluster.accounts.size() < min_accounts || cluster.queries < min_queries)
                continue;
            std::vector<std::string> tenants;
            tenants.reserve(cluster.accounts.size());
            for (std::uint32_t idx : cluster.accounts)
                tenants.push_back(state.tenant_name(idx));
            std::map<std::string, std::string> evidence{
                {"account_count", std::to_string(cluster.accounts.size())},
                {"query_count", std::to_string(cluster.queries)},
                {"service", std::string(service_kind_name(kind))},
                {"max_hamming", std::to_string(max_hamming)},
                {"min_accounts", std::to_string(min_accounts)},
                {"min_queries", std::to_string(min_queries)},
            };
            alerts.push_back(make_alert(rule, std::move(tenants), window, std::move(evidence)));
        }
    }
    return alerts;
}

std::vector<Alert> evaluate_rules(const AuditState& state,
                                  std::span<const IndicatorRule> rules,
                                  std::int64_t now_ms) {
    std::vector<Alert> alerts;
    std::set<std::string> dedup;
    const bool payload_available = state.fingerprints_available();
    const auto tenants = state.tenants();

    auto emit = [&](Alert alert) {
        std::string key = std::string(indicator_name(alert.indicator));
        key += '|';
        key += std::to_string(alert.window_start_ms);
        for (const auto& tenant : alert.tenants) {
            key += '|';
            key += tenant;
        }
        if (dedup.insert(std::move(key)).second) alerts.push_back(std::move(alert));
    };

    for (const auto& rule : rules) {
        const std::int64_t window_ms = rule.window_s * 1000;
        const std::int64_t from_ms = now_ms - window_ms;
        const auto window = aligned_window(now_ms, window_ms);

        switch (rule.indicator) {
            case IndicatorId::HIGH_FACE_RATE: {
                const double threshold = param_or(rule, "rate_per_min", 100.0);
                for (const auto& tenant : tenants) {
                    const std::uint64_t count =
                        state.count_in_window(tenant, ServiceGroup::Face, from_ms, now_ms);
                    const double rate = static_cast<double>(count) * 60000.0 /
                                        static_cast<double>(window_ms);
                    if (rate > threshold) {
                        emit(make_alert(rule, {tenant}, window,
                                        {{"rate_per_min", format_double(rate)},
                                         {"threshold_per_min", format_double(threshold)},
                                         {"requests", std::to_string(count)}}));
                    }
                }
                break;
            }
            case IndicatorId::MANY_FACES_PER_INPUT: {
                if (!payload_available) break;
                const double threshold = param_or(rule, "max_faces", 50.0);
                for (const auto& tenant : tenants) {
                    const auto max = state.max_faces_in(tenant, from_ms, now_ms);
                    if (max.faces > threshold) {
                        emit(make_alert(rule, {tenant}, window,
                                        {{"max_faces", std::to_string(max.faces)},
                                         {"threshold", format_double(threshold)},
                                         {"input_id", max.input_id}}));
                    }
                }
                break;
            }
            case IndicatorId::MANY_DISTINCT_FACES: {
                if (!payload_available) break;
                const double threshold = param_or(rule, "distinct_per_day", 10000.0);
                for (const auto& tenant : tenants) {
                    const auto estimate =
                        state.distinct_faces(tenant, AuditState::Horizon::Daily);
                    if (estimate.value > threshold) {
                        emit(make_alert(
                            rule, {tenant}, window,
                            {{"distinct_estimate", format_double(estimate.value)},
                             {"relative_error", format_double(estimate.relative_error)},
                             {"threshold", format_double(threshold)}}));
                    }
                }
                break;
            }
            case IndicatorId::TARGET_TRACKING: {
                if (!payload_available) break;
                const double phi = param_or(rule, "phi", 0.1);
                const auto min_calls =
                    static_cast<std::uint64_t>(param_or(rule, "min_calls", 100.0));
                for (const auto& tenant : tenants) {
                    const std::uint64_t calls = state.identification_calls(tenant);
                    if (calls < min_calls) continue;
                    const auto targets = state.top_identification_targets(tenant, phi);
                    // Fire on the guaranteed lower bound so sketch
                    // overestimates cannot flag benign tenants.
                    const double required = phi * static_cast<double>(calls);
                    for (const auto& target : targets) {
                        const double lower =
                            static_cast<double>(target.est_count - target.error);
                        if (lower >= required) {
                            emit(make_alert(
                                rule, {tenant}, window,
                                {{"target", target.target},
                                 {"est_count", std::to_string(target.est_count)},
                                 {"count_error", std::to_string(target.error)},
                                 {"identification_calls", std::to_string(calls)},
                                 {"phi", format_double(phi)}}));
                            break;
                        }
                    }
                }
                break;
            }
            case IndicatorId::BLACKLIST_OBJECT: {
                if (!payload_available) break;
                const double threshold = param_or(rule, "min_matches", 5.0);
                for (const auto& tenant : tenants) {
                    const std::uint64_t matches =
                        state.blacklist_matches_in(tenant, from_ms, now_ms);
                    if (static_cast<double>(matches) >= threshold) {
                        emit(make_alert(rule, {tenant}, window,
                                        {{"matches", std::to_string(matches)},
                                         {"threshold", format_double(threshold)}}));
                    }
                }
                break;
            }
            case IndicatorId::CROSS_SERVICE_COMBO: {
                if (!payload_available) break;
                const double min_faces = param_or(rule, "min_faces", 10.0);
                for (const auto& tenant : tenants) {
                    for (const auto& input : state.combo_inputs_in(tenant, from_ms, now_ms)) {
                        const auto corr = state.correlate_input(tenant, input);
                        if (!corr.blacklist_hit ||
                            static_cast<double>(corr.face_count_max) < min_faces)
                            continue;
                        emit(make_alert(
                            rule, {tenant}, window,
                            {{"input_id", input},
                             {"max_faces", std::to_string(corr.face_count_max)},
                             {"min_faces", format_double(min_faces)},
                             {"blacklist_hit", "1"},
                             {"services", std::to_string(corr.services.size())}}));
                        break;  // one alert per tenant per window
                    }
                }
                break;
            }
            case IndicatorId::SELF_ANOMALY: {
                const double z = param_or(rule, "z_threshold", 3.0);
                const auto params = anomaly_params_from(rule);
                for (const auto& tenant : tenants) {
                    const auto profiles = state.profile_snapshot(tenant);
                    if (profiles.size() < params.min_history + 1) continue;
                    const UsageProfile& current = profiles.back();
                    const std::span<const UsageProfile> history(profiles.data(),
                                                                profiles.size() - 1);
                    int worst = 0;
                    const double score = self_anomaly_score(history, current, params, worst);
                    if (score > z) {
                        emit(make_alert(
                            rule, {tenant},
                            {current.window_start_ms, current.window_end_ms},
                            {{"score", format_double(score)},
                             {"z_threshold", format_double(z)},
                             {"component", std::string(profile_component::name(worst))}}));
                    }
                }
                break;
            }
            case IndicatorId::PEER_ANOMALY: {
                const double z = param_or(rule, "z_threshold", 3.0);
                const auto params = anomaly_params_from(rule);
                // Compare tenants over the latest commonly closed window.
                std::int64_t latest = -1;
                for (const auto& tenant : tenants) {
                    const auto profiles = state.profile_snapshot(tenant);
                    if (!profiles.empty())
                        latest = std::max(latest, profiles.back().window_start_ms);
                }
                if (latest < 0) break;
                std::map<std::string, UsageProfile> peers;
                for (const auto& tenant : tenants) {
                    const auto profiles = state.profile_snapshot(tenant);
                    if (!profiles.empty() && profiles.back().window_start_ms == latest)
                        peers.emplace(tenant, profiles.back());
                }
                if (peers.size() < params.min_peers) break;
                for (const auto& [tenant, profile] : peers) {
                    int worst = 0;
                    const double score = peer_anomaly_score(peers, tenant, params, worst);
                    if (score > z) {
                        emit(make_alert(
                            rule, {tenant},
                            {profile.window_start_ms, profile.window_end_ms},
                            {{"score", format_double(score)},
                             {"z_threshold", format_double(z)},
                             {"component", std::string(profile_component::name(worst))},
                             {"peers", std::to_string(peers.size())}}));
                    }
                }
                break;
            }
            case IndicatorId::INVERSION_PROBE: {
                if (!payload_available) break;
                for (auto& alert : detect_inversion_probe(state, rule, now_ms))
                    emit(std::move(alert));
                break;
            }
        }
    }
    return alerts;
}

}  // namespace aimon
