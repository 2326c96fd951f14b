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

#include "aimon/workload.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aimon/errors.hpp"
#include "aimon/hash.hpp"
#include "aimon/rng.hpp"

namespace aimon {

namespace {

struct ScenarioNameEntry {
    ScenarioId id;
    std::string_view name;
};

constexpr ScenarioNameEntry kScenarioNames[] = {
    {ScenarioId::BenignBaseline, "benign_baseline"},
    {ScenarioId::SurveillanceRate, "surveillance_rate"},
    {ScenarioId::CrowdAnalysis, "crowd_analysis"},
    {ScenarioId::DistinctFacesOverTime, "distinct_faces_over_time"},
    {ScenarioId::TargetTracking, "target_tracking"},
    {ScenarioId::BlacklistScreening, "blacklist_screening"},
    {ScenarioId::BehaviorDrift, "behavior_drift"},
    {ScenarioId::InversionProbe, "inversion_probe"},
};

// Benign traffic parameters shared by every scenario. The face pool stays
// under the sketch's exact-mode capacity so benign distinct-count deltas are
// noise-free.
const std::map<std::string, double> kCommonDefaults = {
    {"tenant_count", 50},        // benign population size
    {"base_rate_per_min", 2},    // Poisson arrival rate per benign tenant
    {"faces_per_input", 5},      // benign faces per input drawn from 0..this
    {"distinct_face_pool", 200}, // benign face identity pool per tenant
    {"ident_share", 0.1},        // share of identification calls
    {"features_max", 3},         // features per call drawn from 1..this
};

// Scenario-specific defaults take precedence over the common ones.
std::map<std::string, double> with_common(std::map<std::string, double> extra) {
    extra.insert(kCommonDefaults.begin(), kCommonDefaults.end());
    return extra;
}

}  // namespace

std::string_view scenario_name(ScenarioId id) {
    for (const auto& entry : kScenarioNames)
        if (entry.id == id) return entry.name;
    return "unknown";
}

std::optional<ScenarioId> parse_scenario(std::string_view name) {
    for (const auto& entry : kScenarioNames)
        if (entry.name == name) return entry.id;
    return std::nullopt;
}

std::vector<ScenarioInfo> scenario_catalog() {
    return {
        {ScenarioId::BenignBaseline, scenario_name(ScenarioId::BenignBaseline),
         "steady in-profile traffic across a tenant population",
         with_common({{"duration_s", 600}})},
        {ScenarioId::SurveillanceRate, scenario_name(ScenarioId::SurveillanceRate),
         "high request rate for face detection",
         with_common({{"duration_s", 600}, {"misuse_rate_per_min", 200}})},
        {ScenarioId::CrowdAnalysis, scenario_name(ScenarioId::CrowdAnalysis),
         "large number of faces in an image or video",
         with_common({{"duration_s", 600},
                      {"misuse_rate_per_min", 10},
                      {"crowd_faces_per_input", 100},
                      {"crowd_face_pool", 2000}})},
        {ScenarioId::DistinctFacesOverTime,
         scenario_name(ScenarioId::DistinctFacesOverTime),
         "large number of different faces analysed over time",
         with_common({{"duration_s", 600},
                      {"misuse_rate_per_min", 400},
                      {"misuse_faces_per_input", 5}})},
        {ScenarioId::TargetTracking, scenario_name(ScenarioId::TargetTracking),
         "large number of identification attempts for particular individuals",
         with_common({{"duration_s", 600},
                      {"ident_calls", 1000},
                      {"target_query_share", 0.2},
                      {"target_pool", 200}})},
        {ScenarioId::BlacklistScreening, scenario_name(ScenarioId::BlacklistScreening),
         "detection of black-listed objects",
         with_common({{"duration_s", 3600}, {"matches_per_hour", 10}})},
        {ScenarioId::BehaviorDrift, scenario_name(ScenarioId::BehaviorDrift),
         "tenant behaviour deviating from its normal usage pattern",
         // Higher base rate: hourly Poisson noise must sit well inside the
         // anomaly sigma floor so only the scripted drift stands out.
         with_common({{"tenant_count", 20},
                      {"base_rate_per_min", 8},
                      {"stable_hours", 48},
                      {"drift_hours", 8},
                      {"drift_multiplier", 10}})},
        {ScenarioId::InversionProbe, scenario_name(ScenarioId::InversionProbe),
         "coordinated near-duplicate probing across accounts",
         with_common({{"duration_s", 3600},
                      {"probe_accounts", 8},
                      {"probe_queries", 2000},
                      {"probe_flip_bits", 2}})},
    };
}

// --------------------------------------------------------------------------
// Generation
// --------------------------------------------------------------------------

namespace {

constexpr std::string_view kBenignLabels[] = {
    "tree", "car", "dog", "cat", "building", "person", "bicycle", "chair",
    "table", "sky",
};

// Default blacklisted label planted by the screening scenario. Matches the
// default blacklist shipped with the pipeline.
constexpr std::string_view kPlantedLabel = "placard";

struct ResolvedParams {
    std::map<std::string, double> values;

    double get(const std::string& name) const { return values.at(name); }
    std::uint64_t count(const std::string& name) const {
        return static_cast<std::uint64_t>(values.at(name));
    }
};

const std::set<std::string_view> kIntegralParams = {
    "tenant_count", "faces_per_input", "distinct_face_pool", "features_max",
    "duration_s", "crowd_faces_per_input", "crowd_face_pool",
    "misuse_faces_per_input", "ident_calls", "target_pool", "matches_per_hour",
    "stable_hours", "drift_hours", "probe_accounts", "probe_queries",
    "probe_flip_bits",
};

ResolvedParams resolve_params(const ScenarioSpec& spec) {
    const auto catalog = scenario_catalog();
    const ScenarioInfo* info = nullptr;
    for (const auto& entry : catalog)
        if (entry.id == spec.scenario) info = &entry;

    ResolvedParams resolved{info->default_params};
    for (const auto& [name, value] : spec.params) {
        auto it = resolved.values.find(name);
        if (it == resolved.values.end())
            throw InvalidScenarioParams(name, "unknown for scenario " +
                                                  std::string(scenario_name(spec.scenario)));
        if (!std::isfinite(value) || value < 0)
            throw InvalidScenarioParams(name, "must be a non-negative finite number");
        if (kIntegralParams.contains(name) && value != std::floor(value))
            throw InvalidScenarioParams(name, "must be an integer");
        it->second = value;
    }
    // Params that make no sense at zero: pools, counts and the knobs that
    // define the scripted pattern itself.
    static constexpr std::string_view kPositiveParams[] = {
        "tenant_count",   "duration_s",      "distinct_face_pool",
        "features_max",   "crowd_face_pool", "crowd_faces_per_input",
        "target_pool",    "ident_calls",     "matches_per_hour",
        "probe_accounts", "probe_queries",   "misuse_faces_per_input",
    };
    for (std::string_view name : kPositiveParams) {
        auto it = resolved.values.find(std::string(name));
        if (it != resolved.values.end() && it->second < 1)
            throw InvalidScenarioParams(std::string(name), "must be >= 1");
    }
    return resolved;
}

std::string zero_pad(std::uint64_t value, int width) {
    std::string digits = std::to_string(value);
    if (static_cast<int>(digits.size()) >= width) return digits;
    return std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

// Per-tenant transaction builder; owns the tenant's RNG and sequence.
class TenantStream {
public:
    TenantStream(std::string tenant_id, std::uint64_t seed)
        : tenant_id_(std::move(tenant_id)),
          rng_(hash64(tenant_id_, seed)),
          client_ip_("10." + std::to_string(hash64(tenant_id_, 0x1b) % 200 + 1) + "." +
                     std::to_string(hash64(tenant_id_, 0x2c) % 250) + "." +
                     std::to_string(hash64(tenant_id_, 0x3d) % 250 + 1)) {}

    Rng& rng() { return rng_; }
    const std::string& tenant_id() const { return tenant_id_; }
    std::vector<Transaction>& stream() { return stream_; }

    Transaction& emit(std::int64_t ts_ms, ServiceKind kind, std::uint32_t features) {
        Transaction txn;
        txn.meta.txn_id = tenant_id_ + "-" + zero_pad(seq_, 6);
        txn.meta.tenant_id = tenant_id_;
        txn.meta.timestamp_ms = ts_ms;
        txn.meta.client_ip = client_ip_;
        txn.meta.input_size_bytes = 20'000 + rng_.next_u64() % 480'000;
        txn.meta.resource_cost = features * 10ULL;
        txn.request.service.kind = kind;
        txn.request.features_requested = features;
        txn.request.input_id = tenant_id_ + "-in-" + zero_pad(seq_, 6);
        txn.request.content_fingerprint = rng_.next_u64();
        ++seq_;
        stream_.push_back(std::move(txn));
        return stream_.back();
    }

    std::string face_from_pool(std::uint64_t pool) {
        return "f-" + tenant_id_ + "-" + std::to_string(rng_.next_u64() % pool);
    }

    std::string fresh_face() { return "f-" + tenant_id_ + "-x" + std::to_string(fresh_++); }

private:
    std::string tenant_id_;
    Rng rng_;
    std::string client_ip_;
    std::vector<Transaction> stream_;
    std::uint64_t seq_ = 0;
    std::uint64_t fresh_ = 0;
};

void add_pool_faces(TenantStream& ts, Transaction& txn, std::uint64_t count,
                    std::uint64_t pool) {
    auto& faces = txn.response.detected_face_ids;
    count = std::min(count, pool);  // a pool cannot yield more distinct faces
    while (faces.size() < count) {
        std::string face = ts.face_from_pool(pool);
        if (std::find(faces.begin(), faces.end(), face) == faces.end())
            faces.push_back(std::move(face));
    }
    txn.by_products.face_encodings_count = static_cast<std::uint32_t>(faces.size());
}

void add_benign_labels(TenantStream& ts, Transaction& txn) {
    const std::uint64_t n = ts.rng().next_range(1, 3);
    for (std::uint64_t i = 0; i < n; ++i) {
        Label label;
        label.name = kBenignLabels[ts.rng().next_u64() % std::size(kBenignLabels)];
        label.confidence = 0.5 + ts.rng().next_double() * 0.49;
        txn.response.detected_labels.push_back(std::move(label));
    }
}

// One benign transaction at ts_ms with the common service mix.
void emit_benign_txn(TenantStream& ts, std::int64_t ts_ms, const ResolvedParams& params) {
    Rng& rng = ts.rng();
    const auto features =
        static_cast<std::uint32_t>(rng.next_range(1, params.count("features_max")));
    const double ident_share = params.get("ident_share");
    const double u = rng.next_double();
    const double face_detect_share = 0.5;
    const double rem = 1.0 - face_detect_share - ident_share;

    if (u < face_detect_share) {
        Transaction& txn = ts.emit(ts_ms, ServiceKind::FaceDetect, features);
        const std::uint64_t faces = rng.next_range(0, params.count("faces_per_input"));
        add_pool_faces(ts, txn, faces, params.count("distinct_face_pool"));
    } else if (u < face_detect_share + ident_share) {
        Transaction& txn = ts.emit(ts_ms, ServiceKind::FaceIdentify, features);
        // Targets come from the tenant's own face pool; identification does
        // not mint identities the detection traffic never sees.
        txn.request.target_face_id = ts.face_from_pool(
            std::min<std::uint64_t>(50, params.count("distinct_face_pool")));
        if (rng.next_bernoulli(0.5)) {
            txn.response.detected_face_ids.push_back(*txn.request.target_face_id);
            txn.by_products.face_encodings_count = 1;
        }
    } else if (u < face_detect_share + ident_share + rem * 0.45) {
        Transaction& txn = ts.emit(ts_ms, ServiceKind::ObjectDetect, features);
        add_benign_labels(ts, txn);
    } else if (u < face_detect_share + ident_share + rem * 0.825) {
        Transaction& txn = ts.emit(ts_ms, ServiceKind::LabelDetect, features);
        add_benign_labels(ts, txn);
    } else if (u < face_detect_share + ident_share + rem * 0.95) {
        Transaction& txn = ts.emit(ts_ms, ServiceKind::EmotionRecognize, features);
        const std::uint64_t faces = rng.next_range(0, 2);
        add_pool_faces(ts, txn, faces, params.count("distinct_face_pool"));
    } else {
        Transaction& txn = ts.emit(ts_ms, ServiceKind::OtherNonVision, features);
        txn.request.service.tag = "speech";
    }
}

// Poisson arrivals at rate_per_min over [from_ms, to_ms).
template <typename EmitFn>
void poisson_arrivals(Rng& rng, double rate_per_min, std::int64_t from_ms,
                      std::int64_t to_ms, EmitFn&& emit) {
    if (rate_per_min <= 0) return;
    const double mean_gap_ms = 60'000.0 / rate_per_min;
    double t = static_cast<double>(from_ms);
    while (true) {
        t += rng.next_exponential(mean_gap_ms);
        const auto ts = static_cast<std::int64_t>(t);
        if (ts >= to_ms) break;
        emit(ts);
    }
}

// Fixed number of arrivals at sorted uniform times over [0, duration_ms).
std::vector<std::int64_t> uniform_arrivals(Rng& rng, std::uint64_t count,
                                           std::int64_t duration_ms) {
    std::vector<std::int64_t> times(count);
    for (auto& t : times)
        t = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(duration_ms));
    std::sort(times.begin(), times.end());
    return times;
}

void gen_benign_tenant(TenantStream& ts, std::int64_t duration_ms,
                       const ResolvedParams& params) {
    poisson_arrivals(ts.rng(), params.get("base_rate_per_min"), 0, duration_ms,
                     [&](std::int64_t t) { emit_benign_txn(ts, t, params); });
}

}  // namespace

Workload generate_workload(const ScenarioSpec& spec) {
    const ResolvedParams params = resolve_params(spec);
    const std::uint64_t seed = spec.seed ^ 0x6d69737573654d4fULL;

    std::int64_t duration_ms = 0;
    if (spec.scenario == ScenarioId::BehaviorDrift) {
        duration_ms = static_cast<std::int64_t>(params.count("stable_hours") +
                                                params.count("drift_hours")) *
                      3'600'000;
        if (duration_ms <= 0)
            throw InvalidScenarioParams("stable_hours", "total duration must be positive");
    } else {
        duration_ms = static_cast<std::int64_t>(params.count("duration_s")) * 1000;
    }

    std::vector<std::vector<Transaction>> streams;
    std::vector<GroundTruthLabel> labels;

    const std::uint64_t benign_count = params.count("tenant_count");
    for (std::uint64_t i = 1; i <= benign_count; ++i) {
        TenantStream ts(spec.tenant_prefix + "t" + zero_pad(i, 3), seed);
        gen_benign_tenant(ts, duration_ms, params);
        streams.push_back(std::move(ts.stream()));
    }

    const std::string misuse_id = spec.tenant_prefix + "m001";
    switch (spec.scenario) {
        case ScenarioId::BenignBaseline:
            break;

        case ScenarioId::SurveillanceRate: {
            TenantStream ts(misuse_id, seed);
            poisson_arrivals(
                ts.rng(), params.get("misuse_rate_per_min"), 0, duration_ms,
                [&](std::int64_t t) {
                    const auto features = static_cast<std::uint32_t>(
                        ts.rng().next_range(1, params.count("features_max")));
                    Transaction& txn = ts.emit(t, ServiceKind::FaceDetect, features);
                    const std::uint64_t faces =
                        ts.rng().next_range(0, params.count("faces_per_input"));
                    add_pool_faces(ts, txn, faces, params.count("distinct_face_pool"));
                });
            streams.push_back(std::move(ts.stream()));
            labels.push_back({misuse_id, spec.scenario, 0, duration_ms});
            break;
        }

        case ScenarioId::CrowdAnalysis: {
            TenantStream ts(misuse_id, seed);
            const std::uint64_t crowd = params.count("crowd_faces_per_input");
            const std::uint64_t pool = params.count("crowd_face_pool");
            poisson_arrivals(ts.rng(), params.get("misuse_rate_per_min"), 0, duration_ms,
                             [&](std::int64_t t) {
                                 Transaction& txn = ts.emit(t, ServiceKind::FaceDetect, 1);
                                 // Consecutive pool block: distinct by construction.
                                 const std::uint64_t start = ts.rng().next_u64() % pool;
                                 for (std::uint64_t f = 0; f < crowd; ++f)
                                     txn.response.detected_face_ids.push_back(
                                         "f-" + misuse_id + "-" +
                                         std::to_string((start + f) % pool));
                                 txn.by_products.face_encodings_count =
                                     static_cast<std::uint32_t>(crowd);
                             });
            streams.push_back(std::move(ts.stream()));
            labels.push_back({misuse_id, spec.scenario, 0, duration_ms});
            break;
        }

        case ScenarioId::DistinctFacesOverTime: {
            TenantStream ts(misuse_id, seed);
            const std::uint64_t per_input = params.count("misuse_faces_per_input");
            poisson_arrivals(ts.rng(), params.get("misuse_rate_per_min"), 0, duration_ms,
                             [&](std::int64_t t) {
                                 Transaction& txn = ts.emit(t, ServiceKind::FaceDetect, 1);
                                 for (std::uint64_t f = 0; f < per_input; ++f)
                                     txn.response.detected_face_ids.push_back(ts.fresh_face());
                                 txn.by_products.face_encodings_count =
                                     static_cast<std::uint32_t>(per_input);
                             });
            streams.push_back(std::move(ts.stream()));
            labels.push_back({misuse_id, spec.scenario, 0, duration_ms});
            break;
        }

        case ScenarioId::TargetTracking: {
            TenantStream ts(misuse_id, seed);
            const std::string victim = "tg-" + misuse_id + "-victim";
            const double share = params.get("target_query_share");
            const std::uint64_t pool = params.count("target_pool");
            for (std::int64_t t :
                 uniform_arrivals(ts.rng(), params.count("ident_calls"), duration_ms)) {
                Transaction& txn = ts.emit(t, ServiceKind::FaceIdentify, 1);
                txn.request.target_face_id =
                    ts.rng().next_bernoulli(share)
                        ? victim
                        : "tg-" + misuse_id + "-" +
                              std::to_string(ts.rng().next_u64() % pool);
                if (ts.rng().next_bernoulli(0.5)) {
                    txn.response.detected_face_ids.push_back(*txn.request.target_face_id);
                    txn.by_products.face_encodings_count = 1;
                }
            }
            streams.push_back(std::move(ts.stream()));
            labels.push_back({misuse_id, spec.scenario, 0, duration_ms});
            break;
        }

        case ScenarioId::BlacklistScreening: {
            TenantStream ts(misuse_id, seed);
            std::vector<std::int64_t> planted;
            const std::uint64_t per_hour = params.count("matches_per_hour");
            for (std::int64_t hour = 0; hour * 3'600'000 < duration_ms; ++hour) {
                const std::int64_t start = hour * 3'600'000;
                const std::int64_t span = std::min<std::int64_t>(3'600'000, duration_ms - start);
                for (std::uint64_t i = 0; i < per_hour; ++i)
                    planted.push_back(
                        start + static_cast<std::int64_t>(
                                    ts.rng().next_u64() % static_cast<std::uint64_t>(span)));
            }
            std::sort(planted.begin(), planted.end());
            for (std::int64_t t : planted) {
                Transaction& txn = ts.emit(t, ServiceKind::ObjectDetect, 1);
                txn.response.detected_labels.push_back(
                    {std::string(kPlantedLabel), 0.9});
                add_benign_labels(ts, txn);
            }
            // Plus an in-profile background so only the blacklist stands out.
            std::vector<Transaction> planted_stream = std::move(ts.stream());
            TenantStream background(misuse_id + "-bg", seed);
            gen_benign_tenant(background, duration_ms, params);
            std::vector<Transaction> bg = std::move(background.stream());
            for (auto& txn : bg) {
                txn.meta.tenant_id = misuse_id;  // fold into the misuse tenant
            }
            streams.push_back(std::move(planted_stream));
            streams.push_back(std::move(bg));
            labels.push_back({misuse_id, spec.scenario, 0, duration_ms});
            break;
        }

        case ScenarioId::BehaviorDrift: {
            // Face-detection-only population: hourly counts sit far above the
            // anomaly sigma floor, so the scripted 10x jump is the only thing
            // that stands out over 48+ stable windows.
            auto face_only = [&](TenantStream& ts) {
                return [&ts, &params](std::int64_t t) {
                    const auto features = static_cast<std::uint32_t>(
                        ts.rng().next_range(1, params.count("features_max")));
                    Transaction& txn = ts.emit(t, ServiceKind::FaceDetect, features);
                    const std::uint64_t faces =
                        ts.rng().next_range(0, params.count("faces_per_input"));
                    add_pool_faces(ts, txn, faces, params.count("distinct_face_pool"));
                };
            };
            // Replace the mixed-traffic benign population generated above.
            streams.clear();
            for (std::uint64_t i = 1; i <= benign_count; ++i) {
                TenantStream ts(spec.tenant_prefix + "t" + zero_pad(i, 3), seed);
                poisson_arrivals(ts.rng(), params.get("base_rate_per_min"), 0, duration_ms,
                                 face_only(ts));
                streams.push_back(std::move(ts.stream()));
            }
            TenantStream ts(misuse_id, seed);
            const std::int64_t drift_start =
                static_cast<std::int64_t>(params.count("stable_hours")) * 3'600'000;
            const double base = params.get("base_rate_per_min");
            poisson_arrivals(ts.rng(), base, 0, drift_start, face_only(ts));
            poisson_arrivals(ts.rng(), base * params.get("drift_multiplier"), drift_start,
                             duration_ms, face_only(ts));
            streams.push_back(std::move(ts.stream()));
            labels.push_back({misuse_id, spec.scenario, drift_start, duration_ms});
            break;
        }

        case ScenarioId::InversionProbe: {
            const std::uint64_t accounts = params.count("probe_accounts");
            const std::uint64_t flip_bits = params.count("probe_flip_bits");
            Rng probe_rng(hash64("probe-coordinator", seed));
            const std::uint64_t base_fingerprint = probe_rng.next_u64();

            std::vector<TenantStream> probes;
            probes.reserve(accounts);
            for (std::uint64_t i = 1; i <= accounts; ++i)
                probes.emplace_back(spec.tenant_prefix + "p" + zero_pad(i, 3), seed);

            for (std::int64_t t :
                 uniform_arrivals(probe_rng, params.count("probe_queries"), duration_ms)) {
                TenantStream& ts = probes[probe_rng.next_u64() % accounts];
                Transaction& txn = ts.emit(t, ServiceKind::FaceIdentify, 1);
                txn.request.target_face_id = "pv-" + std::to_string(probe_rng.next_u64());
                // Near-duplicate of the shared base: <= flip_bits bits flipped,
                // so any two probes are within 2*flip_bits of each other.
                std::uint64_t fp = base_fingerprint;
                const std::uint64_t flips = probe_rng.next_u64() % (flip_bits + 1);
                for (std::uint64_t f = 0; f < flips; ++f)
                    fp ^= 1ULL << (probe_rng.next_u64() % 64);
                txn.request.content_fingerprint = fp;
            }
            for (auto& probe : probes) {
                labels.push_back({probe.tenant_id(), spec.scenario, 0, duration_ms});
                streams.push_back(std::move(probe.stream()));
            }
            break;
        }
    }

    Workload workload;
    workload.transactions = merge_streams(std::move(streams));
    workload.labels = std::move(labels);
    std::sort(workload.labels.begin(), workload.labels.end(),
              [](const GroundTruthLabel& a, const GroundTruthLabel& b) {
                  return a.tenant_id < b.tenant_id;
              });
    return workload;
}

// --------------------------------------------------------------------------
// Merge
// --------------------------------------------------------------------------

namespace {

bool txn_order_ok(const Transaction& a, const Transaction& b) {
    if (a.meta.timestamp_ms != b.meta.timestamp_ms)
        return a.meta.timestamp_ms < b.meta.timestamp_ms;
    return a.meta.txn_id <= b.meta.txn_id;
}

}  // namespace

std::vector<Transaction> merge_streams(std::vector<std::vector<Transaction>> streams) {
    std::size_t total = 0;
    for (std::size_t s = 0; s < streams.size(); ++s) {
        const auto& stream = streams[s];
        total += stream.size();
        for (std::size_t i = 1; i < stream.size(); ++i) {
            if (!txn_order_ok(stream[i - 1], stream[i]))
                throw UnorderedInput("stream " + std::to_string(s) + " at index " +
                                     std::to_string(i));
        }
    }

    struct Head {
        std::int64_t ts;
        const std::string* txn_id;
        std::size_t stream;
        std::size_t index;
    };
    auto greater = [](const Head& a, const Head& b) {
        if (a.ts != b.ts) return a.ts > b.ts;
        return *a.txn_id > *b.txn_id;
    };
    std::priority_queue<Head, std::vector<Head>, decltype(greater)> heads(greater);
    for (std::size_t s = 0; s < streams.size(); ++s) {
        if (!streams[s].empty())
            heads.push({streams[s][0].meta.timestamp_ms, &streams[s][0].meta.txn_id, s, 0});
    }

    std::vector<Transaction> merged;
    merged.reserve(total);
    while (!heads.empty()) {
        const Head head = heads.top();
        heads.pop();
        merged.push_back(std::move(streams[head.stream][head.index]));
        const std::size_t next = head.index + 1;
        if (next < streams[head.stream].size()) {
            heads.push({streams[head.stream][next].meta.timestamp_ms,
                        &streams[head.stream][next].meta.txn_id, head.stream, next});
        }
    }
    return merged;
}

// --------------------------------------------------------------------------
// Labels file
// --------------------------------------------------------------------------

std::string encode_label(const GroundTruthLabel& label) {
    std::string out = escape_field(label.tenant_id);
    out += '\t';
    out += scenario_name(label.scenario);
    out += '\t';
    out += std::to_string(label.start_ms);
    out += '\t';
    out += std::to_string(label.end_ms);
    return out;
}

GroundTruthLabel decode_label(std::string_view line) {
    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        std::size_t tab = line.find('\t', start);
        if (i < 3) {
            if (tab == std::string_view::npos)
                throw MalformedRecord(line.size(), "label record truncated");
            fields[i] = line.substr(start, tab - start);
            start = tab + 1;
        } else {
            fields[i] = line.substr(start);
        }
    }
    GroundTruthLabel label;
    label.tenant_id = unescape_field(fields[0]);
    const auto scenario = parse_scenario(fields[1]);
    if (!scenario) throw MalformedRecord(0, "unknown scenario in label");
    label.scenario = *scenario;
    auto parse_ms = [](std::string_view s) {
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw MalformedRecord(0, "unparseable label timestamp");
        return value;
    };
    label.start_ms = parse_ms(fields[2]);
    label.end_ms = parse_ms(fields[3]);
    return label;
}

void write_label_log(std::ostream& out, std::span<const GroundTruthLabel> labels) {
    out << kLabelLogHeader << '\n';
    for (const auto& label : labels) out << encode_label(label) << '\n';
}

std::vector<GroundTruthLabel> read_label_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kLabelLogHeader)
        throw MalformedRecord(0, "missing or unsupported label log header");
    std::vector<GroundTruthLabel> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        labels.push_back(decode_label(line));
    }
    return labels;
}

// --------------------------------------------------------------------------
// Scenario config
// --------------------------------------------------------------------------

ScenarioSpec parse_scenario_spec(std::string_view json_text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
    try {
        ScenarioSpec spec;
        const auto name = doc.at("scenario").get<std::string>();
        const auto id = parse_scenario(name);
        if (!id) throw ConfigError(origin, "unknown scenario " + name);
        spec.scenario = *id;
        if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("tenant_prefix"))
            spec.tenant_prefix = doc["tenant_prefix"].get<std::string>();
        if (doc.contains("params")) {
            for (const auto& [key, value] : doc["params"].items())
                spec.params[key] = value.get<double>();
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
}

ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open scenario file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_spec(buffer.str(), path);
}

}  // namespace aimon
