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

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "aimon/profile.hpp"
#include "aimon/sketch.hpp"
#include "aimon/txn.hpp"

namespace aimon {

struct AuditConfig {
    MonitoringLevel level = MonitoringLevel::FullContent;
    unsigned distinct_precision = 12;
    std::size_t heavy_hitter_capacity = 1024;
    std::int64_t profile_window_ms = 3'600'000;  // hourly usage windows
    std::size_t profile_history = 168;           // one week of hourly windows
    double blacklist_confidence_floor = 0.5;
    std::int64_t correlation_window_ms = 3'600'000;  // fingerprint lookback
    std::int64_t clock_tolerance_ms = 0;
    std::vector<std::string> blacklist;  // folded to lower case on construction
};

// Case-folded intersection of a transaction's detected labels (at or above
// the confidence floor) with the blacklist.
std::set<std::string> blacklist_matches(const Transaction& txn,
                                        const std::unordered_set<std::string>& blacklist,
                                        double confidence_floor = 0.5);

std::string fold_label(std::string_view label);

// Blacklist file: one label per line, case-insensitive, '#' comments and
// blank lines ignored.
std::vector<std::string> load_blacklist_file(const std::string& path);

// Accumulated cross-service view of one input for one tenant.
struct InputCorrelation {
    std::set<ServiceKind> services;
    std::uint32_t face_count_max = 0;
    bool blacklist_hit = false;
    bool combo_flagged = false;  // bookkeeping: already emitted as a combo event
};

// Per-tenant derived audit data: sliding rate counters, distinct-face
// sketches over three horizons, identification-target heavy hitters, hourly
// usage profiles, per-input correlation and blacklist matches, plus a
// cross-tenant fingerprint trail for probe detection.
//
// Everything is reconstructible from the raw log: ingesting the same
// transactions in the same order always produces the same state, and dump()
// is a canonical text rendering suitable for replay-equality checks and
// checkpoint digests.
class AuditState {
public:
    explicit AuditState(AuditConfig config = {});

    const AuditConfig& config() const { return config_; }

    // Uses the configured monitoring level.
    void ingest(const Transaction& txn) { ingest(txn, config_.level); }
    // At MetadataOnly only rate counters and the metadata components of the
    // profile accumulator advance. Throws ClockRegression when the timestamp
    // runs backwards beyond tolerance.
    void ingest(const Transaction& txn, MonitoringLevel level);

    // Closes every profile window ending at or before t_ms for every tenant
    // (emitting zero-activity windows across gaps). Call at evaluation
    // boundaries so peer comparisons see aligned windows.
    void close_windows_until(std::int64_t t_ms);

    // --- queries ------------------------------------------------------

    // Exact trailing-window request rate, normalized to per minute, relative
    // to the state's high-water mark. window_s must be 60 or 3600.
    double window_rate(const std::string& tenant, ServiceGroup group,
                       std::int64_t window_s) const;

    // Exact count of requests in [from_ms, to_ms) for a service group.
    // Events are retained for one hour behind the high-water mark; windows
    // reaching further back undercount.
    std::uint64_t count_in_window(const std::string& tenant, ServiceGroup group,
                                  std::int64_t from_ms, std::int64_t to_ms) const;

    enum class Horizon : std::uint8_t { Session, Daily, Total };

    struct DistinctEstimate {
        double value = 0.0;
        double relative_error = 0.0;
    };
    // Distinct detected-face cardinality. Exact (error 0) while the sketch
    // holds few items; otherwise estimate with the register-sketch error
    // bound. Throws UnavailableAtMonitoringLevel at MetadataOnly.
    DistinctEstimate distinct_faces(const std::string& tenant, Horizon horizon) const;

    struct TargetCount {
        std::string target;
        std::uint64_t est_count = 0;  // upper bound
        std::uint64_t error = 0;      // est_count - error is a lower bound
    };
    // Identification targets with estimated frequency >= phi of the tenant's
    // identification calls. No false negatives versus the exact frequencies.
    std::vector<TargetCount> top_identification_targets(const std::string& tenant,
                                                        double phi) const;

    std::uint64_t identification_calls(const std::string& tenant) const;

    InputCorrelation correlate_input(const std::string& tenant,
                                     const std::string& input_id) const;

    // Closed windows, oldest to newest.
    std::vector<UsageProfile> profile_snapshot(const std::string& tenant) const;

    // Number of blacklist label matches in [from_ms, to_ms).
    std::uint64_t blacklist_matches_in(const std::string& tenant, std::int64_t from_ms,
                                       std::int64_t to_ms) const;

    // Largest single-input face count observed in [from_ms, to_ms), with the
    // input id it occurred on. Returns {0, ""} when none. Same one-hour
    // retention as count_in_window.
    struct WindowMaxFaces {
        std::uint32_t faces = 0;
        std::string input_id;
    };
    WindowMaxFaces max_faces_in(const std::string& tenant, std::int64_t from_ms,
                                std::int64_t to_ms) const;

    // Inputs that first combined a blacklist hit with detected faces in
    // [from_ms, to_ms); candidates for the cross-service indicator.
    std::vector<std::string> combo_inputs_in(const std::string& tenant,
                                             std::int64_t from_ms,
                                             std::int64_t to_ms) const;

    // Cross-tenant fingerprint events for probe clustering.
    struct FingerprintEvent {
        std::int64_t ts_ms = 0;
        std::uint32_t tenant_index = 0;
        std::uint64_t fingerprint = 0;
    };
    const std::deque<FingerprintEvent>& fingerprint_events(ServiceKind kind) const;
    const std::string& tenant_name(std::uint32_t index) const;
    bool fingerprints_available() const {
        return config_.level != MonitoringLevel::MetadataOnly;
    }

    std::vector<std::string> tenants() const;  // sorted
    bool has_tenant(const std::string& tenant) const;
    std::int64_t high_water_ms() const { return high_water_ms_; }

    // Approximate bytes held by derived structures; used by the bench report.
    std::size_t memory_bytes() const;

    // Canonical text dump (versioned); equal states dump equal bytes.
    void dump(std::ostream& out) const;

private:
    struct TenantAudit {
        // (ts, kind) events pruned to the longest rate window (3600 s).
        std::deque<std::pair<std::int64_t, ServiceKind>> requests;

        DistinctSketch session_faces;
        DistinctSketch daily_faces;
        DistinctSketch total_faces;
        std::int64_t current_day = -1;

        HeavyHitterSketch targets;
        std::uint64_t ident_calls = 0;

        std::unordered_map<std::string, InputCorrelation> inputs;
        std::deque<std::pair<std::int64_t, std::string>> combo_events;

        std::deque<std::int64_t> blacklist_hits;
        std::uint64_t blacklist_total = 0;

        // Monotone max-deque of (ts, faces, input) over the profile window.
        std::deque<std::tuple<std::int64_t, std::uint32_t, std::string>> faces_max_window;

        // Hourly profile accumulator + closed ring.
        std::int64_t open_window_index = -1;
        std::array<std::uint64_t, profile_component::kServiceKinds> window_service_counts{};
        std::uint64_t window_txn_count = 0;
        std::uint64_t window_faces_sum = 0;
        std::uint64_t window_ident_calls = 0;
        std::uint64_t window_blacklist_matches = 0;
        double last_total_estimate = 0.0;
        std::deque<UsageProfile> closed_profiles;

        explicit TenantAudit(const AuditConfig& config);
    };

    TenantAudit& tenant_for(const std::string& tenant_id);
    const TenantAudit& require_tenant(const std::string& tenant_id) const;
    void close_window(TenantAudit& tenant, std::int64_t window_index);
    void close_tenant_windows_until(TenantAudit& tenant, std::int64_t t_ms);
    UsageProfile make_profile(TenantAudit& tenant, std::int64_t window_index) const;
    std::uint32_t tenant_index(const std::string& tenant_id);

    AuditConfig config_;
    std::unordered_set<std::string> blacklist_folded_;
    std::int64_t high_water_ms_ = -1;
    std::map<std::string, TenantAudit> tenants_;

    std::vector<std::string> tenant_names_;
    std::unordered_map<std::string, std::uint32_t> tenant_index_;
    std::array<std::deque<FingerprintEvent>, 9> fingerprints_by_kind_;
};

}  // namespace aimon
