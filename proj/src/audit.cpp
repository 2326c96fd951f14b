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

#include "aimon/audit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>

#include "aimon/errors.hpp"

namespace aimon {

namespace {

constexpr std::int64_t kDayMs = 86'400'000;
constexpr std::int64_t kRequestRetentionMs = 3'600'000;

}  // namespace

std::string fold_label(std::string_view label) {
    std::string out;
    out.reserve(label.size());
    for (char c : label)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::set<std::string> blacklist_matches(const Transaction& txn,
                                        const std::unordered_set<std::string>& blacklist,
                                        double confidence_floor) {
    std::set<std::string> matched;
    if (blacklist.empty()) return matched;
    for (const Label& label : txn.response.detected_labels) {
        if (label.confidence < confidence_floor) continue;
        std::string folded = fold_label(label.name);
        if (blacklist.contains(folded)) matched.insert(std::move(folded));
    }
    return matched;
}

std::vector<std::string> load_blacklist_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open blacklist file");
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        const std::size_t end = line.find_last_not_of(" \t");
        labels.push_back(fold_label(std::string_view(line).substr(start, end - start + 1)));
    }
    return labels;
}

// --------------------------------------------------------------------------

AuditState::TenantAudit::TenantAudit(const AuditConfig& config)
    : session_faces(config.distinct_precision),
      daily_faces(config.distinct_precision),
      total_faces(config.distinct_precision),
      targets(config.heavy_hitter_capacity) {}

AuditState::AuditState(AuditConfig config) : config_(std::move(config)) {
    for (const auto& label : config_.blacklist)
        blacklist_folded_.insert(fold_label(label));
}

AuditState::TenantAudit& AuditState::tenant_for(const std::string& tenant_id) {
    auto it = tenants_.find(tenant_id);
    if (it == tenants_.end())
        it = tenants_.emplace(tenant_id, TenantAudit(config_)).first;
    return it->second;
}

const AuditState::TenantAudit& AuditState::require_tenant(const std::string& tenant_id) const {
    auto it = tenants_.find(tenant_id);
    if (it == tenants_.end()) throw UnknownTenant(tenant_id);
    return it->second;
}

std::uint32_t AuditState::tenant_index(const std::string& tenant_id) {
    auto it = tenant_index_.find(tenant_id);
    if (it != tenant_index_.end()) return it->second;
    const auto idx = static_cast<std::uint32_t>(tenant_names_.size());
    tenant_names_.push_back(tenant_id);
    tenant_index_.emplace(tenant_id, idx);
    return idx;
}

void AuditState::ingest(const Transaction& txn, MonitoringLevel level) {
    const std::int64_t ts = txn.meta.timestamp_ms;
    if (ts < high_water_ms_ - config_.clock_tolerance_ms)
        throw ClockRegression(ts, high_water_ms_);
    high_water_ms_ = std::max(high_water_ms_, ts);

    TenantAudit& tenant = tenant_for(txn.meta.tenant_id);
    const ServiceKind kind = txn.request.service.kind;

    // Profile window bookkeeping (aligned to profile_window_ms).
    const std::int64_t window_index = ts / config_.profile_window_ms;
    if (tenant.open_window_index < 0) {
        tenant.open_window_index = window_index;
    } else {
        close_tenant_windows_until(tenant, window_index * config_.profile_window_ms);
    }

    // Metadata-derived structures advance at every level.
    tenant.requests.emplace_back(ts, kind);
    while (!tenant.requests.empty() &&
           tenant.requests.front().first <= ts - kRequestRetentionMs)
        tenant.requests.pop_front();

    tenant.window_service_counts[static_cast<std::size_t>(kind)]++;
    tenant.window_txn_count++;
    if (is_identification_service(kind)) {
        tenant.window_ident_calls++;
        tenant.ident_calls++;
    }

    if (level == MonitoringLevel::MetadataOnly) return;

    // Payload-derived structures.
    const auto& faces = txn.response.detected_face_ids;
    if (!faces.empty()) {
        const std::int64_t day = ts / kDayMs;
        if (day != tenant.current_day) {
            tenant.daily_faces.clear();
            tenant.current_day = day;
        }
        for (const auto& face : faces) {
            tenant.session_faces.insert(face);
            tenant.daily_faces.insert(face);
            tenant.total_faces.insert(face);
        }
        tenant.window_faces_sum += faces.size();
    }

    const auto face_count = static_cast<std::uint32_t>(faces.size());
    while (!tenant.faces_max_window.empty() &&
           std::get<1>(tenant.faces_max_window.back()) <= face_count)
        tenant.faces_max_window.pop_back();
    tenant.faces_max_window.emplace_back(ts, face_count, txn.request.input_id);
    while (!tenant.faces_max_window.empty() &&
           std::get<0>(tenant.faces_max_window.front()) <= ts - config_.profile_window_ms)
        tenant.faces_max_window.pop_front();

    const auto matched =
        blacklist_matches(txn, blacklist_folded_, config_.blacklist_confidence_floor);
    if (!matched.empty()) {
        for (std::size_t i = 0; i < matched.size(); ++i)
            tenant.blacklist_hits.push_back(ts);
        tenant.blacklist_total += matched.size();
        tenant.window_blacklist_matches += matched.size();
        while (!tenant.blacklist_hits.empty() &&
               tenant.blacklist_hits.front() <= ts - kRequestRetentionMs)
            tenant.blacklist_hits.pop_front();
    }

    auto& input = tenant.inputs[txn.request.input_id];
    input.services.insert(kind);
    input.face_count_max = std::max(input.face_count_max, face_count);
    if (!matched.empty()) input.blacklist_hit = true;
    if (input.blacklist_hit && input.face_count_max >= 1 && !input.combo_flagged) {
        input.combo_flagged = true;
        tenant.combo_events.emplace_back(ts, txn.request.input_id);
    }

    if (is_identification_service(kind) && txn.request.target_face_id)
        tenant.targets.insert(*txn.request.target_face_id);

    auto& events = fingerprints_by_kind_[static_cast<std::size_t>(kind)];
    events.push_back({ts, tenant_index(txn.meta.tenant_id), txn.request.content_fingerprint});
    while (!events.empty() && events.front().ts_ms <= ts - config_.correlation_window_ms)
        events.pop_front();
}

UsageProfile AuditState::make_profile(TenantAudit& tenant, std::int64_t window_index) const {
    UsageProfile profile;
    profile.window_start_ms = window_index * config_.profile_window_ms;
    profile.window_end_ms = profile.window_start_ms + config_.profile_window_ms;
    auto& v = profile.components;
    for (int kind = 0; kind < profile_component::kServiceKinds; ++kind)
        v[kind] = static_cast<double>(tenant.window_service_counts[static_cast<std::size_t>(kind)]);
    const double txns = static_cast<double>(tenant.window_txn_count);
    if (tenant.window_txn_count > 0) {
        v[profile_component::kMeanFacesPerInput] =
            static_cast<double>(tenant.window_faces_sum) / txns;
        v[profile_component::kIdentificationShare] =
            static_cast<double>(tenant.window_ident_calls) / txns;
    }
    const double total_estimate = tenant.total_faces.estimate().value;
    v[profile_component::kDistinctFacesDelta] =
        std::max(0.0, total_estimate - tenant.last_total_estimate);
    v[profile_component::kBlacklistMatches] =
        static_cast<double>(tenant.window_blacklist_matches);
    return profile;
}

void AuditState::close_window(TenantAudit& tenant, std::int64_t window_index) {
    UsageProfile profile = make_profile(tenant, window_index);
    tenant.last_total_estimate = tenant.total_faces.estimate().value;
    tenant.closed_profiles.push_back(std::move(profile));
    while (tenant.closed_profiles.size() > config_.profile_history)
        tenant.closed_profiles.pop_front();
    tenant.window_service_counts.fill(0);
    tenant.window_txn_count = 0;
    tenant.window_faces_sum = 0;
    tenant.window_ident_calls = 0;
    tenant.window_blacklist_matches = 0;
}

void AuditState::close_tenant_windows_until(TenantAudit& tenant, std::int64_t t_ms) {
    if (tenant.open_window_index < 0) return;
    const std::int64_t target = t_ms / config_.profile_window_ms;
    // Only the trailing profile_history windows can survive the ring; skip
    // ahead across idle gaps longer than that.
    if (target - tenant.open_window_index >
        static_cast<std::int64_t>(config_.profile_history) + 1) {
        const std::int64_t skip_to =
            target - static_cast<std::int64_t>(config_.profile_history) - 1;
        // Close the (activity-bearing) open window first, then jump.
        close_window(tenant, tenant.open_window_index);
        tenant.open_window_index = skip_to;
    }
    while (tenant.open_window_index < target) {
        close_window(tenant, tenant.open_window_index);
        tenant.open_window_index++;
    }
}

void AuditState::close_windows_until(std::int64_t t_ms) {
    for (auto& [id, tenant] : tenants_) close_tenant_windows_until(tenant, t_ms);
}

// --------------------------------------------------------------------------
// Queries
// --------------------------------------------------------------------------

std::uint64_t AuditState::count_in_window(const std::string& tenant_id, ServiceGroup group,
                                          std::int64_t from_ms, std::int64_t to_ms) const {
    const TenantAudit& tenant = require_tenant(tenant_id);
    std::uint64_t count = 0;
    for (const auto& [ts, kind] : tenant.requests) {
        if (ts >= from_ms && ts < to_ms && group_of(kind) == group) ++count;
    }
    return count;
}

double AuditState::window_rate(const std::string& tenant_id, ServiceGroup group,
                               std::int64_t window_s) const {
    if (window_s != 60 && window_s != 3600)
        throw Error("window_rate supports 60 s and 3600 s windows");
    const std::int64_t w = window_s * 1000;
    const std::uint64_t count =
        count_in_window(tenant_id, group, high_water_ms_ - w + 1, high_water_ms_ + 1);
    return static_cast<double>(count) * 60.0 / static_cast<double>(window_s);
}

AuditState::DistinctEstimate AuditState::distinct_faces(const std::string& tenant_id,
                                                        Horizon horizon) const {
    if (config_.level == MonitoringLevel::MetadataOnly)
        throw UnavailableAtMonitoringLevel("distinct face cardinality");
    const TenantAudit& tenant = require_tenant(tenant_id);
    const DistinctSketch* sketch = nullptr;
    switch (horizon) {
        case Horizon::Session: sketch = &tenant.session_faces; break;
        case Horizon::Daily: sketch = &tenant.daily_faces; break;
        case Horizon::Total: sketch = &tenant.total_faces; break;
    }
    const auto estimate = sketch->estimate();
    return {estimate.value, estimate.relative_error};
}

std::vector<AuditState::TargetCount> AuditState::top_identification_targets(
    const std::string& tenant_id, double phi) const {
    if (config_.level == MonitoringLevel::MetadataOnly)
        throw UnavailableAtMonitoringLevel("identification targets");
    const TenantAudit& tenant = require_tenant(tenant_id);
    std::vector<TargetCount> out;
    for (const auto& entry : tenant.targets.heavy_hitters(phi))
        out.push_back({entry.item, entry.count, entry.error});
    return out;
}

std::uint64_t AuditState::identification_calls(const std::string& tenant_id) const {
    return require_tenant(tenant_id).ident_calls;
}

InputCorrelation AuditState::correlate_input(const std::string& tenant_id,
                                             const std::string& input_id) const {
    if (config_.level == MonitoringLevel::MetadataOnly)
        throw UnavailableAtMonitoringLevel("input correlation");
    const TenantAudit& tenant = require_tenant(tenant_id);
    auto it = tenant.inputs.find(input_id);
    if (it == tenant.inputs.end()) throw UnknownInput(input_id);
    return it->second;
}

std::vector<UsageProfile> AuditState::profile_snapshot(const std::string& tenant_id) const {
    const TenantAudit& tenant = require_tenant(tenant_id);
    return {tenant.closed_profiles.begin(), tenant.closed_profiles.end()};
}

std::uint64_t AuditState::blacklist_matches_in(const std::string& tenant_id,
                                               std::int64_t from_ms,
                                               std::int64_t to_ms) const {
    const TenantAudit& tenant = require_tenant(tenant_id);
    std::uint64_t count = 0;
    for (std::int64_t ts : tenant.blacklist_hits)
        if (ts >= from_ms && ts < to_ms) ++count;
    return count;
}

AuditState::WindowMaxFaces AuditState::max_faces_in(const std::string& tenant_id,
                                                    std::int64_t from_ms,
                                                    std::int64_t to_ms) const {
    const TenantAudit& tenant = require_tenant(tenant_id);
    WindowMaxFaces out;
    for (const auto& [ts, faces, input] : tenant.faces_max_window) {
        if (ts >= from_ms && ts < to_ms && faces > out.faces) {
            out.faces = faces;
            out.input_id = input;
        }
    }
    return out;
}

std::vector<std::string> AuditState::combo_inputs_in(const std::string& tenant_id,
                                                     std::int64_t from_ms,
                                                     std::int64_t to_ms) const {
    const TenantAudit& tenant = require_tenant(tenant_id);
    std::vector<std::string> out;
    for (const auto& [ts, input] : tenant.combo_events)
        if (ts >= from_ms && ts < to_ms) out.push_back(input);
    return out;
}

const std::deque<AuditState::FingerprintEvent>& AuditState::fingerprint_events(
    ServiceKind kind) const {
    return fingerprints_by_kind_[static_cast<std::size_t>(kind)];
}

const std::string& AuditState::tenant_name(std::uint32_t index) const {
    return tenant_names_.at(index);
}

std::vector<std::string> AuditState::tenants() const {
    std::vector<std::string> out;
    out.reserve(tenants_.size());
    for (const auto& [id, tenant] : tenants_) out.push_back(id);
    return out;
}

bool AuditState::has_tenant(const std::string& tenant_id) const {
    return tenants_.contains(tenant_id);
}

std::size_t AuditState::memory_bytes() const {
    std::size_t bytes = sizeof(*this);
    for (const auto& [id, tenant] : tenants_) {
        bytes += id.capacity() + sizeof(TenantAudit);
        bytes += tenant.requests.size() * sizeof(std::pair<std::int64_t, ServiceKind>);
        bytes += tenant.session_faces.memory_bytes() + tenant.daily_faces.memory_bytes() +
                 tenant.total_faces.memory_bytes();
        bytes += tenant.targets.memory_bytes();
        for (const auto& [input, corr] : tenant.inputs)
            bytes += input.capacity() + sizeof(InputCorrelation) +
                     corr.services.size() * sizeof(ServiceKind) + 48;
        for (const auto& [ts, input] : tenant.combo_events)
            bytes += sizeof(ts) + input.capacity();
        bytes += tenant.blacklist_hits.size() * sizeof(std::int64_t);
        for (const auto& [ts, faces, input] : tenant.faces_max_window)
            bytes += sizeof(ts) + sizeof(faces) + input.capacity();
        bytes += tenant.closed_profiles.size() *
                 (sizeof(UsageProfile) + profile_component::kDimension * sizeof(double));
    }
    for (const auto& events : fingerprints_by_kind_)
        bytes += events.size() * sizeof(FingerprintEvent);
    return bytes;
}

void AuditState::dump(std::ostream& out) const {
    out << "#aimon-audit v1 level=" << monitoring_level_name(config_.level)
        << " hw=" << high_water_ms_ << '\n';
    for (const auto& [id, tenant] : tenants_) {
        out << "tenant " << id << '\n';
        out << " req";
        for (const auto& [ts, kind] : tenant.requests)
            out << ' ' << ts << ':' << service_kind_name(kind);
        out << '\n';
        out << " session ";
        tenant.session_faces.dump(out);
        out << " daily(" << tenant.current_day << ") ";
        tenant.daily_faces.dump(out);
        out << " total ";
        tenant.total_faces.dump(out);
        out << " targets ident=" << tenant.ident_calls << ' ';
        tenant.targets.dump(out);
        out << " inputs";
        {
            std::vector<const std::pair<const std::string, InputCorrelation>*> sorted;
            sorted.reserve(tenant.inputs.size());
            for (const auto& entry : tenant.inputs) sorted.push_back(&entry);
            std::sort(sorted.begin(), sorted.end(),
                      [](auto* a, auto* b) { return a->first < b->first; });
            for (const auto* entry : sorted) {
                out << ' ' << entry->first << '=';
                for (ServiceKind kind : entry->second.services)
                    out << service_kind_name(kind) << '+';
                out << entry->second.face_count_max
                    << (entry->second.blacklist_hit ? "!b" : "");
            }
        }
        out << '\n';
        out << " combos";
        for (const auto& [ts, input] : tenant.combo_events) out << ' ' << ts << ':' << input;
        out << '\n';
        out << " blhits total=" << tenant.blacklist_total;
        for (std::int64_t ts : tenant.blacklist_hits) out << ' ' << ts;
        out << '\n';
        out << " profiles open=" << tenant.open_window_index
            << " lastest=" << format_double(tenant.last_total_estimate)
            << " acc=" << tenant.window_txn_count << '/' << tenant.window_faces_sum << '/'
            << tenant.window_ident_calls << '/' << tenant.window_blacklist_matches << '\n';
        for (const auto& profile : tenant.closed_profiles) {
            out << "  w " << profile.window_start_ms << '-' << profile.window_end_ms;
            for (int c = 0; c < profile_component::kDimension; ++c)
                out << ' ' << format_double(profile.components[c]);
            out << '\n';
        }
    }
    out << "fingerprints\n";
    for (std::size_t k = 0; k < fingerprints_by_kind_.size(); ++k) {
        if (fingerprints_by_kind_[k].empty()) continue;
        out << ' ' << service_kind_name(static_cast<ServiceKind>(k));
        for (const auto& event : fingerprints_by_kind_[k])
            out << ' ' << event.ts_ms << ':' << tenant_name(event.tenant_index) << ':'
                << event.fingerprint;
        out << '\n';
    }
}

}  // namespace aimon
