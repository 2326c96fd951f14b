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

#include "aimon/gateway.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "aimon/errors.hpp"

namespace aimon {

namespace {

constexpr std::int64_t kRateWindowMs = 60'000;

void prune(std::deque<std::int64_t>& admits, std::int64_t now_ms) {
    while (!admits.empty() && admits.front() <= now_ms - kRateWindowMs)
        admits.pop_front();
}

Transaction denied_copy(const Transaction& txn, std::string_view reason) {
    Transaction out = txn;
    out.response.detected_face_ids.clear();
    out.response.detected_labels.clear();
    out.response.status = ResponseStatus::denied(std::string(reason));
    out.by_products = {};
    return out;
}

}  // namespace

std::pair<AdmitDecision, Transaction> MeterState::admit(const Transaction& txn,
                                                        const LimitPolicy& policy) {
    const std::int64_t ts = txn.meta.timestamp_ms;
    if (ts < high_water_ms_ - clock_tolerance_ms_)
        throw ClockRegression(ts, high_water_ms_);
    high_water_ms_ = std::max(high_water_ms_, ts);

    Tenant& tenant = tenants_[txn.meta.tenant_id];
    const ServiceGroup group = group_of(txn.request.service.kind);
    auto& admits = tenant.admits_by_group[static_cast<std::size_t>(group)];
    prune(admits, ts);

    if (group == ServiceGroup::Face && policy.rate_limit_per_min &&
        admits.size() >= *policy.rate_limit_per_min) {
        return {{AdmitDecision::Kind::Deny, std::string(kDenyReasonRateLimited), 0},
                denied_copy(txn, kDenyReasonRateLimited)};
    }

    Transaction out = txn;
    AdmitDecision decision;
    if (out.response.detected_face_ids.size() > policy.max_faces_per_image) {
        if (policy.action_on_breach == LimitPolicy::BreachAction::Deny) {
            return {{AdmitDecision::Kind::Deny, std::string(kDenyReasonFaceCap), 0},
                    denied_copy(txn, kDenyReasonFaceCap)};
        }
        const std::uint32_t cap = policy.max_faces_per_image;
        out.response.detected_face_ids.resize(cap);
        out.response.status = ResponseStatus::truncated(cap);
        out.by_products.face_encodings_count =
            std::min(out.by_products.face_encodings_count, cap);
        decision = {AdmitDecision::Kind::Truncate, {}, cap};
    }

    admits.push_back(ts);
    tenant.cumulative_units += out.request.features_requested;
    return {decision, std::move(out)};
}

BillRecord MeterState::bill(const Transaction& txn) {
    const bool denied = txn.response.status.code == ResponseStatus::Code::Denied;
    return {txn.meta.txn_id, txn.meta.tenant_id,
            denied ? 0 : txn.request.features_requested, txn.request.service};
}

std::map<std::string, MeterState::TenantUsage> MeterState::snapshot() const {
    std::map<std::string, TenantUsage> out;
    for (const auto& [id, tenant] : tenants_) {
        TenantUsage usage;
        usage.cumulative_units = tenant.cumulative_units;
        for (std::size_t g = 0; g < 3; ++g) {
            for (std::int64_t ts : tenant.admits_by_group[g])
                if (ts > high_water_ms_ - kRateWindowMs) ++usage.window_counts[g];
        }
        out.emplace(id, usage);
    }
    return out;
}

// --------------------------------------------------------------------------
// Bill records
// --------------------------------------------------------------------------

std::string encode_bill(const BillRecord& record) {
    std::string out = record.txn_id;
    out += '\t';
    out += record.tenant_id;
    out += '\t';
    out += std::to_string(record.billable_units);
    out += '\t';
    out += service_kind_name(record.service.kind);
    if (record.service.kind == ServiceKind::OtherNonVision) {
        out += ':';
        out += record.service.tag;
    }
    return out;
}

BillRecord decode_bill(std::string_view line) {
    std::array<std::string_view, 4> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        std::size_t tab = line.find('\t', start);
        if (i < 3) {
            if (tab == std::string_view::npos)
                throw MalformedRecord(line.size(), "bill record truncated");
            fields[i] = line.substr(start, tab - start);
            start = tab + 1;
        } else {
            fields[i] = line.substr(start);
        }
    }
    BillRecord record;
    record.txn_id = fields[0];
    record.tenant_id = fields[1];
    {
        auto [ptr, ec] = std::from_chars(
            fields[2].data(), fields[2].data() + fields[2].size(), record.billable_units);
        if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size())
            throw MalformedRecord(0, "unparseable billable units");
    }
    std::string_view svc = fields[3];
    std::size_t colon = svc.find(':');
    std::string_view kind_name = colon == std::string_view::npos ? svc : svc.substr(0, colon);
    bool found = false;
    for (auto kind :
         {ServiceKind::FaceDetect, ServiceKind::FaceIdentify, ServiceKind::FaceVerify,
          ServiceKind::FaceSimilaritySearch, ServiceKind::ObjectDetect,
          ServiceKind::LabelDetect, ServiceKind::EmotionRecognize,
          ServiceKind::OtherVision, ServiceKind::OtherNonVision}) {
        if (service_kind_name(kind) == kind_name) {
            record.service.kind = kind;
            found = true;
            break;
        }
    }
    if (!found) throw MalformedRecord(0, "unknown service kind in bill record");
    if (colon != std::string_view::npos) record.service.tag = svc.substr(colon + 1);
    return record;
}

void write_bill_log(std::ostream& out, std::span<const BillRecord> records) {
    out << kBillLogHeader << '\n';
    for (const auto& record : records) out << encode_bill(record) << '\n';
}

std::vector<BillRecord> read_bill_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kBillLogHeader)
        throw MalformedRecord(0, "missing or unsupported bill log header");
    std::vector<BillRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(decode_bill(line));
    }
    return records;
}

// --------------------------------------------------------------------------
// Policy file
// --------------------------------------------------------------------------

namespace {

LimitPolicy parse_limit_policy(const nlohmann::json& node, const std::string& origin) {
    LimitPolicy policy;
    if (node.contains("rate_limit_per_min") && !node["rate_limit_per_min"].is_null()) {
        const auto limit = node["rate_limit_per_min"].get<std::int64_t>();
        if (limit <= 0) throw ConfigError(origin, "rate_limit_per_min must be positive");
        policy.rate_limit_per_min = static_cast<std::uint32_t>(limit);
    }
    if (node.contains("max_faces_per_image")) {
        const auto cap = node["max_faces_per_image"].get<std::int64_t>();
        if (cap <= 0) throw ConfigError(origin, "max_faces_per_image must be positive");
        policy.max_faces_per_image = static_cast<std::uint32_t>(cap);
    }
    if (node.contains("action_on_breach")) {
        const auto action = node["action_on_breach"].get<std::string>();
        if (action == "deny")
            policy.action_on_breach = LimitPolicy::BreachAction::Deny;
        else if (action == "truncate")
            policy.action_on_breach = LimitPolicy::BreachAction::Truncate;
        else
            throw ConfigError(origin, "action_on_breach must be deny or truncate");
    }
    return policy;
}

}  // namespace

PolicyTable parse_policy(std::string_view json_text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
    try {
        PolicyTable table;
        if (doc.contains("default"))
            table.default_policy = parse_limit_policy(doc["default"], origin);
        if (doc.contains("tenants")) {
            for (const auto& [tenant, node] : doc["tenants"].items())
                table.tenant_overrides.emplace(tenant, parse_limit_policy(node, origin));
        }
        return table;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(origin, e.what());
    }
}

PolicyTable load_policy_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open policy file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_policy(buffer.str(), path);
}

}  // namespace aimon
