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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aimon/txn.hpp"

namespace aimon {

// Provider-side technical limits: a sliding per-minute rate limit on the
// face-service group and a per-image face cap.
struct LimitPolicy {
    enum class BreachAction : std::uint8_t { Deny, Truncate };

    // nullopt = unlimited. Applies to the tenant's face-service group over a
    // sliding 60 s window.
    std::optional<std::uint32_t> rate_limit_per_min;
    std::uint32_t max_faces_per_image = 100;
    BreachAction action_on_breach = BreachAction::Truncate;

    bool operator==(const LimitPolicy&) const = default;
};

// Default policy plus per-tenant overrides.
struct PolicyTable {
    LimitPolicy default_policy;
    std::map<std::string, LimitPolicy> tenant_overrides;

    const LimitPolicy& for_tenant(const std::string& tenant_id) const {
        auto it = tenant_overrides.find(tenant_id);
        return it == tenant_overrides.end() ? default_policy : it->second;
    }

    bool operator==(const PolicyTable&) const = default;
};

struct BillRecord {
    std::string txn_id;
    std::string tenant_id;
    std::uint64_t billable_units = 0;  // features applied to the input
    Service service;

    bool operator==(const BillRecord&) const = default;
};

inline constexpr std::string_view kBillLogHeader = "#aimon-bills v1";

std::string encode_bill(const BillRecord& record);
BillRecord decode_bill(std::string_view line);
void write_bill_log(std::ostream& out, std::span<const BillRecord> records);
std::vector<BillRecord> read_bill_log(std::istream& in);

struct AdmitDecision {
    enum class Kind : std::uint8_t { Admit, Deny, Truncate };

    Kind kind = Kind::Admit;
    std::string reason;     // Deny only
    std::uint32_t cap = 0;  // Truncate only
};

inline constexpr std::string_view kDenyReasonRateLimited = "RATE_LIMITED";
inline constexpr std::string_view kDenyReasonFaceCap = "FACE_CAP_EXCEEDED";

// Sliding-window admission state. Decisions depend only on (txn, policy,
// state), so a replayed stream reproduces the exact decision sequence.
class MeterState {
public:
    explicit MeterState(std::int64_t clock_tolerance_ms = 0)
        : clock_tolerance_ms_(clock_tolerance_ms) {}

    // Applies the policy and returns the decision plus the final transaction
    // (response truncated or rewritten to Denied as decided). Counters and
    // cumulative units advance only for admitted/truncated transactions.
    // Throws ClockRegression when the timestamp runs backwards beyond
    // tolerance.
    std::pair<AdmitDecision, Transaction> admit(const Transaction& txn,
                                                const LimitPolicy& policy);

    // Billable units for a final transaction: features_requested, or 0 when
    // the transaction was denied. Pure.
    static BillRecord bill(const Transaction& txn);

    struct TenantUsage {
        // Trailing 60 s admission counts, indexed by ServiceGroup.
        std::array<std::uint64_t, 3> window_counts{};
        std::uint64_t cumulative_units = 0;
    };

    // Read-only per-tenant summary relative to the state's high-water mark.
    std::map<std::string, TenantUsage> snapshot() const;

    std::int64_t high_water_ms() const { return high_water_ms_; }

private:
    struct Tenant {
        std::array<std::deque<std::int64_t>, 3> admits_by_group;
        std::uint64_t cumulative_units = 0;
    };

    std::int64_t clock_tolerance_ms_;
    std::int64_t high_water_ms_ = -1;
    std::map<std::string, Tenant> tenants_;
};

// Policy file: {"default": {...}, "tenants": {"id": {...}}}. Fields:
// rate_limit_per_min (integer or null), max_faces_per_image,
// action_on_breach ("deny" | "truncate").
PolicyTable parse_policy(std::string_view json_text, const std::string& origin);
PolicyTable load_policy_file(const std::string& path);

}  // namespace aimon
