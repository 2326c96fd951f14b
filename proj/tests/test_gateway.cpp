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

#include <map>
#include <sstream>
#include <vector>

#include "aimon/errors.hpp"
#include "aimon/gateway.hpp"
#include "helpers.hpp"

using namespace aimon;

namespace {

Transaction face_txn(const std::string& tenant, std::int64_t ts, std::size_t faces,
                     std::uint32_t features = 1) {
    Transaction txn;
    static int seq = 0;
    txn.meta.txn_id = tenant + "-" + std::to_string(seq++);
    txn.meta.tenant_id = tenant;
    txn.meta.timestamp_ms = ts;
    txn.meta.client_ip = "10.1.1.1";
    txn.request.service.kind = ServiceKind::FaceDetect;
    txn.request.features_requested = features;
    txn.request.input_id = txn.meta.txn_id + "-in";
    for (std::size_t i = 0; i < faces; ++i)
        txn.response.detected_face_ids.push_back("f" + std::to_string(i));
    txn.by_products.face_encodings_count = static_cast<std::uint32_t>(faces);
    return txn;
}

}  // namespace

TEST_CASE("a response over the face cap is truncated to exactly the cap") {
    MeterState meter;
    LimitPolicy policy;  // default: cap 100, truncate
    const auto [decision, final_txn] = meter.admit(face_txn("a", 0, 101), policy);
    CHECK(decision.kind == AdmitDecision::Kind::Truncate);
    CHECK(decision.cap == 100);
    CHECK(final_txn.response.detected_face_ids.size() == 100);
    CHECK(final_txn.response.status == ResponseStatus::truncated(100));
    CHECK(final_txn.by_products.face_encodings_count <= 100);
    CHECK(check_invariants(final_txn) == std::nullopt);
}

TEST_CASE("responses at the cap pass untouched") {
    MeterState meter;
    LimitPolicy policy;
    const auto [decision, final_txn] = meter.admit(face_txn("a", 0, 100), policy);
    CHECK(decision.kind == AdmitDecision::Kind::Admit);
    CHECK(final_txn.response.detected_face_ids.size() == 100);
    CHECK(final_txn.response.status == ResponseStatus::ok());
}

TEST_CASE("face cap with deny action denies") {
    MeterState meter;
    LimitPolicy policy;
    policy.action_on_breach = LimitPolicy::BreachAction::Deny;
    const auto [decision, final_txn] = meter.admit(face_txn("a", 0, 101), policy);
    CHECK(decision.kind == AdmitDecision::Kind::Deny);
    CHECK(decision.reason == kDenyReasonFaceCap);
    CHECK(final_txn.response.status.code == ResponseStatus::Code::Denied);
    CHECK(final_txn.response.detected_face_ids.empty());
}

TEST_CASE("first transaction of a tenant is admitted") {
    MeterState meter;
    LimitPolicy policy;
    policy.rate_limit_per_min = 100;
    const auto [decision, final_txn] = meter.admit(face_txn("fresh", 0, 1), policy);
    CHECK(decision.kind == AdmitDecision::Kind::Admit);
}

TEST_CASE("the 101st face call inside one sliding minute is denied") {
    MeterState meter;
    LimitPolicy policy;
    policy.rate_limit_per_min = 100;
    // 101 calls spread across 50 seconds.
    for (int i = 0; i < 100; ++i) {
        const auto [decision, txn] = meter.admit(face_txn("t", i * 500, 1), policy);
        CAPTURE(i);
        REQUIRE(decision.kind == AdmitDecision::Kind::Admit);
    }
    const auto [decision, final_txn] = meter.admit(face_txn("t", 50'000, 1), policy);
    CHECK(decision.kind == AdmitDecision::Kind::Deny);
    CHECK(decision.reason == kDenyReasonRateLimited);
    CHECK(final_txn.response.status.code == ResponseStatus::Code::Denied);

    // Once the window slides past the first admissions, calls are admitted again.
    const auto [later, txn2] = meter.admit(face_txn("t", 60'001, 1), policy);
    CHECK(later.kind == AdmitDecision::Kind::Admit);
}

TEST_CASE("non-face services are not rate limited") {
    MeterState meter;
    LimitPolicy policy;
    policy.rate_limit_per_min = 2;
    for (int i = 0; i < 50; ++i) {
        Transaction txn = face_txn("t", i, 0);
        txn.request.service.kind = ServiceKind::ObjectDetect;
        const auto [decision, ignored] = meter.admit(txn, policy);
        REQUIRE(decision.kind == AdmitDecision::Kind::Admit);
    }
}

TEST_CASE("denied transactions do not advance counters") {
    MeterState meter;
    LimitPolicy policy;
    policy.rate_limit_per_min = 1;
    (void)meter.admit(face_txn("t", 0, 1), policy);
    (void)meter.admit(face_txn("t", 10, 1), policy);  // denied
    (void)meter.admit(face_txn("t", 20, 1), policy);  // denied
    const auto usage = meter.snapshot().at("t");
    CHECK(usage.window_counts[static_cast<std::size_t>(ServiceGroup::Face)] == 1);
    CHECK(usage.cumulative_units == 1);
}

TEST_CASE("billing: three features on one image bill three units") {
    const Transaction txn = face_txn("t", 0, 1, 3);
    const BillRecord bill = MeterState::bill(txn);
    CHECK(bill.billable_units == 3);
    CHECK(bill.tenant_id == "t");
    CHECK(bill.service.kind == ServiceKind::FaceDetect);
}

TEST_CASE("billing: denied transactions bill zero") {
    Transaction txn = face_txn("t", 0, 1, 3);
    txn.response.status = ResponseStatus::denied("RATE_LIMITED");
    CHECK(MeterState::bill(txn).billable_units == 0);
}

TEST_CASE("billing conservation over a randomized gated stream") {
    Rng rng(99);
    MeterState meter;
    LimitPolicy policy;
    policy.rate_limit_per_min = 20;
    policy.max_faces_per_image = 4;

    std::uint64_t billed = 0;
    std::uint64_t admitted_features = 0;
    std::int64_t ts = 0;
    for (int i = 0; i < 5000; ++i) {
        ts += static_cast<std::int64_t>(rng.next_u64() % 2000);
        Transaction txn = face_txn("t" + std::to_string(rng.next_u64() % 5), ts,
                                   rng.next_u64() % 8,
                                   static_cast<std::uint32_t>(rng.next_range(1, 4)));
        const auto [decision, final_txn] = meter.admit(txn, policy);
        billed += MeterState::bill(final_txn).billable_units;
        if (decision.kind != AdmitDecision::Kind::Deny)
            admitted_features += txn.request.features_requested;
    }
    CHECK(billed == admitted_features);
    CHECK(billed > 0);
}

TEST_CASE("rate-limit safety: exhaustive sliding-window scan") {
    Rng rng(123);
    MeterState meter;
    LimitPolicy policy;
    policy.rate_limit_per_min = 10;

    std::map<std::string, std::vector<std::int64_t>> admits;
    std::int64_t ts = 0;
    for (int i = 0; i < 4000; ++i) {
        // Bursty: mostly small gaps, occasional jumps.
        ts += static_cast<std::int64_t>(rng.next_u64() % (i % 7 == 0 ? 30'000 : 800));
        const std::string tenant = "t" + std::to_string(rng.next_u64() % 3);
        const auto [decision, txn] = meter.admit(face_txn(tenant, ts, 1), policy);
        if (decision.kind == AdmitDecision::Kind::Admit)
            admits[tenant].push_back(ts);
    }
    for (const auto& [tenant, times] : admits) {
        CHECK(!times.empty());
        for (std::size_t i = 0; i < times.size(); ++i) {
            std::size_t in_window = 0;
            for (std::size_t j = 0; j <= i; ++j)
                if (times[j] > times[i] - 60'000) ++in_window;
            CAPTURE(tenant);
            REQUIRE(in_window <= 10);
        }
    }
}

TEST_CASE("snapshot on a fresh meter is empty; repeated snapshots agree") {
    MeterState meter;
    CHECK(meter.snapshot().empty());
    LimitPolicy policy;
    for (int i = 0; i < 7; ++i) (void)meter.admit(face_txn("t", i * 100, 1), policy);
    const auto first = meter.snapshot();
    const auto second = meter.snapshot();
    CHECK(first.at("t").window_counts[static_cast<std::size_t>(ServiceGroup::Face)] == 7);
    CHECK(first.at("t").cumulative_units == second.at("t").cumulative_units);
    CHECK(first.size() == second.size());
}

TEST_CASE("clock regression is rejected") {
    MeterState meter;
    LimitPolicy policy;
    (void)meter.admit(face_txn("t", 10'000, 1), policy);
    CHECK_THROWS_AS(meter.admit(face_txn("t", 9'999, 1), policy), ClockRegression);
    // Equal timestamps are fine (ties permitted).
    CHECK_NOTHROW(meter.admit(face_txn("t", 10'000, 1), policy));
}

TEST_CASE("bill records round-trip through the log format") {
    std::vector<BillRecord> bills = {
        {"t-1", "acme", 3, {ServiceKind::FaceDetect, ""}},
        {"t-2", "acme", 0, {ServiceKind::OtherNonVision, "speech"}},
    };
    std::ostringstream out;
    write_bill_log(out, bills);
    std::istringstream in(out.str());
    CHECK(read_bill_log(in) == bills);
}

TEST_CASE("policy files parse with per-tenant overrides") {
    const std::string json = R"({
      "default": {"rate_limit_per_min": 100, "max_faces_per_image": 100,
                  "action_on_breach": "truncate"},
      "tenants": {"vip": {"rate_limit_per_min": null, "max_faces_per_image": 500}}
    })";
    const PolicyTable table = parse_policy(json, "inline");
    CHECK(table.default_policy.rate_limit_per_min == 100);
    CHECK(table.for_tenant("anyone").max_faces_per_image == 100);
    CHECK_FALSE(table.for_tenant("vip").rate_limit_per_min.has_value());
    CHECK(table.for_tenant("vip").max_faces_per_image == 500);

    CHECK_THROWS_AS(parse_policy(R"({"default": {"action_on_breach": "explode"}})", "x"),
                    ConfigError);
    CHECK_THROWS_AS(parse_policy("{nope", "x"), ConfigError);
    CHECK_THROWS_AS(parse_policy(R"({"default": {"rate_limit_per_min": -1}})", "x"),
                    ConfigError);
}
