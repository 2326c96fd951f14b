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

// Test-only generators and exact oracles, independent of the code paths
// they check.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aimon/rng.hpp"
#include "aimon/txn.hpp"

namespace aimon::testing {

inline std::string random_token(Rng& rng, bool nasty) {
    static const char plain[] = "abcdefghijklmnopqrstuvwxyz0123456789-_";
    static const char chars[] = "ab%,:\t\r\nxyz 09=+;|";
    const char* alphabet = nasty ? chars : plain;
    const std::size_t n = nasty ? sizeof(chars) - 1 : sizeof(plain) - 1;
    std::string out;
    const std::uint64_t len = rng.next_range(1, 12);
    for (std::uint64_t i = 0; i < len; ++i)
        out.push_back(alphabet[rng.next_u64() % n]);
    return out;
}

// A random transaction satisfying every type invariant. With nasty=true the
// string fields include codec-reserved characters.
inline Transaction random_txn(Rng& rng, bool nasty = false) {
    static const ServiceKind kinds[] = {
        ServiceKind::FaceDetect,        ServiceKind::FaceIdentify,
        ServiceKind::FaceVerify,        ServiceKind::FaceSimilaritySearch,
        ServiceKind::ObjectDetect,      ServiceKind::LabelDetect,
        ServiceKind::EmotionRecognize,  ServiceKind::OtherVision,
        ServiceKind::OtherNonVision,
    };
    Transaction txn;
    txn.meta.txn_id = random_token(rng, nasty);
    txn.meta.tenant_id = random_token(rng, nasty);
    txn.meta.timestamp_ms = static_cast<std::int64_t>(rng.next_u64() % 1'000'000'000);
    txn.meta.client_ip = "10.0." + std::to_string(rng.next_u64() % 255) + "." +
                         std::to_string(rng.next_u64() % 255);
    txn.meta.input_size_bytes = rng.next_u64() % 5'000'000;
    txn.meta.resource_cost = rng.next_u64() % 1000;

    txn.request.service.kind = kinds[rng.next_u64() % 9];
    if (txn.request.service.kind == ServiceKind::OtherNonVision)
        txn.request.service.tag = random_token(rng, nasty);
    txn.request.features_requested = static_cast<std::uint32_t>(rng.next_range(1, 5));
    txn.request.input_id = random_token(rng, nasty);
    txn.request.content_fingerprint = rng.next_u64();
    if (is_identification_service(txn.request.service.kind))
        txn.request.target_face_id = random_token(rng, nasty);

    const std::uint64_t faces = rng.next_u64() % 6;
    for (std::uint64_t i = 0; i < faces; ++i)
        txn.response.detected_face_ids.push_back(random_token(rng, nasty) +
                                                 std::to_string(i));
    const std::uint64_t labels = rng.next_u64() % 3;
    for (std::uint64_t i = 0; i < labels; ++i) {
        Label label;
        label.name = random_token(rng, nasty);
        label.confidence = rng.next_double();
        txn.response.detected_labels.push_back(std::move(label));
    }
    switch (rng.next_u64() % 4) {
        case 0:
            txn.response.status = ResponseStatus::denied(random_token(rng, nasty));
            break;
        case 1:
            txn.response.status = ResponseStatus::truncated(
                static_cast<std::uint32_t>(txn.response.detected_face_ids.size()));
            break;
        default:
            txn.response.status = ResponseStatus::ok();
            break;
    }
    if (txn.response.status.code == ResponseStatus::Code::Ok &&
        !txn.response.detected_face_ids.empty()) {
        txn.by_products.face_encodings_count = static_cast<std::uint32_t>(
            rng.next_u64() % (txn.response.detected_face_ids.size() + 1));
    }
    const std::uint64_t tags = rng.next_u64() % 3;
    for (std::uint64_t i = 0; i < tags; ++i)
        txn.by_products.pipeline_stage_tags.push_back(random_token(rng, nasty));
    return txn;
}

// Zipf(s) sampler over items 1..n via inverse CDF; exact and deterministic.
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double s) : cumulative_(n) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += 1.0 / std::pow(static_cast<double>(i + 1), s);
            cumulative_[i] = total;
        }
        for (double& c : cumulative_) c /= total;
    }

    std::size_t sample(Rng& rng) const {
        const double u = rng.next_double();
        return static_cast<std::size_t>(
            std::lower_bound(cumulative_.begin(), cumulative_.end(), u) -
            cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
};

}  // namespace aimon::testing
