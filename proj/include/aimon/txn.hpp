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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aimon {

// One service endpoint a transaction can invoke. The Face* kinds form a
// closed "face services" subset used by the rate indicators and the
// gateway's face-API rate limit.
enum class ServiceKind : std::uint8_t {
    FaceDetect,
    FaceIdentify,
    FaceVerify,
    FaceSimilaritySearch,
    ObjectDetect,
    LabelDetect,
    EmotionRecognize,
    OtherVision,
    OtherNonVision,
};

// Coarse grouping used by meters and rate counters.
enum class ServiceGroup : std::uint8_t { Face, Vision, NonVision };

// Service endpoint tag; `tag` is meaningful only for OtherNonVision and
// names the non-vision service family (e.g. "speech").
struct Service {
    ServiceKind kind = ServiceKind::FaceDetect;
    std::string tag;

    bool operator==(const Service&) const = default;
};

bool is_face_service(ServiceKind kind);
// Identification/verification/search kinds; exactly these carry a target_face_id.
bool is_identification_service(ServiceKind kind);
ServiceGroup group_of(ServiceKind kind);

std::string_view service_kind_name(ServiceKind kind);
std::string_view service_group_name(ServiceGroup group);

struct TransactionMeta {
    std::string txn_id;
    std::string tenant_id;
    std::int64_t timestamp_ms = 0;
    std::string client_ip;
    std::uint64_t input_size_bytes = 0;
    std::uint64_t resource_cost = 0;

    bool operator==(const TransactionMeta&) const = default;
};

struct RequestDescriptor {
    Service service;
    std::uint32_t features_requested = 1;
    std::string input_id;
    // 64-bit locality-sensitive digest of the input content; similar inputs
    // differ in few bits.
    std::uint64_t content_fingerprint = 0;
    std::optional<std::string> target_face_id;

    bool operator==(const RequestDescriptor&) const = default;
};

struct Label {
    std::string name;
    double confidence = 0.0;  // in [0, 1]

    bool operator==(const Label&) const = default;
};

struct ResponseStatus {
    enum class Code : std::uint8_t { Ok, Denied, Truncated };

    Code code = Code::Ok;
    std::string reason;       // Denied only
    std::uint32_t cap = 0;    // Truncated only

    static ResponseStatus ok() { return {}; }
    static ResponseStatus denied(std::string why) {
        return {Code::Denied, std::move(why), 0};
    }
    static ResponseStatus truncated(std::uint32_t cap) {
        return {Code::Truncated, {}, cap};
    }

    bool operator==(const ResponseStatus&) const = default;
};

struct ResponseDescriptor {
    std::vector<std::string> detected_face_ids;
    std::vector<Label> detected_labels;
    ResponseStatus status;

    bool operator==(const ResponseDescriptor&) const = default;
};

// Intermediary artifacts of request processing (feature vector counts,
// pipeline stage tags). Only counts and tags are modeled.
struct ByProducts {
    std::uint32_t face_encodings_count = 0;
    std::vector<std::string> pipeline_stage_tags;

    bool operator==(const ByProducts&) const = default;
};

struct Transaction {
    TransactionMeta meta;
    RequestDescriptor request;
    ResponseDescriptor response;
    ByProducts by_products;

    bool operator==(const Transaction&) const = default;
};

// Depth of data the monitoring side may inspect.
enum class MonitoringLevel : std::uint8_t {
    MetadataOnly,
    MetadataPlusDerived,
    FullContent,
};

std::string_view monitoring_level_name(MonitoringLevel level);
// Accepts "metadata" | "derived" | "full".
std::optional<MonitoringLevel> parse_monitoring_level(std::string_view name);

// Returns the first violated invariant, or nullopt when the value is valid.
std::optional<std::string> check_invariants(const Transaction& txn);

// ---------------------------------------------------------------------------
// Line codec, schema v1.
//
// One transaction per line, 17 tab-separated fields:
//   v1  txn_id  tenant_id  timestamp_ms  client_ip  input_size  resource_cost
//   service  features  input_id  fingerprint(16 hex)  target_face_id
//   face_ids(comma list)  labels(name:conf comma list)  status
//   encodings_count  stage_tags(comma list)
//
// Free-string fields are percent-encoded (%, TAB, LF, CR, comma, colon).
// Empty field means "absent" for target_face_id and "empty list" for lists;
// list elements themselves are never empty. status is "ok", "denied:reason"
// or "truncated:N". Doubles use shortest round-trip formatting, so
// decode(encode(t)) == t holds exactly.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTxnLogHeader = "#aimon-txnlog v1";

std::string encode_txn(const Transaction& txn);

// Throws MalformedRecord for schema violations and InvariantViolation for
// well-formed records that break type invariants.
Transaction decode_txn(std::string_view record);

// Log file = header line + one encoded transaction per line, LF terminated.
void write_txn_log(std::ostream& out, std::span<const Transaction> txns);
std::vector<Transaction> read_txn_log(std::istream& in);

// ---------------------------------------------------------------------------
// Redaction.
// ---------------------------------------------------------------------------

// Applies a monitoring level to transactions before they reach the audit
// side. Pseudonyms are keyed one-way token rewrites, stable for the lifetime
// of the redactor (one run), injective by construction.
//
//   FullContent          identity
//   MetadataPlusDerived  identity tokens -> pseudonyms; counts, labels and
//                        fingerprints retained
//   MetadataOnly         payload fields replaced by neutral placeholders;
//                        meta, service kind and billable feature count
//                        retained. A Truncated status is payload-derived
//                        (it reveals the input's face count) and collapses
//                        to Ok.
class Redactor {
public:
    explicit Redactor(std::uint64_t key) : key_(key) {}

    Transaction apply(const Transaction& txn, MonitoringLevel level);

    // Stable keyed pseudonym for an identity token.
    const std::string& pseudonym(const std::string& token);

private:
    std::uint64_t key_;
    std::unordered_map<std::string, std::string> forward_;
    std::unordered_map<std::string, std::string> taken_;  // pseudonym -> token
};

// Shortest round-trip decimal formatting for doubles; the only double
// formatter used anywhere in the artifact's file formats.
std::string format_double(double value);

// Percent-encoding shared by every line format in the artifact: escapes
// '%', TAB, LF, CR, ',' and ':'.
std::string escape_field(std::string_view raw);
// Throws MalformedRecord on bad escapes; position offsets are relative to
// the passed view.
std::string unescape_field(std::string_view escaped);

}  // namespace aimon
