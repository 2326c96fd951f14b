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

#include "aimon/txn.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>

#include "aimon/errors.hpp"
#include "aimon/hash.hpp"

namespace aimon {

bool is_face_service(ServiceKind kind) {
    switch (kind) {
        case ServiceKind::FaceDetect:
        case ServiceKind::FaceIdentify:
        case ServiceKind::FaceVerify:
        case ServiceKind::FaceSimilaritySearch:
            return true;
        default:
            return false;
    }
}

bool is_identification_service(ServiceKind kind) {
    switch (kind) {
        case ServiceKind::FaceIdentify:
        case ServiceKind::FaceVerify:
        case ServiceKind::FaceSimilaritySearch:
            return true;
        default:
            return false;
    }
}

ServiceGroup group_of(ServiceKind kind) {
    if (is_face_service(kind)) return ServiceGroup::Face;
    if (kind == ServiceKind::OtherNonVision) return ServiceGroup::NonVision;
    return ServiceGroup::Vision;
}

std::string_view service_kind_name(ServiceKind kind) {
    switch (kind) {
        case ServiceKind::FaceDetect: return "face_detect";
        case ServiceKind::FaceIdentify: return "face_identify";
        case ServiceKind::FaceVerify: return "face_verify";
        case ServiceKind::FaceSimilaritySearch: return "face_search";
        case ServiceKind::ObjectDetect: return "object_detect";
        case ServiceKind::LabelDetect: return "label_detect";
        case ServiceKind::EmotionRecognize: return "emotion_recognize";
        case ServiceKind::OtherVision: return "other_vision";
        case ServiceKind::OtherNonVision: return "other_nonvision";
    }
    return "unknown";
}

std::string_view service_group_name(ServiceGroup group) {
    switch (group) {
        case ServiceGroup::Face: return "face";
        case ServiceGroup::Vision: return "vision";
        case ServiceGroup::NonVision: return "nonvision";
    }
    return "unknown";
}

std::string_view monitoring_level_name(MonitoringLevel level) {
    switch (level) {
        case MonitoringLevel::MetadataOnly: return "metadata";
        case MonitoringLevel::MetadataPlusDerived: return "derived";
        case MonitoringLevel::FullContent: return "full";
    }
    return "unknown";
}

std::optional<MonitoringLevel> parse_monitoring_level(std::string_view name) {
    if (name == "metadata") return MonitoringLevel::MetadataOnly;
    if (name == "derived") return MonitoringLevel::MetadataPlusDerived;
    if (name == "full") return MonitoringLevel::FullContent;
    return std::nullopt;
}

std::optional<std::string> check_invariants(const Transaction& txn) {
    if (txn.meta.txn_id.empty()) return "txn_id must be non-empty";
    if (txn.meta.tenant_id.empty()) return "tenant_id must be non-empty";
    if (txn.meta.timestamp_ms < 0) return "timestamp must be non-negative";
    if (txn.request.features_requested < 1) return "features_requested must be >= 1";
    const bool ident = is_identification_service(txn.request.service.kind);
    if (ident && !txn.request.target_face_id.has_value())
        return "identification services require a target_face_id";
    if (!ident && txn.request.target_face_id.has_value())
        return "target_face_id only valid for identification services";
    if (txn.request.target_face_id && txn.request.target_face_id->empty())
        return "target_face_id must be non-empty when present";
    for (const auto& id : txn.response.detected_face_ids)
        if (id.empty()) return "detected face ids must be non-empty";
    for (const auto& label : txn.response.detected_labels) {
        if (label.name.empty()) return "label names must be non-empty";
        if (!(label.confidence >= 0.0 && label.confidence <= 1.0))
            return "label confidence must be in [0,1]";
    }
    const auto& st = txn.response.status;
    if (st.code == ResponseStatus::Code::Truncated &&
        txn.response.detected_face_ids.size() != st.cap)
        return "truncated response must carry exactly cap face ids";
    if (st.code == ResponseStatus::Code::Ok &&
        txn.by_products.face_encodings_count > txn.response.detected_face_ids.size())
        return "face_encodings_count exceeds detected face count";
    for (const auto& tag : txn.by_products.pipeline_stage_tags)
        if (tag.empty()) return "pipeline stage tags must be non-empty";
    return std::nullopt;
}

// --------------------------------------------------------------------------
// Codec
// --------------------------------------------------------------------------

namespace {

constexpr char kFieldSep = '\t';
constexpr char kListSep = ',';
constexpr char kPairSep = ':';

bool needs_escape(char c) {
    return c == '%' || c == '\t' || c == '\n' || c == '\r' || c == ',' || c == ':';
}

void append_escaped(std::string& out, std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    for (char c : s) {
        if (needs_escape(c)) {
            out.push_back('%');
            out.push_back(hex[static_cast<unsigned char>(c) >> 4]);
            out.push_back(hex[static_cast<unsigned char>(c) & 0xF]);
        } else {
            out.push_back(c);
        }
    }
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::string unescape(std::string_view s, std::size_t pos_base) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '%') {
            out.push_back(s[i]);
            continue;
        }
        if (i + 2 >= s.size())
            throw MalformedRecord(pos_base + i, "dangling percent escape");
        int hi = hex_digit(s[i + 1]);
        int lo = hex_digit(s[i + 2]);
        if (hi < 0 || lo < 0)
            throw MalformedRecord(pos_base + i, "bad percent escape");
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
    }
    return out;
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t pos, std::string_view what) {
    Int value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw MalformedRecord(pos, std::string("unparseable ") + std::string(what));
    return value;
}

double parse_double_field(std::string_view s, std::size_t pos, std::string_view what) {
    double value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw MalformedRecord(pos, std::string("unparseable ") + std::string(what));
    return value;
}

std::string fingerprint_hex(std::uint64_t fp) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[fp & 0xF];
        fp >>= 4;
    }
    return out;
}

std::uint64_t parse_fingerprint(std::string_view s, std::size_t pos) {
    if (s.size() != 16) throw MalformedRecord(pos, "fingerprint must be 16 hex digits");
    std::uint64_t fp = 0;
    for (char c : s) {
        int d = hex_digit(c);
        if (d < 0) throw MalformedRecord(pos, "fingerprint must be 16 hex digits");
        fp = (fp << 4) | static_cast<std::uint64_t>(d);
    }
    return fp;
}

std::optional<ServiceKind> parse_service_kind(std::string_view name) {
    for (auto kind :
         {ServiceKind::FaceDetect, ServiceKind::FaceIdentify, ServiceKind::FaceVerify,
          ServiceKind::FaceSimilaritySearch, ServiceKind::ObjectDetect,
          ServiceKind::LabelDetect, ServiceKind::EmotionRecognize,
          ServiceKind::OtherVision, ServiceKind::OtherNonVision}) {
        if (service_kind_name(kind) == name) return kind;
    }
    return std::nullopt;
}

// Splits a comma list into unescaped elements. Empty input -> empty list.
std::vector<std::string> split_list(std::string_view s, std::size_t pos) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = s.find(kListSep, start);
        std::string_view piece =
            comma == std::string_view::npos ? s.substr(start) : s.substr(start, comma - start);
        if (piece.empty()) throw MalformedRecord(pos + start, "empty list element");
        out.push_back(unescape(piece, pos + start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    (void)ec;
    return std::string(buf.data(), ptr);
}

std::string escape_field(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    append_escaped(out, raw);
    return out;
}

std::string unescape_field(std::string_view escaped) {
    return unescape(escaped, 0);
}

std::string encode_txn(const Transaction& txn) {
    std::string out;
    out.reserve(192);
    out += "v1";
    out.push_back(kFieldSep);
    append_escaped(out, txn.meta.txn_id);
    out.push_back(kFieldSep);
    append_escaped(out, txn.meta.tenant_id);
    out.push_back(kFieldSep);
    out += std::to_string(txn.meta.timestamp_ms);
    out.push_back(kFieldSep);
    append_escaped(out, txn.meta.client_ip);
    out.push_back(kFieldSep);
    out += std::to_string(txn.meta.input_size_bytes);
    out.push_back(kFieldSep);
    out += std::to_string(txn.meta.resource_cost);
    out.push_back(kFieldSep);
    out += service_kind_name(txn.request.service.kind);
    if (txn.request.service.kind == ServiceKind::OtherNonVision) {
        out.push_back(kPairSep);
        append_escaped(out, txn.request.service.tag);
    }
    out.push_back(kFieldSep);
    out += std::to_string(txn.request.features_requested);
    out.push_back(kFieldSep);
    append_escaped(out, txn.request.input_id);
    out.push_back(kFieldSep);
    out += fingerprint_hex(txn.request.content_fingerprint);
    out.push_back(kFieldSep);
    if (txn.request.target_face_id) append_escaped(out, *txn.request.target_face_id);
    out.push_back(kFieldSep);
    for (std::size_t i = 0; i < txn.response.detected_face_ids.size(); ++i) {
        if (i > 0) out.push_back(kListSep);
        append_escaped(out, txn.response.detected_face_ids[i]);
    }
    out.push_back(kFieldSep);
    for (std::size_t i = 0; i < txn.response.detected_labels.size(); ++i) {
        if (i > 0) out.push_back(kListSep);
        append_escaped(out, txn.response.detected_labels[i].name);
        out.push_back(kPairSep);
        out += format_double(txn.response.detected_labels[i].confidence);
    }
    out.push_back(kFieldSep);
    switch (txn.response.status.code) {
        case ResponseStatus::Code::Ok:
            out += "ok";
            break;
        case ResponseStatus::Code::Denied:
            out += "denied";
            out.push_back(kPairSep);
            append_escaped(out, txn.response.status.reason);
            break;
        case ResponseStatus::Code::Truncated:
            out += "truncated";
            out.push_back(kPairSep);
            out += std::to_string(txn.response.status.cap);
            break;
    }
    out.push_back(kFieldSep);
    out += std::to_string(txn.by_products.face_encodings_count);
    out.push_back(kFieldSep);
    for (std::size_t i = 0; i < txn.by_products.pipeline_stage_tags.size(); ++i) {
        if (i > 0) out.push_back(kListSep);
        append_escaped(out, txn.by_products.pipeline_stage_tags[i]);
    }
    return out;
}

Transaction decode_txn(std::string_view record) {
    // Field offsets double as error positions.
    std::array<std::string_view, 17> fields;
    std::array<std::size_t, 17> offsets{};
    std::size_t start = 0;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        offsets[i] = start;
        std::size_t tab = record.find(kFieldSep, start);
        if (i + 1 < fields.size()) {
            if (tab == std::string_view::npos)
                throw MalformedRecord(record.size(), "expected 17 fields, record truncated");
            fields[i] = record.substr(start, tab - start);
            start = tab + 1;
        } else {
            if (tab != std::string_view::npos)
                throw MalformedRecord(tab, "trailing fields beyond schema");
            fields[i] = record.substr(start);
        }
    }
    if (fields[0] != "v1")
        throw MalformedRecord(0, "unsupported record version");

    Transaction txn;
    txn.meta.txn_id = unescape(fields[1], offsets[1]);
    txn.meta.tenant_id = unescape(fields[2], offsets[2]);
    txn.meta.timestamp_ms = parse_int<std::int64_t>(fields[3], offsets[3], "timestamp");
    txn.meta.client_ip = unescape(fields[4], offsets[4]);
    txn.meta.input_size_bytes =
        parse_int<std::uint64_t>(fields[5], offsets[5], "input_size_bytes");
    txn.meta.resource_cost = parse_int<std::uint64_t>(fields[6], offsets[6], "resource_cost");

    std::string_view svc = fields[7];
    std::size_t colon = svc.find(kPairSep);
    std::string_view kind_name = colon == std::string_view::npos ? svc : svc.substr(0, colon);
    auto kind = parse_service_kind(kind_name);
    if (!kind) throw MalformedRecord(offsets[7], "unknown service kind");
    txn.request.service.kind = *kind;
    if (*kind == ServiceKind::OtherNonVision) {
        if (colon == std::string_view::npos)
            throw MalformedRecord(offsets[7], "other_nonvision requires a tag");
        txn.request.service.tag = unescape(svc.substr(colon + 1), offsets[7] + colon + 1);
    } else if (colon != std::string_view::npos) {
        throw MalformedRecord(offsets[7], "unexpected tag on service kind");
    }

    txn.request.features_requested =
        parse_int<std::uint32_t>(fields[8], offsets[8], "features_requested");
    txn.request.input_id = unescape(fields[9], offsets[9]);
    txn.request.content_fingerprint = parse_fingerprint(fields[10], offsets[10]);
    if (!fields[11].empty())
        txn.request.target_face_id = unescape(fields[11], offsets[11]);

    txn.response.detected_face_ids = split_list(fields[12], offsets[12]);

    if (!fields[13].empty()) {
        std::string_view s = fields[13];
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = s.find(kListSep, pos);
            std::string_view entry =
                comma == std::string_view::npos ? s.substr(pos) : s.substr(pos, comma - pos);
            std::size_t sep = entry.find(kPairSep);
            if (sep == std::string_view::npos)
                throw MalformedRecord(offsets[13] + pos, "label entry missing confidence");
            Label label;
            label.name = unescape(entry.substr(0, sep), offsets[13] + pos);
            label.confidence = parse_double_field(entry.substr(sep + 1),
                                                  offsets[13] + pos + sep + 1, "confidence");
            txn.response.detected_labels.push_back(std::move(label));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
    }

    std::string_view st = fields[14];
    if (st == "ok") {
        txn.response.status = ResponseStatus::ok();
    } else if (st.rfind("denied:", 0) == 0) {
        txn.response.status =
            ResponseStatus::denied(unescape(st.substr(7), offsets[14] + 7));
    } else if (st.rfind("truncated:", 0) == 0) {
        txn.response.status = ResponseStatus::truncated(
            parse_int<std::uint32_t>(st.substr(10), offsets[14] + 10, "truncation cap"));
    } else {
        throw MalformedRecord(offsets[14], "unknown status");
    }

    txn.by_products.face_encodings_count =
        parse_int<std::uint32_t>(fields[15], offsets[15], "face_encodings_count");
    txn.by_products.pipeline_stage_tags = split_list(fields[16], offsets[16]);

    if (auto violation = check_invariants(txn))
        throw InvariantViolation(*violation);
    return txn;
}

void write_txn_log(std::ostream& out, std::span<const Transaction> txns) {
    out << kTxnLogHeader << '\n';
    for (const auto& txn : txns) out << encode_txn(txn) << '\n';
}

std::vector<Transaction> read_txn_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTxnLogHeader)
        throw MalformedRecord(0, "missing or unsupported txn log header");
    std::vector<Transaction> txns;
    while (std::getline(in, line)) {
        if (line.empty()) continue;  // tolerate a trailing blank line
        txns.push_back(decode_txn(line));
    }
    return txns;
}

// --------------------------------------------------------------------------
// Redaction
// --------------------------------------------------------------------------

const std::string& Redactor::pseudonym(const std::string& token) {
    auto it = forward_.find(token);
    if (it != forward_.end()) return it->second;
    std::uint64_t salt = 0;
    std::string candidate;
    while (true) {
        candidate = fingerprint_hex(hash64(token, key_ ^ fmix64(salt)));
        auto [taken_it, fresh] = taken_.try_emplace(candidate, token);
        if (fresh) break;
        ++salt;  // 64-bit collision: rehash until free
    }
    return forward_.emplace(token, std::move(candidate)).first->second;
}

Transaction Redactor::apply(const Transaction& txn, MonitoringLevel level) {
    if (level == MonitoringLevel::FullContent) return txn;

    Transaction out;
    out.meta = txn.meta;
    out.request.service = txn.request.service;
    out.request.features_requested = txn.request.features_requested;

    if (level == MonitoringLevel::MetadataOnly) {
        out.request.input_id = "*";
        if (is_identification_service(txn.request.service.kind))
            out.request.target_face_id = "*";  // presence invariant, token withheld
        out.response.status = txn.response.status.code == ResponseStatus::Code::Truncated
                                  ? ResponseStatus::ok()
                                  : txn.response.status;
        return out;
    }

    // MetadataPlusDerived
    out.request.input_id = pseudonym(txn.request.input_id);
    out.request.content_fingerprint = txn.request.content_fingerprint;
    if (txn.request.target_face_id)
        out.request.target_face_id = pseudonym(*txn.request.target_face_id);
    out.response.detected_face_ids.reserve(txn.response.detected_face_ids.size());
    for (const auto& id : txn.response.detected_face_ids)
        out.response.detected_face_ids.push_back(pseudonym(id));
    out.response.detected_labels = txn.response.detected_labels;
    out.response.status = txn.response.status;
    out.by_products = txn.by_products;
    return out;
}

}  // namespace aimon
