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

#include "aimon/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

#include "aimon/errors.hpp"
#include "aimon/hash.hpp"

namespace aimon {

namespace {

constexpr std::uint64_t kSketchHashSeed = 0x5c4d11a1aa6417f3ULL;

double register_alpha(std::size_t m) {
    switch (m) {
        case 16: return 0.673;
        case 32: return 0.697;
        case 64: return 0.709;
        default: return 0.7213 / (1.0 + 1.079 / static_cast<double>(m));
    }
}

}  // namespace

DistinctSketch::DistinctSketch(unsigned precision) : precision_(precision) {
    if (precision_ < 4 || precision_ > 18)
        throw Error("distinct sketch precision must be in [4, 18]");
}

void DistinctSketch::insert(std::string_view item) {
    if (mode_ == Mode::Exact) {
        exact_.emplace(item);
        if (exact_.size() > kExactCapacity) to_probabilistic();
        return;
    }
    insert_hash(hash64(item, kSketchHashSeed));
}

void DistinctSketch::insert_hash(std::uint64_t h) {
    const std::uint64_t idx = h >> (64 - precision_);
    const std::uint64_t rest = h << precision_;
    const std::uint8_t rank =
        rest == 0 ? static_cast<std::uint8_t>(64 - precision_ + 1)
                  : static_cast<std::uint8_t>(std::countl_zero(rest) + 1);
    std::uint8_t& reg = registers_[idx];
    reg = std::max(reg, rank);
}

void DistinctSketch::to_probabilistic() {
    registers_.assign(std::size_t{1} << precision_, 0);
    for (const auto& item : exact_) insert_hash(hash64(item, kSketchHashSeed));
    exact_.clear();
    mode_ = Mode::Probabilistic;
}

DistinctSketch::Estimate DistinctSketch::estimate() const {
    if (mode_ == Mode::Exact)
        return {static_cast<double>(exact_.size()), 0.0};

    const double m = static_cast<double>(registers_.size());
    double inverse_sum = 0.0;
    std::size_t zeros = 0;
    for (std::uint8_t reg : registers_) {
        inverse_sum += std::ldexp(1.0, -static_cast<int>(reg));
        if (reg == 0) ++zeros;
    }
    double raw = register_alpha(registers_.size()) * m * m / inverse_sum;
    if (raw <= 2.5 * m && zeros > 0)
        raw = m * std::log(m / static_cast<double>(zeros));  // linear counting
    return {raw, 1.04 / std::sqrt(m)};
}

void DistinctSketch::merge(const DistinctSketch& other) {
    if (precision_ != other.precision_)
        throw Error("cannot merge distinct sketches of different precision");

    if (mode_ == Mode::Exact && other.mode_ == Mode::Exact) {
        exact_.insert(other.exact_.begin(), other.exact_.end());
        if (exact_.size() > kExactCapacity) to_probabilistic();
        return;
    }
    if (mode_ == Mode::Exact) to_probabilistic();
    if (other.mode_ == Mode::Exact) {
        for (const auto& item : other.exact_)
            insert_hash(hash64(item, kSketchHashSeed));
    } else {
        for (std::size_t i = 0; i < registers_.size(); ++i)
            registers_[i] = std::max(registers_[i], other.registers_[i]);
    }
}

void DistinctSketch::clear() {
    mode_ = Mode::Exact;
    exact_.clear();
    registers_.clear();
}

std::size_t DistinctSketch::memory_bytes() const {
    std::size_t bytes = sizeof(*this) + registers_.capacity();
    for (const auto& item : exact_) bytes += sizeof(std::string) + item.capacity() + 32;
    return bytes;
}

void DistinctSketch::dump(std::ostream& out) const {
    if (mode_ == Mode::Exact) {
        out << "exact " << exact_.size();
        for (const auto& item : exact_) out << ' ' << item;
        out << '\n';
        return;
    }
    out << "prob p=" << precision_;
    for (std::uint8_t reg : registers_) out << ' ' << static_cast<int>(reg);
    out << '\n';
}

// --------------------------------------------------------------------------

HeavyHitterSketch::HeavyHitterSketch(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw Error("heavy hitter capacity must be positive");
}

void HeavyHitterSketch::insert(const std::string& item) {
    ++total_;
    if (auto it = index_.find(item); it != index_.end()) {
        Slot& slot = slots_[it->second];
        by_count_.erase({slot.count, it->second});
        ++slot.count;
        by_count_.insert({slot.count, it->second});
        return;
    }
    if (slots_.size() < capacity_) {
        const std::size_t idx = slots_.size();
        slots_.push_back({item, 1, 0});
        index_.emplace(item, idx);
        by_count_.insert({1, idx});
        return;
    }
    // Evict the minimum-count slot (ties broken by slot index); the new item
    // inherits its count as the overestimation error.
    const auto [min_count, idx] = *by_count_.begin();
    by_count_.erase(by_count_.begin());
    Slot& slot = slots_[idx];
    index_.erase(slot.item);
    slot = {item, min_count + 1, min_count};
    index_.emplace(item, idx);
    by_count_.insert({slot.count, idx});
}

std::vector<HeavyHitterSketch::Entry> HeavyHitterSketch::heavy_hitters(double phi) const {
    if (!(phi > 0.0 && phi < 1.0)) throw Error("phi must be in (0, 1)");
    const double threshold = phi * static_cast<double>(total_);
    std::vector<Entry> out;
    for (const Slot& slot : slots_) {
        if (static_cast<double>(slot.count) >= threshold)
            out.push_back({slot.item, slot.count, slot.error});
    }
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.item < b.item;
    });
    return out;
}

std::size_t HeavyHitterSketch::memory_bytes() const {
    std::size_t bytes = sizeof(*this);
    for (const Slot& slot : slots_)
        bytes += sizeof(Slot) + slot.item.capacity() + 64;  // slot + index + set node
    return bytes;
}

void HeavyHitterSketch::dump(std::ostream& out) const {
    out << "hh total=" << total_ << " tracked=" << slots_.size();
    // Slot order is insertion order and replay-deterministic.
    for (const Slot& slot : slots_)
        out << ' ' << slot.item << '=' << slot.count << '-' << slot.error;
    out << '\n';
}

}  // namespace aimon
