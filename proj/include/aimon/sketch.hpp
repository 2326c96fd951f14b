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
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aimon {

// Cardinality sketch: exact up to 256 distinct items, then a register-based
// (HyperLogLog) estimator with 2^precision registers. The exact buffer makes
// small cases testable bit-for-bit; the probabilistic mode carries the
// standard 1.04/sqrt(2^p) relative standard error.
//
// Mode transitions Exact -> Probabilistic only; registers are monotone
// non-decreasing under inserts. Merge of equal-precision sketches is
// commutative, associative and idempotent.
class DistinctSketch {
public:
    enum class Mode : std::uint8_t { Exact, Probabilistic };

    static constexpr std::size_t kExactCapacity = 256;

    explicit DistinctSketch(unsigned precision = 12);

    void insert(std::string_view item);

    struct Estimate {
        double value = 0.0;
        double relative_error = 0.0;  // 0 in exact mode
    };
    Estimate estimate() const;

    Mode mode() const { return mode_; }
    unsigned precision() const { return precision_; }

    // Requires equal precision.
    void merge(const DistinctSketch& other);

    void clear();

    bool operator==(const DistinctSketch&) const = default;

    std::size_t memory_bytes() const;
    void dump(std::ostream& out) const;

private:
    void to_probabilistic();
    void insert_hash(std::uint64_t h);

    unsigned precision_;
    Mode mode_ = Mode::Exact;
    std::set<std::string> exact_;          // sorted: deterministic dumps
    std::vector<std::uint8_t> registers_;  // 2^precision once probabilistic
};

// Space-bounded frequent-item counter (space-saving scheme). Tracks at most
// `capacity` items; for every tracked item the true frequency lies in
// [count - error, count], and any item whose true frequency is at least
// total/capacity is guaranteed to be tracked.
class HeavyHitterSketch {
public:
    explicit HeavyHitterSketch(std::size_t capacity = 1024);

    void insert(const std::string& item);

    struct Entry {
        std::string item;
        std::uint64_t count = 0;  // upper bound on true frequency
        std::uint64_t error = 0;  // count - error is a lower bound
    };

    // All tracked items with count >= phi * total, sorted by count descending
    // then item ascending. Requires 0 < phi < 1. No false negatives: any item
    // with true frequency >= phi * total appears.
    std::vector<Entry> heavy_hitters(double phi) const;

    std::uint64_t total_count() const { return total_; }
    std::size_t tracked_count() const { return slots_.size(); }
    std::size_t capacity() const { return capacity_; }

    std::size_t memory_bytes() const;
    void dump(std::ostream& out) const;

private:
    struct Slot {
        std::string item;
        std::uint64_t count = 0;
        std::uint64_t error = 0;
    };

    std::size_t capacity_;
    std::uint64_t total_ = 0;
    std::vector<Slot> slots_;
    std::unordered_map<std::string, std::size_t> index_;
    // (count, slot) ordered index; slot index breaks ties deterministically.
    std::set<std::pair<std::uint64_t, std::size_t>> by_count_;
};

}  // namespace aimon
