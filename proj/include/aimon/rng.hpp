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

#include <cmath>
#include <cstdint>

namespace aimon {

// splitmix64. Every sampler below is hand-rolled on top of the raw 64-bit
// draws: <random> distributions are implementation-defined, and workload
// generation must be byte-identical for equal seeds on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [lo, hi], inclusive. Modulo bias is irrelevant at
    // the range sizes used here (pools of at most a few thousand).
    std::uint64_t next_range(std::uint64_t lo, std::uint64_t hi) {
        return lo + next_u64() % (hi - lo + 1);
    }

    bool next_bernoulli(double p) { return next_double() < p; }

    // Exponential inter-arrival gap with the given mean.
    double next_exponential(double mean) {
        double u = next_double();
        // next_double() < 1, so 1-u > 0
        return -std::log(1.0 - u) * mean;
    }

private:
    std::uint64_t state_;
};

}  // namespace aimon
