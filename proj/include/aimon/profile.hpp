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

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

namespace aimon {

// Fixed component order of the per-window usage vector. The first block is
// one request counter per service kind; the tail holds payload-derived
// statistics that stay zero at metadata-only monitoring.
namespace profile_component {
inline constexpr int kServiceCountBase = 0;   // + static_cast<int>(ServiceKind)
inline constexpr int kServiceKinds = 9;
inline constexpr int kMeanFacesPerInput = 9;
inline constexpr int kDistinctFacesDelta = 10;
inline constexpr int kIdentificationShare = 11;
inline constexpr int kBlacklistMatches = 12;
inline constexpr int kDimension = 13;

std::string_view name(int component);
}  // namespace profile_component

// One closed usage window for one tenant. All components are non-negative.
struct UsageProfile {
    std::int64_t window_start_ms = 0;
    std::int64_t window_end_ms = 0;
    Eigen::VectorXd components = Eigen::VectorXd::Zero(profile_component::kDimension);

    bool operator==(const UsageProfile& other) const {
        return window_start_ms == other.window_start_ms &&
               window_end_ms == other.window_end_ms &&
               components == other.components;
    }
};

}  // namespace aimon
