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

#include "aimon/profile.hpp"

#include "aimon/txn.hpp"

namespace aimon::profile_component {

std::string_view name(int component) {
    if (component >= kServiceCountBase && component < kServiceKinds) {
        return service_kind_name(static_cast<ServiceKind>(component));
    }
    switch (component) {
        case kMeanFacesPerInput: return "mean_faces_per_input";
        case kDistinctFacesDelta: return "distinct_faces_delta";
        case kIdentificationShare: return "identification_share";
        case kBlacklistMatches: return "blacklist_matches";
        default: return "unknown";
    }
}

}  // namespace aimon::profile_component
