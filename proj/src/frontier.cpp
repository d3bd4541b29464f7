// Copyright 2026 The RankForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankforge/frontier.hpp"

#include <algorithm>

namespace rankforge {

bool RejectionFrontier::insert(const RankSet& ceiling) {
  if (contains(ceiling)) return false;
  std::erase_if(maximal_, [&](const RankSet& k) { return k.dominated_by(ceiling); });
  maximal_.push_back(ceiling);
  return true;
}

bool RejectionFrontier::contains(const RankSet& ranks) const {
  return std::any_of(maximal_.begin(), maximal_.end(),
                     [&](const RankSet& k) { return ranks.dominated_by(k); });
}

std::size_t reject_and_update(RejectionFrontier& frontier,
                              std::span<const ScoredRankSet> scored,
                              double tau_a) {
  std::size_t rejected = 0;
  for (const auto& s : scored) {
    if (s.accuracy <= tau_a) {
      frontier.insert(s.ranks);
      ++rejected;
    }
  }
  return rejected;
}

}  // namespace rankforge
