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

#ifndef RANKFORGE_FRONTIER_HPP_
#define RANKFORGE_FRONTIER_HPP_

#include <span>
#include <vector>

#include "rankforge/evaluator.hpp"
#include "rankforge/model.hpp"

namespace rankforge {

// Rejection space kept as the antichain of its maximal rank sets. A rank set
// R is rejected iff R <= k elementwise for some stored ceiling k, i.e. R lies
// in the union of boxes [r_min, k].
class RejectionFrontier {
 public:
  // Returns false when `ceiling` was already covered. Ceilings it covers are
  // dropped so the stored set stays an antichain.
  bool insert(const RankSet& ceiling);
  bool contains(const RankSet& ranks) const;

  const std::vector<RankSet>& maximal_sets() const { return maximal_; }
  std::size_t size() const { return maximal_.size(); }
  bool empty() const { return maximal_.empty(); }

 private:
  std::vector<RankSet> maximal_;
};

// Inserts every scored set with accuracy <= tau_a. Returns the number of
// rejected sets observed.
std::size_t reject_and_update(RejectionFrontier& frontier,
                              std::span<const ScoredRankSet> scored,
                              double tau_a);

}  // namespace rankforge

#endif  // RANKFORGE_FRONTIER_HPP_
