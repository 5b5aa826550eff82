// Copyright 2026 lesionkit contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lesionkit/report.hpp"

namespace lk {

Report build_report(const MatchResult& match, std::string run_id, int k) {
  Report r;
  r.run_id = std::move(run_id);
  r.k = k;
  r.counts["proposals"] = int64_t(match.proposals.size());
  r.counts["targets"] = int64_t(match.n_targets);
  r.counts["volumes"] = int64_t(match.n_volumes);

  size_t tp = 0, fp = 0, recalled = 0;
  for (const auto& pm : match.proposals) {
    if (pm.kind == MatchKind::FalsePositive) {
      ++fp;
    } else {
      ++tp;
      if (pm.kind == MatchKind::Claimed) ++recalled;
    }
  }
  r.set_precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  r.set_recall = match.n_targets ? double(recalled) / double(match.n_targets)
                                 : 0.0;

  if (match.n_targets > 0 && !match.proposals.empty()) {
    r.pr = pr_curve(match);
    r.ap = average_precision(r.pr);
    for (int pct : {80, 85, 90, 95}) {
      r.recall_at_precision_pct[pct] = recall_at_precision(r.pr, pct / 100.0);
    }
    r.mean_recall_value = mean_recall(r.pr);
  }
  if (match.n_volumes > 0 && !match.proposals.empty()) {
    r.froc = froc_curve(match);
    const auto recalls = recall_at_fp(r.froc, kStandardFpRates);
    for (size_t i = 0; i < kStandardFpRates.size(); ++i) {
      r.recall_at_fp_points.push_back({kStandardFpRates[i], recalls[i]});
    }
  }
  return r;
}

}  // namespace lk
