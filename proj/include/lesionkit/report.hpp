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

#pragma once

#include <map>
#include <string>
#include <vector>

#include "lesionkit/metrics.hpp"

namespace lk {

/// Evaluation summary for one proposal set (or one harvesting round).
/// Serializes losslessly through the JSON report format.
struct Report {
  std::string run_id;
  int k = 0;
  std::map<std::string, int64_t> counts;
  double tau = std::numeric_limits<double>::infinity();
  bool tau_met = false;
  PrCurve pr;
  FrocCurve froc;
  std::map<int, double> recall_at_precision_pct;  // 80/85/90/95 -> recall
  double mean_recall_value = 0;
  double ap = 0;
  std::vector<std::pair<double, double>> recall_at_fp_points;
  double set_precision = 0;  // whole set, no threshold
  double set_recall = 0;
};

/// Standard FP-per-volume operating rates reported alongside FROC curves.
inline const std::vector<double> kStandardFpRates = {0.125, 0.25, 0.5, 1,
                                                     2,     4,    8};

/// Assembles the full report from a match result.
Report build_report(const MatchResult& match, std::string run_id, int k);

}  // namespace lk
