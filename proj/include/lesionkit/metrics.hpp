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

#include <span>
#include <string>
#include <vector>

#include "lesionkit/geometry.hpp"
#include "lesionkit/tracker.hpp"

namespace lk {

/// How a proposal is tested against ground truth.
///  P3D      - mark slice inside the z-range and 2D IoU >= 0.5 there.
///  Iou3D    - 3D IoU >= 0.3 against full 3D ground-truth boxes.
///  Recist2D - the legacy per-slice metric: a member box on the mark's own
///             slice with 2D IoU >= 0.5; detections on adjoining slices or
///             of unmarked lesions count as false positives.
enum class MatchMode { P3D, Iou3D, Recist2D };

/// A 3D ground-truth box, required by Iou3D mode.
struct GtBox3D {
  std::string volume_id;
  Box3D box;
};

enum class MatchKind {
  Claimed,        // claimed an unclaimed ground-truth instance
  Duplicate,      // matched geometry whose instance was already claimed;
                  // counts toward precision but adds no recall
  FalsePositive,  // matched nothing
};

struct ProposalMatch {
  double score = 0;
  MatchKind kind = MatchKind::FalsePositive;
  int target = -1;  // index into marks (or gt3d in Iou3D mode)
};

struct MatchResult {
  std::vector<ProposalMatch> proposals;  // descending score
  size_t n_targets = 0;
  size_t n_volumes = 0;
};

/// Greedy matching: proposals in descending score order each claim the best
/// unclaimed ground-truth instance they match. One instance recalls once no
/// matter how many proposals hit it.
MatchResult match_all(const std::vector<Proposal3D>& proposals,
                      const std::vector<RecistMark>& marks, MatchMode mode,
                      size_t n_volumes,
                      const std::vector<GtBox3D>* gt3d = nullptr,
                      double p3d_iou = 0.5, double iou3d_thresh = 0.3);

struct PrCurve {
  struct Point {
    double threshold, precision, recall;
  };
  std::vector<Point> points;  // descending threshold
};

struct FrocCurve {
  struct Point {
    double threshold, fp_per_volume, recall;
  };
  std::vector<Point> points;  // descending threshold
};

/// One operating point per distinct score; precision counts duplicates as
/// true positives, recall counts distinct claimed instances.
PrCurve pr_curve(const MatchResult& result);

/// All-point interpolated area under the PR curve (precision envelope: at
/// each recall level, the maximum precision at any recall >= it).
double average_precision(const PrCurve& curve);

FrocCurve froc_curve(const MatchResult& result);

/// Linear interpolation of recall at the requested FP-per-volume rates,
/// clamped to the first/last achieved operating points.
std::vector<double> recall_at_fp(const FrocCurve& curve,
                                 const std::vector<double>& rates);

/// Max recall over operating points with precision >= p; 0 if none.
double recall_at_precision(const PrCurve& curve, double p);

/// Average of recall at the standard precision operating points.
double mean_recall(const PrCurve& curve,
                   const std::vector<double>& ps = {0.80, 0.85, 0.90, 0.95});

/// Sample Pearson correlation. Throws NumericError on a constant series.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace lk
