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

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lesionkit/geometry.hpp"
#include "lesionkit/tracker.hpp"

namespace lk {

/// Volume roles. M volumes are fully annotated and drive calibration;
/// H volumes are harvested from; HTest volumes flow through harvesting like
/// H but are excluded from training-label export; DTest volumes are held
/// out entirely.
enum class Split { M, H, HTest, DTest };

struct VolumeRecord {
  std::string volume_id;
  int n_slices = 1;
  double width = 512;
  double height = 512;
  Split split = Split::H;
};

using VolumeMap = std::map<std::string, VolumeRecord>;

struct HarvestParams {
  double p3d_iou = 0.5;          // pseudo-3D match threshold
  double same_lesion_iou3d = 0.3;  // pool-merge "same lesion" threshold
  double target_precision = 0.95;
  double hard_neg_min_sg = 0.5;
  int hard_neg_cap = 5;  // per volume
  int convergence_window = 2;
  double convergence_epsilon = 0.005;
};

struct RoundProvenance {
  int k = 0;
  double tau = 0;
  bool tau_met = false;
  size_t n_fresh = 0, n_pm = 0, n_ph = 0, n_excluded = 0;
  size_t n_pm_recist = 0, n_pm_false = 0, n_ph_recist = 0;
  size_t n_new_positives = 0, n_pool = 0;
  size_t n_hard_neg_h = 0, n_hard_neg_m = 0;
  std::vector<std::string> warnings;
};

/// Snapshot after iteration k. `pool` accumulates harvested positives
/// across rounds (merge-only); `phr` holds the best proposal per
/// RECIST-matching lesion; the pm_* partitions and hard negatives belong
/// to round k alone (hard negatives reset every iteration).
struct HarvestState {
  int k = 0;
  std::vector<Proposal3D> pool;       // harvested positives, cumulative
  std::vector<Proposal3D> phr;        // proposals matching harvest-set marks
  std::vector<Proposal3D> pm_recist;  // round-k true positives on M
  std::vector<Proposal3D> pm_false;   // round-k false positives on M
  std::vector<Proposal3D> hard_neg_h;
  std::vector<Proposal3D> hard_neg_m;
  double tau = std::numeric_limits<double>::infinity();
  bool tau_met = false;
  std::vector<double> mean_recall_history;
  std::vector<RoundProvenance> rounds;
};

struct PartitionResult {
  std::vector<Proposal3D> pm;
  std::vector<Proposal3D> ph;        // includes HTest volumes
  std::vector<Proposal3D> excluded;  // DTest volumes
};

/// Routes proposals by their volume's split. Unknown volumes are an error.
PartitionResult partition_by_split(const std::vector<Proposal3D>& proposals,
                                   const VolumeMap& volumes);

struct SplitTrueFalse {
  std::vector<Proposal3D> matched;
  std::vector<Proposal3D> unmatched;
  // Per matched proposal, indices of every mark it pseudo-3D-matches.
  std::vector<std::vector<size_t>> matches;
};

/// Divides proposals into those that pseudo-3D-match at least one mark and
/// the rest. A mark may be matched by several proposals.
SplitTrueFalse split_true_false(const std::vector<Proposal3D>& proposals,
                                const std::vector<RecistMark>& marks,
                                double p3d_iou = 0.5);

/// Lesion score: the product of detection score and classifier probability.
double fuse_score(double s_g, double s_c);

struct CalibrationResult {
  double tau = std::numeric_limits<double>::infinity();
  bool target_met = false;  // false: +inf sentinel, nothing selectable
};

/// Smallest observed score tau such that precision over items with
/// s >= tau reaches target_precision; +inf sentinel when no threshold does.
CalibrationResult calibrate_threshold(
    const std::vector<std::pair<double, bool>>& scored,
    double target_precision = 0.95);

/// Proposals whose fused score reaches tau. Missing scores are a state
/// error: calibration runs on fused scores only.
std::vector<Proposal3D> select_positives(
    const std::vector<Proposal3D>& candidates, double tau);

/// Per volume: keep s_g >= min threshold, order by s_g descending (ties by
/// canonical order) and take at most the cap.
std::vector<Proposal3D> select_hard_negatives(
    const std::vector<Proposal3D>& candidates, double min_sg = 0.5,
    int per_volume_cap = 5);

/// Fuses additions into the pool: proposals of one volume with 3D IoU >=
/// same_lesion_iou3d denote the same lesion (transitively); only the
/// highest-s_g proposal of each cluster survives (ties by higher fused
/// score, then canonical order). Idempotent and order-insensitive for
/// score-distinct inputs.
std::vector<Proposal3D> merge_pool(std::vector<Proposal3D> pool,
                                   std::vector<Proposal3D> additions,
                                   double same_lesion_iou3d = 0.3);

/// External inputs one iteration needs: the volume table, the complete
/// marks of the M split, the (incomplete) marks of the harvest split, and
/// a classifier adapter producing s_c for a fresh proposal.
struct HarvestContext {
  const VolumeMap* volumes = nullptr;
  const std::vector<RecistMark>* marks_m = nullptr;
  const std::vector<RecistMark>* marks_h = nullptr;
  HarvestParams params;
  std::function<double(const Proposal3D&)> lpc;
};

/// One harvesting round: partition -> true/false split -> score fusion ->
/// precision-targeted calibration on M -> positive selection -> pool merge
/// -> refresh of the mark-matching set -> hard-negative reselection.
HarvestState run_iteration(const HarvestState& state,
                           std::vector<Proposal3D> fresh,
                           const HarvestContext& ctx);

/// True once the last `window` successive improvements of the mean-recall
/// history each stay below epsilon.
bool check_convergence(const std::vector<double>& history, int window = 2,
                       double epsilon = 0.005);

struct TrainingLabel {
  std::string volume_id;
  int z = 0;
  Box2D box;
  bool positive = true;
  std::string source;  // "mark", "proposal" or "hard_negative"

  bool operator==(const TrainingLabel&) const = default;
};

/// Export rule: every pooled or mark-matching proposal contributes its
/// highest-scoring member slice as one positive box; all supplied RECIST
/// boxes pass through unchanged; hard negatives contribute their
/// highest-scoring member with the negative flag. HTest volumes are
/// excluded entirely.
std::vector<TrainingLabel> export_training_labels(
    const HarvestState& state, const std::vector<RecistMark>& marks,
    const VolumeMap& volumes);

}  // namespace lk
