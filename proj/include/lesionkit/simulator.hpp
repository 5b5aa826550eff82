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

#include <cstdint>
#include <string>
#include <vector>

#include "lesionkit/harvester.hpp"
#include "lesionkit/report.hpp"

namespace lk {

/// Synthetic world parameters. Lesions are axis-aligned 3D boxes with a
/// constant per-slice xy extent; marked_fraction controls how many carry a
/// visible measurement mark (the rest are the harvest targets).
struct WorldConfig {
  int n_volumes = 100;
  int n_slices = 40;
  double width = 512;
  double height = 512;
  double lesions_per_volume_mean = 3.0;
  int lesions_per_volume_max = 8;
  double marked_fraction = 0.5;
  double lesion_size_min = 8;    // xy pixels
  double lesion_size_max = 64;
  int lesion_depth_min = 2;      // slices
  int lesion_depth_max = 9;
  double m_fraction = 0.2;       // share of volumes fully annotated
  double h_test_fraction = 0.1;  // share reserved for harvest evaluation
  uint64_t seed = 1;
};

struct SimLesion {
  std::string volume_id;
  std::string lesion_id;
  Box3D extent;
  int mark_z = 0;       // measurement slice (drawn for every lesion)
  bool marked = false;  // carries a visible mark
};

struct World {
  WorldConfig config;
  std::vector<VolumeRecord> volumes;
  std::vector<SimLesion> lesions;

  VolumeMap volume_map() const;
};

/// Deterministic for a fixed seed. Throws InputError for configurations
/// that cannot fit a lesion inside a volume.
World generate_world(const WorldConfig& config);

/// Marks the pipeline is allowed to see: complete for M volumes (original
/// plus supplementary), originals only elsewhere.
std::vector<RecistMark> visible_marks(const World& world);

/// One mark per lesion regardless of visibility; evaluation ground truth.
std::vector<RecistMark> complete_marks(const World& world);

/// Full 3D ground-truth boxes for the gold-standard metric.
std::vector<GtBox3D> lesion_boxes(const World& world);

/// Parametric detector/classifier surrogate. detect_base is the per-slice
/// true-detection probability; fp_rate the expected spurious detections per
/// slice; jitter scales box noise; clf_auc the classifier separability;
/// the gains model how exported labels improve the next round.
struct OracleSkill {
  double detect_base = 0.6;
  double fp_rate = 1.0;
  double jitter = 0.02;
  double clf_auc = 0.92;
  double gain_pos = 0.08;
  double gain_neg = 0.15;
};

/// Per-slice detections for the whole world; streams are keyed by
/// (seed, volume, slice, round), so the output is reproducible per seed.
/// True detections score ~ N(0.75, 0.15) clipped, spurious ~ N(0.35, 0.15).
std::vector<Detection2D> oracle_lpg(const World& world,
                                    const OracleSkill& skill, int round);

/// Classifier probability for one proposal, keyed by its id. Separation of
/// the true/false score distributions realizes clf_auc.
double oracle_lpc(const Proposal3D& proposal, const World& world,
                  const OracleSkill& skill, double p3d_iou = 0.5);

/// Monotone training surrogate: positives raise detect_base, hard negatives
/// shrink fp_rate, both clamped.
OracleSkill update_skill(const OracleSkill& skill,
                         const std::vector<TrainingLabel>& labels,
                         const World& world);

/// Observer for the simulation loop. checkpoint() may persist and reload
/// the state between rounds (returning true when it replaced the values);
/// the default keeps everything in memory.
class RoundSink {
 public:
  virtual ~RoundSink() = default;
  virtual void on_world(const World&) {}
  virtual void on_round(int k, const std::vector<Detection2D>&,
                        const std::vector<Proposal3D>&, const HarvestState&,
                        const OracleSkill&, const Report&,
                        const std::vector<TrainingLabel>&) {}
  virtual bool checkpoint(HarvestState&, OracleSkill&) { return false; }
};

struct SimulationResult {
  HarvestState state;
  OracleSkill skill;
  std::vector<Report> reports;  // index 0 = round-0 baseline
  bool converged = false;
};

/// Drives generate_world -> oracle_lpg -> stacking -> run_iteration ->
/// label export -> update_skill for `rounds` rounds (stopping early on
/// mean-recall convergence when check_convergence fires). Round 0 reports
/// the marks-only baseline. Fully deterministic per seed.
SimulationResult run_simulation(const WorldConfig& config,
                                const OracleSkill& skill, int rounds,
                                const HarvestParams& params = {},
                                const TrackerConfig& tracker = {},
                                RoundSink* sink = nullptr,
                                int resume_from = 0,
                                const HarvestState* resume_state = nullptr,
                                const OracleSkill* resume_skill = nullptr);

struct ConcordanceResult {
  // One entry per (skill level, FP operating point).
  std::vector<double> recalls_p3d;
  std::vector<double> recalls_iou3d;
  std::vector<double> recalls_recist2d;
  double pearson_p3d_vs_iou3d = 0;
  double pearson_recist2d_vs_iou3d = 0;
};

/// The metric-concordance experiment: detectors of increasing skill are
/// evaluated under the pseudo-3D metric (complete marks), the gold 3D-IoU
/// metric, and the legacy per-slice metric on incomplete marks; recalls at
/// the standard FROC operating points are then correlated.
ConcordanceResult run_concordance(const WorldConfig& config,
                                  const std::vector<OracleSkill>& levels,
                                  const TrackerConfig& tracker = {},
                                  const std::vector<double>& fp_rates = {
                                      0.125, 0.25, 0.5, 1, 2, 4, 8, 16});

/// Evenly spaced detector skills from weak to strong for run_concordance.
std::vector<OracleSkill> skill_ladder(int n_levels);

}  // namespace lk
