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

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lesionkit/geometry.hpp"

namespace lk {

/// One raw per-slice detector output.
struct Detection2D {
  std::string volume_id;
  int z = 0;
  Box2D box;
  double score = 0;             // detector confidence in [0,1]
  std::string extras_json;      // unknown record fields, preserved verbatim
};

/// Constant-position linear Kalman filter over (cx, cy, w, h) with a
/// diagonal covariance. predict() advances process noise and returns the
/// prior box used for association; update() folds in a matched observation.
class KalmanBoxFilter {
 public:
  KalmanBoxFilter(const Box2D& first, double process_noise,
                  double observation_noise, double initial_variance);

  Box2D predict();
  void update(const Box2D& observation);
  Box2D box() const;

 private:
  std::array<double, 4> x_;  // cx, cy, w, h
  std::array<double, 4> p_;  // per-component variance
  double q_;
  double r_;
};

struct TrackerConfig {
  double t_g = 0.1;        // detections with score <= t_g are dropped
  double stack_iou = 0.8;  // association / fusion overlap threshold
  bool use_kalman = true;  // false: predict = last observed box
  double process_noise = 1.0;
  double observation_noise = 1.0;
  double initial_variance = 1.0;
};

struct ProposalMember {
  int z = 0;
  Box2D box;
  double score = 0;
};

/// A slice-contiguous run of associated detections. Member slices are
/// strictly consecutive; each member was matched against the track's
/// predicted box at IoU >= stack_iou.
struct Track {
  int id = 0;
  std::vector<ProposalMember> members;
};

/// A stacked 3D lesion proposal. The extent's xy is the tight bounding box
/// of the member boxes and its z-range spans the member slices; slices
/// bridged during fusion are covered by the extent but carry no member.
struct Proposal3D {
  std::string id;
  std::string volume_id;
  Box3D extent;
  std::vector<ProposalMember> members;  // sorted by (z, x1, y1)
  double s_g = 0;               // max member detection score
  std::optional<double> s_c;    // classifier probability, when attached
  std::optional<double> s;      // fused lesion score s_g * s_c
  int round = 0;                // harvesting iteration that produced it
  std::string extras_json;      // unknown record fields, preserved verbatim

  /// Score used when ranking for evaluation: s if fused, else s_g.
  double effective_score() const { return s ? *s : s_g; }
};

/// Builds a proposal from members: computes the tight extent and s_g.
Proposal3D make_proposal(std::string volume_id,
                         std::vector<ProposalMember> members, int round = 0);

/// Strict weak order making proposal processing independent of input order.
bool proposal_canonical_less(const Proposal3D& a, const Proposal3D& b);

/// Assigns "volume:r<round>:<seq>" identifiers in canonical order.
void assign_proposal_ids(std::vector<Proposal3D>& proposals, int round);

/// The connection predicate behind bridge-fusion: true iff the two
/// proposals own member boxes at most two slices apart (i.e. their
/// one-slice-padded extents meet) whose 2D IoU reaches stack_iou.
bool proposals_connect(const Proposal3D& a, const Proposal3D& b,
                       double stack_iou);

/// Transitively fuses connected proposals. The fused z-range spans the
/// component ranges (a bridged gap slice is covered but has no member);
/// padding leaves unfused proposals untouched. Idempotent.
std::vector<Proposal3D> bridge_and_fuse(std::vector<Proposal3D> proposals,
                                        double stack_iou = 0.8);
std::vector<Proposal3D> bridge_and_fuse(const std::vector<Track>& tracks,
                                        std::string volume_id,
                                        double stack_iou = 0.8);

/// Full per-volume pipeline: score filtering at t_g, slice-by-slice
/// association against Kalman-predicted boxes (greedy by descending IoU,
/// ties by higher score then lower track id), then bridge_and_fuse.
/// Detections are canonically sorted first, so any input permutation
/// yields the same proposals. All detections must share one volume_id.
std::vector<Proposal3D> stack_volume(std::vector<Detection2D> detections,
                                     const TrackerConfig& config = {});

}  // namespace lk
