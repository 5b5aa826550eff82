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

#include <algorithm>
#include <string>
#include <vector>

#include "lesionkit/geometry.hpp"
#include "lesionkit/rng.hpp"
#include "lesionkit/tracker.hpp"

namespace lktest {

// Integer-coordinate boxes so pixel/voxel counting is exact.
inline lk::Box2D random_int_box2d(lk::Rng& rng, int span = 30, int max_side = 10) {
  const int x1 = rng.uniform_int(0, span);
  const int y1 = rng.uniform_int(0, span);
  const int w = rng.uniform_int(1, max_side);
  const int h = rng.uniform_int(1, max_side);
  return lk::Box2D(x1, y1, x1 + w, y1 + h);
}

inline lk::Box3D random_int_box3d(lk::Rng& rng, int span = 30, int max_side = 10,
                                  int z_span = 10, int max_depth = 6) {
  const lk::Box2D xy = random_int_box2d(rng, span, max_side);
  const int z1 = rng.uniform_int(0, z_span);
  const int d = rng.uniform_int(1, max_depth);
  return lk::Box3D(xy.x1, xy.y1, xy.x2, xy.y2, z1, z1 + d - 1);
}

// Pixel-counting IoU over the half-open integer grid.
inline double raster_iou2d(const lk::Box2D& a, const lk::Box2D& b) {
  long long inter = 0, only_a = 0, only_b = 0;
  const int x_lo = int(std::min(a.x1, b.x1)), x_hi = int(std::max(a.x2, b.x2));
  const int y_lo = int(std::min(a.y1, b.y1)), y_hi = int(std::max(a.y2, b.y2));
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) {
      const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2;
      const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
      if (in_a && in_b) ++inter;
      else if (in_a) ++only_a;
      else if (in_b) ++only_b;
    }
  }
  const long long uni = inter + only_a + only_b;
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

// Voxel-counting IoU (half-open xy, inclusive z).
inline double raster_iou3d(const lk::Box3D& a, const lk::Box3D& b) {
  long long inter = 0, uni = 0;
  const int x_lo = int(std::min(a.x1, b.x1)), x_hi = int(std::max(a.x2, b.x2));
  const int y_lo = int(std::min(a.y1, b.y1)), y_hi = int(std::max(a.y2, b.y2));
  const int z_lo = std::min(a.z1, b.z1), z_hi = std::max(a.z2, b.z2);
  for (int z = z_lo; z <= z_hi; ++z) {
    for (int y = y_lo; y < y_hi; ++y) {
      for (int x = x_lo; x < x_hi; ++x) {
        const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2 &&
                          z >= a.z1 && z <= a.z2;
        const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2 &&
                          z >= b.z1 && z <= b.z2;
        if (in_a && in_b) ++inter;
        if (in_a || in_b) ++uni;
      }
    }
  }
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

// Literal transcription of the pseudo-3D true-positive rule, kept separate
// from the library implementation on purpose.
inline bool direct_p3d_rule(const lk::Box3D& p, const lk::RecistMark& mark,
                            double thresh) {
  if (!(p.z1 <= mark.z && mark.z <= p.z2)) return false;
  return raster_iou2d(p.xy(), mark.box) >= thresh;
}

inline lk::Detection2D det(std::string volume, int z, double x1, double y1,
                           double x2, double y2, double score) {
  return {std::move(volume), z, lk::Box2D(x1, y1, x2, y2), score, ""};
}

inline lk::Proposal3D simple_proposal(std::string volume, double x1, double y1,
                                      double x2, double y2, int z1, int z2,
                                      double score, int round = 0) {
  std::vector<lk::ProposalMember> members;
  for (int z = z1; z <= z2; ++z) {
    members.push_back({z, lk::Box2D(x1, y1, x2, y2), score});
  }
  return lk::make_proposal(std::move(volume), std::move(members), round);
}

}  // namespace lktest
