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

#include "lesionkit/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lk {

Box2D::Box2D(double x1_, double y1_, double x2_, double y2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
      !std::isfinite(y2)) {
    throw InputError("Box2D: coordinates must be finite");
  }
  if (!(x2 > x1) || !(y2 > y1)) {
    throw InputError("Box2D: extent must be strictly positive");
  }
}

Box3D::Box3D(double x1_, double y1_, double x2_, double y2_, int z1_, int z2_)
    : x1(x1_), y1(y1_), x2(x2_), y2(y2_), z1(z1_), z2(z2_) {
  Box2D(x1, y1, x2, y2);  // validates the xy extent
  if (z2 < z1) {
    throw InputError("Box3D: z2 must be >= z1");
  }
}

double iou2d(const Box2D& a, const Box2D& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

double iou3d(const Box3D& a, const Box3D& b) {
  const int iz = std::min(a.z2, b.z2) - std::max(a.z1, b.z1) + 1;
  if (iz <= 0) return 0.0;
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy * static_cast<double>(iz);
  const double uni = a.volume() + b.volume() - inter;
  return inter / uni;
}

bool p3d_match(const Box3D& proposal, const RecistMark& mark,
               double iou_thresh) {
  if (mark.z < proposal.z1 || mark.z > proposal.z2) return false;
  return iou2d(proposal.xy(), mark.box) >= iou_thresh;
}

Box2D box_from_recist(std::span<const Point2D> endpoints) {
  if (endpoints.size() < 2) {
    throw InputError("box_from_recist: need at least two endpoints");
  }
  double x1 = endpoints[0].x, x2 = endpoints[0].x;
  double y1 = endpoints[0].y, y2 = endpoints[0].y;
  for (const auto& p : endpoints) {
    x1 = std::min(x1, p.x);
    x2 = std::max(x2, p.x);
    y1 = std::min(y1, p.y);
    y2 = std::max(y2, p.y);
  }
  if (!(x2 > x1) || !(y2 > y1)) {
    throw InputError("box_from_recist: degenerate mark (zero extent)");
  }
  return Box2D(x1, y1, x2, y2);
}

}  // namespace lk
