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

#include "lesionkit/errors.hpp"

namespace lk {

struct Point2D {
  double x = 0;
  double y = 0;
};

/// Axis-aligned box over continuous pixel coordinates. The extent is
/// half-open, [x1,x2) x [y1,y2), so area = (x2-x1)*(y2-y1). Construction
/// rejects non-finite coordinates and non-positive extents.
struct Box2D {
  double x1, y1, x2, y2;

  Box2D(double x1, double y1, double x2, double y2);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool operator==(const Box2D&) const = default;
};

/// 3D box: continuous half-open xy extent plus an inclusive integer slice
/// range [z1,z2]. Depth counts slices: z2 - z1 + 1.
struct Box3D {
  double x1, y1, x2, y2;
  int z1, z2;

  Box3D(double x1, double y1, double x2, double y2, int z1, int z2);

  Box2D xy() const { return Box2D(x1, y1, x2, y2); }
  int depth() const { return z2 - z1 + 1; }
  double volume() const { return xy().area() * static_cast<double>(depth()); }

  bool operator==(const Box3D&) const = default;
};

/// Intersection area over union area; 0 for disjoint boxes, 1 iff identical.
double iou2d(const Box2D& a, const Box2D& b);

/// 3D IoU with depth measured in slices and xy in pixels.
double iou3d(const Box3D& a, const Box3D& b);

enum class MarkOrigin { Original, Supplementary };

/// A clinician's 2D measurement box pinned to one slice of one volume.
struct RecistMark {
  std::string volume_id;
  std::string lesion_id;
  int z = 0;
  Box2D box;
  MarkOrigin origin = MarkOrigin::Original;
  std::string extras_json;  // unknown record fields, preserved verbatim
};

/// The pseudo-3D match predicate: true iff the mark's slice lies inside the
/// proposal's z-range and the xy overlap on that slice reaches iou_thresh
/// (inclusive). The caller guarantees both refer to the same volume.
bool p3d_match(const Box3D& proposal, const RecistMark& mark,
               double iou_thresh = 0.5);

/// Tight axis-aligned bounding box of measurement-diameter endpoints.
/// Throws InputError for fewer than two points or a degenerate
/// (zero-width or zero-height) extent.
Box2D box_from_recist(std::span<const Point2D> endpoints);

}  // namespace lk
