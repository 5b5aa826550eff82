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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lesionkit/geometry.hpp"

using namespace lk;
using namespace lktest;

TEST_CASE("iou2d hand cases") {
  CHECK(iou2d(Box2D(0, 0, 10, 10), Box2D(0, 0, 10, 10)) == 1.0);
  CHECK(iou2d(Box2D(0, 0, 10, 10), Box2D(20, 20, 30, 30)) == 0.0);
  // 50 / 150
  CHECK(iou2d(Box2D(0, 0, 10, 10), Box2D(5, 0, 15, 10)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // touching edges share zero area
  CHECK(iou2d(Box2D(0, 0, 10, 10), Box2D(10, 0, 20, 10)) == 0.0);
}

TEST_CASE("iou3d hand cases") {
  const Box3D a(0, 0, 10, 10, 0, 9);
  CHECK(iou3d(a, a) == 1.0);
  CHECK(iou3d(Box3D(0, 0, 10, 10, 0, 4), Box3D(0, 0, 10, 10, 5, 9)) == 0.0);
  // depth overlap 5 of union 15
  CHECK(iou3d(Box3D(0, 0, 10, 10, 0, 9), Box3D(0, 0, 10, 10, 5, 14)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("box construction rejects invalid extents") {
  CHECK_THROWS_AS(Box2D(0, 0, 0, 10), InputError);
  CHECK_THROWS_AS(Box2D(0, 0, 10, 0), InputError);
  CHECK_THROWS_AS(Box2D(5, 0, 4, 10), InputError);
  CHECK_THROWS_AS(Box2D(0, 0, std::nan(""), 10), InputError);
  CHECK_THROWS_AS(Box3D(0, 0, 10, 10, 5, 4), InputError);
  CHECK(Box3D(0, 0, 1, 1, 3, 3).depth() == 1);
}

TEST_CASE("p3d_match hand cases") {
  const Box3D p(0, 0, 10, 10, 3, 7);
  CHECK(p3d_match(p, {"v", "l", 5, Box2D(0, 0, 10, 10)}));
  CHECK_FALSE(p3d_match(p, {"v", "l", 8, Box2D(0, 0, 10, 10)}));
  // IoU exactly 0.5: boundary is inclusive
  CHECK(p3d_match(p, {"v", "l", 5, Box2D(0, 0, 10, 5)}));
  CHECK_FALSE(p3d_match(p, {"v", "l", 5, Box2D(0, 0, 10, 4.9)}));
}

TEST_CASE("box_from_recist") {
  const std::vector<Point2D> cross = {{2, 5}, {8, 5}, {5, 2}, {5, 8}};
  CHECK(box_from_recist(cross) == Box2D(2, 2, 8, 8));

  const std::vector<Point2D> skew = {{0, 0}, {10, 4}, {3, 1}, {6, 9}};
  CHECK(box_from_recist(skew) == Box2D(0, 0, 10, 9));

  const std::vector<Point2D> degenerate = {{1, 1}, {1, 1}, {1, 1}, {1, 1}};
  CHECK_THROWS_AS(box_from_recist(degenerate), InputError);
  const std::vector<Point2D> line = {{1, 1}, {5, 1}};
  CHECK_THROWS_AS(box_from_recist(line), InputError);
  const std::vector<Point2D> one = {{1, 1}};
  CHECK_THROWS_AS(box_from_recist(one), InputError);
}

TEST_CASE("iou agrees with rasterized counting on random integer boxes") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const Box2D a = random_int_box2d(rng);
    const Box2D b = random_int_box2d(rng);
    CHECK(iou2d(a, b) == doctest::Approx(raster_iou2d(a, b)).epsilon(1e-9));
    const Box3D a3 = random_int_box3d(rng);
    const Box3D b3 = random_int_box3d(rng);
    CHECK(iou3d(a3, b3) == doctest::Approx(raster_iou3d(a3, b3)).epsilon(1e-9));
  }
}

TEST_CASE("iou symmetry, range and identity") {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    const Box2D a = random_int_box2d(rng);
    const Box2D b = random_int_box2d(rng);
    const double v = iou2d(a, b);
    CHECK(v == iou2d(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK((v == 1.0) == (a == b));

    const Box3D a3 = random_int_box3d(rng);
    const Box3D b3 = random_int_box3d(rng);
    const double v3 = iou3d(a3, b3);
    CHECK(v3 == iou3d(b3, a3));
    CHECK(v3 >= 0.0);
    CHECK(v3 <= 1.0);
    CHECK((v3 == 1.0) == (a3 == b3));
  }
}

TEST_CASE("iou translation invariance") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const Box2D a = random_int_box2d(rng);
    const Box2D b = random_int_box2d(rng);
    const double dx = rng.uniform(-50, 50), dy = rng.uniform(-50, 50);
    const Box2D a2(a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy);
    const Box2D b2(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy);
    CHECK(iou2d(a, b) == doctest::Approx(iou2d(a2, b2)).epsilon(1e-12));
  }
}

TEST_CASE("p3d_match is invariant to the mark slice within the z-range") {
  Rng rng(4242);
  for (int i = 0; i < 200; ++i) {
    const Box3D p = random_int_box3d(rng);
    const Box2D mark_box = random_int_box2d(rng);
    bool first = p3d_match(p, {"v", "l", p.z1, mark_box});
    for (int z = p.z1; z <= p.z2; ++z) {
      CHECK(p3d_match(p, {"v", "l", z, mark_box}) == first);
    }
    CHECK_FALSE(p3d_match(p, {"v", "l", p.z1 - 1, mark_box}));
    CHECK_FALSE(p3d_match(p, {"v", "l", p.z2 + 1, mark_box}));
  }
}
