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

#include <algorithm>

#include "helpers.hpp"
#include "lesionkit/tracker.hpp"

using namespace lk;
using namespace lktest;

namespace {

// Literal IoU stacking, no Kalman smoothing.
TrackerConfig pure_iou() {
  TrackerConfig cfg;
  cfg.use_kalman = false;
  return cfg;
}

std::vector<Detection2D> constant_box_track(const std::string& vol,
                                            const std::vector<int>& slices,
                                            double score) {
  std::vector<Detection2D> dets;
  for (int z : slices) dets.push_back(det(vol, z, 0, 0, 10, 10, score));
  return dets;
}

}  // namespace

TEST_CASE("single detection run stacks into one proposal") {
  auto dets = constant_box_track("v", {4, 5, 6}, 0.6);
  for (auto cfg : {TrackerConfig{}, pure_iou()}) {
    const auto proposals = stack_volume(dets, cfg);
    REQUIRE(proposals.size() == 1);
    CHECK(proposals[0].extent.z1 == 4);
    CHECK(proposals[0].extent.z2 == 6);
    CHECK(proposals[0].s_g == 0.6);
    CHECK(proposals[0].members.size() == 3);
    CHECK(proposals[0].extent.xy() == Box2D(0, 0, 10, 10));
  }
}

TEST_CASE("detections at or below t_g are dropped") {
  std::vector<Detection2D> dets = {det("v", 4, 0, 0, 10, 10, 0.05)};
  CHECK(stack_volume(dets).empty());
  // boundary: score equal to t_g does not survive
  dets = {det("v", 4, 0, 0, 10, 10, 0.1)};
  CHECK(stack_volume(dets).empty());
  dets = {det("v", 4, 0, 0, 10, 10, 0.100001)};
  CHECK(stack_volume(dets).size() == 1);
}

TEST_CASE("disjoint tracks never associate") {
  std::vector<Detection2D> dets;
  for (int z : {4, 5}) {
    dets.push_back(det("v", z, 0, 0, 10, 10, 0.6));
    dets.push_back(det("v", z, 100, 100, 110, 110, 0.7));
  }
  const auto proposals = stack_volume(dets);
  REQUIRE(proposals.size() == 2);
  CHECK(proposals[0].extent.z1 == 4);
  CHECK(proposals[0].extent.z2 == 5);
  CHECK(proposals[1].extent.z1 == 4);
  CHECK(proposals[1].extent.z2 == 5);
}

TEST_CASE("mixed volumes are rejected") {
  std::vector<Detection2D> dets = {det("a", 4, 0, 0, 10, 10, 0.6),
                                   det("b", 4, 0, 0, 10, 10, 0.6)};
  CHECK_THROWS_AS(stack_volume(dets), InputError);
}

TEST_CASE("one-slice gaps bridge when the boundary boxes overlap") {
  // gap of one slice, same box: fused
  auto dets = constant_box_track("v", {2, 3, 5, 6}, 0.6);
  auto proposals = stack_volume(dets);
  REQUIRE(proposals.size() == 1);
  CHECK(proposals[0].extent.z1 == 2);
  CHECK(proposals[0].extent.z2 == 6);
  CHECK(proposals[0].members.size() == 4);  // slice 4 is covered, not filled

  // gap of two slices: stays split
  dets = constant_box_track("v", {2, 3, 6, 7}, 0.6);
  proposals = stack_volume(dets);
  CHECK(proposals.size() == 2);
}

TEST_CASE("bridging respects the overlap threshold") {
  // boundary IoU = 0.5 < 0.8: no fusion
  std::vector<Detection2D> dets = {
      det("v", 2, 0, 0, 10, 10, 0.6), det("v", 3, 0, 0, 10, 10, 0.6),
      det("v", 5, 0, 5, 10, 15, 0.6), det("v", 6, 0, 5, 10, 15, 0.6)};
  CHECK(stack_volume(dets).size() == 2);
}

TEST_CASE("bridge_and_fuse is idempotent on its own output") {
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Proposal3D> proposals;
    const int n = rng.uniform_int(1, 8);
    for (int i = 0; i < n; ++i) {
      const Box3D b = random_int_box3d(rng, 20, 8, 12, 4);
      proposals.push_back(simple_proposal("v", b.x1, b.y1, b.x2, b.y2, b.z1,
                                          b.z2, 0.5));
    }
    const auto fused = bridge_and_fuse(proposals);
    const auto again = bridge_and_fuse(fused);
    REQUIRE(fused.size() == again.size());
    for (size_t i = 0; i < fused.size(); ++i) {
      CHECK(fused[i].extent == again[i].extent);
      CHECK(fused[i].members.size() == again[i].members.size());
    }
    // fusion is exhaustive: no two outputs still connect
    for (size_t i = 0; i < fused.size(); ++i) {
      for (size_t j = i + 1; j < fused.size(); ++j) {
        CHECK_FALSE(proposals_connect(fused[i], fused[j], 0.8));
      }
    }
  }
}

TEST_CASE("emitted members all exceed t_g and adjacent members overlap") {
  Rng rng(555);
  TrackerConfig cfg = pure_iou();
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Detection2D> dets;
    const int n = rng.uniform_int(5, 40);
    for (int i = 0; i < n; ++i) {
      const Box2D b = random_int_box2d(rng, 20, 12);
      dets.push_back({"v", rng.uniform_int(0, 10), b, rng.uniform(0, 1), ""});
    }
    const auto proposals = stack_volume(dets, cfg);
    for (const auto& p : proposals) {
      double max_score = 0;
      for (const auto& m : p.members) {
        CHECK(m.score > cfg.t_g);
        max_score = std::max(max_score, m.score);
      }
      CHECK(p.s_g == max_score);
      CHECK(p.extent.z1 <= p.extent.z2);
    }
  }
}

TEST_CASE("input permutation does not change the stacked output") {
  Rng rng(777);
  std::vector<Detection2D> dets;
  for (int i = 0; i < 60; ++i) {
    const Box2D b = random_int_box2d(rng, 25, 10);
    dets.push_back({"v", rng.uniform_int(0, 12), b, rng.uniform(0.2, 1), ""});
  }
  const auto reference = stack_volume(dets);
  for (int shuffle = 0; shuffle < 25; ++shuffle) {
    for (size_t i = dets.size(); i > 1; --i) {
      std::swap(dets[i - 1], dets[rng.uniform_int(0, int(i) - 1)]);
    }
    const auto permuted = stack_volume(dets);
    REQUIRE(permuted.size() == reference.size());
    for (size_t i = 0; i < reference.size(); ++i) {
      CHECK(permuted[i].extent == reference[i].extent);
      CHECK(permuted[i].s_g == reference[i].s_g);
      CHECK(permuted[i].members.size() == reference[i].members.size());
    }
  }
}

TEST_CASE("kalman filter degenerate and smoothing behaviour") {
  // q = 0, r -> 0: predicted box equals the last observation
  KalmanBoxFilter kf(Box2D(0, 0, 10, 10), 0.0, 0.0, 1.0);
  kf.update(Box2D(2, 2, 12, 12));
  CHECK(kf.predict().cx() == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(kf.predict().width() == doctest::Approx(10.0).epsilon(1e-9));

  // single observation then predict: constant-position model keeps the box
  KalmanBoxFilter kf2(Box2D(5, 5, 15, 15), 1.0, 1.0, 1.0);
  const Box2D predicted = kf2.predict();
  CHECK(predicted.cx() == doctest::Approx(10.0));
  CHECK(predicted.cy() == doctest::Approx(10.0));

  // two observations with finite noise: estimate strictly between them
  KalmanBoxFilter kf3(Box2D(5, 0, 15, 10), 1.0, 1.0, 1.0);  // cx = 10
  kf3.predict();
  kf3.update(Box2D(7, 0, 17, 10));  // cx = 12
  const double cx = kf3.box().cx();
  CHECK(cx > 10.0);
  CHECK(cx < 12.0);
}

TEST_CASE("kalman association tolerates slow drift that strict IoU loses") {
  // box drifting 1px per slice; IoU of adjacent boxes stays >= 0.8 so both
  // modes track it, and the proposal covers the whole run
  std::vector<Detection2D> dets;
  for (int z = 0; z < 8; ++z) {
    dets.push_back(det("v", z, 0 + z, 0, 20 + z, 20, 0.9));
  }
  for (auto cfg : {TrackerConfig{}, pure_iou()}) {
    const auto proposals = stack_volume(dets, cfg);
    REQUIRE(proposals.size() == 1);
    CHECK(proposals[0].extent.z1 == 0);
    CHECK(proposals[0].extent.z2 == 7);
  }
}

TEST_CASE("track ids break association ties deterministically") {
  // two identical open tracks compete for one detection
  std::vector<Detection2D> dets = {det("v", 0, 0, 0, 10, 10, 0.5),
                                   det("v", 0, 0, 0, 10, 10, 0.6),
                                   det("v", 1, 0, 0, 10, 10, 0.7)};
  const auto proposals = stack_volume(dets, pure_iou());
  REQUIRE(proposals.size() >= 1);
  size_t total_members = 0;
  for (const auto& p : proposals) total_members += p.members.size();
  CHECK(total_members == 3);
}
