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
#include "lesionkit/supervision.hpp"

using namespace lk;
using namespace lktest;

namespace {

// Direct per-cell transcription of the penalty-reduced focal loss, kept
// independent of the library implementation.
double focal_loss_reference(const Heatmap& yhat, const Heatmap& y,
                            double alpha, double beta, int m) {
  double total = 0;
  for (size_t i = 0; i < y.values.size(); ++i) {
    const double p =
        std::min(std::max(double(yhat.values[i]), 1e-12), 1.0 - 1e-12);
    const double t = y.values[i];
    if (t == 1.0f) {
      total += std::pow(1.0 - p, alpha) * std::log(p);
    } else {
      total += std::pow(1.0 - t, beta) * std::pow(p, alpha) * std::log(1.0 - p);
    }
  }
  return -total / m;
}

Heatmap random_prediction(Rng& rng, int w, int h, int stride) {
  Heatmap map(w, h, stride);
  for (auto& v : map.values) v = float(rng.uniform(0.02, 0.98));
  return map;
}

Heatmap random_target(Rng& rng, int w, int h, int stride) {
  Heatmap map(w, h, stride);
  for (auto& v : map.values) {
    const double u = rng.uniform();
    if (u < 0.1) {
      v = 1.0f;
    } else if (u < 0.25) {
      v = float(-rng.uniform(0.2, 1.0));  // hard-negative cell
    } else if (u < 0.6) {
      v = float(rng.uniform(0.0, 0.95));  // gaussian tail
    } else {
      v = 0.0f;
    }
  }
  return map;
}

}  // namespace

TEST_CASE("gaussian heatmap peak and falloff") {
  const GridSpec grid{128, 128, 4};
  const Box2D box(32, 32, 96, 96);  // center (64,64) -> cell (16,16)
  const Heatmap map = gaussian_heatmap({box}, grid);
  CHECK(map.width == 32);
  CHECK(map.height == 32);
  CHECK(map.at(16, 16) == 1.0f);

  // sigma_x = 64 / (6*4) = 8/3 cells; value at one sigma is exp(-1/2)
  const double sx = (96.0 - 32.0) / (6 * 4);
  const int probe = 16 + int(std::lround(sx * 3));  // 3 sigma = 8 cells
  CHECK(map.at(probe, 16) ==
        doctest::Approx(std::exp(-0.5 * 9.0)).epsilon(1e-4));

  // duplicate boxes change nothing (max composition)
  const Heatmap twice = gaussian_heatmap({box, box}, grid);
  CHECK(twice.values == map.values);
}

TEST_CASE("gaussian value exactly at one sigma") {
  // stride 1 and a box whose sigma is an integer number of cells
  const GridSpec grid{100, 100, 1};
  const Box2D box(20, 20, 80, 80);  // center (50,50), sigma = 60/6 = 10
  const Heatmap map = gaussian_heatmap({box}, grid);
  CHECK(map.at(50, 50) == 1.0f);
  CHECK(map.at(60, 50) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
  CHECK(map.at(50, 60) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
}

TEST_CASE("boxes outside the image are rejected") {
  const GridSpec grid{64, 64, 4};
  CHECK_THROWS_AS(gaussian_heatmap({Box2D(-1, 0, 10, 10)}, grid), InputError);
  CHECK_THROWS_AS(gaussian_heatmap({Box2D(0, 0, 65, 10)}, grid), InputError);
}

TEST_CASE("master heatmap overwrite rule") {
  Heatmap yp(4, 4, 4), yn(4, 4, 4);
  yp.at(1, 1) = 0.8f;
  yn.at(1, 1) = 0.6f;
  yp.at(2, 2) = 0.8f;
  const Heatmap y = master_heatmap(yp, yn);
  CHECK(y.at(1, 1) == -0.6f);
  CHECK(y.at(2, 2) == 0.8f);
  CHECK(y.at(0, 0) == 0.0f);

  // all-zero negatives leave the positive map untouched
  const Heatmap y2 = master_heatmap(yp, Heatmap(4, 4, 4));
  CHECK(y2.values == yp.values);

  CHECK_THROWS_AS(master_heatmap(yp, Heatmap(5, 4, 4)), InputError);
}

TEST_CASE("focal loss single-cell value") {
  Heatmap yhat(1, 1, 4), y(1, 1, 4);
  y.at(0, 0) = 1.0f;
  yhat.at(0, 0) = 0.5f;
  // 0.25 * ln 2
  CHECK(focal_loss(yhat, y, {}, 1) ==
        doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("focal loss of a perfect prediction tends to zero") {
  Heatmap y(4, 4, 4);
  y.at(1, 1) = 1.0f;
  double last = 1e9;
  for (double eps : {1e-3, 1e-6, 1e-9}) {
    Heatmap yhat(4, 4, 4);
    for (auto& v : yhat.values) v = float(eps);
    yhat.at(1, 1) = float(1.0 - eps);
    const double loss = focal_loss(yhat, y, {}, 1);
    CHECK(loss < last);
    last = loss;
  }
  CHECK(last < 1e-12);
}

TEST_CASE("hard-negative cells are penalized 2^beta times harder") {
  const LossConfig cfg;
  Heatmap yhat(1, 1, 4), zero(1, 1, 4), hard(1, 1, 4);
  hard.at(0, 0) = -1.0f;
  for (double p : {0.1, 0.5, 0.9}) {
    yhat.at(0, 0) = float(p);
    const double plain = focal_loss(yhat, zero, cfg, 1);
    const double negated = focal_loss(yhat, hard, cfg, 1);
    CHECK(negated / plain == 16.0);
  }
}

TEST_CASE("focal loss matches the direct transcription on random grids") {
  Rng rng(90210);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = rng.uniform_int(2, 12), h = rng.uniform_int(2, 12);
    const Heatmap yhat = random_prediction(rng, w, h, 4);
    const Heatmap y = random_target(rng, w, h, 4);
    const int m = rng.uniform_int(1, 5);
    const double got = focal_loss(yhat, y, {}, m);
    const double want = focal_loss_reference(yhat, y, 2, 4, m);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("focal loss decreases as a positive cell's prediction improves") {
  Heatmap y(2, 2, 4);
  y.at(0, 0) = 1.0f;
  double prev = 1e18;
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
    Heatmap yhat(2, 2, 4);
    for (auto& v : yhat.values) v = 0.1f;
    yhat.at(0, 0) = float(p);
    const double loss = focal_loss(yhat, y, {}, 1);
    CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("analytic gradient matches finite differences") {
  Rng rng(1417);
  const int w = 6, h = 5;
  const Heatmap yhat = random_prediction(rng, w, h, 4);
  const Heatmap y = random_target(rng, w, h, 4);
  const int m = 2;
  const Heatmap grad = focal_loss_grad(yhat, y, {}, m);
  const double delta = 1e-6;
  for (int i = 0; i < w * h; i += 3) {
    Heatmap up = yhat, dn = yhat;
    up.values[i] += float(delta);
    dn.values[i] -= float(delta);
    const double fd = (focal_loss(up, y, {}, m) - focal_loss(dn, y, {}, m)) /
                      (double(up.values[i]) - double(dn.values[i]));
    CHECK(grad.values[i] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("focal loss input validation") {
  Heatmap yhat(2, 2, 4), y(2, 2, 4);
  CHECK_THROWS_AS(focal_loss(yhat, y, {}, 0), InputError);
  yhat.at(0, 0) = 1.5f;
  CHECK_THROWS_AS(focal_loss(yhat, y, {}, 1), NumericError);
  yhat.at(0, 0) = -0.1f;
  CHECK_THROWS_AS(focal_loss(yhat, y, {}, 1), NumericError);
}

TEST_CASE("regression targets quantization") {
  const GridSpec grid{64, 64, 4};
  auto t = regression_targets({Box2D(0, 0, 16, 16)}, grid);
  CHECK(t.mask.at(2, 2) == 1.0f);
  CHECK(t.size_w.at(2, 2) == 16.0f);
  CHECK(t.size_h.at(2, 2) == 16.0f);
  CHECK(t.offset_x.at(2, 2) == 0.0f);
  CHECK(t.offset_y.at(2, 2) == 0.0f);
  CHECK(t.collisions == 0);

  t = regression_targets({Box2D(1, 1, 17, 17)}, grid);
  CHECK(t.mask.at(2, 2) == 1.0f);
  CHECK(t.offset_x.at(2, 2) == 0.25f);
  CHECK(t.offset_y.at(2, 2) == 0.25f);

  // empty input: all-zero maps
  t = regression_targets({}, grid);
  for (float v : t.mask.values) CHECK(v == 0.0f);

  // two boxes on one cell: last writer wins, collision reported
  t = regression_targets({Box2D(0, 0, 16, 16), Box2D(2, 2, 14, 14)}, grid);
  CHECK(t.collisions == 1);
  CHECK(t.size_w.at(2, 2) == 12.0f);
}

TEST_CASE("mask cells coincide with heatmap peaks") {
  Rng rng(6060);
  const GridSpec grid{128, 128, 4};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Box2D> boxes;
    const int n = rng.uniform_int(1, 6);
    for (int i = 0; i < n; ++i) {
      const double w = rng.uniform(8, 40), h = rng.uniform(8, 40);
      const double x1 = rng.uniform(0, 128 - w), y1 = rng.uniform(0, 128 - h);
      boxes.push_back(Box2D(x1, y1, x1 + w, y1 + h));
    }
    const Heatmap heat = gaussian_heatmap(boxes, grid);
    const auto targets = regression_targets(boxes, grid);
    for (size_t i = 0; i < heat.values.size(); ++i) {
      if (targets.mask.values[i] == 1.0f) CHECK(heat.values[i] == 1.0f);
      // the converse can only be violated by an accidental exact 1.0
      if (heat.values[i] == 1.0f) CHECK(targets.mask.values[i] == 1.0f);
    }
  }
}
