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

#include "lesionkit/supervision.hpp"

#include <cmath>

namespace lk {

namespace {

constexpr double kClamp = 1e-12;

struct CenterCell {
  int cx_cell, cy_cell;
  double cx, cy;  // in grid units (pixels / stride)
};

CenterCell quantize_center(const Box2D& box, const GridSpec& grid) {
  const double cx = box.cx() / grid.stride;
  const double cy = box.cy() / grid.stride;
  return {static_cast<int>(std::floor(cx)), static_cast<int>(std::floor(cy)),
          cx, cy};
}

void check_inside(const Box2D& box, const GridSpec& grid) {
  if (box.x1 < 0 || box.y1 < 0 || box.x2 > grid.image_width ||
      box.y2 > grid.image_height) {
    throw InputError("heatmap: box outside image bounds");
  }
}

}  // namespace

int GridSpec::out_width() const {
  return static_cast<int>(std::ceil(image_width / stride));
}

int GridSpec::out_height() const {
  return static_cast<int>(std::ceil(image_height / stride));
}

Heatmap::Heatmap(int width_, int height_, int stride_, float fill)
    : width(width_),
      height(height_),
      stride(stride_),
      values(size_t(width_) * size_t(height_), fill) {
  if (width_ <= 0 || height_ <= 0 || stride_ <= 0) {
    throw InputError("Heatmap: dimensions and stride must be positive");
  }
}

Heatmap gaussian_heatmap(const std::vector<Box2D>& boxes,
                         const GridSpec& grid) {
  Heatmap map(grid.out_width(), grid.out_height(), grid.stride);
  for (const auto& box : boxes) {
    check_inside(box, grid);
    const CenterCell c = quantize_center(box, grid);
    const double sx = std::max(box.width() / (6.0 * grid.stride), 1.0);
    const double sy = std::max(box.height() / (6.0 * grid.stride), 1.0);
    for (int y = 0; y < map.height; ++y) {
      const double dy = y - c.cy_cell;
      for (int x = 0; x < map.width; ++x) {
        const double dx = x - c.cx_cell;
        const float g = static_cast<float>(
            std::exp(-(dx * dx / (2 * sx * sx) + dy * dy / (2 * sy * sy))));
        map.at(x, y) = std::max(map.at(x, y), g);
      }
    }
    map.at(c.cx_cell, c.cy_cell) = 1.0f;
  }
  return map;
}

Heatmap master_heatmap(const Heatmap& yp, const Heatmap& yn) {
  if (!yp.same_shape(yn)) {
    throw InputError("master_heatmap: heatmap shapes differ");
  }
  Heatmap out = yp;
  for (size_t i = 0; i < out.values.size(); ++i) {
    if (yn.values[i] > 0) out.values[i] = -yn.values[i];
  }
  return out;
}

double focal_loss(const Heatmap& yhat, const Heatmap& y, const LossConfig& cfg,
                  int m) {
  if (!yhat.same_shape(y)) throw InputError("focal_loss: shapes differ");
  if (m < 1) throw InputError("focal_loss: object count m must be >= 1");
  double sum = 0;
  for (size_t i = 0; i < y.values.size(); ++i) {
    const double p = yhat.values[i];
    if (!(p >= 0.0) || !(p <= 1.0)) {
      throw NumericError("focal_loss: prediction outside [0,1]");
    }
    const double c = std::min(std::max(p, kClamp), 1.0 - kClamp);
    const double t = y.values[i];
    if (t == 1.0) {
      sum += std::pow(1.0 - c, cfg.alpha) * std::log(c);
    } else {
      sum += std::pow(1.0 - t, cfg.beta) * std::pow(c, cfg.alpha) *
             std::log(1.0 - c);
    }
  }
  return -sum / m;
}

Heatmap focal_loss_grad(const Heatmap& yhat, const Heatmap& y,
                        const LossConfig& cfg, int m) {
  if (!yhat.same_shape(y)) throw InputError("focal_loss_grad: shapes differ");
  if (m < 1) throw InputError("focal_loss_grad: object count m must be >= 1");
  Heatmap grad(yhat.width, yhat.height, yhat.stride);
  for (size_t i = 0; i < y.values.size(); ++i) {
    const double c =
        std::min(std::max(double(yhat.values[i]), kClamp), 1.0 - kClamp);
    const double t = y.values[i];
    double d;
    if (t == 1.0) {
      d = -cfg.alpha * std::pow(1.0 - c, cfg.alpha - 1) * std::log(c) +
          std::pow(1.0 - c, cfg.alpha) / c;
    } else {
      d = std::pow(1.0 - t, cfg.beta) *
          (cfg.alpha * std::pow(c, cfg.alpha - 1) * std::log(1.0 - c) -
           std::pow(c, cfg.alpha) / (1.0 - c));
    }
    grad.values[i] = static_cast<float>(-d / m);
  }
  return grad;
}

RegressionTargets regression_targets(const std::vector<Box2D>& boxes,
                                     const GridSpec& grid) {
  const int w = grid.out_width(), h = grid.out_height();
  RegressionTargets t{Heatmap(w, h, grid.stride), Heatmap(w, h, grid.stride),
                      Heatmap(w, h, grid.stride), Heatmap(w, h, grid.stride),
                      Heatmap(w, h, grid.stride), 0};
  for (const auto& box : boxes) {
    check_inside(box, grid);
    const CenterCell c = quantize_center(box, grid);
    if (t.mask.at(c.cx_cell, c.cy_cell) == 1.0f) ++t.collisions;
    t.size_w.at(c.cx_cell, c.cy_cell) = static_cast<float>(box.width());
    t.size_h.at(c.cx_cell, c.cy_cell) = static_cast<float>(box.height());
    t.offset_x.at(c.cx_cell, c.cy_cell) =
        static_cast<float>(c.cx - c.cx_cell);
    t.offset_y.at(c.cx_cell, c.cy_cell) =
        static_cast<float>(c.cy - c.cy_cell);
    t.mask.at(c.cx_cell, c.cy_cell) = 1.0f;
  }
  return t;
}

}  // namespace lk
