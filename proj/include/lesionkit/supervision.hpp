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

#include <vector>

#include "lesionkit/geometry.hpp"

namespace lk {

/// Output grid geometry: input image dimensions in pixels and the detector
/// head's downsampling stride. Grid cells = ceil(image / stride).
struct GridSpec {
  double image_width = 512;
  double image_height = 512;
  int stride = 4;

  int out_width() const;
  int out_height() const;
};

/// Dense supervision grid. Positive-only maps lie in [0,1]; a master map
/// with hard negatives overwritten lies in [-1,1].
struct Heatmap {
  int width = 0;
  int height = 0;
  int stride = 1;
  std::vector<float> values;  // row-major, height rows of width

  Heatmap() = default;
  Heatmap(int width, int height, int stride, float fill = 0.f);

  float at(int x, int y) const { return values[size_t(y) * width + x]; }
  float& at(int x, int y) { return values[size_t(y) * width + x]; }
  bool same_shape(const Heatmap& o) const {
    return width == o.width && height == o.height && stride == o.stride;
  }
};

/// Renders one axis-aligned Gaussian per box at its stride-quantized center
/// cell, sigma = max(extent/(6*stride), 1) per axis, combining overlaps by
/// element-wise max. The center cell is exactly 1. Boxes outside the image
/// bounds are rejected.
Heatmap gaussian_heatmap(const std::vector<Box2D>& boxes, const GridSpec& grid);

/// Master supervision map: per cell, -Yn where Yn > 0, else Yp.
Heatmap master_heatmap(const Heatmap& yp, const Heatmap& yn);

struct LossConfig {
  double alpha = 2;  // focal exponent on the prediction
  double beta = 4;   // penalty-reduction exponent on soft negatives
  int stride = 4;
};

/// Penalty-reduced pixel-wise focal loss over a predicted heatmap yhat in
/// (0,1) and a master target y in [-1,1], normalized by the object count m.
/// Cells with y < 0 (hard negatives) flow through the negative branch, so
/// the (1-y)^beta factor amplifies their penalty (2^beta at y = -1).
/// Predictions are clamped to [1e-12, 1-1e-12] before the logs.
double focal_loss(const Heatmap& yhat, const Heatmap& y, const LossConfig& cfg,
                  int m);

/// Analytic d(loss)/d(yhat) per cell, for gradient verification.
Heatmap focal_loss_grad(const Heatmap& yhat, const Heatmap& y,
                        const LossConfig& cfg, int m);

struct RegressionTargets {
  Heatmap size_w;    // box width in input pixels, at center cells
  Heatmap size_h;    // box height in input pixels
  Heatmap offset_x;  // sub-stride residual of the true center
  Heatmap offset_y;
  Heatmap mask;      // 1 exactly at center cells
  int collisions = 0;  // boxes that quantized onto an occupied cell
};

/// Size/offset regression targets supervised only at quantized centers.
/// When two boxes land on one cell the later box wins and `collisions`
/// reports it.
RegressionTargets regression_targets(const std::vector<Box2D>& boxes,
                                     const GridSpec& grid);

}  // namespace lk
