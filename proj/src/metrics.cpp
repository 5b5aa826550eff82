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

#include "lesionkit/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace lk {

namespace {

// Geometric affinity of a proposal to one ground-truth instance under the
// given mode; < 0 means "does not match".
double affinity(const Proposal3D& p, MatchMode mode,
                const std::vector<RecistMark>& marks,
                const std::vector<GtBox3D>& gt3d, size_t target,
                double p3d_iou, double iou3d_thresh) {
  switch (mode) {
    case MatchMode::P3D: {
      const RecistMark& m = marks[target];
      if (m.volume_id != p.volume_id) return -1;
      if (!p3d_match(p.extent, m, p3d_iou)) return -1;
      return iou2d(p.extent.xy(), m.box);
    }
    case MatchMode::Iou3D: {
      const GtBox3D& g = gt3d[target];
      if (g.volume_id != p.volume_id) return -1;
      const double v = iou3d(p.extent, g.box);
      return v >= iou3d_thresh ? v : -1;
    }
    case MatchMode::Recist2D: {
      const RecistMark& m = marks[target];
      if (m.volume_id != p.volume_id) return -1;
      double best = -1;
      for (const auto& member : p.members) {
        if (member.z != m.z) continue;
        const double v = iou2d(member.box, m.box);
        if (v >= p3d_iou) best = std::max(best, v);
      }
      return best;
    }
  }
  return -1;
}

}  // namespace

MatchResult match_all(const std::vector<Proposal3D>& proposals,
                      const std::vector<RecistMark>& marks, MatchMode mode,
                      size_t n_volumes, const std::vector<GtBox3D>* gt3d,
                      double p3d_iou, double iou3d_thresh) {
  static const std::vector<GtBox3D> kNoGt;
  const std::vector<GtBox3D>& gt = gt3d ? *gt3d : kNoGt;
  if (mode == MatchMode::Iou3D && gt.empty()) {
    throw InputError("match_all: Iou3D mode requires 3D ground-truth boxes");
  }
  const size_t n_targets = mode == MatchMode::Iou3D ? gt.size() : marks.size();

  std::vector<size_t> order(proposals.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const double sa = proposals[a].effective_score();
    const double sb = proposals[b].effective_score();
    if (sa != sb) return sa > sb;
    return proposal_canonical_less(proposals[a], proposals[b]);
  });

  MatchResult result;
  result.n_targets = n_targets;
  result.n_volumes = n_volumes;
  std::vector<bool> claimed(n_targets, false);

  for (size_t i : order) {
    const Proposal3D& p = proposals[i];
    double best_free = -1, best_any = -1;
    int best_free_idx = -1, best_any_idx = -1;
    for (size_t t = 0; t < n_targets; ++t) {
      const double a =
          affinity(p, mode, marks, gt, t, p3d_iou, iou3d_thresh);
      if (a < 0) continue;
      if (a > best_any) {
        best_any = a;
        best_any_idx = static_cast<int>(t);
      }
      if (!claimed[t] && a > best_free) {
        best_free = a;
        best_free_idx = static_cast<int>(t);
      }
    }
    ProposalMatch pm;
    pm.score = p.effective_score();
    if (best_free_idx >= 0) {
      pm.kind = MatchKind::Claimed;
      pm.target = best_free_idx;
      claimed[best_free_idx] = true;
    } else if (best_any_idx >= 0) {
      pm.kind = MatchKind::Duplicate;
      pm.target = best_any_idx;
    }
    result.proposals.push_back(pm);
  }
  return result;
}

PrCurve pr_curve(const MatchResult& result) {
  if (result.n_targets == 0) {
    throw InputError("pr_curve: no ground-truth instances");
  }
  PrCurve curve;
  size_t tp = 0, fp = 0, recalled = 0;
  for (size_t i = 0; i < result.proposals.size(); ++i) {
    const auto& pm = result.proposals[i];
    if (pm.kind == MatchKind::FalsePositive) {
      ++fp;
    } else {
      ++tp;
      if (pm.kind == MatchKind::Claimed) ++recalled;
    }
    // Emit one point per distinct score (ties share the lowest tied index).
    if (i + 1 < result.proposals.size() &&
        result.proposals[i + 1].score == pm.score) {
      continue;
    }
    curve.points.push_back({pm.score, double(tp) / double(tp + fp),
                            double(recalled) / double(result.n_targets)});
  }
  return curve;
}

double average_precision(const PrCurve& curve) {
  // Points ordered by descending threshold have non-decreasing recall;
  // walk them in that order accumulating the precision envelope area.
  std::vector<double> recalls, envelope;
  for (size_t i = 0; i < curve.points.size(); ++i) {
    recalls.push_back(curve.points[i].recall);
    double env = 0;
    for (size_t j = i; j < curve.points.size(); ++j) {
      env = std::max(env, curve.points[j].precision);
    }
    envelope.push_back(env);
  }
  double ap = 0, prev_recall = 0;
  for (size_t i = 0; i < recalls.size(); ++i) {
    if (recalls[i] > prev_recall) {
      // Envelope at this recall level = max precision at recall >= it,
      // which is the max over the remaining (higher-recall) points.
      double env = envelope[i];
      ap += (recalls[i] - prev_recall) * env;
      prev_recall = recalls[i];
    }
  }
  return ap;
}

FrocCurve froc_curve(const MatchResult& result) {
  if (result.n_volumes == 0) {
    throw InputError("froc_curve: need at least one volume");
  }
  FrocCurve curve;
  size_t fp = 0, recalled = 0;
  for (size_t i = 0; i < result.proposals.size(); ++i) {
    const auto& pm = result.proposals[i];
    if (pm.kind == MatchKind::FalsePositive) ++fp;
    if (pm.kind == MatchKind::Claimed) ++recalled;
    if (i + 1 < result.proposals.size() &&
        result.proposals[i + 1].score == pm.score) {
      continue;
    }
    const double recall =
        result.n_targets ? double(recalled) / double(result.n_targets) : 0.0;
    curve.points.push_back(
        {pm.score, double(fp) / double(result.n_volumes), recall});
  }
  return curve;
}

std::vector<double> recall_at_fp(const FrocCurve& curve,
                                 const std::vector<double>& rates) {
  // Collapse to strictly increasing fp keeping the best recall at each rate.
  std::vector<std::pair<double, double>> pts;  // (fp, recall), fp ascending
  for (const auto& p : curve.points) {
    if (!pts.empty() && pts.back().first == p.fp_per_volume) {
      pts.back().second = std::max(pts.back().second, p.recall);
    } else {
      pts.push_back({p.fp_per_volume, p.recall});
    }
  }
  std::vector<double> out;
  for (double rate : rates) {
    if (pts.empty()) {
      out.push_back(0);
      continue;
    }
    if (rate <= pts.front().first) {
      out.push_back(pts.front().second);
      continue;
    }
    if (rate >= pts.back().first) {
      out.push_back(pts.back().second);
      continue;
    }
    for (size_t i = 1; i < pts.size(); ++i) {
      if (rate <= pts[i].first) {
        const auto [x0, y0] = pts[i - 1];
        const auto [x1, y1] = pts[i];
        out.push_back(y0 + (y1 - y0) * (rate - x0) / (x1 - x0));
        break;
      }
    }
  }
  return out;
}

double recall_at_precision(const PrCurve& curve, double p) {
  double best = 0;
  for (const auto& point : curve.points) {
    if (point.precision >= p) best = std::max(best, point.recall);
  }
  return best;
}

double mean_recall(const PrCurve& curve, const std::vector<double>& ps) {
  if (ps.empty()) throw InputError("mean_recall: no precision points");
  double sum = 0;
  for (double p : ps) sum += recall_at_precision(curve, p);
  return sum / double(ps.size());
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw InputError("pearson: series must have equal length >= 2");
  }
  const double n = double(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0 || syy == 0) {
    throw NumericError("pearson: undefined for a constant series");
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lk
