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

#include "lesionkit/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "lesionkit/num.hpp"
#include "lesionkit/rng.hpp"

namespace lk {

namespace {

// Acklam's rational approximation of the standard normal quantile.
double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - plow) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

Box2D clamped_box(double cx, double cy, double w, double h, double width,
                  double height) {
  w = std::min(std::max(w, 2.0), width);
  h = std::min(std::max(h, 2.0), height);
  const double x1 = std::clamp(cx - w / 2, 0.0, width - w);
  const double y1 = std::clamp(cy - h / 2, 0.0, height - h);
  return Box2D(round9(x1), round9(y1), round9(x1 + w), round9(y1 + h));
}

double clipped_score(Rng& rng, double mu, double sigma) {
  return round9(std::clamp(rng.normal(mu, sigma), 0.0, 1.0));
}

RecistMark mark_of(const SimLesion& lesion) {
  return {lesion.volume_id,
          lesion.lesion_id,
          lesion.mark_z,
          lesion.extent.xy(),
          lesion.marked ? MarkOrigin::Original : MarkOrigin::Supplementary};
}

std::vector<RecistMark> filter_marks(const std::vector<RecistMark>& marks,
                                     const VolumeMap& volumes,
                                     std::initializer_list<Split> splits) {
  std::vector<RecistMark> out;
  for (const auto& m : marks) {
    const Split s = volumes.at(m.volume_id).split;
    if (std::find(splits.begin(), splits.end(), s) != splits.end()) {
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace

VolumeMap World::volume_map() const {
  VolumeMap map;
  for (const auto& v : volumes) map[v.volume_id] = v;
  return map;
}

World generate_world(const WorldConfig& config) {
  if (config.n_volumes < 1 || config.n_slices < 1) {
    throw InputError("generate_world: counts must be >= 1");
  }
  if (config.marked_fraction < 0 || config.marked_fraction > 1) {
    throw InputError("generate_world: marked_fraction must lie in [0,1]");
  }
  if (config.lesion_size_min < 2 ||
      config.lesion_size_max < config.lesion_size_min ||
      config.lesion_size_max > config.width ||
      config.lesion_size_max > config.height) {
    throw InputError("generate_world: lesion xy size does not fit the volume");
  }
  if (config.lesion_depth_min < 1 ||
      config.lesion_depth_max < config.lesion_depth_min ||
      config.lesion_depth_max > config.n_slices) {
    throw InputError("generate_world: lesion depth does not fit the volume");
  }

  World world;
  world.config = config;
  const int n_m = int(std::lround(config.m_fraction * config.n_volumes));
  const int n_ht = int(std::lround(config.h_test_fraction * config.n_volumes));

  for (int vi = 0; vi < config.n_volumes; ++vi) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "vol%04d", vi);
    VolumeRecord rec{buf, config.n_slices, config.width, config.height,
                     vi < n_m          ? Split::M
                     : vi < n_m + n_ht ? Split::HTest
                                       : Split::H};
    world.volumes.push_back(rec);

    Rng rng = stream_for(config.seed, "world", rec.volume_id);
    const int n_lesions =
        std::min(rng.poisson(config.lesions_per_volume_mean),
                 config.lesions_per_volume_max);
    for (int li = 0; li < n_lesions; ++li) {
      const double w =
          rng.uniform(config.lesion_size_min, config.lesion_size_max);
      const double h =
          rng.uniform(config.lesion_size_min, config.lesion_size_max);
      const int depth =
          rng.uniform_int(config.lesion_depth_min, config.lesion_depth_max);
      const double x1 = round9(rng.uniform(0, config.width - w));
      const double y1 = round9(rng.uniform(0, config.height - h));
      const int z1 = rng.uniform_int(0, config.n_slices - depth);
      SimLesion lesion{rec.volume_id,
                       rec.volume_id + "_L" + std::to_string(li),
                       Box3D(x1, y1, round9(x1 + w), round9(y1 + h), z1,
                             z1 + depth - 1),
                       rng.uniform_int(z1, z1 + depth - 1),
                       rng.bernoulli(config.marked_fraction)};
      world.lesions.push_back(std::move(lesion));
    }
  }
  return world;
}

std::vector<RecistMark> visible_marks(const World& world) {
  const VolumeMap volumes = world.volume_map();
  std::vector<RecistMark> out;
  for (const auto& lesion : world.lesions) {
    const Split split = volumes.at(lesion.volume_id).split;
    if (split == Split::M || lesion.marked) out.push_back(mark_of(lesion));
  }
  return out;
}

std::vector<RecistMark> complete_marks(const World& world) {
  std::vector<RecistMark> out;
  out.reserve(world.lesions.size());
  for (const auto& lesion : world.lesions) out.push_back(mark_of(lesion));
  return out;
}

std::vector<GtBox3D> lesion_boxes(const World& world) {
  std::vector<GtBox3D> out;
  out.reserve(world.lesions.size());
  for (const auto& lesion : world.lesions) {
    out.push_back({lesion.volume_id, lesion.extent});
  }
  return out;
}

std::vector<Detection2D> oracle_lpg(const World& world,
                                    const OracleSkill& skill, int round) {
  const WorldConfig& cfg = world.config;
  std::vector<Detection2D> out;
  for (const auto& vol : world.volumes) {
    std::vector<const SimLesion*> lesions;
    for (const auto& l : world.lesions) {
      if (l.volume_id == vol.volume_id) lesions.push_back(&l);
    }
    for (int z = 0; z < vol.n_slices; ++z) {
      Rng rng = stream_for(cfg.seed, "lpg", vol.volume_id,
                           (int64_t(round) << 32) | uint32_t(z));
      for (const SimLesion* l : lesions) {
        if (z < l->extent.z1 || z > l->extent.z2) continue;
        if (!rng.bernoulli(skill.detect_base)) continue;
        const Box2D xy = l->extent.xy();
        const double cx = xy.cx() + rng.normal(0, skill.jitter * xy.width());
        const double cy = xy.cy() + rng.normal(0, skill.jitter * xy.height());
        const double w = xy.width() * (1 + rng.normal(0, skill.jitter));
        const double h = xy.height() * (1 + rng.normal(0, skill.jitter));
        out.push_back({vol.volume_id, z,
                       clamped_box(cx, cy, w, h, vol.width, vol.height),
                       clipped_score(rng, 0.75, 0.15)});
      }
      const int n_spurious = rng.poisson(skill.fp_rate);
      for (int i = 0; i < n_spurious; ++i) {
        const double w =
            rng.uniform(cfg.lesion_size_min, cfg.lesion_size_max);
        const double h =
            rng.uniform(cfg.lesion_size_min, cfg.lesion_size_max);
        const double cx = rng.uniform(w / 2, vol.width - w / 2);
        const double cy = rng.uniform(h / 2, vol.height - h / 2);
        out.push_back({vol.volume_id, z,
                       clamped_box(cx, cy, w, h, vol.width, vol.height),
                       clipped_score(rng, 0.35, 0.15)});
      }
    }
  }
  return out;
}

double oracle_lpc(const Proposal3D& proposal, const World& world,
                  const OracleSkill& skill, double p3d_iou) {
  bool is_true = false;
  for (const auto& lesion : world.lesions) {
    if (lesion.volume_id != proposal.volume_id) continue;
    if (p3d_match(proposal.extent, mark_of(lesion), p3d_iou)) {
      is_true = true;
      break;
    }
  }
  Rng rng = stream_for(world.config.seed, "lpc", proposal.id);
  double sc;
  if (skill.clf_auc >= 1.0) {
    sc = is_true ? 0.75 + 0.25 * rng.uniform() : 0.25 * rng.uniform();
  } else {
    const double auc = std::clamp(skill.clf_auc, 0.5, 0.999999);
    const double sep = std::sqrt(2.0) * inverse_normal_cdf(auc);
    const double raw = rng.normal(is_true ? sep / 2 : -sep / 2, 1.0);
    sc = 1.0 / (1.0 + std::exp(-raw));
  }
  return round9(std::clamp(sc, 0.0, 1.0));
}

OracleSkill update_skill(const OracleSkill& skill,
                         const std::vector<TrainingLabel>& labels,
                         const World& world) {
  const VolumeMap volumes = world.volume_map();
  size_t n_prop_pos = 0, n_neg = 0;
  for (const auto& l : labels) {
    if (l.positive && l.source == "proposal") ++n_prop_pos;
    if (!l.positive) ++n_neg;
  }
  size_t n_lesions = 0, n_vols = 0;
  for (const auto& v : world.volumes) {
    if (v.split == Split::M || v.split == Split::H) ++n_vols;
  }
  for (const auto& l : world.lesions) {
    const Split s = volumes.at(l.volume_id).split;
    if (s == Split::M || s == Split::H) ++n_lesions;
  }
  const double frac_pos =
      std::min(1.0, double(n_prop_pos) / double(std::max<size_t>(1, n_lesions)));
  const double coverage =
      std::min(1.0, double(n_neg) / double(std::max<size_t>(1, 5 * n_vols)));

  OracleSkill out = skill;
  out.detect_base =
      std::clamp(skill.detect_base + skill.gain_pos * frac_pos, 0.0, 1.0);
  out.fp_rate = std::max(0.0, skill.fp_rate * (1.0 - skill.gain_neg * coverage));
  return out;
}

namespace {

std::vector<Proposal3D> stack_world(const std::vector<Detection2D>& detections,
                                    const TrackerConfig& tracker, int round) {
  std::map<std::string, std::vector<Detection2D>> by_volume;
  for (const auto& d : detections) by_volume[d.volume_id].push_back(d);
  std::vector<Proposal3D> proposals;
  for (auto& [vol, dets] : by_volume) {
    auto stacked = stack_volume(std::move(dets), tracker);
    proposals.insert(proposals.end(), std::make_move_iterator(stacked.begin()),
                     std::make_move_iterator(stacked.end()));
  }
  assign_proposal_ids(proposals, round);
  return proposals;
}

Report evaluate_round(const HarvestState& state,
                      const std::vector<Proposal3D>& eval_set,
                      const std::vector<RecistMark>& eval_marks,
                      size_t eval_volumes, int k) {
  Report r = build_report(
      match_all(eval_set, eval_marks, MatchMode::P3D, eval_volumes),
      "round_" + std::to_string(k), k);
  r.tau = state.tau;
  r.tau_met = state.tau_met;
  if (!state.rounds.empty()) {
    const RoundProvenance& prov = state.rounds.back();
    r.counts["fresh"] = int64_t(prov.n_fresh);
    r.counts["pm"] = int64_t(prov.n_pm);
    r.counts["ph"] = int64_t(prov.n_ph);
    r.counts["pm_recist"] = int64_t(prov.n_pm_recist);
    r.counts["pm_false"] = int64_t(prov.n_pm_false);
    r.counts["ph_recist"] = int64_t(prov.n_ph_recist);
    r.counts["new_positives"] = int64_t(prov.n_new_positives);
    r.counts["hard_neg_h"] = int64_t(prov.n_hard_neg_h);
    r.counts["hard_neg_m"] = int64_t(prov.n_hard_neg_m);
  }
  r.counts["pool"] = int64_t(state.pool.size());
  r.counts["phr"] = int64_t(state.phr.size());
  return r;
}

}  // namespace

SimulationResult run_simulation(const WorldConfig& config,
                                const OracleSkill& skill, int rounds,
                                const HarvestParams& params,
                                const TrackerConfig& tracker, RoundSink* sink,
                                int resume_from,
                                const HarvestState* resume_state,
                                const OracleSkill* resume_skill) {
  const World world = generate_world(config);
  const VolumeMap volumes = world.volume_map();
  const auto marks_vis = visible_marks(world);
  const auto marks_m = filter_marks(marks_vis, volumes, {Split::M});
  const auto marks_h = filter_marks(marks_vis, volumes, {Split::H, Split::HTest});
  const auto eval_marks =
      filter_marks(complete_marks(world), volumes, {Split::H, Split::HTest});
  size_t eval_volumes = 0;
  for (const auto& v : world.volumes) {
    if (v.split == Split::H || v.split == Split::HTest) ++eval_volumes;
  }

  if (sink) sink->on_world(world);

  SimulationResult result;
  result.skill = skill;

  if (resume_from > 0) {
    if (!resume_state || !resume_skill) {
      throw StateError("run_simulation: resume requires a persisted state");
    }
    result.state = *resume_state;
    result.skill = *resume_skill;
  } else {
    // Round 0 baseline: the visible harvest-set marks themselves, as
    // unit-score single-slice proposals.
    std::vector<Proposal3D> baseline;
    for (const auto& m : marks_h) {
      baseline.push_back(make_proposal(m.volume_id, {{m.z, m.box, 1.0}}, 0));
    }
    assign_proposal_ids(baseline, 0);
    Report r0 = evaluate_round(result.state, baseline, eval_marks,
                               eval_volumes, 0);
    result.state.mean_recall_history.push_back(r0.mean_recall_value);
    if (sink) sink->on_round(0, {}, baseline, result.state, result.skill, r0, {});
    if (sink) sink->checkpoint(result.state, result.skill);
    result.reports.push_back(std::move(r0));
  }

  HarvestContext ctx;
  ctx.volumes = &volumes;
  ctx.marks_m = &marks_m;
  ctx.marks_h = &marks_h;
  ctx.params = params;

  for (int k = result.state.k + 1; k <= rounds; ++k) {
    const auto detections = oracle_lpg(world, result.skill, k);
    auto proposals = stack_world(detections, tracker, k);
    ctx.lpc = [&](const Proposal3D& p) {
      return oracle_lpc(p, world, result.skill, params.p3d_iou);
    };
    result.state = run_iteration(result.state, proposals, ctx);

    std::vector<Proposal3D> eval_set = result.state.phr;
    eval_set.insert(eval_set.end(), result.state.pool.begin(),
                    result.state.pool.end());
    Report rk =
        evaluate_round(result.state, eval_set, eval_marks, eval_volumes, k);
    result.state.mean_recall_history.push_back(rk.mean_recall_value);

    const auto labels =
        export_training_labels(result.state, marks_vis, volumes);
    result.skill = update_skill(result.skill, labels, world);

    if (sink) {
      sink->on_round(k, detections, proposals, result.state, result.skill, rk,
                     labels);
      sink->checkpoint(result.state, result.skill);
    }
    result.reports.push_back(std::move(rk));

    if (check_convergence(result.state.mean_recall_history,
                          params.convergence_window,
                          params.convergence_epsilon)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

ConcordanceResult run_concordance(const WorldConfig& config,
                                  const std::vector<OracleSkill>& levels,
                                  const TrackerConfig& tracker,
                                  const std::vector<double>& fp_rates) {
  const World world = generate_world(config);
  const auto complete = complete_marks(world);
  const auto gt3d = lesion_boxes(world);
  std::vector<RecistMark> incomplete;
  for (const auto& m : complete) {
    if (m.origin == MarkOrigin::Original) incomplete.push_back(m);
  }
  const size_t n_volumes = world.volumes.size();

  ConcordanceResult out;
  for (size_t li = 0; li < levels.size(); ++li) {
    const auto detections = oracle_lpg(world, levels[li], int(li) + 1);
    const auto proposals = stack_world(detections, tracker, int(li) + 1);

    const auto m_p3d =
        match_all(proposals, complete, MatchMode::P3D, n_volumes);
    const auto m_iou = match_all(proposals, complete, MatchMode::Iou3D,
                                 n_volumes, &gt3d);
    const auto m_legacy =
        match_all(proposals, incomplete, MatchMode::Recist2D, n_volumes);

    const auto r_p3d = recall_at_fp(froc_curve(m_p3d), fp_rates);
    const auto r_iou = recall_at_fp(froc_curve(m_iou), fp_rates);
    const auto r_leg = recall_at_fp(froc_curve(m_legacy), fp_rates);
    out.recalls_p3d.insert(out.recalls_p3d.end(), r_p3d.begin(), r_p3d.end());
    out.recalls_iou3d.insert(out.recalls_iou3d.end(), r_iou.begin(),
                             r_iou.end());
    out.recalls_recist2d.insert(out.recalls_recist2d.end(), r_leg.begin(),
                                r_leg.end());
  }
  out.pearson_p3d_vs_iou3d = pearson(out.recalls_p3d, out.recalls_iou3d);
  out.pearson_recist2d_vs_iou3d =
      pearson(out.recalls_recist2d, out.recalls_iou3d);
  return out;
}

std::vector<OracleSkill> skill_ladder(int n_levels) {
  std::vector<OracleSkill> out;
  for (int i = 0; i < n_levels; ++i) {
    const double t = n_levels > 1 ? double(i) / (n_levels - 1) : 1.0;
    OracleSkill s;
    s.detect_base = 0.25 + 0.65 * t;
    s.fp_rate = 2.0 - 1.25 * t;
    s.jitter = 0.05 - 0.035 * t;
    out.push_back(s);
  }
  return out;
}

}  // namespace lk
