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

#include "lesionkit/harvester.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "lesionkit/num.hpp"

namespace lk {

PartitionResult partition_by_split(const std::vector<Proposal3D>& proposals,
                                   const VolumeMap& volumes) {
  PartitionResult out;
  for (const auto& p : proposals) {
    auto it = volumes.find(p.volume_id);
    if (it == volumes.end()) {
      throw InputError("partition_by_split: unknown volume \"" + p.volume_id +
                       "\"");
    }
    switch (it->second.split) {
      case Split::M:
        out.pm.push_back(p);
        break;
      case Split::H:
      case Split::HTest:
        out.ph.push_back(p);
        break;
      case Split::DTest:
        out.excluded.push_back(p);
        break;
    }
  }
  return out;
}

SplitTrueFalse split_true_false(const std::vector<Proposal3D>& proposals,
                                const std::vector<RecistMark>& marks,
                                double p3d_iou) {
  SplitTrueFalse out;
  for (const auto& p : proposals) {
    std::vector<size_t> hits;
    for (size_t i = 0; i < marks.size(); ++i) {
      if (marks[i].volume_id != p.volume_id) continue;
      if (p3d_match(p.extent, marks[i], p3d_iou)) hits.push_back(i);
    }
    if (hits.empty()) {
      out.unmatched.push_back(p);
    } else {
      out.matched.push_back(p);
      out.matches.push_back(std::move(hits));
    }
  }
  return out;
}

double fuse_score(double s_g, double s_c) {
  if (s_g < 0 || s_g > 1 || s_c < 0 || s_c > 1) {
    throw InputError("fuse_score: scores must lie in [0,1]");
  }
  return s_g * s_c;
}

CalibrationResult calibrate_threshold(
    const std::vector<std::pair<double, bool>>& scored,
    double target_precision) {
  if (scored.empty()) {
    throw InputError("calibrate_threshold: empty calibration set");
  }
  std::vector<double> candidates;
  candidates.reserve(scored.size());
  for (const auto& [s, _] : scored) candidates.push_back(s);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  CalibrationResult result;
  for (double tau : candidates) {
    size_t n = 0, tp = 0;
    for (const auto& [s, is_true] : scored) {
      if (s >= tau) {
        ++n;
        if (is_true) ++tp;
      }
    }
    if (n > 0 && double(tp) / double(n) >= target_precision) {
      result.tau = tau;
      result.target_met = true;
      return result;
    }
  }
  return result;  // +inf sentinel: nothing selectable at the target
}

std::vector<Proposal3D> select_positives(
    const std::vector<Proposal3D>& candidates, double tau) {
  std::vector<Proposal3D> out;
  for (const auto& p : candidates) {
    if (!p.s) {
      throw StateError("select_positives: proposal \"" + p.id +
                       "\" has no fused score");
    }
    if (*p.s >= tau) out.push_back(p);
  }
  return out;
}

std::vector<Proposal3D> select_hard_negatives(
    const std::vector<Proposal3D>& candidates, double min_sg,
    int per_volume_cap) {
  std::map<std::string, std::vector<Proposal3D>> by_volume;
  for (const auto& p : candidates) {
    if (p.s_g >= min_sg) by_volume[p.volume_id].push_back(p);
  }
  std::vector<Proposal3D> out;
  for (auto& [vol, ps] : by_volume) {
    std::sort(ps.begin(), ps.end(), [](const Proposal3D& a,
                                       const Proposal3D& b) {
      if (a.s_g != b.s_g) return a.s_g > b.s_g;
      return proposal_canonical_less(a, b);
    });
    const size_t take = std::min(ps.size(), size_t(per_volume_cap));
    out.insert(out.end(), ps.begin(), ps.begin() + take);
  }
  std::sort(out.begin(), out.end(), proposal_canonical_less);
  return out;
}

std::vector<Proposal3D> merge_pool(std::vector<Proposal3D> pool,
                                   std::vector<Proposal3D> additions,
                                   double same_lesion_iou3d) {
  std::vector<Proposal3D> all = std::move(pool);
  all.insert(all.end(), std::make_move_iterator(additions.begin()),
             std::make_move_iterator(additions.end()));
  const size_t n = all.size();
  if (n == 0) return all;

  std::vector<size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (all[i].volume_id != all[j].volume_id) continue;
      if (find(i) == find(j)) continue;
      if (iou3d(all[i].extent, all[j].extent) >= same_lesion_iou3d) {
        parent[find(j)] = find(i);
      }
    }
  }

  std::map<size_t, size_t> winner;  // cluster root -> best index
  for (size_t i = 0; i < n; ++i) {
    const size_t root = find(i);
    auto it = winner.find(root);
    if (it == winner.end()) {
      winner[root] = i;
      continue;
    }
    const Proposal3D& a = all[i];
    const Proposal3D& b = all[it->second];
    bool better = false;
    if (a.s_g != b.s_g) {
      better = a.s_g > b.s_g;
    } else if (a.s.value_or(-1) != b.s.value_or(-1)) {
      better = a.s.value_or(-1) > b.s.value_or(-1);
    } else {
      better = proposal_canonical_less(a, b);
    }
    if (better) it->second = i;
  }

  std::vector<Proposal3D> out;
  out.reserve(winner.size());
  for (const auto& [_, idx] : winner) out.push_back(std::move(all[idx]));
  std::sort(out.begin(), out.end(), proposal_canonical_less);
  return out;
}

namespace {

// Marks of a volume set, split by the proposal's volume.
std::vector<RecistMark> marks_for(const std::vector<RecistMark>& marks,
                                  const VolumeMap& volumes, Split a, Split b) {
  std::vector<RecistMark> out;
  for (const auto& m : marks) {
    auto it = volumes.find(m.volume_id);
    if (it == volumes.end()) continue;
    if (it->second.split == a || it->second.split == b) out.push_back(m);
  }
  return out;
}

bool overlaps_any(const Proposal3D& p, const std::vector<Proposal3D>& pool,
                  double iou_thresh) {
  for (const auto& q : pool) {
    if (q.volume_id != p.volume_id) continue;
    if (iou3d(p.extent, q.extent) >= iou_thresh) return true;
  }
  return false;
}

}  // namespace

HarvestState run_iteration(const HarvestState& state,
                           std::vector<Proposal3D> fresh,
                           const HarvestContext& ctx) {
  if (!ctx.volumes || !ctx.marks_m || !ctx.marks_h) {
    throw StateError("run_iteration: context is incomplete");
  }
  const HarvestParams& prm = ctx.params;
  HarvestState next = state;
  next.k = state.k + 1;
  RoundProvenance prov;
  prov.k = next.k;
  prov.n_fresh = fresh.size();

  // Classifier scores and fused lesion scores for every fresh proposal.
  for (auto& p : fresh) {
    if (!p.s_c) {
      if (!ctx.lpc) {
        throw StateError("run_iteration: no classifier scores available");
      }
      p.s_c = round9(ctx.lpc(p));
    }
    p.s = round9(fuse_score(p.s_g, *p.s_c));
  }

  PartitionResult part = partition_by_split(fresh, *ctx.volumes);
  prov.n_pm = part.pm.size();
  prov.n_ph = part.ph.size();
  prov.n_excluded = part.excluded.size();

  SplitTrueFalse tf_m = split_true_false(part.pm, *ctx.marks_m, prm.p3d_iou);
  SplitTrueFalse tf_h = split_true_false(part.ph, *ctx.marks_h, prm.p3d_iou);
  prov.n_pm_recist = tf_m.matched.size();
  prov.n_pm_false = tf_m.unmatched.size();
  prov.n_ph_recist = tf_h.matched.size();

  // Calibrate on the fully annotated split.
  std::vector<std::pair<double, bool>> scored;
  for (const auto& p : tf_m.matched) scored.push_back({*p.s, true});
  for (const auto& p : tf_m.unmatched) scored.push_back({*p.s, false});
  CalibrationResult cal;
  if (scored.empty()) {
    prov.warnings.push_back("no calibration data; selecting nothing");
  } else {
    cal = calibrate_threshold(scored, prm.target_precision);
    if (!cal.target_met) {
      prov.warnings.push_back("calibration target unreachable; tau = +inf");
    }
  }
  next.tau = cal.tau;
  next.tau_met = cal.target_met;
  prov.tau = cal.tau;
  prov.tau_met = cal.target_met;

  std::vector<Proposal3D> additions =
      select_positives(tf_h.unmatched, cal.tau);
  prov.n_new_positives = additions.size();

  next.pool =
      merge_pool(std::move(next.pool), additions, prm.same_lesion_iou3d);
  prov.n_pool = next.pool.size();

  // Refresh of the mark-matching set keeps the best proposal per lesion.
  next.phr =
      merge_pool(std::move(next.phr), tf_h.matched, prm.same_lesion_iou3d);

  // Hard negatives: reset each round, drawn from proposals that match no
  // mark, were not pooled, and overlap no pooled positive.
  std::vector<Proposal3D> hn_candidates_h;
  std::set<std::string> pooled_ids;
  for (const auto& p : next.pool) pooled_ids.insert(p.id);
  for (const auto& p : tf_h.unmatched) {
    if (!p.s) continue;
    if (pooled_ids.count(p.id)) continue;
    if (*p.s >= cal.tau) continue;
    if (overlaps_any(p, next.pool, prm.same_lesion_iou3d)) continue;
    hn_candidates_h.push_back(p);
  }
  next.hard_neg_h = select_hard_negatives(hn_candidates_h, prm.hard_neg_min_sg,
                                          prm.hard_neg_cap);
  next.hard_neg_m = select_hard_negatives(tf_m.unmatched, prm.hard_neg_min_sg,
                                          prm.hard_neg_cap);
  prov.n_hard_neg_h = next.hard_neg_h.size();
  prov.n_hard_neg_m = next.hard_neg_m.size();

  next.pm_recist = std::move(tf_m.matched);
  next.pm_false = std::move(tf_m.unmatched);
  next.rounds.push_back(std::move(prov));
  return next;
}

bool check_convergence(const std::vector<double>& history, int window,
                       double epsilon) {
  if (window < 1) throw InputError("check_convergence: window must be >= 1");
  if (history.size() < size_t(window) + 1) return false;
  for (size_t i = history.size() - window; i < history.size(); ++i) {
    if (history[i] - history[i - 1] >= epsilon) return false;
  }
  return true;
}

namespace {

TrainingLabel best_member_label(const Proposal3D& p, bool positive,
                                const std::string& source) {
  const ProposalMember* best = &p.members.front();
  for (const auto& m : p.members) {
    if (m.score > best->score) best = &m;
  }
  return {p.volume_id, best->z, best->box, positive, source};
}

}  // namespace

std::vector<TrainingLabel> export_training_labels(
    const HarvestState& state, const std::vector<RecistMark>& marks,
    const VolumeMap& volumes) {
  auto exportable = [&](const std::string& volume_id) {
    auto it = volumes.find(volume_id);
    return it != volumes.end() && it->second.split != Split::HTest &&
           it->second.split != Split::DTest;
  };

  std::vector<TrainingLabel> out;
  for (const auto* set : {&state.pool, &state.phr, &state.pm_recist}) {
    for (const auto& p : *set) {
      if (!p.members.empty() && exportable(p.volume_id)) {
        out.push_back(best_member_label(p, true, "proposal"));
      }
    }
  }
  for (const auto& m : marks) {
    if (exportable(m.volume_id)) {
      out.push_back({m.volume_id, m.z, m.box, true, "mark"});
    }
  }
  for (const auto* set : {&state.hard_neg_h, &state.hard_neg_m}) {
    for (const auto& p : *set) {
      if (!p.members.empty() && exportable(p.volume_id)) {
        out.push_back(best_member_label(p, false, "hard_negative"));
      }
    }
  }

  std::sort(out.begin(), out.end(),
            [](const TrainingLabel& a, const TrainingLabel& b) {
              return std::tie(a.volume_id, a.z, a.box.x1, a.box.y1, a.box.x2,
                              a.box.y2, a.positive, a.source) <
                     std::tie(b.volume_id, b.z, b.box.x1, b.box.y1, b.box.x2,
                              b.box.y2, b.positive, b.source);
            });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace lk
