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

#include "lesionkit/tracker.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

namespace lk {

KalmanBoxFilter::KalmanBoxFilter(const Box2D& first, double process_noise,
                                 double observation_noise,
                                 double initial_variance)
    : x_{first.cx(), first.cy(), first.width(), first.height()},
      p_{initial_variance, initial_variance, initial_variance,
         initial_variance},
      q_(process_noise),
      r_(observation_noise) {}

Box2D KalmanBoxFilter::predict() {
  for (auto& p : p_) p += q_;
  return box();
}

void KalmanBoxFilter::update(const Box2D& observation) {
  const std::array<double, 4> z{observation.cx(), observation.cy(),
                                observation.width(), observation.height()};
  for (int i = 0; i < 4; ++i) {
    const double denom = p_[i] + r_;
    const double k = denom > 0 ? p_[i] / denom : 1.0;
    x_[i] += k * (z[i] - x_[i]);
    p_[i] *= (1.0 - k);
  }
}

Box2D KalmanBoxFilter::box() const {
  // Width/height estimates can contract below zero variance-wise; keep the
  // box constructible.
  const double w = std::max(x_[2], 1e-6);
  const double h = std::max(x_[3], 1e-6);
  return Box2D(x_[0] - w / 2, x_[1] - h / 2, x_[0] + w / 2, x_[1] + h / 2);
}

namespace {

bool member_less(const ProposalMember& a, const ProposalMember& b) {
  return std::tie(a.z, a.box.x1, a.box.y1, a.box.x2, a.box.y2, a.score) <
         std::tie(b.z, b.box.x1, b.box.y1, b.box.x2, b.box.y2, b.score);
}

}  // namespace

Proposal3D make_proposal(std::string volume_id,
                         std::vector<ProposalMember> members, int round) {
  if (members.empty()) {
    throw InputError("make_proposal: no members");
  }
  std::sort(members.begin(), members.end(), member_less);
  double x1 = members[0].box.x1, y1 = members[0].box.y1;
  double x2 = members[0].box.x2, y2 = members[0].box.y2;
  int z1 = members[0].z, z2 = members[0].z;
  double sg = members[0].score;
  for (const auto& m : members) {
    x1 = std::min(x1, m.box.x1);
    y1 = std::min(y1, m.box.y1);
    x2 = std::max(x2, m.box.x2);
    y2 = std::max(y2, m.box.y2);
    z1 = std::min(z1, m.z);
    z2 = std::max(z2, m.z);
    sg = std::max(sg, m.score);
  }
  Proposal3D p{.id = "",
               .volume_id = std::move(volume_id),
               .extent = Box3D(x1, y1, x2, y2, z1, z2),
               .members = std::move(members),
               .s_g = sg,
               .s_c = std::nullopt,
               .s = std::nullopt,
               .round = round,
               .extras_json = ""};
  return p;
}

bool proposal_canonical_less(const Proposal3D& a, const Proposal3D& b) {
  return std::tie(a.volume_id, a.extent.z1, a.extent.x1, a.extent.y1,
                  a.extent.z2, a.extent.x2, a.extent.y2, a.s_g, a.id) <
         std::tie(b.volume_id, b.extent.z1, b.extent.x1, b.extent.y1,
                  b.extent.z2, b.extent.x2, b.extent.y2, b.s_g, b.id);
}

void assign_proposal_ids(std::vector<Proposal3D>& proposals, int round) {
  std::sort(proposals.begin(), proposals.end(), proposal_canonical_less);
  std::map<std::string, int> seq;
  for (auto& p : proposals) {
    p.round = round;
    p.id = p.volume_id + ":r" + std::to_string(round) + ":" +
           std::to_string(seq[p.volume_id]++);
  }
}

bool proposals_connect(const Proposal3D& a, const Proposal3D& b,
                       double stack_iou) {
  // Member boxes two slices apart have exactly one empty slice between
  // them, which the one-slice padding bridges.
  for (const auto& ma : a.members) {
    for (const auto& mb : b.members) {
      if (std::abs(ma.z - mb.z) > 2) continue;
      if (iou2d(ma.box, mb.box) >= stack_iou) return true;
    }
  }
  return false;
}

std::vector<Proposal3D> bridge_and_fuse(std::vector<Proposal3D> proposals,
                                        double stack_iou) {
  const size_t n = proposals.size();
  if (n <= 1) return proposals;

  std::vector<size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (find(i) == find(j)) continue;
      if (proposals[i].volume_id != proposals[j].volume_id) continue;
      if (proposals_connect(proposals[i], proposals[j], stack_iou)) {
        parent[find(j)] = find(i);
      }
    }
  }

  std::map<size_t, std::vector<size_t>> groups;
  for (size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

  std::vector<Proposal3D> out;
  out.reserve(groups.size());
  for (const auto& [root, idxs] : groups) {
    if (idxs.size() == 1) {
      out.push_back(std::move(proposals[idxs[0]]));
      continue;
    }
    std::vector<ProposalMember> members;
    int round = proposals[idxs[0]].round;
    for (size_t i : idxs) {
      members.insert(members.end(), proposals[i].members.begin(),
                     proposals[i].members.end());
    }
    out.push_back(
        make_proposal(proposals[idxs[0]].volume_id, std::move(members), round));
  }
  std::sort(out.begin(), out.end(), proposal_canonical_less);
  return out;
}

std::vector<Proposal3D> bridge_and_fuse(const std::vector<Track>& tracks,
                                        std::string volume_id,
                                        double stack_iou) {
  std::vector<Proposal3D> proposals;
  proposals.reserve(tracks.size());
  for (const auto& t : tracks) {
    proposals.push_back(make_proposal(volume_id, t.members));
  }
  return bridge_and_fuse(std::move(proposals), stack_iou);
}

std::vector<Proposal3D> stack_volume(std::vector<Detection2D> detections,
                                     const TrackerConfig& config) {
  for (const auto& d : detections) {
    if (d.volume_id != detections.front().volume_id) {
      throw InputError("stack_volume: detections from multiple volumes");
    }
  }

  // Canonical order: any permutation of the input stacks identically.
  std::sort(detections.begin(), detections.end(),
            [](const Detection2D& a, const Detection2D& b) {
              return std::tie(a.z, a.box.x1, a.box.y1, a.box.x2, a.box.y2,
                              a.score) < std::tie(b.z, b.box.x1, b.box.y1,
                                                  b.box.x2, b.box.y2, b.score);
            });

  std::vector<Detection2D> kept;
  for (auto& d : detections) {
    if (d.score > config.t_g) kept.push_back(std::move(d));
  }
  if (kept.empty()) return {};
  const std::string volume_id = kept.front().volume_id;

  struct OpenTrack {
    Track track;
    std::optional<KalmanBoxFilter> kalman;
    Box2D predicted;
  };

  std::vector<Track> closed;
  std::vector<OpenTrack> open;
  int next_id = 0;

  size_t pos = 0;
  while (pos < kept.size()) {
    const int z = kept[pos].z;
    size_t end = pos;
    while (end < kept.size() && kept[end].z == z) ++end;

    // Tracks that did not reach the previous slice are closed; survivors
    // advance their prediction for this slice.
    std::vector<OpenTrack> active;
    for (auto& ot : open) {
      if (ot.track.members.back().z == z - 1) {
        ot.predicted =
            ot.kalman ? ot.kalman->predict() : ot.track.members.back().box;
        active.push_back(std::move(ot));
      } else {
        closed.push_back(std::move(ot.track));
      }
    }
    open = std::move(active);

    struct Candidate {
      double iou;
      double score;
      int track_id;
      size_t track_idx;
      size_t det_idx;
    };
    std::vector<Candidate> candidates;
    for (size_t ti = 0; ti < open.size(); ++ti) {
      for (size_t di = pos; di < end; ++di) {
        const double v = iou2d(open[ti].predicted, kept[di].box);
        if (v >= config.stack_iou) {
          candidates.push_back({v, kept[di].score, open[ti].track.id, ti, di});
        }
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.iou != b.iou) return a.iou > b.iou;
                if (a.score != b.score) return a.score > b.score;
                if (a.track_id != b.track_id) return a.track_id < b.track_id;
                return a.det_idx < b.det_idx;
              });

    std::vector<bool> track_taken(open.size(), false);
    std::vector<bool> det_taken(end - pos, false);
    for (const auto& c : candidates) {
      if (track_taken[c.track_idx] || det_taken[c.det_idx - pos]) continue;
      track_taken[c.track_idx] = true;
      det_taken[c.det_idx - pos] = true;
      const Detection2D& d = kept[c.det_idx];
      open[c.track_idx].track.members.push_back({d.z, d.box, d.score});
      if (open[c.track_idx].kalman) open[c.track_idx].kalman->update(d.box);
    }

    // Unmatched tracks close; unmatched detections open new tracks.
    std::vector<OpenTrack> next_open;
    for (size_t ti = 0; ti < open.size(); ++ti) {
      if (track_taken[ti]) {
        next_open.push_back(std::move(open[ti]));
      } else {
        closed.push_back(std::move(open[ti].track));
      }
    }
    for (size_t di = pos; di < end; ++di) {
      if (det_taken[di - pos]) continue;
      const Detection2D& d = kept[di];
      OpenTrack ot{Track{next_id++, {{d.z, d.box, d.score}}}, std::nullopt,
                   d.box};
      if (config.use_kalman) {
        ot.kalman.emplace(d.box, config.process_noise,
                          config.observation_noise, config.initial_variance);
      }
      next_open.push_back(std::move(ot));
    }
    open = std::move(next_open);
    pos = end;
  }
  for (auto& ot : open) closed.push_back(std::move(ot.track));

  return bridge_and_fuse(closed, volume_id, config.stack_iou);
}

}  // namespace lk
