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

#include "lesionkit/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "lesionkit/config.hpp"
#include "lesionkit/formats.hpp"
#include "lesionkit/metrics.hpp"
#include "lesionkit/num.hpp"

namespace fs = std::filesystem;

namespace lk {

namespace {

VolumeMap to_map(const std::vector<VolumeRecord>& volumes) {
  VolumeMap map;
  for (const auto& v : volumes) map[v.volume_id] = v;
  return map;
}

std::vector<Proposal3D> stack_all(const std::vector<Detection2D>& detections,
                                  const TrackerConfig& tracker, int round) {
  std::map<std::string, std::vector<Detection2D>> by_volume;
  for (const auto& d : detections) by_volume[d.volume_id].push_back(d);
  std::vector<Proposal3D> proposals;
  for (auto& [vol, dets] : by_volume) {
    auto stacked = stack_volume(std::move(dets), tracker);
    proposals.insert(proposals.end(),
                     std::make_move_iterator(stacked.begin()),
                     std::make_move_iterator(stacked.end()));
  }
  assign_proposal_ids(proposals, round);
  return proposals;
}

int do_stack(const std::string& detections_path, const std::string& out_path,
             const TrackerConfig& tracker, int round) {
  const auto detections = read_detections(detections_path);
  const auto proposals = stack_all(detections, tracker, round);
  write_proposals(out_path, proposals);
  std::cout << "stacked " << detections.size() << " detections into "
            << proposals.size() << " proposals -> " << out_path << "\n";
  return 0;
}

void attach_scores(std::vector<Proposal3D>& proposals,
                   const std::map<std::string, double>* scores) {
  for (auto& p : proposals) {
    if (scores) {
      auto it = scores->find(p.id);
      if (it == scores->end()) {
        throw StateError("no classifier score for proposal \"" + p.id + "\"");
      }
      p.s_c = it->second;
    }
    if (!p.s_c) {
      throw StateError("proposal \"" + p.id +
                       "\" has no classifier score (s_c)");
    }
    p.s = round9(fuse_score(p.s_g, *p.s_c));
  }
}

int do_calibrate(const std::string& proposals_path,
                 const std::string& marks_path,
                 const std::string& volumes_path,
                 const std::string& scores_path, double target_precision,
                 const std::string& out_path) {
  auto proposals = read_proposals(proposals_path);
  const auto marks = read_marks(marks_path);
  const VolumeMap volumes = to_map(read_volumes(volumes_path));
  std::map<std::string, double> scores;
  if (!scores_path.empty()) scores = read_scores(scores_path);
  attach_scores(proposals, scores_path.empty() ? nullptr : &scores);

  PartitionResult part = partition_by_split(proposals, volumes);
  std::vector<RecistMark> marks_m;
  for (const auto& m : marks) {
    auto it = volumes.find(m.volume_id);
    if (it != volumes.end() && it->second.split == Split::M) {
      marks_m.push_back(m);
    }
  }
  SplitTrueFalse tf = split_true_false(part.pm, marks_m);
  std::vector<std::pair<double, bool>> scored;
  for (const auto& p : tf.matched) scored.push_back({*p.s, true});
  for (const auto& p : tf.unmatched) scored.push_back({*p.s, false});
  CalibrationResult cal = calibrate_threshold(scored, target_precision);

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << "{\n  \"schema\": \"calibration/1\",\n  \"tau\": "
        << (cal.target_met ? std::to_string(cal.tau) : std::string("null"))
        << ",\n  \"target_met\": " << (cal.target_met ? "true" : "false")
        << ",\n  \"n_scored\": " << scored.size() << "\n}\n";
  }
  std::cout << "tau = ";
  if (cal.target_met) {
    std::cout << cal.tau;
  } else {
    std::cout << "+inf (target precision unreachable)";
  }
  std::cout << " over " << scored.size() << " calibration proposals\n";
  return 0;
}

int do_evaluate(const std::string& proposals_path,
                const std::string& marks_path, const std::string& mode_name,
                const std::string& volumes_path,
                const std::string& lesions_path, double p3d_iou,
                double iou3d_thresh, const std::string& out_path) {
  auto proposals = read_proposals(proposals_path);
  const auto marks = read_marks(marks_path);

  MatchMode mode;
  if (mode_name == "p3d") {
    mode = MatchMode::P3D;
  } else if (mode_name == "iou3d") {
    mode = MatchMode::Iou3D;
  } else if (mode_name == "recist2d") {
    mode = MatchMode::Recist2D;
  } else {
    throw InputError("unknown evaluation mode \"" + mode_name + "\"");
  }

  size_t n_volumes = 0;
  if (!volumes_path.empty()) {
    n_volumes = read_volumes(volumes_path).size();
  } else {
    std::set<std::string> ids;
    for (const auto& m : marks) ids.insert(m.volume_id);
    for (const auto& p : proposals) ids.insert(p.volume_id);
    n_volumes = ids.size();
  }

  std::vector<GtBox3D> gt3d;
  if (!lesions_path.empty()) gt3d = read_gt_boxes(lesions_path);
  if (mode == MatchMode::Iou3D && gt3d.empty()) {
    throw InputError("iou3d mode requires --lesions with 3D ground truth");
  }

  const MatchResult match =
      match_all(proposals, marks, mode, n_volumes,
                gt3d.empty() ? nullptr : &gt3d, p3d_iou, iou3d_thresh);
  Report report = build_report(match, "evaluate", 0);
  if (!out_path.empty()) write_report(out_path, report);

  std::cout << "mode " << mode_name << ": " << proposals.size()
            << " proposals vs " << match.n_targets << " targets over "
            << n_volumes << " volumes\n";
  std::cout << "  AP " << report.ap << ", mean recall "
            << report.mean_recall_value << "\n";
  for (const auto& [pct, recall] : report.recall_at_precision_pct) {
    std::cout << "  R@" << pct << "P " << recall << "\n";
  }
  return 0;
}

// Writes per-round artifacts and reloads the state from disk after every
// round, so an interrupted run resumed from the same directory replays the
// identical byte stream.
class FileRoundSink : public RoundSink {
 public:
  explicit FileRoundSink(fs::path out) : out_(std::move(out)) {
    fs::create_directories(out_);
  }

  void on_world(const World& world) override {
    write_volumes((out_ / "world_volumes.jsonl").string(), world.volumes);
    write_marks((out_ / "world_marks.jsonl").string(), visible_marks(world));
    write_marks((out_ / "world_marks_complete.jsonl").string(),
                complete_marks(world));
    write_gt_boxes((out_ / "world_lesions.jsonl").string(),
                   lesion_boxes(world));
  }

  void on_round(int k, const std::vector<Detection2D>& detections,
                const std::vector<Proposal3D>& proposals,
                const HarvestState& state, const OracleSkill& skill,
                const Report& report,
                const std::vector<TrainingLabel>& labels) override {
    const fs::path dir = out_ / ("round_" + std::to_string(k));
    fs::create_directories(dir);
    write_detections((dir / "detections.jsonl").string(), detections);
    write_proposals((dir / "proposals.jsonl").string(), proposals);
    last_state_path_ = (dir / "state.json").string();
    write_state(last_state_path_, state, &skill);
    write_report((dir / "report.json").string(), report);
    write_labels((dir / "labels.jsonl").string(), labels);
  }

  bool checkpoint(HarvestState& state, OracleSkill& skill) override {
    if (last_state_path_.empty()) return false;
    PersistedState persisted = read_state(last_state_path_);
    state = std::move(persisted.state);
    if (persisted.skill) skill = *persisted.skill;
    return true;
  }

 private:
  fs::path out_;
  std::string last_state_path_;
};

// Highest round_k/state.json under `out`, or -1 when none exists.
int latest_round(const fs::path& out) {
  int best = -1;
  if (!fs::is_directory(out)) return best;
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("round_", 0) != 0) continue;
    if (!fs::exists(entry.path() / "state.json")) continue;
    best = std::max(best, std::atoi(name.c_str() + 6));
  }
  return best;
}

int do_simulate(RunConfig cfg, const std::string& out_dir, int rounds,
                bool resume, bool concordance, int skill_levels) {
  cfg.world.seed = cfg.seed;

  if (concordance) {
    const auto result =
        run_concordance(cfg.world, skill_ladder(skill_levels), cfg.tracker);
    std::cout << "pearson(p3d recall, 3d-iou recall)      = "
              << result.pearson_p3d_vs_iou3d << "\n";
    std::cout << "pearson(recist2d recall, 3d-iou recall) = "
              << result.pearson_recist2d_vs_iou3d << "\n";
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      std::ofstream out(fs::path(out_dir) / "concordance.json");
      out << "{\n  \"schema\": \"concordance/1\",\n"
          << "  \"skill_levels\": " << skill_levels << ",\n"
          << "  \"pearson_p3d_vs_iou3d\": "
          << round9(result.pearson_p3d_vs_iou3d) << ",\n"
          << "  \"pearson_recist2d_vs_iou3d\": "
          << round9(result.pearson_recist2d_vs_iou3d) << "\n}\n";
    }
    return 0;
  }

  std::unique_ptr<FileRoundSink> sink;
  if (!out_dir.empty()) sink = std::make_unique<FileRoundSink>(out_dir);

  PersistedState persisted;
  bool resuming = false;
  if (resume && !out_dir.empty()) {
    const int k = latest_round(out_dir);
    if (k >= 0) {
      persisted = read_state(
          (fs::path(out_dir) / ("round_" + std::to_string(k)) / "state.json")
              .string());
      if (!persisted.skill) {
        throw InputError("resume: persisted state carries no oracle skill");
      }
      resuming = true;
    }
  }

  const SimulationResult result = run_simulation(
      cfg.world, cfg.skill, rounds, cfg.harvest, cfg.tracker, sink.get(),
      resuming ? persisted.state.k : 0,
      resuming ? &persisted.state : nullptr,
      resuming ? &*persisted.skill : nullptr);

  for (const auto& r : result.reports) {
    const double r90 = r.recall_at_precision_pct.count(90)
                           ? r.recall_at_precision_pct.at(90)
                           : 0.0;
    std::cout << "round " << r.k << ": mean recall " << r.mean_recall_value
              << ", R@90P " << r90 << ", pool "
              << (r.counts.count("pool") ? r.counts.at("pool") : 0)
              << ", set precision " << r.set_precision << "\n";
  }
  if (result.converged) std::cout << "converged\n";
  if (!out_dir.empty() && !result.reports.empty()) {
    write_report((fs::path(out_dir) / "final_report.json").string(),
                 result.reports.back());
  }
  return 0;
}

int do_harvest(RunConfig cfg, bool resume) {
  if (cfg.paths.out.empty()) {
    throw InputError("harvest: config must set paths.out");
  }
  if (cfg.paths.volumes.empty() || cfg.paths.marks.empty() ||
      cfg.paths.detections.empty()) {
    throw InputError("harvest: config must set volumes, marks and detections");
  }
  const fs::path out = cfg.paths.out;
  fs::create_directories(out);

  const VolumeMap volumes = to_map(read_volumes(cfg.paths.volumes));
  const auto all_marks = read_marks(cfg.paths.marks);
  std::vector<RecistMark> marks_m, marks_h;
  for (const auto& m : all_marks) {
    auto it = volumes.find(m.volume_id);
    if (it == volumes.end()) {
      throw InputError("mark references unknown volume \"" + m.volume_id +
                       "\"");
    }
    if (it->second.split == Split::M) {
      marks_m.push_back(m);
    } else if (it->second.split != Split::DTest) {
      marks_h.push_back(m);
    }
  }
  std::vector<RecistMark> eval_marks;
  size_t eval_volumes = 0;
  if (!cfg.paths.eval_marks.empty()) {
    for (const auto& m : read_marks(cfg.paths.eval_marks)) {
      auto it = volumes.find(m.volume_id);
      if (it != volumes.end() && (it->second.split == Split::H ||
                                  it->second.split == Split::HTest)) {
        eval_marks.push_back(m);
      }
    }
    for (const auto& [_, v] : volumes) {
      if (v.split == Split::H || v.split == Split::HTest) ++eval_volumes;
    }
  }

  HarvestState state;
  if (resume) {
    const int k = latest_round(out);
    if (k >= 0) {
      state = read_state(
          (out / ("round_" + std::to_string(k)) / "state.json").string())
                  .state;
    }
  }

  HarvestContext ctx;
  ctx.volumes = &volumes;
  ctx.marks_m = &marks_m;
  ctx.marks_h = &marks_h;
  ctx.params = cfg.harvest;

  for (int k = state.k + 1; k <= cfg.max_rounds; ++k) {
    const auto detections =
        read_detections(round_path(cfg.paths.detections, k));
    auto proposals = stack_all(detections, cfg.tracker, k);
    std::map<std::string, double> scores;
    if (!cfg.paths.scores.empty()) {
      scores = read_scores(round_path(cfg.paths.scores, k));
    }
    attach_scores(proposals, cfg.paths.scores.empty() ? nullptr : &scores);

    state = run_iteration(state, std::move(proposals), ctx);

    const fs::path dir = out / ("round_" + std::to_string(k));
    fs::create_directories(dir);
    const auto labels = export_training_labels(state, all_marks, volumes);
    write_labels((dir / "labels.jsonl").string(), labels);

    bool converged = false;
    if (!eval_marks.empty()) {
      std::vector<Proposal3D> eval_set = state.phr;
      eval_set.insert(eval_set.end(), state.pool.begin(), state.pool.end());
      Report report = build_report(
          match_all(eval_set, eval_marks, MatchMode::P3D, eval_volumes),
          "round_" + std::to_string(k), k);
      report.tau = state.tau;
      report.tau_met = state.tau_met;
      state.mean_recall_history.push_back(report.mean_recall_value);
      write_report((dir / "report.json").string(), report);
      converged = check_convergence(state.mean_recall_history,
                                    cfg.harvest.convergence_window,
                                    cfg.harvest.convergence_epsilon);
      std::cout << "round " << k << ": tau "
                << (state.tau_met ? std::to_string(state.tau) : "+inf")
                << ", pool " << state.pool.size() << ", mean recall "
                << report.mean_recall_value << "\n";
    } else {
      std::cout << "round " << k << ": tau "
                << (state.tau_met ? std::to_string(state.tau) : "+inf")
                << ", pool " << state.pool.size() << "\n";
    }

    write_state((dir / "state.json").string(), state);
    // The next round always continues from the persisted bytes.
    state = read_state((dir / "state.json").string()).state;

    if (converged) {
      std::cout << "converged after round " << k << "\n";
      break;
    }
  }
  return 0;
}

int do_heatmaps(const std::string& labels_path,
                const std::string& volumes_path, const std::string& out_dir,
                int stride) {
  const auto labels = read_labels(labels_path);
  const VolumeMap volumes = to_map(read_volumes(volumes_path));
  fs::create_directories(out_dir);

  std::map<std::pair<std::string, int>,
           std::pair<std::vector<Box2D>, std::vector<Box2D>>>
      groups;
  for (const auto& l : labels) {
    if (!volumes.count(l.volume_id)) {
      throw InputError("label references unknown volume \"" + l.volume_id +
                       "\"");
    }
    auto& g = groups[{l.volume_id, l.z}];
    (l.positive ? g.first : g.second).push_back(l.box);
  }

  size_t written = 0;
  for (const auto& [key, boxes] : groups) {
    const auto& [volume_id, z] = key;
    const VolumeRecord& vol = volumes.at(volume_id);
    const GridSpec grid{vol.width, vol.height, stride};
    const Heatmap yp = gaussian_heatmap(boxes.first, grid);
    const Heatmap yn = gaussian_heatmap(boxes.second, grid);
    const Heatmap master = master_heatmap(yp, yn);
    const RegressionTargets targets = regression_targets(boxes.first, grid);

    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "_z%04d", z);
    const std::string stem = (fs::path(out_dir) / (volume_id + suffix)).string();
    const GridMeta meta{volume_id, z, ""};
    GridMeta m = meta;
    m.kind = "heatmap";
    write_grid(stem + ".heatmap.bin", {&master}, m);
    m.kind = "sizes";
    write_grid(stem + ".sizes.bin", {&targets.size_w, &targets.size_h}, m);
    m.kind = "offsets";
    write_grid(stem + ".offsets.bin", {&targets.offset_x, &targets.offset_y},
               m);
    m.kind = "mask";
    write_grid(stem + ".mask.bin", {&targets.mask}, m);
    ++written;
  }
  std::cout << "wrote supervision grids for " << written << " slices -> "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"lesion proposal harvesting workbench"};
  app.require_subcommand(1);

  std::string config_path, out_path, detections_path, proposals_path;
  std::string marks_path, volumes_path, scores_path, lesions_path;
  std::string mode_name = "p3d";
  double tg = -1, precision_target = -1, stack_iou = -1;
  bool no_kalman = false, resume = false, concordance = false;
  int round = 1, rounds = -1, skill_levels = 8, stride = -1;
  int64_t seed = -1;

  auto* stack_cmd = app.add_subcommand("stack", "detections -> 3D proposals");
  stack_cmd->add_option("--detections", detections_path)->required();
  stack_cmd->add_option("--out", out_path)->required();
  stack_cmd->add_option("--tg", tg);
  stack_cmd->add_option("--stack-iou", stack_iou);
  stack_cmd->add_flag("--no-kalman", no_kalman);
  stack_cmd->add_option("--round", round);

  auto* cal_cmd = app.add_subcommand(
      "calibrate", "precision-targeted score threshold from the M split");
  cal_cmd->add_option("--proposals", proposals_path)->required();
  cal_cmd->add_option("--marks", marks_path)->required();
  cal_cmd->add_option("--volumes", volumes_path)->required();
  cal_cmd->add_option("--scores", scores_path);
  cal_cmd->add_option("--precision-target", precision_target);
  cal_cmd->add_option("--out", out_path);

  auto* harvest_cmd =
      app.add_subcommand("harvest", "iterative harvesting rounds");
  harvest_cmd->add_option("--config", config_path)->required();
  harvest_cmd->add_option("--out", out_path);
  harvest_cmd->add_option("--seed", seed);
  harvest_cmd->add_option("--rounds", rounds);
  harvest_cmd->add_option("--tg", tg);
  harvest_cmd->add_option("--precision-target", precision_target);
  harvest_cmd->add_flag("--resume", resume);

  auto* eval_cmd =
      app.add_subcommand("evaluate", "score proposals against marks");
  eval_cmd->add_option("--proposals", proposals_path)->required();
  eval_cmd->add_option("--marks", marks_path)->required();
  eval_cmd->add_option("--mode", mode_name)
      ->check(CLI::IsMember({"p3d", "iou3d", "recist2d"}));
  eval_cmd->add_option("--volumes", volumes_path);
  eval_cmd->add_option("--lesions", lesions_path);
  eval_cmd->add_option("--out", out_path);

  auto* sim_cmd =
      app.add_subcommand("simulate", "seeded end-to-end simulation");
  sim_cmd->add_option("--config", config_path);
  sim_cmd->add_option("--seed", seed);
  sim_cmd->add_option("--rounds", rounds);
  sim_cmd->add_option("--out", out_path);
  sim_cmd->add_flag("--resume", resume);
  sim_cmd->add_flag("--concordance", concordance);
  sim_cmd->add_option("--skill-levels", skill_levels);

  auto* heat_cmd =
      app.add_subcommand("heatmaps", "training labels -> supervision grids");
  heat_cmd->add_option("--labels", proposals_path)->required();
  heat_cmd->add_option("--volumes", volumes_path)->required();
  heat_cmd->add_option("--out", out_path)->required();
  heat_cmd->add_option("--stride", stride);

  std::vector<std::string> argv_storage;
  argv_storage.push_back("lesionkit");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (stack_cmd->parsed()) {
      TrackerConfig tracker;
      if (tg >= 0) tracker.t_g = tg;
      if (stack_iou >= 0) tracker.stack_iou = stack_iou;
      tracker.use_kalman = !no_kalman;
      return do_stack(detections_path, out_path, tracker, round);
    }
    if (cal_cmd->parsed()) {
      return do_calibrate(proposals_path, marks_path, volumes_path,
                          scores_path,
                          precision_target >= 0 ? precision_target : 0.95,
                          out_path);
    }
    if (eval_cmd->parsed()) {
      return do_evaluate(proposals_path, marks_path, mode_name, volumes_path,
                         lesions_path, 0.5, 0.3, out_path);
    }
    if (harvest_cmd->parsed() || sim_cmd->parsed()) {
      RunConfig cfg;
      if (!config_path.empty()) cfg = load_run_config(config_path);
      apply_env_overrides(cfg);
      if (seed >= 0) {
        cfg.seed = uint64_t(seed);
        cfg.world.seed = cfg.seed;
      }
      if (rounds >= 0) cfg.max_rounds = rounds;
      if (tg >= 0) cfg.tracker.t_g = tg;
      if (precision_target >= 0) cfg.harvest.target_precision = precision_target;
      if (!out_path.empty()) cfg.paths.out = out_path;
      if (harvest_cmd->parsed()) return do_harvest(cfg, resume);
      return do_simulate(cfg, cfg.paths.out, cfg.max_rounds, resume,
                         concordance, skill_levels);
    }
    if (heat_cmd->parsed()) {
      return do_heatmaps(proposals_path, volumes_path, out_path,
                         stride >= 1 ? stride : 4);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace lk
