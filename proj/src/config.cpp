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

#include "lesionkit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

namespace lk {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where,
                    const std::set<std::string>& known) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw InputError("run config: unknown key \"" + where + key + "\"");
    }
  }
}

double get_num(const json& j, const char* key, double fallback, double lo,
               double hi, const char* where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw InputError(std::string("run config: ") + where + key +
                     " must be a number");
  }
  const double v = j[key].get<double>();
  if (v < lo || v > hi) {
    throw InputError(std::string("run config: ") + where + key +
                     " out of range");
  }
  return v;
}

int get_int(const json& j, const char* key, int fallback, int lo, int hi,
            const char* where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    throw InputError(std::string("run config: ") + where + key +
                     " must be an integer");
  }
  const int v = j[key].get<int>();
  if (v < lo || v > hi) {
    throw InputError(std::string("run config: ") + where + key +
                     " out of range");
  }
  return v;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": malformed JSON: " + e.what());
  }

  reject_unknown(j, "", {"schema", "paths", "params", "seed", "max_rounds",
                         "world", "skill"});
  if (j.contains("schema") && j["schema"].get<std::string>() != "run_config/1") {
    throw InputError(path + ": unsupported config schema");
  }

  RunConfig cfg;
  if (j.contains("paths")) {
    const json& p = j["paths"];
    reject_unknown(p, "paths.",
                   {"volumes", "marks", "detections", "scores", "eval_marks",
                    "lesions3d", "out"});
    auto get = [&](const char* key) {
      return p.contains(key) ? p[key].get<std::string>() : std::string();
    };
    cfg.paths = {get("volumes"),    get("marks"),     get("detections"),
                 get("scores"),     get("eval_marks"), get("lesions3d"),
                 get("out")};
  }

  if (j.contains("params")) {
    const json& p = j["params"];
    reject_unknown(
        p, "params.",
        {"tg", "stack_iou", "use_kalman", "process_noise", "observation_noise",
         "initial_variance", "p3d_iou", "iou3d_gold", "target_precision",
         "hard_neg_min_sg", "hard_neg_cap", "stride", "convergence_window",
         "convergence_epsilon"});
    cfg.tracker.t_g = get_num(p, "tg", cfg.tracker.t_g, 0, 1, "params.");
    cfg.tracker.stack_iou =
        get_num(p, "stack_iou", cfg.tracker.stack_iou, 0, 1, "params.");
    if (p.contains("use_kalman")) {
      cfg.tracker.use_kalman = p["use_kalman"].get<bool>();
    }
    cfg.tracker.process_noise = get_num(p, "process_noise",
                                        cfg.tracker.process_noise, 0, 1e9,
                                        "params.");
    cfg.tracker.observation_noise =
        get_num(p, "observation_noise", cfg.tracker.observation_noise, 0, 1e9,
                "params.");
    cfg.tracker.initial_variance =
        get_num(p, "initial_variance", cfg.tracker.initial_variance, 0, 1e9,
                "params.");
    cfg.harvest.p3d_iou =
        get_num(p, "p3d_iou", cfg.harvest.p3d_iou, 0, 1, "params.");
    cfg.harvest.same_lesion_iou3d =
        get_num(p, "iou3d_gold", cfg.harvest.same_lesion_iou3d, 0, 1,
                "params.");
    cfg.harvest.target_precision =
        get_num(p, "target_precision", cfg.harvest.target_precision, 0, 1,
                "params.");
    cfg.harvest.hard_neg_min_sg =
        get_num(p, "hard_neg_min_sg", cfg.harvest.hard_neg_min_sg, 0, 1,
                "params.");
    cfg.harvest.hard_neg_cap =
        get_int(p, "hard_neg_cap", cfg.harvest.hard_neg_cap, 0, 1000,
                "params.");
    cfg.stride = get_int(p, "stride", cfg.stride, 1, 256, "params.");
    cfg.harvest.convergence_window =
        get_int(p, "convergence_window", cfg.harvest.convergence_window, 1,
                100, "params.");
    cfg.harvest.convergence_epsilon =
        get_num(p, "convergence_epsilon", cfg.harvest.convergence_epsilon, 0,
                1, "params.");
  }

  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<int64_t>() < 0) {
      throw InputError("run config: seed must be a non-negative integer");
    }
    cfg.seed = j["seed"].get<uint64_t>();
  }
  cfg.max_rounds = get_int(j, "max_rounds", cfg.max_rounds, 0, 1000, "");

  if (j.contains("world")) {
    const json& w = j["world"];
    reject_unknown(
        w, "world.",
        {"n_volumes", "n_slices", "width", "height", "lesions_per_volume_mean",
         "lesions_per_volume_max", "marked_fraction", "lesion_size_min",
         "lesion_size_max", "lesion_depth_min", "lesion_depth_max",
         "m_fraction", "h_test_fraction"});
    WorldConfig& wc = cfg.world;
    wc.n_volumes = get_int(w, "n_volumes", wc.n_volumes, 1, 1000000, "world.");
    wc.n_slices = get_int(w, "n_slices", wc.n_slices, 1, 100000, "world.");
    wc.width = get_num(w, "width", wc.width, 1, 1e6, "world.");
    wc.height = get_num(w, "height", wc.height, 1, 1e6, "world.");
    wc.lesions_per_volume_mean =
        get_num(w, "lesions_per_volume_mean", wc.lesions_per_volume_mean, 0,
                1e4, "world.");
    wc.lesions_per_volume_max =
        get_int(w, "lesions_per_volume_max", wc.lesions_per_volume_max, 1,
                100000, "world.");
    wc.marked_fraction =
        get_num(w, "marked_fraction", wc.marked_fraction, 0, 1, "world.");
    wc.lesion_size_min =
        get_num(w, "lesion_size_min", wc.lesion_size_min, 2, 1e6, "world.");
    wc.lesion_size_max =
        get_num(w, "lesion_size_max", wc.lesion_size_max, 2, 1e6, "world.");
    wc.lesion_depth_min =
        get_int(w, "lesion_depth_min", wc.lesion_depth_min, 1, 100000,
                "world.");
    wc.lesion_depth_max =
        get_int(w, "lesion_depth_max", wc.lesion_depth_max, 1, 100000,
                "world.");
    wc.m_fraction = get_num(w, "m_fraction", wc.m_fraction, 0, 1, "world.");
    wc.h_test_fraction =
        get_num(w, "h_test_fraction", wc.h_test_fraction, 0, 1, "world.");
    wc.seed = cfg.seed;
    cfg.has_world = true;
  }

  if (j.contains("skill")) {
    const json& s = j["skill"];
    reject_unknown(s, "skill.", {"detect_base", "fp_rate", "jitter", "clf_auc",
                                 "gain_pos", "gain_neg"});
    cfg.skill.detect_base =
        get_num(s, "detect_base", cfg.skill.detect_base, 0, 1, "skill.");
    cfg.skill.fp_rate = get_num(s, "fp_rate", cfg.skill.fp_rate, 0, 1e4,
                                "skill.");
    cfg.skill.jitter = get_num(s, "jitter", cfg.skill.jitter, 0, 1, "skill.");
    cfg.skill.clf_auc = get_num(s, "clf_auc", cfg.skill.clf_auc, 0, 1,
                                "skill.");
    cfg.skill.gain_pos =
        get_num(s, "gain_pos", cfg.skill.gain_pos, 0, 1, "skill.");
    cfg.skill.gain_neg =
        get_num(s, "gain_neg", cfg.skill.gain_neg, 0, 1, "skill.");
  }
  return cfg;
}

void apply_env_overrides(RunConfig& config) {
  auto env = [](const char* name) -> const char* {
    return std::getenv(name);
  };
  if (const char* v = env("LESIONKIT_SEED")) {
    config.seed = std::strtoull(v, nullptr, 10);
    config.world.seed = config.seed;
  }
  if (const char* v = env("LESIONKIT_MAX_ROUNDS")) {
    config.max_rounds = std::atoi(v);
  }
  if (const char* v = env("LESIONKIT_TG")) {
    config.tracker.t_g = std::strtod(v, nullptr);
  }
  if (const char* v = env("LESIONKIT_PRECISION_TARGET")) {
    config.harvest.target_precision = std::strtod(v, nullptr);
  }
  if (const char* v = env("LESIONKIT_OUT")) {
    config.paths.out = v;
  }
}

std::string round_path(const std::string& templated, int round) {
  const std::string token = "{round}";
  const auto pos = templated.find(token);
  if (pos == std::string::npos) return templated;
  return templated.substr(0, pos) + std::to_string(round) +
         templated.substr(pos + token.size());
}

}  // namespace lk
