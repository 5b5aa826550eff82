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

#include "lesionkit/formats.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "lesionkit/num.hpp"

namespace lk {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "grid export assumes a little-endian host");

namespace {

struct LineCtx {
  const std::string& path;
  size_t line;  // 0 = whole file
};

[[noreturn]] void fail(const LineCtx& ctx, const std::string& msg) {
  std::string where = ctx.path;
  if (ctx.line > 0) where += ":" + std::to_string(ctx.line);
  throw InputError(where + ": " + msg);
}

void check_schema(const json& j, const LineCtx& ctx, const std::string& name) {
  if (!j.contains("schema") || !j["schema"].is_string()) {
    fail(ctx, "missing field \"schema\"");
  }
  const std::string schema = j["schema"];
  const auto slash = schema.find('/');
  if (slash == std::string::npos) fail(ctx, "malformed schema tag");
  const std::string got = schema.substr(0, slash);
  if (got != name) {
    fail(ctx, "expected schema \"" + name + "\", got \"" + got + "\"");
  }
  int major = 0;
  try {
    major = std::stoi(schema.substr(slash + 1));
  } catch (const std::exception&) {
    fail(ctx, "malformed schema version");
  }
  if (major > 1) {
    fail(ctx, "unsupported schema major version " + std::to_string(major));
  }
}

const json& field(const json& j, const LineCtx& ctx, const char* name) {
  if (!j.contains(name)) {
    fail(ctx, std::string("missing field \"") + name + "\"");
  }
  return j[name];
}

double num_field(const json& j, const LineCtx& ctx, const char* name) {
  const json& v = field(j, ctx, name);
  if (!v.is_number()) fail(ctx, std::string("field \"") + name + "\" must be a number");
  return v.get<double>();
}

int int_field(const json& j, const LineCtx& ctx, const char* name) {
  const json& v = field(j, ctx, name);
  if (!v.is_number_integer()) {
    fail(ctx, std::string("field \"") + name + "\" must be an integer");
  }
  return v.get<int>();
}

std::string str_field(const json& j, const LineCtx& ctx, const char* name) {
  const json& v = field(j, ctx, name);
  if (!v.is_string()) fail(ctx, std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

double unit_field(const json& j, const LineCtx& ctx, const char* name) {
  const double v = num_field(j, ctx, name);
  if (v < 0 || v > 1) {
    fail(ctx, std::string("field \"") + name + "\" must lie in [0,1]");
  }
  return v;
}

Box2D box2d_fields(const json& j, const LineCtx& ctx) {
  const double x1 = num_field(j, ctx, "x1"), y1 = num_field(j, ctx, "y1");
  const double x2 = num_field(j, ctx, "x2"), y2 = num_field(j, ctx, "y2");
  try {
    return Box2D(x1, y1, x2, y2);
  } catch (const InputError& e) {
    fail(ctx, e.what());
  }
}

// Collects fields not in `known` so a rewrite can carry them along.
std::string collect_extras(const json& j,
                           const std::vector<std::string>& known) {
  json extras = json::object();
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      extras[key] = value;
    }
  }
  return extras.empty() ? std::string() : extras.dump();
}

json base_object(const std::string& extras_json) {
  if (extras_json.empty()) return json::object();
  return json::parse(extras_json);
}

double jnum(double x) { return round9(x); }

// Streams a JSONL file, invoking the consumer per parsed line.
void for_each_line(const std::string& path,
                   const std::function<void(const json&, const LineCtx&)>& fn) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    LineCtx ctx{path, line_no};
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ctx, std::string("malformed JSON: ") + e.what());
    }
    fn(j, ctx);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot open file for writing");
  return out;
}

json proposal_to_json(const Proposal3D& p) {
  json j = base_object(p.extras_json);
  j["schema"] = "proposal/1";
  j["id"] = p.id;
  j["volume_id"] = p.volume_id;
  j["x1"] = jnum(p.extent.x1);
  j["y1"] = jnum(p.extent.y1);
  j["x2"] = jnum(p.extent.x2);
  j["y2"] = jnum(p.extent.y2);
  j["z1"] = p.extent.z1;
  j["z2"] = p.extent.z2;
  json members = json::array();
  for (const auto& m : p.members) {
    members.push_back({{"z", m.z},
                       {"x1", jnum(m.box.x1)},
                       {"y1", jnum(m.box.y1)},
                       {"x2", jnum(m.box.x2)},
                       {"y2", jnum(m.box.y2)},
                       {"score", jnum(m.score)}});
  }
  j["members"] = std::move(members);
  j["s_g"] = jnum(p.s_g);
  if (p.s_c) j["s_c"] = jnum(*p.s_c);
  if (p.s) j["s"] = jnum(*p.s);
  j["round"] = p.round;
  return j;
}

Proposal3D proposal_from_json(const json& j, const LineCtx& ctx) {
  check_schema(j, ctx, "proposal");
  const json& members_j = field(j, ctx, "members");
  if (!members_j.is_array() || members_j.empty()) {
    fail(ctx, "field \"members\" must be a non-empty array");
  }
  std::vector<ProposalMember> members;
  for (const auto& mj : members_j) {
    members.push_back({int_field(mj, ctx, "z"), box2d_fields(mj, ctx),
                       unit_field(mj, ctx, "score")});
  }
  const int z1 = int_field(j, ctx, "z1"), z2 = int_field(j, ctx, "z2");
  if (z2 < z1) fail(ctx, "field \"z2\" must be >= \"z1\"");
  Proposal3D p;
  try {
    p = make_proposal(str_field(j, ctx, "volume_id"), std::move(members),
                      int_field(j, ctx, "round"));
  } catch (const InputError& e) {
    fail(ctx, e.what());
  }
  const Box2D xy = box2d_fields(j, ctx);
  if (xy != p.extent.xy() || z1 != p.extent.z1 || z2 != p.extent.z2) {
    fail(ctx, "extent does not match the member boxes");
  }
  const double sg = unit_field(j, ctx, "s_g");
  if (sg != p.s_g) fail(ctx, "field \"s_g\" must equal the max member score");
  p.id = str_field(j, ctx, "id");
  if (j.contains("s_c")) p.s_c = unit_field(j, ctx, "s_c");
  if (j.contains("s")) p.s = unit_field(j, ctx, "s");
  p.extras_json = collect_extras(
      j, {"schema", "id", "volume_id", "x1", "y1", "x2", "y2", "z1", "z2",
          "members", "s_g", "s_c", "s", "round"});
  return p;
}

json round_to_json(const RoundProvenance& r) {
  json j;
  j["k"] = r.k;
  j["tau"] = std::isinf(r.tau) ? json() : json(jnum(r.tau));
  j["tau_met"] = r.tau_met;
  j["n_fresh"] = r.n_fresh;
  j["n_pm"] = r.n_pm;
  j["n_ph"] = r.n_ph;
  j["n_excluded"] = r.n_excluded;
  j["n_pm_recist"] = r.n_pm_recist;
  j["n_pm_false"] = r.n_pm_false;
  j["n_ph_recist"] = r.n_ph_recist;
  j["n_new_positives"] = r.n_new_positives;
  j["n_pool"] = r.n_pool;
  j["n_hard_neg_h"] = r.n_hard_neg_h;
  j["n_hard_neg_m"] = r.n_hard_neg_m;
  j["warnings"] = r.warnings;
  return j;
}

RoundProvenance round_from_json(const json& j, const LineCtx& ctx) {
  RoundProvenance r;
  r.k = int_field(j, ctx, "k");
  r.tau = field(j, ctx, "tau").is_null()
              ? std::numeric_limits<double>::infinity()
              : num_field(j, ctx, "tau");
  r.tau_met = field(j, ctx, "tau_met").get<bool>();
  r.n_fresh = field(j, ctx, "n_fresh").get<size_t>();
  r.n_pm = field(j, ctx, "n_pm").get<size_t>();
  r.n_ph = field(j, ctx, "n_ph").get<size_t>();
  r.n_excluded = field(j, ctx, "n_excluded").get<size_t>();
  r.n_pm_recist = field(j, ctx, "n_pm_recist").get<size_t>();
  r.n_pm_false = field(j, ctx, "n_pm_false").get<size_t>();
  r.n_ph_recist = field(j, ctx, "n_ph_recist").get<size_t>();
  r.n_new_positives = field(j, ctx, "n_new_positives").get<size_t>();
  r.n_pool = field(j, ctx, "n_pool").get<size_t>();
  r.n_hard_neg_h = field(j, ctx, "n_hard_neg_h").get<size_t>();
  r.n_hard_neg_m = field(j, ctx, "n_hard_neg_m").get<size_t>();
  r.warnings = field(j, ctx, "warnings").get<std::vector<std::string>>();
  return r;
}

json skill_to_json(const OracleSkill& s) {
  return {{"detect_base", jnum(s.detect_base)}, {"fp_rate", jnum(s.fp_rate)},
          {"jitter", jnum(s.jitter)},           {"clf_auc", jnum(s.clf_auc)},
          {"gain_pos", jnum(s.gain_pos)},       {"gain_neg", jnum(s.gain_neg)}};
}

OracleSkill skill_from_json(const json& j, const LineCtx& ctx) {
  OracleSkill s;
  s.detect_base = num_field(j, ctx, "detect_base");
  s.fp_rate = num_field(j, ctx, "fp_rate");
  s.jitter = num_field(j, ctx, "jitter");
  s.clf_auc = num_field(j, ctx, "clf_auc");
  s.gain_pos = num_field(j, ctx, "gain_pos");
  s.gain_neg = num_field(j, ctx, "gain_neg");
  return s;
}

json load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": malformed JSON: " + e.what());
  }
}

}  // namespace

std::string split_name(Split split) {
  switch (split) {
    case Split::M: return "M";
    case Split::H: return "H";
    case Split::HTest: return "H_test";
    case Split::DTest: return "D_test";
  }
  return "H";
}

Split split_from_name(const std::string& name) {
  if (name == "M") return Split::M;
  if (name == "H") return Split::H;
  if (name == "H_test") return Split::HTest;
  if (name == "D_test") return Split::DTest;
  throw InputError("unknown split \"" + name + "\"");
}

std::vector<Detection2D> read_detections(const std::string& path) {
  std::vector<Detection2D> out;
  for_each_line(path, [&](const json& j, const LineCtx& ctx) {
    check_schema(j, ctx, "detection");
    Detection2D d{str_field(j, ctx, "volume_id"), int_field(j, ctx, "z"),
                  box2d_fields(j, ctx), unit_field(j, ctx, "score"), ""};
    d.extras_json = collect_extras(
        j, {"schema", "volume_id", "z", "x1", "y1", "x2", "y2", "score"});
    out.push_back(std::move(d));
  });
  return out;
}

void write_detections(const std::string& path,
                      const std::vector<Detection2D>& detections) {
  auto out = open_out(path);
  for (const auto& d : detections) {
    json j = base_object(d.extras_json);
    j["schema"] = "detection/1";
    j["volume_id"] = d.volume_id;
    j["z"] = d.z;
    j["x1"] = jnum(d.box.x1);
    j["y1"] = jnum(d.box.y1);
    j["x2"] = jnum(d.box.x2);
    j["y2"] = jnum(d.box.y2);
    j["score"] = jnum(d.score);
    out << j.dump() << '\n';
  }
}

std::vector<RecistMark> read_marks(const std::string& path) {
  std::vector<RecistMark> out;
  for_each_line(path, [&](const json& j, const LineCtx& ctx) {
    check_schema(j, ctx, "mark");
    const std::string origin = str_field(j, ctx, "origin");
    if (origin != "original" && origin != "supplementary") {
      fail(ctx, "field \"origin\" must be \"original\" or \"supplementary\"");
    }
    RecistMark m{str_field(j, ctx, "volume_id"),
                 str_field(j, ctx, "lesion_id"),
                 int_field(j, ctx, "z"),
                 box2d_fields(j, ctx),
                 origin == "original" ? MarkOrigin::Original
                                      : MarkOrigin::Supplementary,
                 ""};
    m.extras_json = collect_extras(j, {"schema", "volume_id", "lesion_id", "z",
                                       "x1", "y1", "x2", "y2", "origin"});
    out.push_back(std::move(m));
  });
  return out;
}

void write_marks(const std::string& path,
                 const std::vector<RecistMark>& marks) {
  auto out = open_out(path);
  for (const auto& m : marks) {
    json j = base_object(m.extras_json);
    j["schema"] = "mark/1";
    j["volume_id"] = m.volume_id;
    j["lesion_id"] = m.lesion_id;
    j["z"] = m.z;
    j["x1"] = jnum(m.box.x1);
    j["y1"] = jnum(m.box.y1);
    j["x2"] = jnum(m.box.x2);
    j["y2"] = jnum(m.box.y2);
    j["origin"] =
        m.origin == MarkOrigin::Original ? "original" : "supplementary";
    out << j.dump() << '\n';
  }
}

std::vector<Proposal3D> read_proposals(const std::string& path) {
  std::vector<Proposal3D> out;
  for_each_line(path, [&](const json& j, const LineCtx& ctx) {
    out.push_back(proposal_from_json(j, ctx));
  });
  return out;
}

void write_proposals(const std::string& path,
                     const std::vector<Proposal3D>& proposals) {
  auto out = open_out(path);
  for (const auto& p : proposals) out << proposal_to_json(p).dump() << '\n';
}

std::vector<VolumeRecord> read_volumes(const std::string& path) {
  std::vector<VolumeRecord> out;
  for_each_line(path, [&](const json& j, const LineCtx& ctx) {
    check_schema(j, ctx, "volume");
    VolumeRecord v;
    v.volume_id = str_field(j, ctx, "volume_id");
    v.n_slices = int_field(j, ctx, "n_slices");
    if (v.n_slices < 1) fail(ctx, "field \"n_slices\" must be >= 1");
    v.width = num_field(j, ctx, "width");
    v.height = num_field(j, ctx, "height");
    if (v.width <= 0 || v.height <= 0) fail(ctx, "volume dims must be > 0");
    try {
      v.split = split_from_name(str_field(j, ctx, "split"));
    } catch (const InputError& e) {
      fail(ctx, e.what());
    }
    out.push_back(std::move(v));
  });
  return out;
}

void write_volumes(const std::string& path,
                   const std::vector<VolumeRecord>& volumes) {
  auto out = open_out(path);
  for (const auto& v : volumes) {
    json j;
    j["schema"] = "volume/1";
    j["volume_id"] = v.volume_id;
    j["n_slices"] = v.n_slices;
    j["width"] = jnum(v.width);
    j["height"] = jnum(v.height);
    j["split"] = split_name(v.split);
    out << j.dump() << '\n';
  }
}

std::map<std::string, double> read_scores(const std::string& path) {
  std::map<std::string, double> out;
  for_each_line(path, [&](const json& j, const LineCtx& ctx) {
    check_schema(j, ctx, "score");
    out[str_field(j, ctx, "id")] = unit_field(j, ctx, "s_c");
  });
  return out;
}

void write_scores(const std::string& path,
                  const std::map<std::string, double>& scores) {
  auto out = open_out(path);
  for (const auto& [id, sc] : scores) {
    json j;
    j["schema"] = "score/1";
    j["id"] = id;
    j["s_c"] = jnum(sc);
    out << j.dump() << '\n';
  }
}

std::vector<TrainingLabel> read_labels(const std::string& path) {
  std::vector<TrainingLabel> out;
  for_each_line(path, [&](const json& j, const LineCtx& ctx) {
    check_schema(j, ctx, "label");
    out.push_back({str_field(j, ctx, "volume_id"), int_field(j, ctx, "z"),
                   box2d_fields(j, ctx),
                   field(j, ctx, "positive").get<bool>(),
                   str_field(j, ctx, "source")});
  });
  return out;
}

void write_labels(const std::string& path,
                  const std::vector<TrainingLabel>& labels) {
  auto out = open_out(path);
  for (const auto& l : labels) {
    json j;
    j["schema"] = "label/1";
    j["volume_id"] = l.volume_id;
    j["z"] = l.z;
    j["x1"] = jnum(l.box.x1);
    j["y1"] = jnum(l.box.y1);
    j["x2"] = jnum(l.box.x2);
    j["y2"] = jnum(l.box.y2);
    j["positive"] = l.positive;
    j["source"] = l.source;
    out << j.dump() << '\n';
  }
}

std::vector<GtBox3D> read_gt_boxes(const std::string& path) {
  std::vector<GtBox3D> out;
  for_each_line(path, [&](const json& j, const LineCtx& ctx) {
    check_schema(j, ctx, "lesion3d");
    const int z1 = int_field(j, ctx, "z1"), z2 = int_field(j, ctx, "z2");
    if (z2 < z1) fail(ctx, "field \"z2\" must be >= \"z1\"");
    const Box2D xy = box2d_fields(j, ctx);
    out.push_back({str_field(j, ctx, "volume_id"),
                   Box3D(xy.x1, xy.y1, xy.x2, xy.y2, z1, z2)});
  });
  return out;
}

void write_gt_boxes(const std::string& path,
                    const std::vector<GtBox3D>& boxes) {
  auto out = open_out(path);
  for (const auto& b : boxes) {
    json j;
    j["schema"] = "lesion3d/1";
    j["volume_id"] = b.volume_id;
    j["x1"] = jnum(b.box.x1);
    j["y1"] = jnum(b.box.y1);
    j["x2"] = jnum(b.box.x2);
    j["y2"] = jnum(b.box.y2);
    j["z1"] = b.box.z1;
    j["z2"] = b.box.z2;
    out << j.dump() << '\n';
  }
}

void write_state(const std::string& path, const HarvestState& state,
                 const OracleSkill* skill) {
  json j;
  j["schema"] = "state/1";
  j["k"] = state.k;
  j["tau"] = std::isinf(state.tau) ? json() : json(jnum(state.tau));
  j["tau_met"] = state.tau_met;
  json history = json::array();
  for (double v : state.mean_recall_history) history.push_back(jnum(v));
  j["mean_recall_history"] = std::move(history);
  for (const auto& [name, set] :
       std::initializer_list<std::pair<const char*, const std::vector<Proposal3D>*>>{
           {"pool", &state.pool},
           {"phr", &state.phr},
           {"pm_recist", &state.pm_recist},
           {"pm_false", &state.pm_false},
           {"hard_neg_h", &state.hard_neg_h},
           {"hard_neg_m", &state.hard_neg_m}}) {
    json arr = json::array();
    for (const auto& p : *set) arr.push_back(proposal_to_json(p));
    j[name] = std::move(arr);
  }
  json rounds = json::array();
  for (const auto& r : state.rounds) rounds.push_back(round_to_json(r));
  j["rounds"] = std::move(rounds);
  if (skill) j["skill"] = skill_to_json(*skill);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

PersistedState read_state(const std::string& path) {
  const json j = load_document(path);
  LineCtx ctx{path, 0};
  check_schema(j, ctx, "state");
  PersistedState out;
  out.state.k = int_field(j, ctx, "k");
  out.state.tau = field(j, ctx, "tau").is_null()
                      ? std::numeric_limits<double>::infinity()
                      : num_field(j, ctx, "tau");
  out.state.tau_met = field(j, ctx, "tau_met").get<bool>();
  out.state.mean_recall_history =
      field(j, ctx, "mean_recall_history").get<std::vector<double>>();
  for (const auto& [name, set] :
       std::initializer_list<std::pair<const char*, std::vector<Proposal3D>*>>{
           {"pool", &out.state.pool},
           {"phr", &out.state.phr},
           {"pm_recist", &out.state.pm_recist},
           {"pm_false", &out.state.pm_false},
           {"hard_neg_h", &out.state.hard_neg_h},
           {"hard_neg_m", &out.state.hard_neg_m}}) {
    for (const auto& pj : field(j, ctx, name)) {
      set->push_back(proposal_from_json(pj, ctx));
    }
  }
  for (const auto& rj : field(j, ctx, "rounds")) {
    out.state.rounds.push_back(round_from_json(rj, ctx));
  }
  if (j.contains("skill")) out.skill = skill_from_json(j["skill"], ctx);
  return out;
}

namespace {

json report_to_json(const Report& r) {
  json j;
  j["schema"] = "report/1";
  j["run_id"] = r.run_id;
  j["k"] = r.k;
  j["counts"] = r.counts;
  j["tau"] = std::isinf(r.tau) ? json() : json(jnum(r.tau));
  j["tau_met"] = r.tau_met;
  j["ap"] = jnum(r.ap);
  j["mean_recall"] = jnum(r.mean_recall_value);
  json rap = json::object();
  for (const auto& [pct, recall] : r.recall_at_precision_pct) {
    rap[std::to_string(pct)] = jnum(recall);
  }
  j["recall_at_precision"] = std::move(rap);
  json raf = json::array();
  for (const auto& [fp, recall] : r.recall_at_fp_points) {
    raf.push_back({{"fp", jnum(fp)}, {"recall", jnum(recall)}});
  }
  j["recall_at_fp"] = std::move(raf);
  json pr = json::array();
  for (const auto& p : r.pr.points) {
    pr.push_back({{"threshold", jnum(p.threshold)},
                  {"precision", jnum(p.precision)},
                  {"recall", jnum(p.recall)}});
  }
  j["pr"] = std::move(pr);
  json froc = json::array();
  for (const auto& p : r.froc.points) {
    froc.push_back({{"threshold", jnum(p.threshold)},
                    {"fp_per_volume", jnum(p.fp_per_volume)},
                    {"recall", jnum(p.recall)}});
  }
  j["froc"] = std::move(froc);
  j["set_precision"] = jnum(r.set_precision);
  j["set_recall"] = jnum(r.set_recall);
  return j;
}

}  // namespace

std::string report_to_string(const Report& report) {
  return report_to_json(report).dump(2) + "\n";
}

void write_report(const std::string& path, const Report& report) {
  auto out = open_out(path);
  out << report_to_string(report);
}

Report read_report(const std::string& path) {
  const json j = load_document(path);
  LineCtx ctx{path, 0};
  check_schema(j, ctx, "report");
  Report r;
  r.run_id = str_field(j, ctx, "run_id");
  r.k = int_field(j, ctx, "k");
  r.counts = field(j, ctx, "counts").get<std::map<std::string, int64_t>>();
  r.tau = field(j, ctx, "tau").is_null()
              ? std::numeric_limits<double>::infinity()
              : num_field(j, ctx, "tau");
  r.tau_met = field(j, ctx, "tau_met").get<bool>();
  r.ap = num_field(j, ctx, "ap");
  r.mean_recall_value = num_field(j, ctx, "mean_recall");
  for (const auto& [key, value] :
       field(j, ctx, "recall_at_precision").items()) {
    r.recall_at_precision_pct[std::stoi(key)] = value.get<double>();
  }
  for (const auto& pj : field(j, ctx, "recall_at_fp")) {
    r.recall_at_fp_points.push_back(
        {num_field(pj, ctx, "fp"), num_field(pj, ctx, "recall")});
  }
  for (const auto& pj : field(j, ctx, "pr")) {
    r.pr.points.push_back({num_field(pj, ctx, "threshold"),
                           num_field(pj, ctx, "precision"),
                           num_field(pj, ctx, "recall")});
  }
  for (const auto& pj : field(j, ctx, "froc")) {
    r.froc.points.push_back({num_field(pj, ctx, "threshold"),
                             num_field(pj, ctx, "fp_per_volume"),
                             num_field(pj, ctx, "recall")});
  }
  r.set_precision = num_field(j, ctx, "set_precision");
  r.set_recall = num_field(j, ctx, "set_recall");
  return r;
}

namespace {

std::string sidecar_path(const std::string& path_bin) {
  if (path_bin.size() >= 4 && path_bin.ends_with(".bin")) {
    return path_bin.substr(0, path_bin.size() - 4) + ".json";
  }
  return path_bin + ".json";
}

}  // namespace

void write_grid(const std::string& path_bin,
                const std::vector<const Heatmap*>& channels,
                const GridMeta& meta) {
  if (channels.empty()) throw InputError("write_grid: no channels");
  const Heatmap& first = *channels.front();
  for (const auto* c : channels) {
    if (!c->same_shape(first)) {
      throw InputError("write_grid: channel shapes differ");
    }
  }
  auto out = open_out(path_bin);
  for (const auto* c : channels) {
    out.write(reinterpret_cast<const char*>(c->values.data()),
              std::streamsize(c->values.size() * sizeof(float)));
  }
  json j;
  j["schema"] = "grid/1";
  j["volume_id"] = meta.volume_id;
  j["z"] = meta.z;
  j["kind"] = meta.kind;
  j["width"] = first.width;
  j["height"] = first.height;
  j["stride"] = first.stride;
  j["channels"] = channels.size();
  j["dtype"] = "f32le";
  j["layout"] = "chw-row-major";
  auto side = open_out(sidecar_path(path_bin));
  side << j.dump(2) << '\n';
}

GridFile read_grid(const std::string& path_bin) {
  const json j = load_document(sidecar_path(path_bin));
  LineCtx ctx{sidecar_path(path_bin), 0};
  check_schema(j, ctx, "grid");
  GridFile out;
  out.meta.volume_id = str_field(j, ctx, "volume_id");
  out.meta.z = int_field(j, ctx, "z");
  out.meta.kind = str_field(j, ctx, "kind");
  const int width = int_field(j, ctx, "width");
  const int height = int_field(j, ctx, "height");
  const int stride = int_field(j, ctx, "stride");
  const int channels = int_field(j, ctx, "channels");
  std::ifstream in(path_bin, std::ios::binary);
  if (!in) throw InputError(path_bin + ": cannot open file");
  for (int c = 0; c < channels; ++c) {
    Heatmap map(width, height, stride);
    in.read(reinterpret_cast<char*>(map.values.data()),
            std::streamsize(map.values.size() * sizeof(float)));
    if (!in) throw InputError(path_bin + ": truncated grid data");
    out.channels.push_back(std::move(map));
  }
  return out;
}

}  // namespace lk
