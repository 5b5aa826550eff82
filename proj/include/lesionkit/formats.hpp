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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lesionkit/harvester.hpp"
#include "lesionkit/report.hpp"
#include "lesionkit/simulator.hpp"
#include "lesionkit/supervision.hpp"

namespace lk {

// JSON Lines record formats. One record per line; every record carries a
// "schema" field ("<name>/<major>") and readers reject unknown names or
// higher majors. Parse errors name the file, line and field. Unknown fields
// on detection/mark/proposal records are preserved through a rewrite.
// Floats are serialized with 9 significant digits.

std::vector<Detection2D> read_detections(const std::string& path);
void write_detections(const std::string& path,
                      const std::vector<Detection2D>& detections);

std::vector<RecistMark> read_marks(const std::string& path);
void write_marks(const std::string& path,
                 const std::vector<RecistMark>& marks);

std::vector<Proposal3D> read_proposals(const std::string& path);
void write_proposals(const std::string& path,
                     const std::vector<Proposal3D>& proposals);

std::vector<VolumeRecord> read_volumes(const std::string& path);
void write_volumes(const std::string& path,
                   const std::vector<VolumeRecord>& volumes);

std::map<std::string, double> read_scores(const std::string& path);
void write_scores(const std::string& path,
                  const std::map<std::string, double>& scores);

std::vector<TrainingLabel> read_labels(const std::string& path);
void write_labels(const std::string& path,
                  const std::vector<TrainingLabel>& labels);

std::vector<GtBox3D> read_gt_boxes(const std::string& path);
void write_gt_boxes(const std::string& path,
                    const std::vector<GtBox3D>& boxes);

// Whole-file JSON documents.

struct PersistedState {
  HarvestState state;
  std::optional<OracleSkill> skill;
};

void write_state(const std::string& path, const HarvestState& state,
                 const OracleSkill* skill = nullptr);
PersistedState read_state(const std::string& path);

void write_report(const std::string& path, const Report& report);
Report read_report(const std::string& path);
std::string report_to_string(const Report& report);

// Dense grid export: row-major little-endian float32 planes with a JSON
// sidecar describing dims, stride and provenance. `path_bin` should end in
// ".bin"; the sidecar replaces that suffix with ".json".

struct GridMeta {
  std::string volume_id;
  int z = 0;
  std::string kind;  // "heatmap", "sizes", "offsets", "mask"
};

void write_grid(const std::string& path_bin,
                const std::vector<const Heatmap*>& channels,
                const GridMeta& meta);

struct GridFile {
  GridMeta meta;
  std::vector<Heatmap> channels;
};
GridFile read_grid(const std::string& path_bin);

std::string split_name(Split split);
Split split_from_name(const std::string& name);

}  // namespace lk
