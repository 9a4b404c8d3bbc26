// Copyright 2026 The pvedge Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Flattened tree-ensemble exchange format. The attribute model follows the
// TreeEnsembleRegressor operator (parallel nodes_* arrays, BRANCH_LEQ/LEAF
// modes, explicit base value); the byte encoding is a canonical JSON text
// document described in docs/format.md.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pvedge/gbdt.hpp"

namespace pvedge {

inline constexpr unsigned kFormatVersion = 1;
inline constexpr std::string_view kInputName = "float_input";
inline constexpr std::string_view kOutputName = "variable";
inline constexpr std::string_view kOperatorName = "TreeEnsembleRegressor";

enum class NodeMode { branch_leq, leaf };

struct ArtifactMetadata {
  int inverter_id = 1;
  Target target = Target::active;
  double capacity = 0.0;
  std::uint64_t training_seed = 0;
  std::string created_at;

  bool operator==(const ArtifactMetadata&) const = default;
};

struct ModelArtifact {
  unsigned format_version = kFormatVersion;
  std::string input_name{kInputName};
  std::string output_name{kOutputName};
  std::array<std::uint64_t, 2> input_shape = {1, kFeatureCount};
  double base_score = 0.0;
  std::vector<std::uint64_t> nodes_treeids;
  std::vector<std::uint64_t> nodes_nodeids;
  std::vector<std::uint64_t> nodes_featureids;
  std::vector<NodeMode> nodes_modes;
  std::vector<double> nodes_values;
  std::vector<std::uint64_t> nodes_truenodeids;
  std::vector<std::uint64_t> nodes_falsenodeids;
  std::vector<double> leaf_weights;  // one per LEAF entry, in node order
  ArtifactMetadata metadata;

  std::size_t node_count() const { return nodes_treeids.size(); }
  bool operator==(const ModelArtifact&) const = default;
};

struct Violation {
  std::string code;  // e.g. "length_mismatch", "missing_child", "cycle"
  std::optional<std::size_t> node_index;
  std::optional<std::uint64_t> tree_id;
  std::string message;
};

std::string to_string(const Violation& v);

// Breadth-first flattening, node ids restart at 0 in every tree.
ModelArtifact export_model(const Ensemble& ensemble, const ArtifactMetadata& metadata);

// Every structural problem of the artifact; empty means valid.
std::vector<Violation> validate(const ModelArtifact& artifact);

// Canonical bytes: sorted keys, fixed layout, 17 significant digits.
std::string serialize(const ModelArtifact& artifact);

// Syntax and schema only. Throws Error(parse); syntax errors carry the byte
// offset.
ModelArtifact parse_artifact(std::string_view text);

// Reconstructs the ensemble from a validated artifact. Throws
// Error(validation) listing the violations otherwise.
Ensemble to_ensemble(const ModelArtifact& artifact);

struct ImportedModel {
  Ensemble ensemble;
  ArtifactMetadata metadata;
};

ImportedModel import_model(std::string_view text);
ImportedModel import_model_file(const std::filesystem::path& path);

ModelArtifact load_artifact(const std::filesystem::path& path);
void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path);

}  // namespace pvedge
