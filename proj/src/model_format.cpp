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

#include "pvedge/model_format.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "json.hpp"

namespace pvedge {
namespace {

using json = nlohmann::json;

std::string_view mode_name(NodeMode m) { return m == NodeMode::leaf ? "LEAF" : "BRANCH_LEQ"; }

std::string number(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of zero
  return fmt::format("{:.17g}", v);
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& values, Fn&& fn) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fn(values[i]);
  }
  out += "]";
  return out;
}

std::string uints(const std::vector<std::uint64_t>& v) {
  return join(v, [](std::uint64_t x) { return std::to_string(x); });
}

std::string reals(const std::vector<double>& v) { return join(v, number); }

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

[[noreturn]] void schema_error(std::string_view field, std::string_view what) {
  throw Error(ErrorKind::parse, fmt::format("field '{}': {}", field, what));
}

const json& require(const json& obj, std::string_view key) {
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) schema_error(key, "missing");
  return *it;
}

std::uint64_t as_uint(const json& j, std::string_view field) {
  if (!j.is_number_unsigned()) {
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
    schema_error(field, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

double as_real(const json& j, std::string_view field) {
  if (!j.is_number()) schema_error(field, "expected a number");
  return j.get<double>();
}

std::string as_string(const json& j, std::string_view field) {
  if (!j.is_string()) schema_error(field, "expected a string");
  return j.get<std::string>();
}

std::vector<std::uint64_t> uint_array(const json& obj, std::string_view key) {
  const json& a = require(obj, key);
  if (!a.is_array()) schema_error(key, "expected an array");
  std::vector<std::uint64_t> out;
  out.reserve(a.size());
  for (const auto& e : a) out.push_back(as_uint(e, key));
  return out;
}

std::vector<double> real_array(const json& obj, std::string_view key) {
  const json& a = require(obj, key);
  if (!a.is_array()) schema_error(key, "expected an array");
  std::vector<double> out;
  out.reserve(a.size());
  for (const auto& e : a) out.push_back(as_real(e, key));
  return out;
}

// Per-tree view of an artifact: node id -> position in the nodes_* arrays.
using TreeIndex = std::map<std::uint64_t, std::map<std::uint64_t, std::size_t>>;

TreeIndex index_trees(const ModelArtifact& a) {
  TreeIndex trees;
  for (std::size_t i = 0; i < a.node_count(); ++i) trees[a.nodes_treeids[i]].emplace(a.nodes_nodeids[i], i);
  return trees;
}

std::optional<std::uint64_t> find_root(const ModelArtifact& a, const std::map<std::uint64_t, std::size_t>& nodes) {
  std::set<std::uint64_t> referenced;
  for (const auto& [id, pos] : nodes) {
    if (a.nodes_modes[pos] == NodeMode::branch_leq) {
      referenced.insert(a.nodes_truenodeids[pos]);
      referenced.insert(a.nodes_falsenodeids[pos]);
    }
  }
  std::optional<std::uint64_t> root;
  for (const auto& [id, pos] : nodes) {
    if (referenced.count(id)) continue;
    if (root) return std::nullopt;
    root = id;
  }
  return root;
}

}  // namespace

std::string to_string(const Violation& v) {
  std::string where;
  if (v.tree_id) where += fmt::format(" tree {}", *v.tree_id);
  if (v.node_index) where += fmt::format(" node[{}]", *v.node_index);
  return fmt::format("{}{}: {}", v.code, where, v.message);
}

ModelArtifact export_model(const Ensemble& ensemble, const ArtifactMetadata& metadata) {
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    const auto problems = check_tree(ensemble.trees[t], ensemble.feature_count);
    if (!problems.empty())
      throw Error(ErrorKind::validation, fmt::format("tree {}: {}", t, problems.front()));
  }
  ModelArtifact a;
  a.input_shape = {1, ensemble.feature_count};
  a.base_score = ensemble.base_score;
  a.metadata = metadata;
  a.metadata.target = ensemble.target;

  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    const auto& nodes = ensemble.trees[t].nodes;
    // Breadth-first: a node's id is its position in visiting order, and
    // children are numbered as they are enqueued.
    std::deque<std::size_t> queue{0};
    std::uint64_t next_id = 1;
    for (std::uint64_t id = 0; !queue.empty(); ++id) {
      const std::size_t at = queue.front();
      queue.pop_front();
      a.nodes_treeids.push_back(t);
      a.nodes_nodeids.push_back(id);
      if (const auto* b = std::get_if<Branch>(&nodes[at])) {
        a.nodes_modes.push_back(NodeMode::branch_leq);
        a.nodes_featureids.push_back(b->feature);
        a.nodes_values.push_back(b->threshold);
        a.nodes_truenodeids.push_back(next_id++);
        a.nodes_falsenodeids.push_back(next_id++);
        queue.push_back(b->left);
        queue.push_back(b->right);
      } else {
        a.nodes_modes.push_back(NodeMode::leaf);
        a.nodes_featureids.push_back(0);
        a.nodes_values.push_back(0.0);
        a.nodes_truenodeids.push_back(0);
        a.nodes_falsenodeids.push_back(0);
        a.leaf_weights.push_back(std::get<Leaf>(nodes[at]).weight);
      }
    }
  }
  return a;
}

std::vector<Violation> validate(const ModelArtifact& a) {
  std::vector<Violation> out;
  const auto add = [&](std::string code, std::optional<std::size_t> node, std::optional<std::uint64_t> tree,
                       std::string msg) { out.push_back({std::move(code), node, tree, std::move(msg)}); };

  if (a.format_version != kFormatVersion)
    add("format_version", {}, {}, fmt::format("unsupported format_version {}", a.format_version));
  if (a.input_name != kInputName)
    add("input_name", {}, {}, fmt::format("input_name must be '{}', got '{}'", kInputName, a.input_name));
  if (a.output_name != kOutputName)
    add("output_name", {}, {}, fmt::format("output_name must be '{}', got '{}'", kOutputName, a.output_name));
  if (a.input_shape[0] != 1 || a.input_shape[1] == 0)
    add("input_shape", {}, {}, fmt::format("input_shape must be [1, n>0], got [{}, {}]", a.input_shape[0],
                                           a.input_shape[1]));
  if (!std::isfinite(a.base_score)) add("non_finite", {}, {}, "base_score is not finite");
  if (!std::isfinite(a.metadata.capacity) || !(a.metadata.capacity > 0.0))
    add("metadata", {}, {}, "metadata.capacity must be a positive number");

  const std::size_t n = a.nodes_treeids.size();
  const std::pair<std::string_view, std::size_t> lengths[] = {
      {"nodes_nodeids", a.nodes_nodeids.size()},         {"nodes_featureids", a.nodes_featureids.size()},
      {"nodes_modes", a.nodes_modes.size()},             {"nodes_values", a.nodes_values.size()},
      {"nodes_truenodeids", a.nodes_truenodeids.size()}, {"nodes_falsenodeids", a.nodes_falsenodeids.size()},
  };
  bool lengths_ok = true;
  for (const auto& [name, len] : lengths) {
    if (len != n) {
      add("length_mismatch", {}, {}, fmt::format("{} has {} entries, nodes_treeids has {}", name, len, n));
      lengths_ok = false;
    }
  }
  // Nothing below can be checked without aligned arrays.
  if (!lengths_ok) return out;

  std::size_t leaves = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a.nodes_modes[i] == NodeMode::leaf) ++leaves;
    if (a.nodes_featureids[i] >= a.input_shape[1])
      add("feature_out_of_range", i, a.nodes_treeids[i],
          fmt::format("featureid {} >= input width {}", a.nodes_featureids[i], a.input_shape[1]));
    if (!std::isfinite(a.nodes_values[i])) add("non_finite", i, a.nodes_treeids[i], "nodes_values entry not finite");
  }
  if (a.leaf_weights.size() != leaves)
    add("length_mismatch", {}, {},
        fmt::format("leaf_weights has {} entries for {} LEAF nodes", a.leaf_weights.size(), leaves));
  for (std::size_t i = 0; i < a.leaf_weights.size(); ++i)
    if (!std::isfinite(a.leaf_weights[i])) add("non_finite", {}, {}, fmt::format("leaf_weights[{}] not finite", i));

  // Uniqueness of (treeid, nodeid).
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = seen.emplace(std::pair{a.nodes_treeids[i], a.nodes_nodeids[i]}, i);
    if (!inserted)
      add("duplicate_node", i, a.nodes_treeids[i],
          fmt::format("node id {} already defined at node[{}]", a.nodes_nodeids[i], it->second));
  }

  const TreeIndex trees = index_trees(a);
  std::uint64_t expected_tree = 0;
  for (const auto& [tree_id, nodes] : trees) {
    if (tree_id != expected_tree)
      add("tree_ids", {}, tree_id, fmt::format("tree ids must be 0..K-1 without gaps; expected {}", expected_tree));
    expected_tree = tree_id + 1;

    // Child references.
    std::map<std::uint64_t, int> parents;
    for (const auto& [id, pos] : nodes) {
      if (a.nodes_modes[pos] != NodeMode::branch_leq) continue;
      for (std::uint64_t child : {a.nodes_truenodeids[pos], a.nodes_falsenodeids[pos]}) {
        if (!nodes.count(child))
          add("missing_child", pos, tree_id, fmt::format("child node id {} does not exist in tree {}", child, tree_id));
        else
          ++parents[child];
      }
    }
    for (const auto& [id, count] : parents)
      if (count > 1)
        add("multiple_parents", nodes.at(id), tree_id, fmt::format("node id {} has {} parents", id, count));

    // Cycles: iterative three-colour DFS over the child graph.
    std::map<std::uint64_t, int> colour;  // 0 new, 1 on stack, 2 done
    bool cyclic = false;
    for (const auto& [start, start_pos] : nodes) {
      if (cyclic || colour[start] != 0) continue;
      std::vector<std::pair<std::uint64_t, int>> stack{{start, 0}};
      colour[start] = 1;
      while (!stack.empty() && !cyclic) {
        auto& [id, next_child] = stack.back();
        const std::size_t pos = nodes.at(id);
        const bool branch = a.nodes_modes[pos] == NodeMode::branch_leq;
        if (!branch || next_child == 2) {
          colour[id] = 2;
          stack.pop_back();
          continue;
        }
        const std::uint64_t child = next_child == 0 ? a.nodes_truenodeids[pos] : a.nodes_falsenodeids[pos];
        ++next_child;
        if (!nodes.count(child)) continue;
        if (colour[child] == 1) {
          add("cycle", pos, tree_id, fmt::format("child reference to node id {} closes a cycle", child));
          cyclic = true;
        } else if (colour[child] == 0) {
          colour[child] = 1;
          stack.emplace_back(child, 0);
        }
      }
    }

    const auto root = find_root(a, nodes);
    if (!root) {
      add("root", {}, tree_id, "tree must have exactly one root node");
    } else if (!cyclic) {
      // Reachability from the single root.
      std::set<std::uint64_t> reached;
      std::vector<std::uint64_t> stack{*root};
      while (!stack.empty()) {
        const std::uint64_t id = stack.back();
        stack.pop_back();
        if (!nodes.count(id) || !reached.insert(id).second) continue;
        const std::size_t pos = nodes.at(id);
        if (a.nodes_modes[pos] == NodeMode::branch_leq) {
          stack.push_back(a.nodes_truenodeids[pos]);
          stack.push_back(a.nodes_falsenodeids[pos]);
        }
      }
      for (const auto& [id, pos] : nodes)
        if (!reached.count(id)) add("unreachable", pos, tree_id, fmt::format("node id {} is not reachable", id));
    }
  }
  return out;
}

std::string serialize(const ModelArtifact& a) {
  const auto& m = a.metadata;
  std::string out;
  out += "{\n";
  out += fmt::format("  \"base_score\": {},\n", number(a.base_score));
  out += fmt::format("  \"format_version\": {},\n", a.format_version);
  out += fmt::format("  \"input_name\": {},\n", json_string(a.input_name));
  out += fmt::format("  \"input_shape\": [{}, {}],\n", a.input_shape[0], a.input_shape[1]);
  out += fmt::format("  \"leaf_weights\": {},\n", reals(a.leaf_weights));
  out += fmt::format(
      "  \"metadata\": {{\"capacity\": {}, \"created_at\": {}, \"inverter_id\": {}, \"target\": {}, "
      "\"training_seed\": {}}},\n",
      number(m.capacity), json_string(m.created_at), m.inverter_id, json_string(to_string(m.target)), m.training_seed);
  out += fmt::format("  \"nodes_falsenodeids\": {},\n", uints(a.nodes_falsenodeids));
  out += fmt::format("  \"nodes_featureids\": {},\n", uints(a.nodes_featureids));
  out += fmt::format("  \"nodes_modes\": {},\n",
                     join(a.nodes_modes, [](NodeMode md) { return json_string(mode_name(md)); }));
  out += fmt::format("  \"nodes_nodeids\": {},\n", uints(a.nodes_nodeids));
  out += fmt::format("  \"nodes_treeids\": {},\n", uints(a.nodes_treeids));
  out += fmt::format("  \"nodes_truenodeids\": {},\n", uints(a.nodes_truenodeids));
  out += fmt::format("  \"nodes_values\": {},\n", reals(a.nodes_values));
  out += fmt::format("  \"op_type\": {},\n", json_string(kOperatorName));
  out += fmt::format("  \"output_name\": {}\n", json_string(a.output_name));
  out += "}\n";
  return out;
}

ModelArtifact parse_artifact(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, fmt::format("syntax error at byte offset {}: {}", e.byte, e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorKind::parse, "byte offset 0: document must be a JSON object");

  if (const auto op = as_string(require(doc, "op_type"), "op_type"); op != kOperatorName)
    schema_error("op_type", fmt::format("expected '{}', got '{}'", kOperatorName, op));

  ModelArtifact a;
  a.format_version = static_cast<unsigned>(as_uint(require(doc, "format_version"), "format_version"));
  a.input_name = as_string(require(doc, "input_name"), "input_name");
  a.output_name = as_string(require(doc, "output_name"), "output_name");
  const auto shape = uint_array(doc, "input_shape");
  if (shape.size() != 2) schema_error("input_shape", "expected two entries");
  a.input_shape = {shape[0], shape[1]};
  a.base_score = as_real(require(doc, "base_score"), "base_score");
  a.nodes_treeids = uint_array(doc, "nodes_treeids");
  a.nodes_nodeids = uint_array(doc, "nodes_nodeids");
  a.nodes_featureids = uint_array(doc, "nodes_featureids");
  a.nodes_values = real_array(doc, "nodes_values");
  a.nodes_truenodeids = uint_array(doc, "nodes_truenodeids");
  a.nodes_falsenodeids = uint_array(doc, "nodes_falsenodeids");
  a.leaf_weights = real_array(doc, "leaf_weights");

  const json& modes = require(doc, "nodes_modes");
  if (!modes.is_array()) schema_error("nodes_modes", "expected an array");
  for (const auto& md : modes) {
    const auto s = as_string(md, "nodes_modes");
    if (s == "BRANCH_LEQ") a.nodes_modes.push_back(NodeMode::branch_leq);
    else if (s == "LEAF") a.nodes_modes.push_back(NodeMode::leaf);
    else schema_error("nodes_modes", fmt::format("unsupported mode '{}'", s));
  }

  const json& meta = require(doc, "metadata");
  if (!meta.is_object()) schema_error("metadata", "expected an object");
  a.metadata.capacity = as_real(require(meta, "capacity"), "metadata.capacity");
  a.metadata.created_at = as_string(require(meta, "created_at"), "metadata.created_at");
  a.metadata.inverter_id = static_cast<int>(as_uint(require(meta, "inverter_id"), "metadata.inverter_id"));
  try {
    a.metadata.target = parse_target(as_string(require(meta, "target"), "metadata.target"));
  } catch (const Error& e) {
    schema_error("metadata.target", e.what());
  }
  a.metadata.training_seed = as_uint(require(meta, "training_seed"), "metadata.training_seed");
  return a;
}

Ensemble to_ensemble(const ModelArtifact& a) {
  const auto violations = validate(a);
  if (!violations.empty()) {
    std::string msg = fmt::format("{} violation(s): ", violations.size());
    for (std::size_t i = 0; i < violations.size() && i < 5; ++i) msg += (i ? "; " : "") + to_string(violations[i]);
    throw Error(ErrorKind::validation, msg);
  }

  // Position of each LEAF entry's weight.
  std::vector<std::size_t> leaf_slot(a.node_count(), 0);
  for (std::size_t i = 0, k = 0; i < a.node_count(); ++i)
    if (a.nodes_modes[i] == NodeMode::leaf) leaf_slot[i] = k++;

  Ensemble e;
  e.base_score = a.base_score;
  e.feature_count = a.input_shape[1];
  e.target = a.metadata.target;
  for (const auto& [tree_id, nodes] : index_trees(a)) {
    RegressionTree tree;
    std::map<std::uint64_t, std::size_t> slot;  // node id -> arena index
    std::deque<std::uint64_t> queue{*find_root(a, nodes)};
    slot[queue.front()] = 0;
    tree.nodes.resize(nodes.size());
    std::size_t next = 1;
    while (!queue.empty()) {
      const std::uint64_t id = queue.front();
      queue.pop_front();
      const std::size_t pos = nodes.at(id);
      if (a.nodes_modes[pos] == NodeMode::leaf) {
        tree.nodes[slot[id]] = Leaf{a.leaf_weights[leaf_slot[pos]]};
        ++tree.leaf_count;
        continue;
      }
      Branch b{a.nodes_featureids[pos], a.nodes_values[pos], next, next + 1};
      slot[a.nodes_truenodeids[pos]] = next++;
      slot[a.nodes_falsenodeids[pos]] = next++;
      queue.push_back(a.nodes_truenodeids[pos]);
      queue.push_back(a.nodes_falsenodeids[pos]);
      tree.nodes[slot[id]] = b;
    }
    e.trees.push_back(std::move(tree));
  }
  return e;
}

ImportedModel import_model(std::string_view text) {
  const ModelArtifact a = parse_artifact(text);
  return {to_ensemble(a), a.metadata};
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_artifact(buf.str());
}

ImportedModel import_model_file(const std::filesystem::path& path) {
  const ModelArtifact a = load_artifact(path);
  return {to_ensemble(a), a.metadata};
}

void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  out << serialize(artifact);
  if (!out) throw Error(ErrorKind::io, fmt::format("write to '{}' failed", path.string()));
}

}  // namespace pvedge
