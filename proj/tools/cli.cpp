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

#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "pvedge/dataset.hpp"
#include "pvedge/edge_runtime.hpp"
#include "pvedge/gbdt.hpp"
#include "pvedge/linear.hpp"
#include "pvedge/metrics.hpp"
#include "pvedge/model_format.hpp"

namespace pvedge::cli {
namespace {

using json = nlohmann::json;

// Shared by every subcommand.
struct GlobalOptions {
  std::uint64_t seed = 42;
  std::string records_path;
};

class RecordSink {
 public:
  RecordSink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorKind::io, fmt::format("cannot write records to '{}'", path));
      out_ = &file_;
    }
  }
  void emit(const json& record) { *out_ << record.dump() << '\n'; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

enum class RowSelection { test, all };

RowSelection parse_rows(const std::string& s) {
  if (s == "test") return RowSelection::test;
  if (s == "all") return RowSelection::all;
  throw Error(ErrorKind::argument, fmt::format("--rows must be 'test' or 'all', got '{}'", s));
}

std::vector<SampleRecord> select_rows(const InverterDataset& cleaned, RowSelection rows, double fraction,
                                      std::uint64_t seed) {
  if (rows == RowSelection::all) return cleaned.records;
  return split(cleaned, fraction, seed).test;
}

std::string default_created_at() {
  // Reproducible builds convention; otherwise a fixed epoch keeps artifacts
  // byte-identical across runs.
  std::int64_t epoch = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    const std::string_view s(env);
    std::from_chars(s.data(), s.data() + s.size(), epoch);
  }
  return format_timestamp(std::chrono::sys_seconds{std::chrono::seconds{epoch}}, 0);
}

json metrics_record(std::string_view model, const ArtifactMetadata& meta, const MetricReport& r, std::uint64_t seed) {
  return {{"record", "metrics"},     {"model", model},       {"inverter_id", meta.inverter_id},
          {"target", to_string(meta.target)}, {"r_squared", r.r_squared}, {"mape_pct", r.mape_pct},
          {"rmse", r.rmse},          {"n", r.n},             {"seed", seed}};
}

void print_metrics(std::ostream& out, std::string_view title, const MetricReport& r) {
  fmt::print(out, "[{}]\n{}", title, to_text(r));
}

std::vector<double> predict_rows(const Ensemble& e, const std::vector<SampleRecord>& rows) {
  return predict_batch(e, feature_rows(rows));
}

// --- synth ---------------------------------------------------------------

struct SynthArgs {
  unsigned days = 30;
  double capacity = 10.0;
  int inverter_id = 1;
  std::string out;
};

int cmd_synth(const SynthArgs& a, const GlobalOptions& g, std::ostream& out) {
  if (a.days < 1) throw Error(ErrorKind::argument, "--days must be >= 1");
  SynthOptions opt;
  opt.n_days = a.days;
  opt.capacity = a.capacity;
  opt.seed = g.seed;
  opt.inverter_id = a.inverter_id;
  const auto ds = synth_generate(opt);
  save_csv(ds, a.out);
  fmt::print(out, "wrote {} rows to {}\nseed = {}\n", ds.records.size(), a.out, g.seed);
  return 0;
}

// --- train / eval --------------------------------------------------------

struct TrainArgs {
  std::string data;
  double capacity = 10.0;
  std::string target = "active";
  int inverter_id = 1;
  std::string model_out;
  double train_fraction = 0.8;
  Hyperparams params;
  std::string baseline;
  bool mape_literal = false;
  std::string created_at;
};

int cmd_train(TrainArgs a, const GlobalOptions& g, std::ostream& out) {
  const Target target = parse_target(a.target);
  if (!a.baseline.empty() && a.baseline != "ols")
    throw Error(ErrorKind::argument, fmt::format("--baseline supports only 'ols', got '{}'", a.baseline));
  a.params.seed = g.seed;
  a.params.validate();

  const auto cleaned = clean(load_csv(a.data, a.capacity, a.inverter_id));
  const auto parts = split(cleaned, a.train_fraction, g.seed);
  const Ensemble model = train(parts, target, a.params);

  ArtifactMetadata meta;
  meta.inverter_id = a.inverter_id;
  meta.target = target;
  meta.capacity = a.capacity;
  meta.training_seed = g.seed;
  meta.created_at = a.created_at.empty() ? default_created_at() : a.created_at;
  save_artifact(export_model(model, meta), a.model_out);

  fmt::print(out, "inverter = {}\ntarget = {}\nseed = {}\nrows = {} (train {}, test {})\nmodel = {}\n",
             a.inverter_id, to_string(target), g.seed, cleaned.records.size(), parts.train.size(), parts.test.size(),
             a.model_out);
  if (parts.test.size() < 2) throw Error(ErrorKind::argument, "test split has fewer than 2 rows; cannot evaluate");

  RecordSink sink(g.records_path, out);
  const auto y = labels(parts.test, target);
  const auto report = evaluate(y, predict_rows(model, parts.test), a.capacity, a.mape_literal);
  print_metrics(out, "gbdt", report);
  std::vector<json> records{metrics_record("gbdt", meta, report, g.seed)};
  if (a.baseline == "ols") {
    const auto lr = fit_ols(feature_rows(parts.train), labels(parts.train, target));
    std::vector<double> yhat;
    for (const auto& r : parts.test) yhat.push_back(predict_linear(lr, r.features));
    const auto lr_report = evaluate(y, yhat, a.capacity, a.mape_literal);
    print_metrics(out, "ols", lr_report);
    records.push_back(metrics_record("ols", meta, lr_report, g.seed));
  }
  for (const auto& r : records) sink.emit(r);
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string rows = "test";
  double train_fraction = 0.8;
  bool mape_literal = false;
};

int cmd_eval(const EvalArgs& a, const GlobalOptions& g, std::ostream& out) {
  const auto imported = import_model_file(a.model);
  const auto& meta = imported.metadata;
  const auto cleaned = clean(load_csv(a.data, meta.capacity, meta.inverter_id));
  const auto rows = select_rows(cleaned, parse_rows(a.rows), a.train_fraction, g.seed);
  const auto report =
      evaluate(labels(rows, meta.target), predict_rows(imported.ensemble, rows), meta.capacity, a.mape_literal);
  fmt::print(out, "inverter = {}\ntarget = {}\nseed = {}\nrows = {} ({})\n", meta.inverter_id, to_string(meta.target),
             g.seed, rows.size(), a.rows);
  print_metrics(out, "gbdt", report);
  RecordSink(g.records_path, out).emit(metrics_record("gbdt", meta, report, g.seed));
  return 0;
}

// --- infer ---------------------------------------------------------------

std::vector<double> parse_numeric_row(std::string_view line, std::size_t line_no) {
  std::vector<double> values;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
    double v;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
      throw Error(ErrorKind::parse, fmt::format("line {}: cannot parse '{}'", line_no, cell));
    values.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return values;
}

// Either the dataset CSV schema (features taken from it) or bare rows of
// numbers, optionally preceded by one header line.
std::vector<std::vector<double>> read_inputs(const std::string& path, const ArtifactMetadata& meta) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
  std::string first;
  std::getline(in, first);
  std::vector<std::vector<double>> rows;
  if (first.rfind("timestamp", 0) == 0) {
    const auto ds = load_csv(path, meta.capacity, meta.inverter_id);
    for (const auto& r : ds.records) rows.emplace_back(r.features.begin(), r.features.end());
    return rows;
  }
  std::size_t line_no = 1;
  const auto is_numeric = [](std::string_view s) {
    return !s.empty() && (std::isdigit(static_cast<unsigned char>(s.front())) || s.front() == '-' ||
                          s.front() == '+' || s.front() == '.');
  };
  if (is_numeric(first)) rows.push_back(parse_numeric_row(first, line_no));
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parse_numeric_row(line, line_no));
  }
  return rows;
}

struct InferArgs {
  std::string model;
  std::string input;
  std::string csv;
  std::string precision = "f64";
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  if (a.precision != "f64" && a.precision != "f32")
    throw Error(ErrorKind::argument, fmt::format("--precision must be f64 or f32, got '{}'", a.precision));
  if (a.input.empty() == a.csv.empty()) throw Error(ErrorKind::argument, "give exactly one of --input or --csv");
  const auto artifact = load_artifact(a.model);
  const Ensemble ensemble = to_ensemble(artifact);

  std::vector<std::vector<double>> rows;
  if (!a.input.empty()) rows.push_back(parse_numeric_row(a.input, 1));
  else rows = read_inputs(a.csv, artifact.metadata);

  if (a.precision == "f64") {
    for (const auto& r : rows) fmt::print(out, "{:.17g}\n", predict(ensemble, r));
  } else {
    const F32Model m = lower_to_f32(ensemble);
    for (const auto& r : rows) {
      std::vector<float> x(r.begin(), r.end());
      fmt::print(out, "{:.9g}\n", infer_f32(m, x));
    }
  }
  return 0;
}

// --- export --------------------------------------------------------------

struct ExportArgs {
  std::string model;
  std::string out;
  bool check_only = false;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const auto artifact = load_artifact(a.model);
  const auto violations = validate(artifact);
  if (!violations.empty()) {
    for (const auto& v : violations) fmt::print(out, "violation: {}\n", to_string(v));
    throw Error(ErrorKind::validation, fmt::format("{} violation(s) in '{}'", violations.size(), a.model));
  }
  fmt::print(out, "ok: {} trees, {} nodes\n", to_ensemble(artifact).trees.size(), artifact.node_count());
  if (a.check_only) return 0;
  if (a.out.empty()) throw Error(ErrorKind::argument, "--out is required unless --check is given");
  // Re-flattening canonicalizes node order and ids.
  save_artifact(export_model(to_ensemble(artifact), artifact.metadata), a.out);
  fmt::print(out, "wrote {}\n", a.out);
  return 0;
}

// --- parity / bench ------------------------------------------------------

struct FleetArgs {
  std::vector<std::string> models;
  std::vector<std::string> data;
  std::string rows = "test";
  double train_fraction = 0.8;
  std::string reference = "f64";
  unsigned reps = 10;
};

struct LoadedModel {
  ArtifactMetadata meta;
  Ensemble ensemble;
  F32Model f32;
  std::vector<SampleRecord> rows;
};

std::vector<LoadedModel> load_fleet(const FleetArgs& a, std::uint64_t seed) {
  if (a.models.empty()) throw Error(ErrorKind::argument, "at least one --model is required");
  if (a.data.size() != 1 && a.data.size() != a.models.size())
    throw Error(ErrorKind::argument, "give one --data for all models or one per --model");
  const auto selection = parse_rows(a.rows);
  std::vector<LoadedModel> fleet;
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    const auto artifact = load_artifact(a.models[i]);
    LoadedModel m;
    m.meta = artifact.metadata;
    m.ensemble = to_ensemble(artifact);
    m.f32 = lower_to_f32(m.ensemble);
    const auto& csv = a.data.size() == 1 ? a.data.front() : a.data[i];
    m.rows = select_rows(clean(load_csv(csv, m.meta.capacity, m.meta.inverter_id)), selection, a.train_fraction, seed);
    fleet.push_back(std::move(m));
  }
  return fleet;
}

int cmd_parity(const FleetArgs& a, const GlobalOptions& g, std::ostream& out) {
  if (a.reference != "f64" && a.reference != "f32")
    throw Error(ErrorKind::argument, fmt::format("--reference must be f64 or f32, got '{}'", a.reference));
  const auto fleet = load_fleet(a, g.seed);
  std::vector<json> records;
  fmt::print(out, "PREDICTION RESULTS COMPARISON: {} VS. F32 (seed = {}, rows = {})\n", a.reference == "f64" ? "F64" : "F32",
             g.seed, a.rows);
  fmt::print(out, "{:<14}{:<10}{:>12}{:>22}{:>16}{:>8}\n", "Inverter No.", "Target", "MAPE", "RMSE", "Max |diff|", "n");
  for (const auto& m : fleet) {
    std::vector<double> reference, edge;
    for (const auto& r : m.rows) {
      const F32Input x = to_f32_input(r.features);
      edge.push_back(infer_f32(m.f32, x));
      reference.push_back(a.reference == "f64" ? predict(m.ensemble, r.features) : infer_f32(m.f32, x));
    }
    const auto p = parity_report(reference, edge);
    const double agree = display_agreement(reference, edge);
    fmt::print(out, "{:<14}{:<10}{:>11.4f}%{:>22.15f}{:>16.3e}{:>8}\n", m.meta.inverter_id, to_string(m.meta.target),
               p.mape_pct, p.rmse, p.max_abs_diff, p.n);
    records.push_back({{"record", "parity"},
                       {"inverter_id", m.meta.inverter_id},
                       {"target", to_string(m.meta.target)},
                       {"reference", a.reference},
                       {"mape_pct", p.mape_pct},
                       {"rmse", p.rmse},
                       {"max_abs_diff", p.max_abs_diff},
                       {"n", p.n},
                       {"display_agreement_6sig", agree}});
  }
  RecordSink sink(g.records_path, out);
  for (const auto& r : records) sink.emit(r);
  return 0;
}

int cmd_bench(const FleetArgs& a, const GlobalOptions& g, std::ostream& out) {
  if (a.reps < 1) throw Error(ErrorKind::argument, "--reps must be >= 1");
  const auto fleet = load_fleet(a, g.seed);
  std::vector<json> records;
  fmt::print(out, "SINGLE-INPUT F32 INFERENCE TIME (reps = {})\n", a.reps);
  fmt::print(out, "{:<14}{:<10}{:>8}{:>14}{:>14}{:>14}\n", "Inverter No.", "Target", "inputs", "mean", "median", "p99");
  for (const auto& m : fleet) {
    std::vector<F32Input> inputs;
    for (const auto& r : m.rows) inputs.push_back(to_f32_input(r.features));
    const auto s = latency_bench(m.f32, inputs, a.reps);
    fmt::print(out, "{:<14}{:<10}{:>8}{:>12.4g}ms{:>12.4g}ms{:>12.4g}ms\n", m.meta.inverter_id,
               to_string(m.meta.target), s.n_inputs, s.mean_us / 1000.0, s.median_us / 1000.0, s.p99_us / 1000.0);
    records.push_back({{"record", "latency"},
                       {"inverter_id", m.meta.inverter_id},
                       {"target", to_string(m.meta.target)},
                       {"n_inputs", s.n_inputs},
                       {"repetitions", s.repetitions},
                       {"mean_us", s.mean_us},
                       {"median_us", s.median_us},
                       {"p99_us", s.p99_us},
                       {"min_us", s.min_us},
                       {"max_us", s.max_us}});
  }
  RecordSink sink(g.records_path, out);
  for (const auto& r : records) sink.emit(r);
  return 0;
}

void add_fleet_options(CLI::App* sub, FleetArgs& a) {
  sub->add_option("--model", a.models, "Model artifact (repeatable)")->required();
  sub->add_option("--data", a.data, "Dataset CSV: one for all models or one per model")->required();
  sub->add_option("--rows", a.rows, "Rows to use: test (held-out split) or all")->capture_default_str();
  sub->add_option("--train-fraction", a.train_fraction, "Split fraction used to recover the test rows")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boosted-tree PV inverter setpoint models: train, export, run on the float32 edge path", "pvedge"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a key=value file (command-line flags win)");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for synthesis and the train/test split")->capture_default_str();
  app.add_option("--records", global.records_path, "Write JSON-lines records here instead of stdout");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic inverter CSV");
  synth_cmd->add_option("--days", synth.days, "Days of 15-minute data")->capture_default_str();
  synth_cmd->add_option("--capacity", synth.capacity, "Inverter capacity, kW")->capture_default_str();
  synth_cmd->add_option("--inverter-id", synth.inverter_id)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output CSV path")->required();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Clean, split, train and export a model");
  train_cmd->add_option("--data", train_args.data, "Input CSV")->required();
  train_cmd->add_option("--capacity", train_args.capacity, "Inverter capacity, kW")->capture_default_str();
  train_cmd->add_option("--target", train_args.target, "active or reactive")->capture_default_str();
  train_cmd->add_option("--inverter-id", train_args.inverter_id)->capture_default_str();
  train_cmd->add_option("--model-out", train_args.model_out, "Artifact output path")->required();
  train_cmd->add_option("--train-fraction", train_args.train_fraction)->capture_default_str();
  train_cmd->add_option("--trees", train_args.params.num_trees)->capture_default_str();
  train_cmd->add_option("--max-depth", train_args.params.max_depth)->capture_default_str();
  train_cmd->add_option("--learning-rate", train_args.params.learning_rate)->capture_default_str();
  train_cmd->add_option("--lambda", train_args.params.lambda)->capture_default_str();
  train_cmd->add_option("--gamma", train_args.params.gamma)->capture_default_str();
  train_cmd->add_option("--min-child-weight", train_args.params.min_child_weight)->capture_default_str();
  train_cmd->add_option("--baseline", train_args.baseline, "Also fit a baseline (ols)");
  train_cmd->add_flag("--mape-literal", train_args.mape_literal, "Report the literal capacity-MAPE formula");
  train_cmd->add_option("--created-at", train_args.created_at, "Artifact created_at (default: SOURCE_DATE_EPOCH)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model artifact on a CSV");
  eval_cmd->add_option("--model", eval_args.model)->required();
  eval_cmd->add_option("--data", eval_args.data)->required();
  eval_cmd->add_option("--rows", eval_args.rows, "test or all")->capture_default_str();
  eval_cmd->add_option("--train-fraction", eval_args.train_fraction)->capture_default_str();
  eval_cmd->add_flag("--mape-literal", eval_args.mape_literal);

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "Run a model on inputs");
  infer_cmd->add_option("--model", infer_args.model)->required();
  infer_cmd->add_option("--input", infer_args.input, "12 comma-separated values");
  infer_cmd->add_option("--csv", infer_args.csv, "File of inputs, one row each");
  infer_cmd->add_option("--precision", infer_args.precision, "f64 or f32")->capture_default_str();

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export", "Validate an artifact and rewrite it canonically");
  export_cmd->add_option("--model", export_args.model)->required();
  export_cmd->add_option("--out", export_args.out);
  export_cmd->add_flag("--check", export_args.check_only, "Validate only");

  FleetArgs parity_args;
  auto* parity_cmd = app.add_subcommand("parity", "Compare float64 and float32 predictions");
  add_fleet_options(parity_cmd, parity_args);
  parity_cmd->add_option("--reference", parity_args.reference, "Reference path: f64 or f32")->capture_default_str();

  FleetArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Time single-input float32 inference");
  add_fleet_options(bench_cmd, bench_args);
  bench_cmd->add_option("--reps", bench_args.reps, "Timed sweeps over the inputs")->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error[usage]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, global, out);
    if (*train_cmd) return cmd_train(train_args, global, out);
    if (*eval_cmd) return cmd_eval(eval_args, global, out);
    if (*infer_cmd) return cmd_infer(infer_args, out);
    if (*export_cmd) return cmd_export(export_args, out);
    if (*parity_cmd) return cmd_parity(parity_args, global, out);
    if (*bench_cmd) return cmd_bench(bench_args, global, out);
  } catch (const Error& e) {
    err << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace pvedge::cli
