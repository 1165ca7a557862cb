#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsprof/benchmark.hpp"
#include "dsprof/capacity.hpp"
#include "dsprof/parallel.hpp"
#include "dsprof/profile.hpp"
#include "dsprof/splitter.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace dsprof;

namespace {

struct Options {
  std::string manifest;
  std::vector<std::string> splits;
  std::string score = "all";
  std::string target = "features";
  std::size_t bins = Histogram::default_bins;
  std::size_t sample_cap = 100'000;
  std::size_t pair_cap = 10'000;
  std::size_t quantile_cap = 1'000'000;
  std::size_t batch = 4096;
  double spatial_frac = 0.0;
  double temporal_frac = 0.0;
  std::string mode = "union";
  std::string temporal_match = "any";
  double val_ratio = 0.5;
  std::size_t temporal_block = 0;
  bool materialize = false;
  std::uint64_t seed = 0;
  double sample_ratio = 1.0;
  std::size_t max_depth = 20;
  std::size_t trees = 128;
  std::size_t max_features = 0;
  bool no_bootstrap = false;
  std::string featurizer = "auto";
  std::string task = "auto";
  std::size_t threads = 1;
  std::string out;
  // capacity without a manifest
  std::string name = "dataset";
  std::uint64_t n = 0;
  std::string shares;
  std::string dx;
  std::string dy;
};

ScoreConfig score_config(const Options& o) {
  ScoreConfig c;
  c.bins = o.bins;
  c.io_row_cap = o.sample_cap;
  c.io_pair_cap = o.pair_cap;
  c.quantile_cap = o.quantile_cap;
  c.seed = o.seed;
  c.threads = o.threads;
  return c;
}

ordered_json envelope(const std::string& command, const Options& o, ordered_json config, ordered_json result) {
  ordered_json j;
  j["tool"] = "dsprof";
  j["version"] = DSPROF_VERSION;
  j["command"] = command;
  j["seed"] = o.seed;
  if (!o.manifest.empty()) j["manifest"] = o.manifest;
  j["config"] = std::move(config);
  j["result"] = std::move(result);
  return j;
}

ordered_json score_config_json(const Options& o) {
  return {{"bins", o.bins},         {"sample_cap", o.sample_cap}, {"pair_cap", o.pair_cap},
          {"quantile_cap", o.quantile_cap}, {"batch", o.batch},  {"seed", o.seed}};
}

void emit(const Options& o, const std::string& file, const ordered_json& j) {
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + o.out + ": " + ec.message());
  const fs::path path = fs::path(o.out) / file;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

std::string value_text(const ordered_json& v) {
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_object() && v.contains("error")) return "n/a";
  return v.dump();
}

void cmd_profile(const Options& o) {
  const auto dataset = Dataset::open(o.manifest);
  ProfileConfig pc{score_config(o), o.batch};
  const auto report = profile_dataset(dataset, pc);
  emit(o, "profile.json", envelope("profile", o, score_config_json(o), report));
  if (o.out.empty()) return;
  std::cout << "section\ttarget\tsplit\tvalue\n";
  for (const char* section : {"simb", "stood"}) {
    for (const auto& [target, per_split] : report[section].items()) {
      for (const auto& [split, v] : per_split.items()) {
        std::cout << section << '\t' << target << '\t' << split << '\t' << value_text(v) << '\n';
      }
    }
  }
  std::cout << "io\tjoint\tall\t" << value_text(report["io"]) << '\n';
  for (const auto& [split, v] : report["outlier"].items()) {
    std::cout << "outlier\tfeatures\t" << split << '\t' << value_text(v) << '\n';
  }
  if (report["capacity"].contains("row")) {
    std::cout << capacity_header() << '\n' << report["capacity"]["row"].get<std::string>() << '\n';
  }
}

void cmd_score(const Options& o) {
  const auto dataset = Dataset::open(o.manifest);
  const auto splits = o.splits.empty() ? dataset.split_names() : o.splits;
  Target target = Target::features;
  if (o.target == "labels") target = Target::labels;
  std::vector<ScoreKind> kinds;
  if (o.score == "all") {
    kinds = {ScoreKind::simb, ScoreKind::stood, ScoreKind::io, ScoreKind::outlier};
  } else {
    kinds = {parse_score_kind(o.score)};
  }
  const auto cfg = score_config(o);
  ordered_json reports = ordered_json::array();
  std::vector<std::string> lines;
  auto record = [&](const ScoreReport& r) {
    reports.push_back(to_json(r));
    std::string joined;
    for (const auto& s : r.splits) joined += (joined.empty() ? "" : ",") + s;
    lines.push_back(std::string(to_string(r.kind)) + '\t' + r.target + '\t' + joined + '\t' + format_double(r.overall));
  };
  for (auto kind : kinds) {
    if (kind == ScoreKind::stood) {
      if (splits.size() == 2) {
        record(score_dataset(dataset, kind, target, splits, cfg, o.batch));
      } else if (dataset.has_split("train")) {
        for (const auto& s : splits) {
          if (s != "train") record(score_dataset(dataset, kind, target, {"train", s}, cfg, o.batch));
        }
      } else if (o.score != "all") {
        throw Error(ErrorKind::configuration, "stood needs --splits a,b or a train split");
      }
    } else if (kind == ScoreKind::io && !dataset.schema().has_labels()) {
      if (o.score != "all") throw Error(ErrorKind::schema, "io needs labels");
    } else {
      record(score_dataset(dataset, kind, target, splits, cfg, o.batch));
    }
  }
  emit(o, "scores.json", envelope("score", o, score_config_json(o), reports));
  if (o.out.empty()) return;
  std::cout << "score\ttarget\tsplits\tvalue\n";
  for (const auto& l : lines) std::cout << l << '\n';
}

DimRange parse_range(const std::string& text, const char* flag) {
  try {
    const auto dash = text.find_first_of("-:");
    if (dash == std::string::npos) return DimRange::exactly(std::stoull(text));
    return {std::stoull(text.substr(0, dash)), std::stoull(text.substr(dash + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorKind::configuration, std::string(flag) + " expects d or min-max, got '" + text + "'");
  }
}

void cmd_capacity(const Options& o) {
  DatasetDims dims;
  std::string name = o.name;
  if (!o.manifest.empty()) {
    const auto dataset = Dataset::open(o.manifest);
    name = dataset.schema().name;
    auto share = [&](const char* s) {
      return dataset.has_split(s) && dataset.total_rows() > 0
                 ? static_cast<double>(dataset.row_count(s)) / static_cast<double>(dataset.total_rows())
                 : 0.0;
    };
    dims = dims_from_schema(dataset.schema(), dataset.total_rows(), {share("train"), share("val"), share("test")});
  } else {
    if (o.n == 0 || o.shares.empty() || o.dx.empty() || o.dy.empty()) {
      throw Error(ErrorKind::configuration, "capacity needs --manifest or all of --n, --shares, --dx, --dy");
    }
    std::vector<double> s;
    std::stringstream in(o.shares);
    for (std::string part; std::getline(in, part, ',');) {
      double v = 0.0;
      if (!parse_double(part, v)) throw Error(ErrorKind::configuration, "--shares expects three numbers, got '" + o.shares + "'");
      s.push_back(v);
    }
    if (s.size() != 3) throw Error(ErrorKind::configuration, "--shares expects train,val,test");
    dims.n = o.n;
    dims.shares = {s[0], s[1], s[2]};
    dims.dx = parse_range(o.dx, "--dx");
    dims.dy = parse_range(o.dy, "--dy");
  }
  const auto cap = capacity(dims);
  const ordered_json config{{"n", dims.n},
                            {"shares", {dims.shares.train, dims.shares.val, dims.shares.test}},
                            {"dx", {dims.dx.min, dims.dx.max}},
                            {"dy", {dims.dy.min, dims.dy.max}}};
  const ordered_json result{{"dataset", name},
                            {"ipt", cap.ipt},
                            {"sft", cap.sft},
                            {"ipt_display", cap.ipt_display},
                            {"sft_display", cap.sft_display}};
  if (!o.out.empty()) emit(o, "capacity.json", envelope("capacity", o, config, result));
  std::cout << capacity_header() << '\n' << capacity_row(name, dims, cap) << '\n';
}

void cmd_split(const Options& o) {
  if (o.out.empty()) throw Error(ErrorKind::configuration, "split needs --out");
  const auto dataset = Dataset::open(o.manifest);
  SplitSpec spec;
  spec.spatial_fraction = o.spatial_frac;
  spec.temporal_fraction = o.temporal_frac;
  spec.combination = o.mode == "intersection" ? Combination::intersection_of : Combination::union_of;
  spec.temporal_match = o.temporal_match == "all" ? TemporalMatch::all_components : TemporalMatch::any_component;
  spec.val_ratio = o.val_ratio;
  spec.seed = o.seed;
  spec.temporal_block = o.temporal_block;
  const auto assignment = assign_splits(dataset, spec, o.threads, o.batch);
  const auto report = verify_ood(assignment, dataset, o.batch);
  write_assignment(assignment, o.out);
  if (o.materialize) materialize_splits(assignment, dataset, fs::path(o.out) / "dataset");
  for (const auto& w : assignment.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "split\tpoints\tshare\n";
  for (std::size_t i = 0; i < 3; ++i) {
    std::cout << to_string(static_cast<SplitLabel>(i)) << '\t' << report.counts[i] << '\t'
              << format_double(report.shares[i]) << '\n';
  }
}

void cmd_benchmark(const Options& o) {
  const auto dataset = Dataset::open(o.manifest);
  BenchmarkConfig bc;
  bc.forest.trees = o.trees;
  bc.forest.max_depth = o.max_depth;
  bc.forest.sample_ratio = o.sample_ratio;
  bc.forest.seed = o.seed;
  bc.forest.threads = o.threads;
  bc.forest.bootstrap = !o.no_bootstrap;
  bc.forest.max_features = o.max_features;
  bc.featurizer = o.featurizer == "flatten" ? FeaturizerKind::flatten : FeaturizerKind::automatic;
  if (o.task == "regression") bc.task = TaskKind::regression;
  if (o.task == "classification") bc.task = TaskKind::classification;
  const auto result = run_benchmark(dataset, bc);
  auto json = to_json(result);
  const auto config = json["config"];
  if (!o.out.empty()) emit(o, "benchmark.json", envelope("benchmark", o, config, json));
  std::cout << benchmark_header() << '\n' << benchmark_row(result) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Profile spatio-temporal ML datasets: scores, capacity, out-of-distribution splits, baselines"};
  app.set_version_flag("--version", std::string(DSPROF_VERSION));
  app.require_subcommand(1);
  Options o;
  o.threads = default_thread_count();

  auto add_common = [&](CLI::App* sub, bool manifest_required) {
    auto* m = sub->add_option("--manifest", o.manifest, "Dataset manifest (JSON)");
    if (manifest_required) m->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (default: DSPROF_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "Output directory (default: JSON to standard output)");
  };
  auto add_scoring = [&](CLI::App* sub) {
    sub->add_option("--bins", o.bins, "Histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--sample-cap", o.sample_cap, "Row sample cap for the IO score")->capture_default_str();
    sub->add_option("--pair-cap", o.pair_cap, "Feature-label pair cap for the IO score")->capture_default_str();
    sub->add_option("--quantile-cap", o.quantile_cap, "Reservoir size for quartile estimates")->capture_default_str();
    sub->add_option("--batch", o.batch, "Rows per streamed batch")->capture_default_str()->check(CLI::PositiveNumber);
  };

  auto* profile = app.add_subcommand("profile", "All scores on every split combination plus capacity");
  add_common(profile, true);
  add_scoring(profile);

  auto* score = app.add_subcommand("score", "One or all dataset scores");
  add_common(score, true);
  add_scoring(score);
  score->add_option("--score", o.score, "simb|stood|io|outlier|all")
      ->capture_default_str()
      ->check(CLI::IsMember({"simb", "stood", "io", "outlier", "all"}));
  score->add_option("--splits", o.splits, "Splits to score (comma separated)")->delimiter(',');
  score->add_option("--target", o.target, "features|labels")
      ->capture_default_str()
      ->check(CLI::IsMember({"features", "labels"}));

  auto* cap = app.add_subcommand("capacity", "Interpolation and smooth-function thresholds");
  add_common(cap, false);
  cap->add_option("--name", o.name, "Dataset name when no manifest is given");
  cap->add_option("--n", o.n, "Number of data points");
  cap->add_option("--shares", o.shares, "train,val,test shares");
  cap->add_option("--dx", o.dx, "Feature dimension: d or min-max");
  cap->add_option("--dy", o.dy, "Label dimension: d or min-max");

  auto* split = app.add_subcommand("split", "Out-of-distribution train/val/test assignment");
  add_common(split, true);
  split->add_option("--spatial-frac", o.spatial_frac, "Share of spatial coordinates sampled")->check(CLI::Range(0.0, 1.0));
  split->add_option("--temporal-frac", o.temporal_frac, "Share of time values sampled")->check(CLI::Range(0.0, 1.0));
  split->add_option("--mode", o.mode, "union|intersection")
      ->capture_default_str()
      ->check(CLI::IsMember({"union", "intersection"}));
  split->add_option("--temporal-match", o.temporal_match, "any|all time components")
      ->capture_default_str()
      ->check(CLI::IsMember({"any", "all"}));
  split->add_option("--val-ratio", o.val_ratio, "Share of held-out points sent to val")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--temporal-block", o.temporal_block, "Sample time values in contiguous blocks");
  split->add_option("--batch", o.batch, "Rows per streamed batch")->capture_default_str()->check(CLI::PositiveNumber);
  split->add_flag("--materialize", o.materialize, "Also write the split dataset under OUT/dataset");

  auto* bench = app.add_subcommand("benchmark", "Random Forest baseline");
  add_common(bench, true);
  bench->add_option("--sample-ratio", o.sample_ratio, "Share of training rows used")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--max-depth", o.max_depth, "Tree depth")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--trees", o.trees, "Tree count")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--max-features", o.max_features, "Features tried per split (0: sqrt(D) or D/3)");
  bench->add_flag("--no-bootstrap", o.no_bootstrap, "Fit every tree on all rows");
  bench->add_option("--featurizer", o.featurizer, "auto|flatten")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "flatten"}));
  bench->add_option("--task", o.task, "auto|regression|classification")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "regression", "classification"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return 2;
  }

  try {
    if (*profile) cmd_profile(o);
    if (*score) cmd_score(o);
    if (*cap) cmd_capacity(o);
    if (*split) cmd_split(o);
    if (*bench) cmd_benchmark(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::unsupported_task) std::cerr << "usage: benchmark needs fixed-length labels\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
