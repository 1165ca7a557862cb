#include "dsprof/profile.hpp"

#include <algorithm>

#include "dsprof/capacity.hpp"

namespace dsprof {

ScoreReport score_dataset(const Dataset& dataset, ScoreKind kind, Target target, const std::vector<std::string>& splits,
                          const ScoreConfig& config, std::size_t batch_size) {
  if (splits.empty()) throw Error(ErrorKind::configuration, "no splits selected");
  const char* target_name = target == Target::features ? "features" : target == Target::labels ? "labels" : "joint";
  ScoreReport report;
  switch (kind) {
    case ScoreKind::simb:
      report = simb_score(DatasetScan(dataset, splits, target, batch_size), config);
      break;
    case ScoreKind::stood: {
      if (splits.size() != 2) throw Error(ErrorKind::configuration, "stood compares exactly two splits");
      const DatasetScan a(dataset, {splits[0]}, target, batch_size);
      const DatasetScan b(dataset, {splits[1]}, target, batch_size);
      report = stood_score(a, b, config);
      break;
    }
    case ScoreKind::io: {
      const auto features = numeric_column_names(dataset, Target::features).size();
      report = io_score(DatasetScan(dataset, splits, Target::joint, batch_size), features, config);
      return report;
    }
    case ScoreKind::outlier:
      report = outlier_score(DatasetScan(dataset, splits, target, batch_size), config);
      break;
  }
  report.target = target_name;
  return report;
}

namespace {

template <typename Fn>
nlohmann::ordered_json guarded(Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::undefined_score:
      case ErrorKind::unsupported_feature:
      case ErrorKind::empty_input:
      case ErrorKind::configuration:
        return {{"error", e.what()}};
      default:
        throw;
    }
  }
}

}  // namespace

nlohmann::ordered_json profile_dataset(const Dataset& dataset, const ProfileConfig& config) {
  const auto splits = dataset.split_names();
  const bool labels = dataset.schema().has_labels();
  const auto& sc = config.scores;
  const auto batch = config.batch_size;
  auto value = [&](ScoreKind kind, Target target, const std::vector<std::string>& in) {
    return guarded([&] { return nlohmann::ordered_json(score_dataset(dataset, kind, target, in, sc, batch).overall); });
  };

  nlohmann::ordered_json out;
  out["dataset"] = dataset.schema().name;
  nlohmann::ordered_json rows = nlohmann::ordered_json::object();
  for (const auto& s : splits) rows[s] = dataset.row_count(s);
  out["row_counts"] = rows;

  auto& simb = out["simb"];
  for (auto [key, target] : {std::pair{"features", Target::features}, {"labels", Target::labels}}) {
    if (target == Target::labels && !labels) continue;
    simb[key] = nlohmann::ordered_json::object();
    for (const auto& s : splits) simb[key][s] = value(ScoreKind::simb, target, {s});
  }

  auto& stood = out["stood"] = nlohmann::ordered_json::object();
  if (dataset.has_split("train")) {
    for (auto [key, target] : {std::pair{"features", Target::features}, {"labels", Target::labels}}) {
      if (target == Target::labels && !labels) continue;
      stood[key] = nlohmann::ordered_json::object();
      for (const auto& s : splits) {
        if (s != "train") stood[key][s] = value(ScoreKind::stood, target, {"train", s});
      }
    }
  }

  out["io"] = labels ? value(ScoreKind::io, Target::joint, splits)
                     : nlohmann::ordered_json{{"error", "dataset has no labels"}};

  auto& outlier = out["outlier"] = nlohmann::ordered_json::object();
  for (const auto& s : splits) outlier[s] = value(ScoreKind::outlier, Target::features, {s});
  outlier["overall"] = value(ScoreKind::outlier, Target::features, splits);

  auto share = [&](const char* name) {
    return dataset.has_split(name) && dataset.total_rows() > 0
               ? static_cast<double>(dataset.row_count(name)) / static_cast<double>(dataset.total_rows())
               : 0.0;
  };
  SplitShares realized{share("train"), share("val"), share("test")};
  if (!dataset.has_split("train") && !dataset.has_split("val") && !dataset.has_split("test")) realized = {};
  out["capacity"] = guarded([&] {
    const auto dims = dims_from_schema(dataset.schema(), std::max<std::size_t>(dataset.total_rows(), 1), realized);
    const auto cap = capacity(dims);
    return nlohmann::ordered_json{{"n", dims.n},
                                  {"shares", {dims.shares.train, dims.shares.val, dims.shares.test}},
                                  {"dx", {dims.dx.min, dims.dx.max}},
                                  {"dy", {dims.dy.min, dims.dy.max}},
                                  {"ipt", cap.ipt},
                                  {"sft", cap.sft},
                                  {"ipt_display", cap.ipt_display},
                                  {"sft_display", cap.sft_display},
                                  {"row", capacity_row(dataset.schema().name, dims, cap)}};
  });
  return out;
}

}  // namespace dsprof
