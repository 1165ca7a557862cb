#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsprof/scores.hpp"
#include "dsprof/storage.hpp"

namespace dsprof {

/// One score over tables of an opened dataset. SImb, IO and outlier scan the
/// listed splits one after the other; STood takes exactly two splits. IO
/// ignores `target` and pairs every feature column with every label column.
ScoreReport score_dataset(const Dataset& dataset, ScoreKind kind, Target target, const std::vector<std::string>& splits,
                          const ScoreConfig& config, std::size_t batch_size = 4096);

struct ProfileConfig {
  ScoreConfig scores;
  std::size_t batch_size = 4096;
};

/// All four scores on every applicable split combination plus the capacity row.
/// Sections: simb (features and labels per split), stood (features and labels
/// of each non-train split against train), io (all splits jointly), outlier
/// (features per split and overall) and capacity. A score that is undefined
/// for the dataset is recorded as {"error": message} instead of a value.
nlohmann::ordered_json profile_dataset(const Dataset& dataset, const ProfileConfig& config);

}  // namespace dsprof
