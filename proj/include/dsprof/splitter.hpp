#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsprof/storage.hpp"

namespace dsprof {

enum class Combination { union_of, intersection_of };
enum class TemporalMatch { any_component, all_components };

struct SplitSpec {
  double spatial_fraction = 0.0;
  double temporal_fraction = 0.0;
  Combination combination = Combination::union_of;
  TemporalMatch temporal_match = TemporalMatch::any_component;
  double val_ratio = 0.5;  // share of out-of-distribution points assigned to val
  std::uint64_t seed = 0;
  // Sample temporal values in contiguous blocks of this many sorted values (0 or 1: no blocking).
  std::size_t temporal_block = 0;
  // Coordinates always treated as out-of-distribution, on top of the sampled ones.
  std::vector<std::string> forced_spatial;
  std::map<std::string, std::vector<double>> forced_temporal;  // time column -> values
};

/// Throws configuration when fractions or the ratio are outside [0, 1].
void validate_split_spec(const SplitSpec& spec);

/// Sampled coordinate values. Temporal values are kept per time component.
struct CoordinateSample {
  std::vector<std::string> spatial;             // sorted
  std::vector<std::vector<double>> temporal;    // per component, sorted
};

/// Samples floor(fraction * |domain|) values per domain without replacement.
/// Values are ranked by a seeded hash, so a larger fraction with the same seed
/// yields a superset. With blocking, ceil(target / block) contiguous blocks of
/// the sorted domain are taken instead. Throws empty_domain for an empty domain
/// with a nonzero fraction.
CoordinateSample sample_coordinates(const std::vector<std::string>& spatial_domain,
                                    const std::vector<std::vector<double>>& temporal_domains, const SplitSpec& spec);

enum class SplitLabel : std::uint8_t { train, val, test };
std::string_view to_string(SplitLabel label);

struct SplitAssignment {
  SplitSpec spec;
  std::vector<std::string> time_columns;
  std::vector<std::string> space_columns;
  CoordinateSample sampled;
  std::vector<std::string> sources;                 // input tables in scan order
  std::vector<std::vector<SplitLabel>> labels;      // per source, per row
  std::vector<std::string> warnings;

  std::array<std::size_t, 3> counts() const;
  std::size_t size() const;
};

/// Marks a point out-of-distribution when its spatial match and temporal match
/// combine (per spec) to true. Out-of-distribution points go to val or test by a
/// salted hash of their coordinates; the rest are train. Every table of the
/// dataset is assigned; `threads` does not change the result.
SplitAssignment assign_splits(const Dataset& dataset, const SplitSpec& spec, std::size_t threads = 1,
                              std::size_t batch_size = 4096);

struct OodReport {
  std::size_t points = 0;
  std::array<std::size_t, 3> counts{};  // train, val, test
  std::array<double, 3> shares{};
};

/// Re-scans the dataset and checks that no train point satisfies the
/// out-of-distribution predicate. Throws leakage listing offending coordinates.
OodReport verify_ood(const SplitAssignment& assignment, const Dataset& dataset, std::size_t batch_size = 4096);

nlohmann::ordered_json assignment_metadata(const SplitAssignment& assignment);

/// Writes assignment.csv (source,row,split) and assignment.json (metadata).
void write_assignment(const SplitAssignment& assignment, const std::filesystem::path& out_dir);

/// Writes a new dataset under out_dir whose train/val/test tables hold the rows
/// of the assignment; side stores are copied. Returns the manifest path.
std::filesystem::path materialize_splits(const SplitAssignment& assignment, const Dataset& dataset,
                                         const std::filesystem::path& out_dir);

}  // namespace dsprof
