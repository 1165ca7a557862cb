#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dsprof/data_model.hpp"

namespace dsprof {

struct DimRange {
  std::uint64_t min = 1;
  std::uint64_t max = 1;
  static DimRange exactly(std::uint64_t d) { return {d, d}; }
};

struct DatasetDims {
  std::uint64_t n = 1;
  SplitShares shares;
  DimRange dx;
  DimRange dy;
  // Replace the max-dimension rule for variable-length data when set.
  std::optional<std::uint64_t> effective_dx;
  std::optional<std::uint64_t> effective_dy;
};

struct CapacityReport {
  std::uint64_t ipt = 0;
  std::uint64_t sft = 0;
  std::string ipt_display;
  std::string sft_display;
};

/// Throws configuration when n, shares or dimension bounds are invalid.
void validate_dims(const DatasetDims& dims);

/// round(s_tr * n * D_y), with D_y the largest label dimension.
std::uint64_t interpolation_threshold(const DatasetDims& dims);

/// ipt * D_x, with D_x the largest feature dimension.
std::uint64_t smooth_function_threshold(const DatasetDims& dims);

/// Parameter count in M/B/T units, e.g. 172M, 90B, 1.7T, 0.02M.
std::string format_magnitude(std::uint64_t count);

CapacityReport capacity(const DatasetDims& dims);

/// Dimensions of an opened dataset: n and shares from the main tables (declared
/// shares win when present), D_x and D_y from the schema.
DatasetDims dims_from_schema(const DatasetSchema& schema, std::uint64_t n, const SplitShares& realized);

/// Header and one row of the tabular capacity listing.
std::string capacity_header();
std::string capacity_row(const std::string& name, const DatasetDims& dims, const CapacityReport& report);

}  // namespace dsprof
