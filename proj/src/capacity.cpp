#include "dsprof/capacity.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dsprof/error.hpp"

namespace dsprof {

void validate_dims(const DatasetDims& d) {
  if (d.n < 1) throw Error(ErrorKind::configuration, "n must be at least 1");
  const auto& s = d.shares;
  for (double v : {s.train, s.val, s.test}) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::configuration, "split shares must lie in [0, 1]");
  }
  if (!(std::abs(s.train + s.val + s.test - 1.0) <= 1e-9)) {
    throw Error(ErrorKind::configuration, "split shares must sum to 1");
  }
  for (const auto& r : {d.dx, d.dy}) {
    if (r.min < 1 || r.min > r.max) throw Error(ErrorKind::configuration, "dimension bounds must satisfy 1 <= min <= max");
  }
  if ((d.effective_dx && *d.effective_dx < 1) || (d.effective_dy && *d.effective_dy < 1)) {
    throw Error(ErrorKind::configuration, "effective dimensions must be positive");
  }
}

std::uint64_t interpolation_threshold(const DatasetDims& dims) {
  validate_dims(dims);
  const std::uint64_t dy = dims.effective_dy.value_or(dims.dy.max);
  const long double exact = static_cast<long double>(dims.shares.train) * static_cast<long double>(dims.n) *
                            static_cast<long double>(dy);
  return static_cast<std::uint64_t>(std::llround(exact));
}

std::uint64_t smooth_function_threshold(const DatasetDims& dims) {
  return interpolation_threshold(dims) * dims.effective_dx.value_or(dims.dx.max);
}

namespace {

double round_significant(double v, int digits) {
  const int exponent = static_cast<int>(std::floor(std::log10(v)));
  const double scale = std::pow(10.0, digits - 1 - exponent);
  return std::round(v * scale) / scale;
}

std::string render(double v, int digits, const char* unit) {
  const int exponent = static_cast<int>(std::floor(std::log10(v)));
  const int decimals = std::max(0, digits - 1 - exponent);
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
  std::string s(buf.data());
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s + unit;
}

// Mantissas below 10 keep two significant figures. Larger ones keep two when
// that moves the value by at most 0.3%, otherwise three (172M, 90B, 10.5B).
std::string render_mantissa(double m, const char* unit) {
  if (m < 10.0) return render(round_significant(m, 2), 2, unit);
  const double two = round_significant(m, 2);
  if (std::abs(two - m) <= 0.003 * m) return render(two, 2, unit);
  return render(round_significant(m, 3), 3, unit);
}

}  // namespace

std::string format_magnitude(std::uint64_t count) {
  if (count == 0) return "0";
  const double c = static_cast<double>(count);
  if (c < 1e6) {
    const double m = c / 1e6;
    const double two_decimals = std::round(m * 100.0) / 100.0;
    if (two_decimals >= 1.0) return "1M";
    if (two_decimals >= 0.01) return render(two_decimals, 1 + static_cast<int>(two_decimals >= 0.1), "M");
    return render(round_significant(m, 1), 1, "M");
  }
  constexpr std::array<std::pair<double, const char*>, 3> units{{{1e6, "M"}, {1e9, "B"}, {1e12, "T"}}};
  std::size_t u = 0;
  while (u + 1 < units.size() && c >= units[u + 1].first) ++u;
  const double m = c / units[u].first;
  // Rounding up to 1000 moves to the next unit.
  const double shown = m < 10.0 ? round_significant(m, 2) : round_significant(m, 3);
  if (shown >= 1000.0 && u + 1 < units.size()) return render_mantissa(c / units[u + 1].first, units[u + 1].second);
  return render_mantissa(m, units[u].second);
}

CapacityReport capacity(const DatasetDims& dims) {
  CapacityReport r;
  r.ipt = interpolation_threshold(dims);
  r.sft = smooth_function_threshold(dims);
  r.ipt_display = format_magnitude(r.ipt);
  r.sft_display = format_magnitude(r.sft);
  return r;
}

DatasetDims dims_from_schema(const DatasetSchema& schema, std::uint64_t n, const SplitShares& realized) {
  DatasetDims d;
  d.n = n;
  d.shares = schema.shares.value_or(realized);
  d.dx = {min_feature_dimension(schema), max_feature_dimension(schema)};
  d.dy = schema.has_labels() ? DimRange{min_label_dimension(schema), max_label_dimension(schema)} : DimRange{1, 1};
  return d;
}

std::string capacity_header() { return "dataset\tn\ts_tr/s_va/s_te\tD_x\tD_y\tipt\tsft"; }

namespace {

std::string range_text(const DimRange& r) {
  return r.min == r.max ? std::to_string(r.max) : std::to_string(r.min) + "-" + std::to_string(r.max);
}

std::string percent(double share) {
  std::array<char, 8> buf{};
  std::snprintf(buf.data(), buf.size(), "%02ld", std::lround(share * 100.0));
  return buf.data();
}

}  // namespace

std::string capacity_row(const std::string& name, const DatasetDims& dims, const CapacityReport& report) {
  std::ostringstream out;
  out << name << '\t' << dims.n << '\t' << percent(dims.shares.train) << '/' << percent(dims.shares.val) << '/'
      << percent(dims.shares.test) << '\t' << range_text(dims.dx) << '\t' << range_text(dims.dy) << '\t'
      << report.ipt_display << '\t' << report.sft_display;
  return out.str();
}

}  // namespace dsprof
