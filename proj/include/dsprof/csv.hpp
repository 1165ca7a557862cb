#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsprof {

/// Comma-separated reader with RFC 4180 quoting (quoted fields may hold commas,
/// doubled quotes and newlines). The first record is the header.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }

  /// Reads the next record into fields. Returns false at end of file.
  bool next(std::vector<std::string>& fields);

  /// Zero-based index of the record last returned by next(), header excluded.
  std::size_t row_index() const { return row_ - 1; }
  const std::filesystem::path& path() const { return path_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t row_ = 0;
  std::string line_;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void write_row(std::span<const std::string> fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
/// Parses a whole field as a double; false if the text is not a number.
bool parse_double(std::string_view text, double& out);

}  // namespace dsprof
