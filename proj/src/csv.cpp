#include "dsprof/csv.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "dsprof/error.hpp"

namespace dsprof {

CsvReader::CsvReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorKind::not_found, path.string());
  if (!read_record(header_)) throw Error(ErrorKind::parse, path.string() + ": missing header row");
}

bool CsvReader::next(std::vector<std::string>& fields) {
  if (!read_record(fields)) return false;
  ++row_;
  return true;
}

bool CsvReader::read_record(std::vector<std::string>& fields) {
  fields.clear();
  if (!std::getline(in_, line_)) return false;
  std::string field;
  bool quoted = false;
  while (true) {
    for (std::size_t i = 0; i < line_.size(); ++i) {
      const char c = line_[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line_.size() && line_[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r' && i + 1 == line_.size()) {
        // CRLF line ending
      } else {
        field.push_back(c);
      }
    }
    if (!quoted) break;
    // Newline inside a quoted field.
    field.push_back('\n');
    if (!std::getline(in_, line_)) {
      throw Error(ErrorKind::parse, path_.string() + ": unterminated quoted field at row " + std::to_string(row_));
    }
  }
  fields.push_back(std::move(field));
  return true;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
  if (!out_) throw Error(ErrorKind::io, "cannot write " + path.string());
}

void CsvWriter::write_row(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.put(',');
    out_ << csv_escape(fields[i]);
  }
  out_.put('\n');
  if (!out_) throw Error(ErrorKind::io, "write failed on " + path_.string());
}

void CsvWriter::close() {
  out_.close();
  if (out_.fail()) throw Error(ErrorKind::io, "write failed on " + path_.string());
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace dsprof
