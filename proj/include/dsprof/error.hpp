#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsprof {

enum class ErrorKind {
  parse,
  schema,
  not_found,
  schema_mismatch,
  shape,
  degenerate_geometry,
  domain,
  io,
  dangling_reference,
  empty_input,
  invalid_value,
  incompatible_histogram,
  unsupported_feature,
  undefined_score,
  empty_domain,
  leakage,
  unsupported_task,
  undefined_variance,
  configuration,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse-error";
    case ErrorKind::schema: return "schema-error";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::schema_mismatch: return "schema-mismatch";
    case ErrorKind::shape: return "shape-error";
    case ErrorKind::degenerate_geometry: return "degenerate-geometry";
    case ErrorKind::domain: return "domain-error";
    case ErrorKind::io: return "io-error";
    case ErrorKind::dangling_reference: return "dangling-reference";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::invalid_value: return "invalid-value";
    case ErrorKind::incompatible_histogram: return "incompatible-histogram";
    case ErrorKind::unsupported_feature: return "unsupported-feature";
    case ErrorKind::undefined_score: return "undefined-score";
    case ErrorKind::empty_domain: return "empty-domain";
    case ErrorKind::leakage: return "leakage";
    case ErrorKind::unsupported_task: return "unsupported-task";
    case ErrorKind::undefined_variance: return "undefined-variance";
    case ErrorKind::configuration: return "configuration-error";
  }
  return "error";
}

/// Every failure raised by the library. The kind is stable and machine-checkable;
/// the message carries the offending field, path, row or column.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dsprof
