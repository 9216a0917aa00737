#pragma once

#include <stdexcept>
#include <string>

namespace hinclus {

/// Malformed input file (bad JSON, bad TSV row, wrong schema).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally valid input that violates referential integrity
/// (dangling entity, unknown type, inconsistent matrix).
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hinclus
