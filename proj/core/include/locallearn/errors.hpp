#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace locallearn {

enum class ErrorKind {
  MalformedFile,
  DimMismatch,
  NonFiniteValue,
  IdMismatch,
  MissingLabels,
  UnknownSource,
  UnknownClassName,
  SingleClass,
  NoTrainedClasses,
  ImageTooSmall,
  LevelMismatch,
  NonFiniteGradient,
  InvalidArgument,
  IoError,
};

std::string_view error_name(ErrorKind kind) noexcept;

/// Validation errors are caused by bad input; compute errors by a numerical
/// or solver failure on otherwise valid input. The CLI maps these to exit
/// codes 2 and 3.
bool is_compute_error(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

  // NonFiniteValue: 1-based data row and value column.
  std::optional<std::size_t> row;
  std::optional<std::size_t> column;
  // IdMismatch: offending sample ids (symmetric difference), sorted.
  std::vector<std::string> ids;

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// Copy of e (kind, row, column, ids kept) with "context: " before its message.
Error with_context(const Error& e, std::string_view context);

}  // namespace locallearn
