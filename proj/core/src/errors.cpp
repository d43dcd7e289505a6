#include "locallearn/errors.hpp"

namespace locallearn {

std::string_view error_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::UnknownSource: return "UnknownSource";
    case ErrorKind::UnknownClassName: return "UnknownClassName";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::NoTrainedClasses: return "NoTrainedClasses";
    case ErrorKind::ImageTooSmall: return "ImageTooSmall";
    case ErrorKind::LevelMismatch: return "LevelMismatch";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_compute_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SingleClass:
    case ErrorKind::NoTrainedClasses:
    case ErrorKind::NonFiniteGradient:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_name(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

Error with_context(const Error& e, std::string_view context) {
  std::string_view msg = e.what();
  const std::string prefix = std::string(e.name()) + ": ";
  if (msg.starts_with(prefix)) msg.remove_prefix(prefix.size());
  Error out(e.kind(), std::string(context) + ": " + std::string(msg));
  out.row = e.row;
  out.column = e.column;
  out.ids = e.ids;
  return out;
}

}  // namespace locallearn
