#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cwds {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  ScaleGuard,
  UnrecognizedFormat,
  TruncatedPayload,
  DtypeMismatch,
  Io,
  Config,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::NonFinite: return "non-finite value";
    case ErrorCode::ScaleGuard: return "problem too large for assembly";
    case ErrorCode::UnrecognizedFormat: return "unrecognized format";
    case ErrorCode::TruncatedPayload: return "truncated payload";
    case ErrorCode::DtypeMismatch: return "dtype mismatch";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Config: return "configuration error";
  }
  return "unknown error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

inline void require_size(std::size_t actual, std::size_t expected, std::string_view what) {
  if (actual != expected) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has length " + std::to_string(actual) + ", expected " +
                    std::to_string(expected));
  }
}

}  // namespace detail
}  // namespace cwds
