#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace d2wfp {

enum class ErrorCode {
  EmptyId,
  DuplicateCase,
  IoError,
  InvalidVolatility,
  NotFound,
  NotSqlite,
  CorruptHeader,
  Truncated,
  Malformed,
  CorruptTree,
  CorruptPage,
  StoreAbsent,
  ParseError,
  NotHive,
  CorruptHive,
  Invalid,
  Config,
  EmptyCase,
  IntegrityFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace d2wfp
