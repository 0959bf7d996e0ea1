#pragma once

#include <stdexcept>
#include <string>

namespace dllm {

enum class ErrorCode {
  kInvalidArgument,    // precondition rejected by an operation
  kConfig,             // malformed run config or CLI usage
  kContractViolation,  // an internal contract was broken (e.g. scheduler wrote an unmasked slot)
  kDecode,             // decode loop failure
  kSizeLimit,          // brute-force cap exceeded
  kTraceFormat,        // trace file does not parse or validate
  kTraceMiss,          // replay lookup failed
};

// Single exception type for the library. The code drives CLI exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Same error, message prefixed with call-site context.
  Error with_context(const std::string& context) const { return Error(code_, context + ": " + what()); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace dllm
