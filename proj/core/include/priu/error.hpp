#pragma once

#include <stdexcept>
#include <string>

namespace priu {

enum class ErrorCode {
  kConfig,        // invalid hyperparameters, options or requests
  kData,          // malformed or inconsistent input data
  kNumeric,       // divergence, singular systems, failed decompositions
  kFormat,        // cache file magic / layout problems
  kVersion,       // cache file written by an incompatible format version
  kFingerprint,   // cache does not belong to the supplied dataset
  kTruncated,     // cache file ends early
  kCacheCorrupt,  // cache is well-formed but misses required sections
  kRefused,       // instance too large for the symbolic layer
  kMismatch,      // shape / mode / model-kind mismatch between arguments
};

const char* to_string(ErrorCode code) noexcept;

// Process exit code used by the command-line tool: 2 config, 3 data, 4 numeric.
int exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace priu
