#include "priu/error.hpp"

namespace priu {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kData: return "data";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kFingerprint: return "fingerprint";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kCacheCorrupt: return "cache-corrupt";
    case ErrorCode::kRefused: return "refused";
    case ErrorCode::kMismatch: return "mismatch";
  }
  return "unknown";
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kMismatch:
    case ErrorCode::kRefused:
      return 2;
    case ErrorCode::kNumeric:
      return 4;
    default:
      return 3;
  }
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace priu
