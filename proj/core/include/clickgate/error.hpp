#pragma once

#include <stdexcept>
#include <string>

namespace clickgate {

/// Typed failure codes. Every throwing operation in the library raises
/// Error with one of these; callers branch on code(), not on message text.
enum class Errc {
  MalformedRecord,
  InvariantViolation,
  EmptyStratum,
  EmptyDataset,
  OutOfImage,
  NoDarkBox,
  UnresolvableOverlap,
  NullRegionExhausted,
  NoSuchRegion,
  NotAnError,
  NotAPenalty,
  EmptyFailurePool,
  BackendUnavailable,
  TokenCapExceeded,
  Timeout,
  TransportError,
  RemoteError,
  InconsistentInputs,
  EmptyRun,
  IoError,
  ConfigError,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace clickgate
