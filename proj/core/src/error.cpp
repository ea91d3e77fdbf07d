#include "clickgate/error.hpp"

namespace clickgate {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::EmptyStratum: return "EmptyStratum";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::OutOfImage: return "OutOfImage";
    case Errc::NoDarkBox: return "NoDarkBox";
    case Errc::UnresolvableOverlap: return "UnresolvableOverlap";
    case Errc::NullRegionExhausted: return "NullRegionExhausted";
    case Errc::NoSuchRegion: return "NoSuchRegion";
    case Errc::NotAnError: return "NotAnError";
    case Errc::NotAPenalty: return "NotAPenalty";
    case Errc::EmptyFailurePool: return "EmptyFailurePool";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::TokenCapExceeded: return "TokenCapExceeded";
    case Errc::Timeout: return "Timeout";
    case Errc::TransportError: return "TransportError";
    case Errc::RemoteError: return "RemoteError";
    case Errc::InconsistentInputs: return "InconsistentInputs";
    case Errc::EmptyRun: return "EmptyRun";
    case Errc::IoError: return "IoError";
    case Errc::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace clickgate
