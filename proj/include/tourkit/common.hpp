#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tourkit {

/// Sentinel standing in for log(0) in stored score/transition matrices.
/// Kept finite so sums of a few sentinel terms never overflow, while any
/// route touching one is hopelessly worse than every finite alternative.
constexpr double kForbiddenLog = -1e18;

inline bool is_forbidden(double log_value) { return log_value <= kForbiddenLog / 2; }

// ---------------------------------------------------------------------------
// Error taxonomy. Parsers and validators throw; the CLI maps types to exit
// codes.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file content; message carries file and line number.
struct ParseError : Error {
  using Error::Error;
};

struct DuplicateKeyError : Error {
  using Error::Error;
};

/// A precondition or invariant of an operation was violated.
struct ValidationError : Error {
  using Error::Error;
};

/// A row references an id that does not exist in the POI table.
struct ReferentialError : Error {
  using Error::Error;
};

struct TrainingError : Error {
  using Error::Error;
};

struct InfeasibleError : Error {
  using Error::Error;
};

/// An exhaustive oracle refused because the instance exceeds its guard.
struct GuardError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. A tiny splitmix64-based generator is used instead of
// <random> distributions so that streams are bit-identical across standard
// library implementations; every consumer derives a named substream from the
// single user-facing seed.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derive the seed of a named substream from a root seed.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view label) {
  std::uint64_t s = root ^ fnv1a64(label);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw ValidationError("Rng::next_below: empty range");
    return next_u64() % n;
  }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Logging, controlled by the TOURKIT_LOG environment variable
// (error|warn|info|debug; default warn).
// ---------------------------------------------------------------------------

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level();
void log_message(LogLevel level, const std::string& message);

inline void log_info(const std::string& message) { log_message(LogLevel::kInfo, message); }
inline void log_warn(const std::string& message) { log_message(LogLevel::kWarn, message); }
inline void log_debug(const std::string& message) { log_message(LogLevel::kDebug, message); }

}  // namespace tourkit
