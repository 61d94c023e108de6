#pragma once
// Small shared utilities: error types, hashing, float formatting.

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace globe {

// Raised when a configuration file or programmatic config is invalid.
// `field` names the offending entry so CLI diagnostics can point at it.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string& what_)
      : std::runtime_error("config error [" + field_ + "]: " + what_),
        field(std::move(field_)) {}
};

// Raised when a slot decision violates a model constraint.
// `constraint` names the violated one (e.g. "tx_budget", "comp_capacity").
struct FeasibilityError : std::runtime_error {
  std::string constraint;
  FeasibilityError(std::string c, const std::string& what_)
      : std::runtime_error("infeasible decision [" + c + "]: " + what_),
        constraint(std::move(c)) {}
};

// Raised on malformed or mismatched trace/CSV input.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a 64-bit, used for config digests.
inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Round-trip-exact float formatting used for every serialized double.
inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace globe
