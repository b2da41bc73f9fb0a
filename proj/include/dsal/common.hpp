#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dsal {

// Invalid arguments, violated preconditions, malformed configs.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unreadable/unwritable files, malformed on-disk data.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered during training/evaluation.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

// FNV-1a, used for spec and config fingerprints embedded in checkpoints.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

// splitmix64 finalizer; combines seeds into independent stream keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ b); }

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

}  // namespace dsal
