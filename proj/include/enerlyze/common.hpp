#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace enerlyze {

struct SourcePos {
  int line = 0;
  int column = 0;
};

/// Base of every error the toolkit reports. `kind` is a short machine-readable
/// tag ("syntax", "type", "runtime", "io", ...) used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class SourceError : public Error {
 public:
  SourceError(std::string kind, const std::string& message, SourcePos pos)
      : Error(std::move(kind), message + " at " + std::to_string(pos.line) + ":" +
                                   std::to_string(pos.column)),
        pos_(pos),
        bare_message_(message) {}

  SourcePos pos() const { return pos_; }
  const std::string& bare_message() const { return bare_message_; }

 private:
  SourcePos pos_;
  std::string bare_message_;
};

class SyntaxError : public SourceError {
 public:
  SyntaxError(const std::string& message, SourcePos pos) : SourceError("syntax", message, pos) {}
};

class TypeError : public SourceError {
 public:
  TypeError(const std::string& message, SourcePos pos) : SourceError("type", message, pos) {}
};

// 64-bit FNV-1a, used for output digests. Stable across platforms.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void add_u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    add_bytes(buf, 8);
  }
  void add_string(std::string_view s) {
    add_u64(s.size());
    add_bytes(s.data(), s.size());
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

/// SplitMix64 mixing, for deriving independent seeds from (seed, index) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace enerlyze
