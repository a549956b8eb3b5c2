#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace relbench {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 over the parts, each prefixed by its length so that ("ab","c")
/// and ("a","bc") differ.
std::string sha256_fields(std::initializer_list<std::string_view> parts);

/// 64-bit seed derived from a base seed and a label. Stable across
/// platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

/// Seeded generator with platform-independent helpers. The standard
/// distributions are implementation defined, so generated benchmarks would
/// not be byte-identical across standard libraries if we used them.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

private:
  std::uint64_t state_;
};

}  // namespace relbench
