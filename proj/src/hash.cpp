#include "relbench/hash.hpp"

#include "relbench/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

namespace relbench {

namespace {

struct DigestCtx {
  DigestCtx() : ctx(EVP_MD_CTX_new()) {
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest initialisation failed");
    }
  }
  ~DigestCtx() { EVP_MD_CTX_free(ctx); }
  DigestCtx(const DigestCtx&) = delete;
  DigestCtx& operator=(const DigestCtx&) = delete;

  void update(std::string_view data) {
    if (EVP_DigestUpdate(ctx, data.data(), data.size()) != 1) throw Error("sha256: update failed");
  }

  std::array<unsigned char, 32> finish() {
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx, out.data(), &len) != 1 || len != out.size()) {
      throw Error("sha256: finalisation failed");
    }
    return out;
  }

  EVP_MD_CTX* ctx;
};

std::string to_hex(const std::array<unsigned char, 32>& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  DigestCtx d;
  d.update(data);
  return to_hex(d.finish());
}

std::string sha256_fields(std::initializer_list<std::string_view> parts) {
  DigestCtx d;
  for (auto part : parts) {
    const std::string len = std::to_string(part.size()) + ":";
    d.update(len);
    d.update(part);
  }
  return to_hex(d.finish());
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  DigestCtx d;
  const std::string s = std::to_string(seed) + ":";
  d.update(s);
  d.update(label);
  const auto digest = d.finish();
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | digest[static_cast<std::size_t>(i)];
  return out;
}

// splitmix64
std::uint64_t SeededRng::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) throw PreconditionError("SeededRng::below: empty range");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

}  // namespace relbench
