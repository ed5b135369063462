#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "mfchf/bytes.hpp"

namespace mfchf {

// Source of randomness for every Setup/Verify. Production code uses
// SystemRandom; tests inject SeededRandom for reproducible runs.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  Bytes bytes(std::size_t n) {
    Bytes b(n);
    fill(b);
    return b;
  }

  // Uniform in [0, bound) by rejection sampling.
  std::uint64_t uniform(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("uniform: empty range");
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
      std::uint64_t x = 0;
      fill({reinterpret_cast<std::uint8_t*>(&x), sizeof x});
      if (x < limit) return x % bound;
    }
  }
};

class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override {
    detail::ensure_sodium();
    randombytes_buf(out.data(), out.size());
  }
};

// ChaCha20 keystream under a key derived from a 64-bit seed. Deterministic,
// never for production records.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed) {
    detail::ensure_sodium();
    std::array<std::uint8_t, 8> le{};
    for (int i = 0; i < 8; ++i) le[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    crypto_hash_sha256(key_.data(), le.data(), le.size());
  }

  void fill(std::span<std::uint8_t> out) override {
    std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
    for (int i = 0; i < 8; ++i) nonce[i] = static_cast<std::uint8_t>(calls_ >> (8 * i));
    ++calls_;
    crypto_stream_chacha20_ietf(out.data(), out.size(), nonce.data(), key_.data());
  }

 private:
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_KEYBYTES> key_{};
  std::uint64_t calls_ = 0;
};

inline RandomSource& system_random() {
  thread_local SystemRandom rng;
  return rng;
}

}  // namespace mfchf
