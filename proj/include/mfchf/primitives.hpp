#pragma once

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "mfchf/bytes.hpp"
#include "mfchf/random.hpp"

namespace mfchf {

inline constexpr std::size_t kDefaultKeyLength = 20;
inline constexpr std::size_t kMinKeyLength = 16;
inline constexpr std::size_t kMaxKeyLength = 64;
inline constexpr std::size_t kSha1Length = 20;

// Shared HMAC secret. Wiped on destruction; never part of any record.
class HmacKey {
 public:
  explicit HmacKey(Bytes bytes) : bytes_(std::move(bytes)) {
    if (bytes_.size() < kMinKeyLength || bytes_.size() > kMaxKeyLength) {
      throw InvalidArgument("HMAC key must be 16..64 bytes");
    }
  }
  HmacKey(const HmacKey&) = default;
  HmacKey(HmacKey&&) noexcept = default;
  HmacKey& operator=(const HmacKey&) = default;
  HmacKey& operator=(HmacKey&&) noexcept = default;
  ~HmacKey() { wipe(bytes_); }

  static HmacKey random(RandomSource& rng, std::size_t length = kDefaultKeyLength) {
    return HmacKey(rng.bytes(length));
  }

  ByteView bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }
  std::string base32() const { return to_base32(bytes_); }

  friend bool operator==(const HmacKey& a, const HmacKey& b) {
    return ct_equal(a.bytes_, b.bytes_);
  }

 private:
  Bytes bytes_;
};

inline std::uint64_t otp_modulus(std::uint32_t radix, std::uint32_t digits) {
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < digits; ++i) n *= radix;
  return n;
}

// A fixed-width one-time code: value in [0, radix^digits).
struct Otp {
  std::uint64_t value = 0;
  std::uint32_t radix = 10;
  std::uint32_t digits = 6;

  Otp() = default;
  Otp(std::uint64_t v, std::uint32_t r, std::uint32_t d) : value(v), radix(r), digits(d) {
    if (r != 10 && r != 36) throw InvalidArgument("OTP radix must be 10 or 36");
    if (d < 1 || d > 9) throw InvalidArgument("OTP digits must be 1..9");
    if (v >= modulus()) throw InvalidArgument("OTP value out of range");
  }

  static Otp decimal(std::uint64_t v, std::uint32_t d = 6) { return Otp(v, 10, d); }
  static Otp base36(std::uint64_t v, std::uint32_t d = 6) { return Otp(v, 36, d); }

  std::uint64_t modulus() const { return otp_modulus(radix, digits); }
  bool same_domain(const Otp& o) const { return radix == o.radix && digits == o.digits; }

  // Zero-padded to `digits` characters; base 36 uses 0-9A-Z.
  std::string text() const {
    static constexpr char kDigits[] = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::string s(digits, '0');
    std::uint64_t v = value;
    for (std::size_t i = digits; i-- > 0;) {
      s[i] = kDigits[v % radix];
      v /= radix;
    }
    return s;
  }

  // Exact width required; base 36 accepts either case.
  static Otp parse(std::string_view text, std::uint32_t radix, std::uint32_t digits) {
    if (text.size() != digits) throw InvalidArgument("OTP has wrong length");
    std::uint64_t v = 0;
    for (char c : text) {
      std::uint32_t d;
      if (c >= '0' && c <= '9') {
        d = static_cast<std::uint32_t>(c - '0');
      } else if (c >= 'A' && c <= 'Z') {
        d = static_cast<std::uint32_t>(c - 'A' + 10);
      } else if (c >= 'a' && c <= 'z') {
        d = static_cast<std::uint32_t>(c - 'a' + 10);
      } else {
        throw InvalidArgument("OTP has invalid character");
      }
      if (d >= radix) throw InvalidArgument("OTP has invalid character");
      v = v * radix + d;
    }
    return Otp(v, radix, digits);
  }

  friend bool operator==(const Otp&, const Otp&) = default;
};

struct TotpParams {
  std::int64_t t0 = 0;
  std::uint32_t tx = 30;
  std::uint32_t digits = 6;
  std::uint32_t window = 1;

  void validate() const {
    if (tx == 0) throw InvalidArgument("TOTP interval must be positive");
    if (window < 1) throw InvalidArgument("TOTP window must be at least 1");
    if (digits < 1 || digits > 9) throw InvalidArgument("TOTP digits must be 1..9");
  }

  std::uint64_t interval(std::int64_t now) const {
    if (now < t0) throw InvalidArgument("time precedes T0");
    return static_cast<std::uint64_t>(now - t0) / tx;
  }

  friend bool operator==(const TotpParams&, const TotpParams&) = default;
};

inline std::array<std::uint8_t, kSha1Length> hmac_sha1(ByteView key, ByteView message) {
  std::array<std::uint8_t, kSha1Length> out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha1(), key.data(), static_cast<int>(key.size()), message.data(),
           message.size(), out.data(), &len) == nullptr ||
      len != kSha1Length) {
    throw CryptoError("HMAC-SHA1 failed");
  }
  return out;
}

inline std::array<std::uint8_t, kSha1Length> hmac_sha1(const HmacKey& key, ByteView message) {
  return hmac_sha1(key.bytes(), message);
}

// RFC 4226: dynamic truncation of HMAC-SHA1 over the big-endian counter.
inline Otp hotp(const HmacKey& key, std::uint64_t counter, std::uint32_t digits = 6) {
  if (digits < 1 || digits > 9) throw InvalidArgument("HOTP digits must be 1..9");
  std::array<std::uint8_t, 8> msg{};
  for (int i = 7; i >= 0; --i) {
    msg[i] = static_cast<std::uint8_t>(counter & 0xff);
    counter >>= 8;
  }
  const auto mac = hmac_sha1(key, msg);
  const unsigned offset = mac[kSha1Length - 1] & 0x0f;
  const std::uint32_t code = (static_cast<std::uint32_t>(mac[offset] & 0x7f) << 24) |
                             (static_cast<std::uint32_t>(mac[offset + 1]) << 16) |
                             (static_cast<std::uint32_t>(mac[offset + 2]) << 8) |
                             static_cast<std::uint32_t>(mac[offset + 3]);
  return Otp::decimal(code % otp_modulus(10, digits), digits);
}

inline Otp totp(const HmacKey& key, std::int64_t now, const TotpParams& params) {
  params.validate();
  return hotp(key, params.interval(now), params.digits);
}

// (target - otp) mod N, always in [0, N).
inline Otp mod_offset(const Otp& target, const Otp& otp) {
  if (!target.same_domain(otp)) throw InvalidArgument("OTP domains differ");
  const std::uint64_t n = target.modulus();
  return Otp((target.value + n - otp.value) % n, target.radix, target.digits);
}

// (diff + otp) mod N.
inline Otp mod_recover(const Otp& diff, const Otp& otp) {
  if (!diff.same_domain(otp)) throw InvalidArgument("OTP domains differ");
  const std::uint64_t n = diff.modulus();
  return Otp((diff.value + otp.value) % n, diff.radix, diff.digits);
}

// XOR of `secret` with the leading bytes of `pad`.
inline Bytes xor_blind(ByteView secret, ByteView pad) {
  if (pad.size() < secret.size()) throw InvalidArgument("pad shorter than secret");
  Bytes out(secret.size());
  for (std::size_t i = 0; i < secret.size(); ++i) out[i] = secret[i] ^ pad[i];
  return out;
}

}  // namespace mfchf
