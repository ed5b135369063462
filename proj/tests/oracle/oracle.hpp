#pragma once

// Reference implementations used only to cross-check the library. They share
// no code with include/mfchf and deliberately take the slow, obvious route.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

using Bytes = std::vector<std::uint8_t>;

inline std::uint32_t rotl(std::uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

// FIPS 180-4 SHA-1.
inline std::array<std::uint8_t, 20> sha1(const Bytes& msg) {
  std::uint32_t h[5] = {0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0};
  Bytes m = msg;
  const std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
  m.push_back(0x80);
  while (m.size() % 64 != 56) m.push_back(0);
  for (int i = 7; i >= 0; --i) m.push_back(static_cast<std::uint8_t>(bit_len >> (8 * i)));

  for (std::size_t block = 0; block < m.size(); block += 64) {
    std::uint32_t w[80];
    for (int t = 0; t < 16; ++t) {
      w[t] = (std::uint32_t{m[block + 4 * t]} << 24) | (std::uint32_t{m[block + 4 * t + 1]} << 16) |
             (std::uint32_t{m[block + 4 * t + 2]} << 8) | std::uint32_t{m[block + 4 * t + 3]};
    }
    for (int t = 16; t < 80; ++t) w[t] = rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int t = 0; t < 80; ++t) {
      std::uint32_t f, k;
      if (t < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999;
      } else if (t < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1;
      } else if (t < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDC;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6;
      }
      const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[t];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }
  std::array<std::uint8_t, 20> out{};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 4; ++j) out[4 * i + j] = static_cast<std::uint8_t>(h[i] >> (24 - 8 * j));
  }
  return out;
}

// RFC 2104 with B = 64.
inline std::array<std::uint8_t, 20> hmac_sha1(Bytes key, const Bytes& msg) {
  if (key.size() > 64) {
    const auto k = sha1(key);
    key.assign(k.begin(), k.end());
  }
  key.resize(64, 0);
  Bytes inner, outer;
  for (auto b : key) inner.push_back(b ^ 0x36);
  for (auto b : key) outer.push_back(b ^ 0x5c);
  inner.insert(inner.end(), msg.begin(), msg.end());
  const auto ih = sha1(inner);
  outer.insert(outer.end(), ih.begin(), ih.end());
  return sha1(outer);
}

// RFC 4226 section 5.3.
inline std::uint32_t hotp(const Bytes& key, std::uint64_t counter, int digits) {
  Bytes msg(8);
  for (int i = 0; i < 8; ++i) msg[i] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
  const auto hs = hmac_sha1(key, msg);
  const int offset = hs[19] & 0x0f;
  const std::uint32_t bin = ((hs[offset] & 0x7fu) << 24) | (hs[offset + 1] << 16) |
                            (hs[offset + 2] << 8) | hs[offset + 3];
  std::uint32_t mod = 1;
  for (int i = 0; i < digits; ++i) mod *= 10;
  return bin % mod;
}

inline Bytes ascii(const std::string& s) { return Bytes(s.begin(), s.end()); }

// password || 00 || zero-padded target text || 00 || salt
inline Bytes encode(const std::string& password, std::uint64_t target, int radix, int digits,
                    const Bytes& salt) {
  static const char kAlphabet[] = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::string text(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i) {
    text[static_cast<std::size_t>(i)] = kAlphabet[target % radix];
    target /= radix;
  }
  Bytes out = ascii(password);
  out.push_back(0);
  out.insert(out.end(), text.begin(), text.end());
  out.push_back(0);
  out.insert(out.end(), salt.begin(), salt.end());
  return out;
}

inline std::string hex(const std::uint8_t* p, std::size_t n) {
  static const char kHex[] = "0123456789abcdef";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s += kHex[p[i] >> 4];
    s += kHex[p[i] & 15];
  }
  return s;
}

}  // namespace oracle
