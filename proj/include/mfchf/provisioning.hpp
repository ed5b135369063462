#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>

#include "mfchf/bytes.hpp"
#include "mfchf/primitives.hpp"

namespace mfchf {

namespace detail {

inline std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

inline std::string otpauth_base(std::string_view type, std::string_view issuer,
                                std::string_view account, const HmacKey& key,
                                std::uint32_t digits) {
  return "otpauth://" + std::string(type) + "/" + percent_encode(issuer) + ":" +
         percent_encode(account) + "?secret=" + to_base32(key.bytes()) +
         "&issuer=" + percent_encode(issuer) + "&algorithm=SHA1&digits=" + std::to_string(digits);
}

}  // namespace detail

// Key URI for authenticator import (Google Authenticator format).
inline std::string hotp_uri(std::string_view issuer, std::string_view account, const HmacKey& key,
                            std::uint32_t digits, std::uint64_t counter) {
  return detail::otpauth_base("hotp", issuer, account, key, digits) +
         "&counter=" + std::to_string(counter);
}

inline std::string totp_uri(std::string_view issuer, std::string_view account, const HmacKey& key,
                            const TotpParams& params) {
  return detail::otpauth_base("totp", issuer, account, key, params.digits) +
         "&period=" + std::to_string(params.tx);
}

}  // namespace mfchf
