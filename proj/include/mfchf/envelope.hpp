#pragma once

#include <charconv>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mfchf/backend.hpp"
#include "mfchf/bytes.hpp"
#include "mfchf/hotp6.hpp"
#include "mfchf/ooba6.hpp"
#include "mfchf/records.hpp"
#include "mfchf/totp6.hpp"

namespace mfchf {

inline constexpr int kEnvelopeVersion = 1;

class ParseError : public Error {
 public:
  enum class Kind { kBadScheme, kBadVersion, kMalformedField, kOutOfRange };

  ParseError(Kind kind, std::string field, const std::string& what)
      : Error(what), kind_(kind), field_(std::move(field)) {}

  Kind kind() const { return kind_; }
  const std::string& field() const { return field_; }

 private:
  Kind kind_;
  std::string field_;
};

namespace envelope_detail {

using Kind = ParseError::Kind;

inline constexpr std::uint64_t kMaxCounter = std::uint64_t{1} << 63;
inline constexpr std::size_t kMaxCiphertext = 4096;

[[noreturn]] inline void fail(Kind kind, std::string field, std::string_view why) {
  std::string msg = field.empty() ? std::string(why) : field + ": " + std::string(why);
  throw ParseError(kind, std::move(field), msg);
}

template <class Int>
Int parse_int(std::string_view field, std::string_view text) {
  std::string_view digits = text;
  if (!digits.empty() && digits[0] == '-') {
    if constexpr (!std::is_signed_v<Int>) fail(Kind::kMalformedField, std::string(field), "negative");
    digits.remove_prefix(1);
  }
  if (digits.empty() || (digits.size() > 1 && digits[0] == '0') ||
      (text[0] == '-' && digits == "0")) {
    fail(Kind::kMalformedField, std::string(field), "not a canonical decimal");
  }
  for (char c : digits) {
    if (c < '0' || c > '9') fail(Kind::kMalformedField, std::string(field), "not a decimal");
  }
  if (digits.size() > 20) fail(Kind::kOutOfRange, std::string(field), "value too large");
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc::result_out_of_range) {
    fail(Kind::kOutOfRange, std::string(field), "value too large");
  }
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(Kind::kMalformedField, std::string(field), "not a decimal");
  }
  return v;
}

inline Bytes parse_b64(std::string_view field, std::string_view text) {
  auto b = from_base64(text);
  if (!b || b->empty()) fail(Kind::kMalformedField, std::string(field), "invalid base64");
  return std::move(*b);
}

inline Bytes parse_b64_exact(std::string_view field, std::string_view text, std::size_t n) {
  Bytes b = parse_b64(field, text);
  if (b.size() != n) fail(Kind::kMalformedField, std::string(field), "wrong length");
  return b;
}

inline std::uint32_t scheme_digits(std::string_view id, std::string_view prefix,
                                   std::uint32_t max_digits) {
  if (id.size() != prefix.size() + 1 || id.substr(0, prefix.size()) != prefix) return 0;
  const char c = id.back();
  if (c < '1' || c > static_cast<char>('0' + max_digits)) return 0;
  return static_cast<std::uint32_t>(c - '0');
}

// Fields in canonical order, as (key, value).
using Fields = std::vector<std::pair<std::string_view, std::string_view>>;

inline Fields take_fields(const std::vector<std::string_view>& parts,
                          const std::vector<std::string_view>& expected) {
  Fields out;
  for (std::size_t i = 3; i < parts.size(); ++i) {
    const std::string_view part = parts[i];
    const std::size_t eq = part.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      fail(Kind::kMalformedField, "", "field without key=value form");
    }
    out.emplace_back(part.substr(0, eq), part.substr(eq + 1));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto key = out[i].first;
    bool known = false;
    for (auto e : expected) known = known || e == key;
    if (!known) fail(Kind::kMalformedField, std::string(key), "unknown field");
    for (std::size_t j = 0; j < i; ++j) {
      if (out[j].first == key) fail(Kind::kMalformedField, std::string(key), "duplicate field");
    }
  }
  if (out.size() != expected.size()) {
    fail(Kind::kMalformedField, "", "wrong field count");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].first != expected[i]) {
      fail(Kind::kMalformedField, std::string(out[i].first), "field out of canonical order");
    }
  }
  return out;
}

inline std::string join_decimal(const std::vector<Otp>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(values[i].value);
  }
  return s;
}

inline std::string pack_offsets(const std::vector<Otp>& offsets) {
  Bytes raw;
  raw.reserve(offsets.size() * 3);
  for (const Otp& o : offsets) {
    raw.push_back(static_cast<std::uint8_t>(o.value >> 16));
    raw.push_back(static_cast<std::uint8_t>(o.value >> 8));
    raw.push_back(static_cast<std::uint8_t>(o.value));
  }
  return to_base64(raw);
}

inline void check_blind(std::string_view field, const Bytes& blind, const HashBackend& b) {
  if (blind.size() < kMinKeyLength || blind.size() > kMaxKeyLength ||
      blind.size() > b.slow_length()) {
    fail(Kind::kOutOfRange, std::string(field), "blinded key length out of range");
  }
}

inline HashBackend parse_backend(std::string_view text) {
  try {
    return HashBackend::from_string(text);
  } catch (const InvalidArgument& e) {
    fail(Kind::kMalformedField, "h1", e.what());
  }
}

inline HotpRecord parse_hotp(std::uint32_t digits, const HashBackend& backend,
                             const std::vector<std::string_view>& parts) {
  const Fields f = take_fields(parts, {"ctr", "k", "diff", "blind", "salt", "outer"});
  HotpRecord r;
  r.digits = digits;
  r.backend = backend;
  r.counter = parse_int<std::uint64_t>("ctr", f[0].second);
  if (r.counter >= kMaxCounter) fail(Kind::kOutOfRange, "ctr", "counter too large");
  const auto k = parse_int<std::uint64_t>("k", f[1].second);
  if (k < 1 || k > kMaxHotpWindow) fail(Kind::kOutOfRange, "k", "window out of range");
  const std::uint64_t n = otp_modulus(10, digits);
  std::string_view list = f[2].second;
  for (;;) {
    const std::size_t comma = list.find(',');
    const auto v = parse_int<std::uint64_t>("diff", list.substr(0, comma));
    if (v >= n) fail(Kind::kOutOfRange, "diff", "offset exceeds modulus");
    r.diffs.push_back(Otp::decimal(v, digits));
    if (r.diffs.size() > kMaxHotpWindow) fail(Kind::kOutOfRange, "diff", "too many offsets");
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (r.diffs.size() != k) fail(Kind::kMalformedField, "diff", "count differs from k");
  r.blind = parse_b64("blind", f[3].second);
  check_blind("blind", r.blind, backend);
  r.salt = parse_b64_exact("salt", f[4].second, kSaltLength);
  r.outer = parse_b64_exact("outer", f[5].second, backend.fast_length());
  return r;
}

inline TotpRecord parse_totp(std::uint32_t digits, const HashBackend& backend,
                             const std::vector<std::string_view>& parts) {
  const Fields f =
      take_fields(parts, {"ctr", "t0", "tx", "w", "off", "blind", "salt", "outer"});
  TotpRecord r;
  r.backend = backend;
  r.params.digits = digits;
  r.counter = parse_int<std::uint64_t>("ctr", f[0].second);
  if (r.counter >= kMaxCounter) fail(Kind::kOutOfRange, "ctr", "counter too large");
  r.params.t0 = parse_int<std::int64_t>("t0", f[1].second);
  const auto tx = parse_int<std::uint64_t>("tx", f[2].second);
  if (tx < 1 || tx > std::numeric_limits<std::uint32_t>::max()) {
    fail(Kind::kOutOfRange, "tx", "interval out of range");
  }
  r.params.tx = static_cast<std::uint32_t>(tx);
  const auto w = parse_int<std::uint64_t>("w", f[3].second);
  if (w < 1 || w > kMaxTotpWindow) fail(Kind::kOutOfRange, "w", "window out of range");
  r.params.window = static_cast<std::uint32_t>(w);
  const Bytes raw = parse_b64("off", f[4].second);
  if (raw.size() != w * 3) fail(Kind::kMalformedField, "off", "length differs from 3*w");
  const std::uint64_t n = otp_modulus(10, digits);
  r.offsets.reserve(w);
  for (std::size_t i = 0; i < raw.size(); i += 3) {
    const std::uint64_t v = (std::uint64_t{raw[i]} << 16) | (std::uint64_t{raw[i + 1]} << 8) |
                            raw[i + 2];
    if (v >= n) fail(Kind::kOutOfRange, "off", "offset exceeds modulus");
    r.offsets.push_back(Otp::decimal(v, digits));
  }
  r.blind = parse_b64("blind", f[5].second);
  check_blind("blind", r.blind, backend);
  r.salt = parse_b64_exact("salt", f[6].second, kSaltLength);
  r.outer = parse_b64_exact("outer", f[7].second, backend.fast_length());
  return r;
}

inline OobaRecord parse_ooba(std::uint32_t digits, const HashBackend& backend,
                             const std::vector<std::string_view>& parts) {
  const Fields f = take_fields(parts, {"ct", "pk", "diff", "salt", "digest"});
  OobaRecord r;
  r.backend = backend;
  r.ct = parse_b64("ct", f[0].second);
  if (r.ct.size() > kMaxCiphertext) fail(Kind::kOutOfRange, "ct", "ciphertext too large");
  parse_b64_exact("pk", f[1].second, 16);
  r.pk = std::string(f[1].second);
  const std::string_view diff = f[2].second;
  if (diff.size() != digits) fail(Kind::kMalformedField, "diff", "wrong width");
  for (char c : diff) {
    if (!((c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z'))) {
      fail(Kind::kMalformedField, "diff", "not upper-case base 36");
    }
  }
  r.diff = Otp::parse(diff, 36, digits);
  r.salt = parse_b64_exact("salt", f[3].second, kSaltLength);
  r.digest = parse_b64_exact("digest", f[4].second, backend.slow_length());
  return r;
}

inline Hsha1Record parse_hsha1(const HashBackend& backend,
                               const std::vector<std::string_view>& parts) {
  const Fields f = take_fields(parts, {"blind", "chal", "salt", "digest"});
  Hsha1Record r;
  r.backend = backend;
  r.blind = parse_b64_exact("blind", f[0].second, kSha1Length);
  r.challenge = parse_b64_exact("chal", f[1].second, 20);
  r.salt = parse_b64_exact("salt", f[2].second, kSaltLength);
  r.digest = parse_b64_exact("digest", f[3].second, backend.slow_length());
  return r;
}

inline RecoveryCodeRecord parse_rcode(const HashBackend& backend,
                                      const std::vector<std::string_view>& parts) {
  const Fields f = take_fields(parts, {"salt", "digest"});
  RecoveryCodeRecord r;
  r.backend = backend;
  r.salt = parse_b64_exact("salt", f[0].second, kSaltLength);
  r.digest = parse_b64_exact("digest", f[1].second, backend.slow_length());
  return r;
}

inline std::string head(const std::string& id, const HashBackend& b) {
  return "$" + id + "$v=" + std::to_string(kEnvelopeVersion) + "$h1=" + b.to_string();
}

}  // namespace envelope_detail

inline std::string emit(const HotpRecord& r) {
  using namespace envelope_detail;
  return head(scheme_id(r), r.backend) + "$ctr=" + std::to_string(r.counter) +
         "$k=" + std::to_string(r.diffs.size()) + "$diff=" + join_decimal(r.diffs) +
         "$blind=" + to_base64(r.blind) + "$salt=" + to_base64(r.salt) +
         "$outer=" + to_base64(r.outer);
}

inline std::string emit(const TotpRecord& r) {
  using namespace envelope_detail;
  return head(scheme_id(r), r.backend) + "$ctr=" + std::to_string(r.counter) +
         "$t0=" + std::to_string(r.params.t0) + "$tx=" + std::to_string(r.params.tx) +
         "$w=" + std::to_string(r.offsets.size()) + "$off=" + pack_offsets(r.offsets) +
         "$blind=" + to_base64(r.blind) + "$salt=" + to_base64(r.salt) +
         "$outer=" + to_base64(r.outer);
}

inline std::string emit(const OobaRecord& r) {
  using namespace envelope_detail;
  return head(scheme_id(r), r.backend) + "$ct=" + to_base64(r.ct) + "$pk=" + r.pk +
         "$diff=" + r.diff.text() + "$salt=" + to_base64(r.salt) +
         "$digest=" + to_base64(r.digest);
}

inline std::string emit(const Hsha1Record& r) {
  using namespace envelope_detail;
  return head(scheme_id(r), r.backend) + "$blind=" + to_base64(r.blind) +
         "$chal=" + to_base64(r.challenge) + "$salt=" + to_base64(r.salt) +
         "$digest=" + to_base64(r.digest);
}

inline std::string emit(const RecoveryCodeRecord& r) {
  using namespace envelope_detail;
  return head(scheme_id(r), r.backend) + "$salt=" + to_base64(r.salt) +
         "$digest=" + to_base64(r.digest);
}

inline std::string emit(const HashRecord& r) {
  return std::visit([](const auto& x) { return emit(x); }, r);
}

inline HashRecord parse(std::string_view text) {
  using namespace envelope_detail;
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find('$', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (parts.size() < 2 || !parts[0].empty()) fail(Kind::kBadScheme, "", "missing scheme");
  const std::string_view id = parts[1];
  std::uint32_t digits = 0;
  enum { kHotp, kTotp, kOoba, kHsha1, kRcode } scheme;
  if ((digits = scheme_digits(id, "mfchf-hotp", 9))) {
    scheme = kHotp;
  } else if ((digits = scheme_digits(id, "mfchf-totp", 9))) {
    scheme = kTotp;
  } else if ((digits = scheme_digits(id, "mfchf-ooba", kOobaDigits))) {
    scheme = kOoba;
  } else if (id == "mfchf-hsha1") {
    scheme = kHsha1;
  } else if (id == "mfchf-rcode") {
    scheme = kRcode;
  } else {
    fail(Kind::kBadScheme, "", "unknown scheme id");
  }
  if (parts.size() < 3 || parts[2] != "v=" + std::to_string(kEnvelopeVersion)) {
    fail(Kind::kBadVersion, "v", "unsupported version");
  }
  if (parts.size() < 4 || parts[3].substr(0, 3) != "h1=") {
    fail(Kind::kMalformedField, "h1", "missing hash parameters");
  }
  const HashBackend backend = parse_backend(parts[3].substr(3));
  std::vector<std::string_view> rest(parts.begin(), parts.end());
  rest.erase(rest.begin() + 3);
  switch (scheme) {
    case kHotp:
      return parse_hotp(digits, backend, rest);
    case kTotp:
      return parse_totp(digits, backend, rest);
    case kOoba:
      return parse_ooba(digits, backend, rest);
    case kHsha1:
      return parse_hsha1(backend, rest);
    case kRcode:
      return parse_rcode(backend, rest);
  }
  fail(Kind::kBadScheme, "", "unknown scheme id");
}

// Parses and requires a specific record type.
template <class Record>
Record parse_as(std::string_view text) {
  HashRecord r = parse(text);
  if (auto* p = std::get_if<Record>(&r)) return std::move(*p);
  envelope_detail::fail(ParseError::Kind::kBadScheme, "", "unexpected scheme for this slot");
}

}  // namespace mfchf
