#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mfchf/backend.hpp"
#include "mfchf/bytes.hpp"
#include "mfchf/primitives.hpp"

namespace mfchf {

// Server-side state of mfchf-hotp<d>. diffs[i] is the offset for counter+i.
struct HotpRecord {
  std::uint32_t digits = 6;
  std::uint64_t counter = 1;
  std::vector<Otp> diffs;
  Bytes blind;
  Bytes salt;
  Bytes outer;
  HashBackend backend;

  std::size_t window() const { return diffs.size(); }
  friend bool operator==(const HotpRecord&, const HotpRecord&) = default;
};

// Server-side state of mfchf-totp<d>. offsets[j] is the offset for interval
// counter+j; params.window == offsets.size().
struct TotpRecord {
  std::uint64_t counter = 0;
  std::vector<Otp> offsets;
  Bytes blind;
  Bytes salt;
  Bytes outer;
  TotpParams params;
  HashBackend backend;

  friend bool operator==(const TotpRecord&, const TotpRecord&) = default;
};

// Server-side state of mfchf-ooba<d>. `pk` is the recipient key fingerprint.
struct OobaRecord {
  Bytes ct;
  std::string pk;
  Otp diff = Otp::base36(0);
  Bytes salt;
  Bytes digest;
  HashBackend backend;

  std::uint32_t digits() const { return diff.digits; }
  friend bool operator==(const OobaRecord&, const OobaRecord&) = default;
};

// Server-side state of mfchf-hsha1 (YubiKey HMAC-SHA1 challenge-response).
struct Hsha1Record {
  Bytes blind;
  Bytes challenge;
  Bytes salt;
  Bytes digest;
  HashBackend backend;

  friend bool operator==(const Hsha1Record&, const Hsha1Record&) = default;
};

// Static two-factor hash over (password, recovery code); used by accounts
// for authenticator recovery.
struct RecoveryCodeRecord {
  Bytes salt;
  Bytes digest;
  HashBackend backend;

  friend bool operator==(const RecoveryCodeRecord&, const RecoveryCodeRecord&) = default;
};

using HashRecord =
    std::variant<HotpRecord, TotpRecord, OobaRecord, Hsha1Record, RecoveryCodeRecord>;

inline std::string scheme_id(const HotpRecord& r) {
  return "mfchf-hotp" + std::to_string(r.digits);
}
inline std::string scheme_id(const TotpRecord& r) {
  return "mfchf-totp" + std::to_string(r.params.digits);
}
inline std::string scheme_id(const OobaRecord& r) {
  return "mfchf-ooba" + std::to_string(r.digits());
}
inline std::string scheme_id(const Hsha1Record&) { return "mfchf-hsha1"; }
inline std::string scheme_id(const RecoveryCodeRecord&) { return "mfchf-rcode"; }
inline std::string scheme_id(const HashRecord& r) {
  return std::visit([](const auto& x) { return scheme_id(x); }, r);
}

// Brute-force search space added by the second factor, in bits.
inline double factor_entropy_bits(std::string_view scheme) {
  if (scheme == "mfchf-hsha1") return 8.0 * kSha1Length;
  if (scheme.size() != 11 || scheme[10] < '1' || scheme[10] > '9') return 0.0;
  const double digits = scheme[10] - '0';
  const std::string_view family = scheme.substr(0, 10);
  if (family == "mfchf-hotp" || family == "mfchf-totp") return digits * std::log2(10.0);
  if (family == "mfchf-ooba") return digits * std::log2(36.0);
  return 0.0;
}

enum class Verdict {
  kAccept,
  kReject,
  // TOTP only: the current interval has no stored offset.
  kOutOfWindow,
};

class SessionSecret;

namespace detail {
inline SessionSecret make_session(std::string scheme, Bytes value);
}  // namespace detail

// The ephemeral factor secret exposed by an accepted verify: the recovered
// target (as canonical text) for OTP schemes, the HMAC key for hsha1. Only
// verify can create one; mint a persistence token from it or drop it.
class SessionSecret {
 public:
  SessionSecret(const SessionSecret&) = default;
  SessionSecret(SessionSecret&&) noexcept = default;
  SessionSecret& operator=(const SessionSecret&) = default;
  SessionSecret& operator=(SessionSecret&&) noexcept = default;
  ~SessionSecret() { wipe(value_); }

  const std::string& scheme() const { return scheme_; }
  ByteView value() const { return value_; }

 private:
  friend SessionSecret detail::make_session(std::string, Bytes);
  SessionSecret(std::string scheme, Bytes value)
      : scheme_(std::move(scheme)), value_(std::move(value)) {}

  std::string scheme_;
  Bytes value_;
};

// Result of Verify. `record` and `session` are set only on accept; on reject
// the caller keeps its stored record untouched.
template <class Record>
struct Verification {
  Verdict verdict = Verdict::kReject;
  std::optional<Record> record;
  std::optional<SessionSecret> session;
  // Position in the validation window that matched (HOTP); 0 otherwise.
  std::size_t matched_index = 0;

  bool accepted() const { return verdict == Verdict::kAccept; }
  explicit operator bool() const { return accepted(); }
};

namespace detail {

inline SessionSecret make_session(std::string scheme, Bytes value) {
  return SessionSecret(std::move(scheme), std::move(value));
}

inline SessionSecret target_session(std::string scheme, const Otp& target) {
  return make_session(std::move(scheme), to_bytes(target.text()));
}

}  // namespace detail

}  // namespace mfchf
