#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mfchf/backend.hpp"
#include "mfchf/envelope.hpp"
#include "mfchf/hotp6.hpp"
#include "mfchf/hsha1.hpp"
#include "mfchf/ooba6.hpp"
#include "mfchf/pke.hpp"
#include "mfchf/records.hpp"
#include "mfchf/totp6.hpp"

namespace mfchf {

// Password + HOTP account with recovery, built from three two-factor hashes:
//   primary            password      x HOTP target
//   password_recovery  recovery code x HOTP target  (same key, counter, target)
//   hotp_recovery      password      x recovery code
// No single factor opens any of them.
struct AccountBundle {
  HotpRecord primary;
  HotpRecord password_recovery;
  RecoveryCodeRecord hotp_recovery;
  // Bumped on every accepted state change; compare-and-swap token for stores.
  std::uint64_t revision = 0;

  friend bool operator==(const AccountBundle&, const AccountBundle&) = default;
};

struct AccountSetup {
  AccountBundle bundle;
  HmacKey key;
};

// Account-level result. `key` is set only by HOTP recovery.
struct AccountResult {
  Verdict verdict = Verdict::kReject;
  std::optional<AccountBundle> bundle;
  std::optional<SessionSecret> session;
  std::optional<HmacKey> key;

  bool accepted() const { return verdict == Verdict::kAccept; }
  explicit operator bool() const { return accepted(); }
};

inline constexpr std::size_t kRecoveryCodeBytes = 16;

// 128 random bits rendered as unpadded base32 in groups of four.
inline std::string generate_recovery_code(RandomSource& rng = system_random()) {
  Bytes raw = rng.bytes(kRecoveryCodeBytes);
  const std::string b32 = to_base32(raw);
  wipe(raw);
  std::string out;
  for (std::size_t i = 0; i < b32.size(); ++i) {
    if (i && i % 4 == 0) out += '-';
    out += b32[i];
  }
  return out;
}

namespace detail {

inline Bytes recovery_code_target(std::string_view code) {
  Bytes digest(crypto_hash_sha256_BYTES);
  detail::ensure_sodium();
  crypto_hash_sha256(digest.data(), as_bytes(code).data(), code.size());
  return digest;
}

inline RecoveryCodeRecord rcode_build(std::string_view password, std::string_view code,
                                      const HashBackend& backend, RandomSource& rng) {
  RecoveryCodeRecord r;
  r.backend = backend;
  r.salt = rng.bytes(kSaltLength);
  r.digest = slow_hash(backend, password, recovery_code_target(code), r.salt);
  return r;
}

inline bool rcode_check(std::string_view password, std::string_view code,
                        const RecoveryCodeRecord& r) {
  return ct_equal(slow_hash(r.backend, password, recovery_code_target(code), r.salt),
                  r.digest);
}

inline AccountBundle build_bundle(std::string_view password, std::string_view code,
                                  const HmacKey& key, const Otp& target,
                                  std::uint64_t counter, std::size_t window,
                                  const HashBackend& backend, RandomSource& rng) {
  AccountBundle b;
  b.primary = hotp6_build(password, key, target, counter, window, backend, rng);
  b.password_recovery = hotp6_build(code, key, target, counter, window, backend, rng);
  b.hotp_recovery = rcode_build(password, code, backend, rng);
  return b;
}

}  // namespace detail

inline AccountSetup account_setup(std::string_view password, std::string_view recovery_code,
                                  const HashBackend& backend = HashBackend(),
                                  RandomSource& rng = system_random(),
                                  std::size_t window = kDefaultHotpWindow,
                                  std::uint32_t digits = 6) {
  if (recovery_code.empty()) throw InvalidArgument("recovery code must be nonempty");
  HmacKey key = HmacKey::random(rng);
  const Otp target = Otp::decimal(rng.uniform(otp_modulus(10, digits)), digits);
  AccountBundle b =
      detail::build_bundle(password, recovery_code, key, target, 1, window, backend, rng);
  return {std::move(b), std::move(key)};
}

inline AccountResult account_login(std::string_view password, const Otp& otp,
                                   const AccountBundle& bundle) {
  AccountResult res;
  auto unlock = detail::hotp6_unlock(password, otp, bundle.primary);
  if (!unlock) return res;
  AccountBundle next = bundle;
  next.primary = detail::hotp6_advance(bundle.primary, *unlock);
  next.password_recovery.counter = next.primary.counter;
  next.password_recovery.diffs = hotp_offsets(unlock->key, unlock->target, next.primary.counter,
                                              bundle.password_recovery.window());
  ++next.revision;
  res.verdict = Verdict::kAccept;
  res.bundle = std::move(next);
  res.session = detail::target_session(scheme_id(bundle.primary), unlock->target);
  return res;
}

// Recovery code + current OTP open the password-recovery hash, which yields
// the HOTP key and target; the primary hash is rebuilt for the new password.
inline AccountResult recover_password(std::string_view recovery_code, const Otp& otp,
                                      std::string_view new_password,
                                      const AccountBundle& bundle,
                                      RandomSource& rng = system_random()) {
  AccountResult res;
  auto unlock = detail::hotp6_unlock(recovery_code, otp, bundle.password_recovery);
  if (!unlock) return res;
  AccountBundle next = bundle;
  next.password_recovery = detail::hotp6_advance(bundle.password_recovery, *unlock);
  next.primary = detail::hotp6_build(new_password, unlock->key, unlock->target,
                                     next.password_recovery.counter, bundle.primary.window(),
                                     bundle.primary.backend, rng);
  next.hotp_recovery =
      detail::rcode_build(new_password, recovery_code, bundle.hotp_recovery.backend, rng);
  ++next.revision;
  res.verdict = Verdict::kAccept;
  res.bundle = std::move(next);
  return res;
}

// Password + recovery code replace a lost authenticator: fresh key and
// target, both OTP hashes rebuilt at counter 1.
inline AccountResult recover_hotp(std::string_view password, std::string_view recovery_code,
                                  const AccountBundle& bundle,
                                  RandomSource& rng = system_random()) {
  AccountResult res;
  if (!detail::rcode_check(password, recovery_code, bundle.hotp_recovery)) return res;
  HmacKey key = HmacKey::random(rng);
  const std::uint32_t digits = bundle.primary.digits;
  const Otp target = Otp::decimal(rng.uniform(otp_modulus(10, digits)), digits);
  AccountBundle next = bundle;
  next.primary = detail::hotp6_build(password, key, target, 1, bundle.primary.window(),
                                     bundle.primary.backend, rng);
  next.password_recovery =
      detail::hotp6_build(recovery_code, key, target, 1, bundle.password_recovery.window(),
                          bundle.password_recovery.backend, rng);
  ++next.revision;
  res.verdict = Verdict::kAccept;
  res.bundle = std::move(next);
  res.key = std::move(key);
  return res;
}

// Brute-force cost of each stored hash, as (path, bits).
struct PathEntropy {
  std::string path;
  double bits;
};

inline std::vector<PathEntropy> bundle_entropy(double password_bits,
                                               double recovery_code_bits = 128.0,
                                               std::uint32_t digits = 6) {
  const double otp_bits = factor_entropy_bits("mfchf-hotp" + std::to_string(digits));
  return {{"password+hotp", password_bits + otp_bits},
          {"recovery-code+hotp", recovery_code_bits + otp_bits},
          {"password+recovery-code", password_bits + recovery_code_bits}};
}

inline double weakest_path_bits(const std::vector<PathEntropy>& paths) {
  double m = paths.empty() ? 0.0 : paths.front().bits;
  for (const auto& p : paths) m = std::min(m, p.bits);
  return m;
}

// --- bundle serialization ----------------------------------------------------

inline constexpr std::string_view kBundleHeader = "mfchf-bundle v=1 rev=";

inline std::string emit_bundle(const AccountBundle& b) {
  return std::string(kBundleHeader) + std::to_string(b.revision) + "\n" + emit(b.primary) +
         "\n" + emit(b.password_recovery) + "\n" + emit(b.hotp_recovery) + "\n";
}

inline AccountBundle parse_bundle(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    if (nl == std::string_view::npos) {
      throw ParseError(ParseError::Kind::kMalformedField, "", "bundle: missing final newline");
    }
    lines.push_back(text.substr(0, nl));
    text.remove_prefix(nl + 1);
  }
  if (lines.size() != 4 || lines[0].substr(0, kBundleHeader.size()) != kBundleHeader) {
    throw ParseError(ParseError::Kind::kBadVersion, "", "bundle: bad header");
  }
  AccountBundle b;
  b.revision = envelope_detail::parse_int<std::uint64_t>(
      "rev", lines[0].substr(kBundleHeader.size()));
  b.primary = parse_as<HotpRecord>(lines[1]);
  b.password_recovery = parse_as<HotpRecord>(lines[2]);
  b.hotp_recovery = parse_as<RecoveryCodeRecord>(lines[3]);
  return b;
}

// --- factor persistence --------------------------------------------------------

// Trusted-device token: the target (OTP schemes) or HMAC key (hsha1) that an
// accepted verify surfaced. Only useful together with the password.
struct PersistenceToken {
  Bytes value;
  std::string scheme;
  std::int64_t issued_at = 0;

  // "<scheme>.<issued_at>.<base64 value>"
  std::string encode() const {
    return scheme + "." + std::to_string(issued_at) + "." + to_base64(value);
  }

  static std::optional<PersistenceToken> decode(std::string_view text) {
    const std::size_t a = text.find('.');
    const std::size_t b = a == std::string_view::npos ? a : text.find('.', a + 1);
    if (b == std::string_view::npos) return std::nullopt;
    PersistenceToken t;
    t.scheme = std::string(text.substr(0, a));
    try {
      t.issued_at = envelope_detail::parse_int<std::int64_t>("issued", text.substr(a + 1, b - a - 1));
    } catch (const ParseError&) {
      return std::nullopt;
    }
    auto v = from_base64(text.substr(b + 1));
    if (!v) return std::nullopt;
    t.value = std::move(*v);
    return t;
  }
};

inline PersistenceToken mint_persistence(const SessionSecret& session, std::int64_t now) {
  PersistenceToken t;
  t.scheme = session.scheme();
  t.value.assign(session.value().begin(), session.value().end());
  t.issued_at = now;
  return t;
}

namespace detail {

inline std::optional<Otp> token_target(const PersistenceToken& token, std::uint32_t radix,
                                       std::uint32_t digits) {
  try {
    return Otp::parse(to_string(token.value), radix, digits);
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Password + token login. Consumes no OTP and never changes the record.
inline Verdict login_persistent(std::string_view password, const PersistenceToken& token,
                                const HotpRecord& r) {
  if (token.scheme != scheme_id(r)) return Verdict::kReject;
  auto target = detail::token_target(token, 10, r.digits);
  if (!target) return Verdict::kReject;
  return ct_equal(r.backend.fast(slow_hash(r.backend, password, *target, r.salt)), r.outer)
             ? Verdict::kAccept
             : Verdict::kReject;
}

inline Verdict login_persistent(std::string_view password, const PersistenceToken& token,
                                const TotpRecord& r) {
  if (token.scheme != scheme_id(r)) return Verdict::kReject;
  auto target = detail::token_target(token, 10, r.params.digits);
  if (!target) return Verdict::kReject;
  return ct_equal(r.backend.fast(slow_hash(r.backend, password, *target, r.salt)), r.outer)
             ? Verdict::kAccept
             : Verdict::kReject;
}

inline Verdict login_persistent(std::string_view password, const PersistenceToken& token,
                                const OobaRecord& r) {
  if (token.scheme != scheme_id(r)) return Verdict::kReject;
  auto target = detail::token_target(token, 36, r.digits());
  if (!target) return Verdict::kReject;
  return ct_equal(slow_hash(r.backend, password, *target, r.salt), r.digest)
             ? Verdict::kAccept
             : Verdict::kReject;
}

inline Verdict login_persistent(std::string_view password, const PersistenceToken& token,
                                const Hsha1Record& r) {
  if (token.scheme != scheme_id(r) || token.value.size() != kSha1Length) {
    return Verdict::kReject;
  }
  return ct_equal(slow_hash(r.backend, password, token.value, r.salt), r.digest)
             ? Verdict::kAccept
             : Verdict::kReject;
}

inline Verdict login_persistent(std::string_view password, const PersistenceToken& token,
                                const AccountBundle& b) {
  return login_persistent(password, token, b.primary);
}

// --- OOBA delivery channel -----------------------------------------------------

class TransportError : public Error {
 public:
  using Error::Error;
};

struct DeliveryReceipt {
  std::string transport;
  std::string message_id;
  std::size_t bytes = 0;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual DeliveryReceipt send(const std::string& recipient, ByteView payload) = 0;
};

// In-process transport that plays the recipient: it decrypts each payload
// and exposes the OTP for tests and demos.
class LoopbackTransport final : public Transport {
 public:
  explicit LoopbackTransport(SealedBoxDecryptor recipient) : recipient_(std::move(recipient)) {}

  DeliveryReceipt send(const std::string& recipient, ByteView payload) override {
    if (fail_next_) {
      fail_next_ = false;
      throw TransportError("loopback: injected delivery failure");
    }
    payloads_.emplace_back(payload.begin(), payload.end());
    last_otp_ = to_string(recipient_.decrypt(payload));
    return {"loopback", recipient + "#" + std::to_string(payloads_.size()), payload.size()};
  }

  void fail_next() { fail_next_ = true; }
  const std::vector<Bytes>& payloads() const { return payloads_; }
  const std::optional<std::string>& last_otp() const { return last_otp_; }

 private:
  SealedBoxDecryptor recipient_;
  std::vector<Bytes> payloads_;
  std::optional<std::string> last_otp_;
  bool fail_next_ = false;
};

// Writes each ciphertext to <dir>/<recipient>.<n>.ct for an external mailer.
class SpoolTransport final : public Transport {
 public:
  explicit SpoolTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

  DeliveryReceipt send(const std::string& recipient, ByteView payload) override {
    std::string safe;
    for (char c : recipient) safe += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    for (std::size_t n = 1;; ++n) {
      const auto path = dir_ / (safe + "." + std::to_string(n) + ".ct");
      if (std::filesystem::exists(path)) continue;
      std::ofstream out(path, std::ios::binary);
      out.write(reinterpret_cast<const char*>(payload.data()),
                static_cast<std::streamsize>(payload.size()));
      if (!out) throw TransportError("spool: cannot write " + path.string());
      return {"spool", path.string(), payload.size()};
    }
  }

 private:
  std::filesystem::path dir_;
};

struct OobaChannel {
  Transport* transport = nullptr;
  // Fingerprint of the recipient public key the records are encrypted to.
  std::string recipient;
};

// Forwards the pending ciphertext; the record is never modified.
inline DeliveryReceipt ooba_deliver(OobaChannel& channel, const OobaRecord& record) {
  if (channel.transport == nullptr) throw InvalidArgument("channel has no transport");
  if (channel.recipient != record.pk) {
    throw InvalidArgument("channel recipient does not match the record");
  }
  return channel.transport->send(channel.recipient, ooba6_challenge(record));
}

}  // namespace mfchf
