#pragma once

#include <string_view>

#include "mfchf/backend.hpp"
#include "mfchf/pke.hpp"
#include "mfchf/primitives.hpp"
#include "mfchf/random.hpp"
#include "mfchf/records.hpp"

namespace mfchf {

inline constexpr std::uint32_t kOobaDigits = 6;

namespace detail {

inline Otp random_base36(RandomSource& rng, std::uint32_t digits) {
  return Otp::base36(rng.uniform(otp_modulus(36, digits)), digits);
}

inline void check_recipient(const OobaRecord& record, const Encryptor& encryptor) {
  if (encryptor.fingerprint() != record.pk) {
    throw InvalidArgument("encryptor key does not match the record's recipient");
  }
}

}  // namespace detail

inline OobaRecord ooba6_setup(std::string_view password, const Encryptor& encryptor,
                              const HashBackend& backend = HashBackend(),
                              RandomSource& rng = system_random(),
                              std::uint32_t digits = kOobaDigits) {
  if (digits < 1 || digits > kOobaDigits) throw InvalidArgument("OOBA digits must be 1..6");
  const Otp target = detail::random_base36(rng, digits);
  const Otp first = detail::random_base36(rng, digits);
  OobaRecord r;
  r.backend = backend;
  r.diff = mod_offset(target, first);
  r.salt = rng.bytes(kSaltLength);
  r.digest = slow_hash(backend, password, target, r.salt);
  r.ct = encryptor.encrypt(as_bytes(first.text()));
  r.pk = encryptor.fingerprint();
  return r;
}

// Ciphertext to forward over the out-of-band channel. No state change.
inline const Bytes& ooba6_challenge(const OobaRecord& record) { return record.ct; }

inline Verification<OobaRecord> ooba6_verify(std::string_view password, const Otp& otp,
                                             const OobaRecord& record,
                                             const Encryptor& encryptor,
                                             RandomSource& rng = system_random()) {
  if (!otp.same_domain(record.diff)) {
    throw InvalidArgument("OTP does not match the record's alphabet or length");
  }
  detail::check_recipient(record, encryptor);
  Verification<OobaRecord> v;
  const Otp target = mod_recover(record.diff, otp);
  if (!ct_equal(slow_hash(record.backend, password, target, record.salt), record.digest)) {
    return v;
  }
  const Otp next = detail::random_base36(rng, record.digits());
  OobaRecord updated = record;
  updated.diff = mod_offset(target, next);
  updated.ct = encryptor.encrypt(as_bytes(next.text()));
  v.verdict = Verdict::kAccept;
  v.record = std::move(updated);
  v.session = detail::target_session(scheme_id(record), target);
  return v;
}

}  // namespace mfchf
