#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mfchf/backend.hpp"
#include "mfchf/primitives.hpp"
#include "mfchf/random.hpp"
#include "mfchf/records.hpp"

namespace mfchf {

inline constexpr std::size_t kDefaultHotpWindow = 2;
inline constexpr std::size_t kMaxHotpWindow = 1000;

// Offsets (target - HOTP(key, first + i)) mod 10^d for i in [0, count).
inline std::vector<Otp> hotp_offsets(const HmacKey& key, const Otp& target,
                                     std::uint64_t first_counter, std::size_t count) {
  std::vector<Otp> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(mod_offset(target, hotp(key, first_counter + i, target.digits)));
  }
  return out;
}

struct HotpSetup {
  HotpRecord record;
  // Provisioning secret for the authenticator; not retained by the server.
  HmacKey key;
};

namespace detail {

struct HotpUnlock {
  std::size_t index;
  Otp target;
  HmacKey key;
};

inline HotpRecord hotp6_build(std::string_view password, const HmacKey& key,
                              const Otp& target, std::uint64_t counter, std::size_t window,
                              const HashBackend& backend, RandomSource& rng) {
  if (window < 1 || window > kMaxHotpWindow) {
    throw InvalidArgument("HOTP window must be 1..1000");
  }
  backend.require_pad_for(key.size());
  HotpRecord r;
  r.digits = target.digits;
  r.counter = counter;
  r.backend = backend;
  r.salt = rng.bytes(kSaltLength);
  Bytes inner = slow_hash(backend, password, target, r.salt);
  r.blind = xor_blind(key.bytes(), inner);
  r.outer = backend.fast(inner);
  wipe(inner);
  r.diffs = hotp_offsets(key, target, counter, window);
  return r;
}

// Tries each stored offset in ascending counter order; first match wins.
inline std::optional<HotpUnlock> hotp6_unlock(std::string_view password, const Otp& otp,
                                              const HotpRecord& record) {
  if (otp.radix != 10 || otp.digits != record.digits) {
    throw InvalidArgument("OTP does not match the record's digit count");
  }
  for (std::size_t i = 0; i < record.diffs.size(); ++i) {
    const Otp target = mod_recover(record.diffs[i], otp);
    Bytes inner = slow_hash(record.backend, password, target, record.salt);
    if (ct_equal(record.backend.fast(inner), record.outer)) {
      HotpUnlock u{i, target, HmacKey(xor_blind(record.blind, inner))};
      wipe(inner);
      return u;
    }
    wipe(inner);
  }
  return std::nullopt;
}

// Consumes counter+index and refreshes the window from the next counter.
inline HotpRecord hotp6_advance(const HotpRecord& record, const HotpUnlock& unlock) {
  HotpRecord next = record;
  next.counter = record.counter + unlock.index + 1;
  next.diffs = hotp_offsets(unlock.key, unlock.target, next.counter, record.window());
  return next;
}

}  // namespace detail

inline HotpSetup hotp6_setup(std::string_view password,
                             std::size_t window = kDefaultHotpWindow,
                             const HashBackend& backend = HashBackend(),
                             RandomSource& rng = system_random(), std::uint32_t digits = 6,
                             std::size_t key_length = kDefaultKeyLength) {
  HmacKey key = HmacKey::random(rng, key_length);
  const Otp target = Otp::decimal(rng.uniform(otp_modulus(10, digits)), digits);
  HotpRecord record = detail::hotp6_build(password, key, target, 1, window, backend, rng);
  return {std::move(record), std::move(key)};
}

inline Verification<HotpRecord> hotp6_verify(std::string_view password, const Otp& otp,
                                             const HotpRecord& record) {
  Verification<HotpRecord> v;
  auto unlock = detail::hotp6_unlock(password, otp, record);
  if (!unlock) return v;
  v.verdict = Verdict::kAccept;
  v.matched_index = unlock->index;
  v.record = detail::hotp6_advance(record, *unlock);
  v.session = detail::target_session(scheme_id(record), unlock->target);
  return v;
}

}  // namespace mfchf
