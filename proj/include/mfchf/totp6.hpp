#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "mfchf/backend.hpp"
#include "mfchf/hotp6.hpp"
#include "mfchf/primitives.hpp"
#include "mfchf/random.hpp"
#include "mfchf/records.hpp"

namespace mfchf {

inline constexpr std::uint32_t kMaxTotpWindow = 1u << 20;

struct TotpSetup {
  TotpRecord record;
  HmacKey key;
};

// Outcome of the decision phase of a TOTP login. On accept it carries the
// unblinded key and target needed to refresh the offset array later, so the
// expensive refresh can run off the login path.
class TotpDecision {
 public:
  Verdict verdict = Verdict::kReject;
  std::optional<SessionSecret> session;
  std::size_t index = 0;

  bool accepted() const { return verdict == Verdict::kAccept; }

 private:
  friend TotpDecision totp6_decide(std::string_view, const Otp&, const TotpRecord&,
                                   std::int64_t);
  friend TotpRecord totp6_refresh(const TotpRecord&, const TotpDecision&);

  std::optional<HmacKey> key_;
  Otp target_;
  std::uint64_t interval_ = 0;
};

inline TotpSetup totp6_setup(std::string_view password, const TotpParams& params,
                             std::int64_t now, const HashBackend& backend = HashBackend(),
                             RandomSource& rng = system_random(),
                             std::size_t key_length = kDefaultKeyLength) {
  params.validate();
  if (params.window > kMaxTotpWindow) throw InvalidArgument("TOTP window too large");
  HmacKey key = HmacKey::random(rng, key_length);
  backend.require_pad_for(key.size());
  const Otp target =
      Otp::decimal(rng.uniform(otp_modulus(10, params.digits)), params.digits);

  TotpRecord r;
  r.params = params;
  r.backend = backend;
  r.counter = params.interval(now);
  r.offsets = hotp_offsets(key, target, r.counter, params.window);
  r.salt = rng.bytes(kSaltLength);
  Bytes inner = slow_hash(backend, password, target, r.salt);
  r.blind = xor_blind(key.bytes(), inner);
  r.outer = backend.fast(inner);
  wipe(inner);
  return {std::move(r), std::move(key)};
}

inline TotpDecision totp6_decide(std::string_view password, const Otp& otp,
                                 const TotpRecord& record, std::int64_t now) {
  if (otp.radix != 10 || otp.digits != record.params.digits) {
    throw InvalidArgument("OTP does not match the record's digit count");
  }
  TotpDecision d;
  if (now < record.params.t0) {
    d.verdict = Verdict::kOutOfWindow;
    return d;
  }
  const std::uint64_t current = record.params.interval(now);
  if (current < record.counter || current - record.counter >= record.offsets.size()) {
    d.verdict = Verdict::kOutOfWindow;
    return d;
  }
  const std::size_t index = static_cast<std::size_t>(current - record.counter);
  const Otp target = mod_recover(record.offsets[index], otp);
  Bytes inner = slow_hash(record.backend, password, target, record.salt);
  if (!ct_equal(record.backend.fast(inner), record.outer)) {
    wipe(inner);
    return d;
  }
  d.verdict = Verdict::kAccept;
  d.index = index;
  d.session = detail::target_session(scheme_id(record), target);
  d.key_.emplace(xor_blind(record.blind, inner));
  d.target_ = target;
  d.interval_ = current;
  wipe(inner);
  return d;
}

// Rebases the offset array on the interval of an accepted decision.
inline TotpRecord totp6_refresh(const TotpRecord& record, const TotpDecision& decision) {
  if (!decision.accepted() || !decision.key_) {
    throw InvalidArgument("refresh requires an accepted decision");
  }
  TotpRecord next = record;
  next.counter = decision.interval_;
  next.offsets = hotp_offsets(*decision.key_, decision.target_, next.counter,
                              record.offsets.size());
  return next;
}

inline Verification<TotpRecord> totp6_verify(std::string_view password, const Otp& otp,
                                             const TotpRecord& record, std::int64_t now) {
  TotpDecision d = totp6_decide(password, otp, record, now);
  Verification<TotpRecord> v;
  v.verdict = d.verdict;
  if (!d.accepted()) return v;
  v.matched_index = d.index;
  v.record = totp6_refresh(record, d);
  v.session = std::move(d.session);
  return v;
}

}  // namespace mfchf
