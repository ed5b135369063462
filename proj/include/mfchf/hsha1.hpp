#pragma once

#include <string_view>

#include "mfchf/backend.hpp"
#include "mfchf/primitives.hpp"
#include "mfchf/random.hpp"
#include "mfchf/records.hpp"

namespace mfchf {

inline constexpr std::size_t kChallengeLength = 20;

namespace detail {

inline Bytes hsha1_blind(const HmacKey& key, ByteView challenge) {
  const auto response = hmac_sha1(key, challenge);
  return xor_blind(key.bytes(), response);
}

}  // namespace detail

inline Hsha1Record hsha1_setup(std::string_view password, const HmacKey& key,
                               const HashBackend& backend = HashBackend(),
                               RandomSource& rng = system_random()) {
  if (key.size() != kSha1Length) throw InvalidArgument("hsha1 key must be 20 bytes");
  Hsha1Record r;
  r.backend = backend;
  r.challenge = rng.bytes(kChallengeLength);
  r.salt = rng.bytes(kSaltLength);
  r.digest = slow_hash(backend, password, Bytes(key.bytes().begin(), key.bytes().end()),
                       r.salt);
  r.blind = detail::hsha1_blind(key, r.challenge);
  return r;
}

inline Verification<Hsha1Record> hsha1_verify(std::string_view password, ByteView response,
                                              const Hsha1Record& record,
                                              RandomSource& rng = system_random()) {
  Verification<Hsha1Record> v;
  if (response.size() != kSha1Length || record.blind.size() != kSha1Length) return v;
  Bytes candidate = xor_blind(record.blind, response);
  if (!ct_equal(slow_hash(record.backend, password, candidate, record.salt), record.digest)) {
    wipe(candidate);
    return v;
  }
  HmacKey key(std::move(candidate));
  Hsha1Record updated = record;
  updated.challenge = rng.bytes(kChallengeLength);
  updated.blind = detail::hsha1_blind(key, updated.challenge);
  v.verdict = Verdict::kAccept;
  v.record = std::move(updated);
  v.session = detail::make_session(scheme_id(record),
                                   Bytes(key.bytes().begin(), key.bytes().end()));
  return v;
}

}  // namespace mfchf
