#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "mfchf/bytes.hpp"
#include "mfchf/primitives.hpp"

namespace mfchf {

inline constexpr std::size_t kSaltLength = 32;
inline constexpr std::size_t kFastHashLength = crypto_hash_sha256_BYTES;

// The second input of the slow hash: an OTP-domain target, or a fixed-length
// octet string (the hsha1 key, a recovery-code digest). Empty bytes mean
// "no second factor", used only by the single-factor attack baseline.
using HashTarget = std::variant<Otp, Bytes>;

// password || 0x00 || target || 0x00 || salt. The target and salt are fixed
// width for a given scheme, so the password boundary is determined by length.
inline Bytes encode_message(std::string_view password, const HashTarget& target,
                            ByteView salt) {
  Bytes msg;
  msg.reserve(password.size() + salt.size() + 80);
  auto pw = as_bytes(password);
  msg.insert(msg.end(), pw.begin(), pw.end());
  msg.push_back(0x00);
  if (const auto* otp = std::get_if<Otp>(&target)) {
    const std::string text = otp->text();
    msg.insert(msg.end(), text.begin(), text.end());
  } else {
    const auto& raw = std::get<Bytes>(target);
    msg.insert(msg.end(), raw.begin(), raw.end());
  }
  msg.push_back(0x00);
  msg.insert(msg.end(), salt.begin(), salt.end());
  return msg;
}

// H1 (adaptive password hash) plus H2 (SHA-256). H1 is selected by name so
// the overhead benchmarks and tests can swap in a fast hash.
class HashBackend {
 public:
  enum class Kind { kArgon2id, kSha256 };

  static constexpr std::uint32_t kDefaultMemoryKib = 19456;
  static constexpr std::uint32_t kDefaultTimeCost = 2;
  static constexpr std::uint32_t kDefaultParallelism = 1;
  static constexpr std::uint32_t kDefaultOutputLength = 32;
  static constexpr std::uint32_t kMinMemoryKib = 8;
  static constexpr std::uint32_t kMaxMemoryKib = 4u << 20;
  static constexpr std::uint32_t kMaxTimeCost = 10000;
  static constexpr std::uint32_t kMinOutputLength = 32;
  static constexpr std::uint32_t kMaxOutputLength = 64;

  HashBackend() = default;

  static HashBackend argon2id(std::uint32_t memory_kib = kDefaultMemoryKib,
                              std::uint32_t time_cost = kDefaultTimeCost,
                              std::uint32_t parallelism = kDefaultParallelism,
                              std::uint32_t output_length = kDefaultOutputLength) {
    HashBackend b;
    b.kind_ = Kind::kArgon2id;
    b.memory_kib_ = memory_kib;
    b.time_cost_ = time_cost;
    b.parallelism_ = parallelism;
    b.output_length_ = output_length;
    b.validate();
    return b;
  }

  // SHA-256 standing in for H1: isolates construction overhead in benchmarks.
  static HashBackend sha256() {
    HashBackend b;
    b.kind_ = Kind::kSha256;
    b.output_length_ = 32;
    return b;
  }

  // Smallest Argon2id cost libsodium accepts; for tests and desk-scale attacks.
  static HashBackend cheap() { return argon2id(kMinMemoryKib, 1); }

  // "sha256" | "argon2id[,m=<kib>][,t=<n>][,p=<n>][,l=<bytes>]". Parameters
  // equal to the defaults are omitted by to_string().
  static HashBackend from_string(std::string_view text) {
    if (text == "sha256") return sha256();
    constexpr std::string_view kPrefix = "argon2id";
    if (text.substr(0, kPrefix.size()) != kPrefix) {
      throw InvalidArgument("unknown hash backend");
    }
    std::uint32_t values[4] = {kDefaultMemoryKib, kDefaultTimeCost,
                               kDefaultParallelism, kDefaultOutputLength};
    static constexpr char kNames[4] = {'m', 't', 'p', 'l'};
    std::string_view rest = text.substr(kPrefix.size());
    int next = 0;
    while (!rest.empty()) {
      if (rest.size() < 4 || rest[0] != ',' || rest[2] != '=') {
        throw InvalidArgument("malformed backend parameters");
      }
      int idx = next;
      while (idx < 4 && kNames[idx] != rest[1]) ++idx;
      if (idx == 4) throw InvalidArgument("unknown or misordered backend parameter");
      rest.remove_prefix(3);
      std::size_t end = rest.find(',');
      std::string_view num = rest.substr(0, end);
      if (num.empty() || (num.size() > 1 && num[0] == '0')) {
        throw InvalidArgument("malformed backend parameter value");
      }
      auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), values[idx]);
      if (ec != std::errc() || ptr != num.data() + num.size()) {
        throw InvalidArgument("malformed backend parameter value");
      }
      rest.remove_prefix(num.size());
      next = idx + 1;
    }
    return argon2id(values[0], values[1], values[2], values[3]);
  }

  std::string to_string() const {
    if (kind_ == Kind::kSha256) return "sha256";
    std::string s = "argon2id";
    if (memory_kib_ != kDefaultMemoryKib) s += ",m=" + std::to_string(memory_kib_);
    if (time_cost_ != kDefaultTimeCost) s += ",t=" + std::to_string(time_cost_);
    if (parallelism_ != kDefaultParallelism) s += ",p=" + std::to_string(parallelism_);
    if (output_length_ != kDefaultOutputLength) s += ",l=" + std::to_string(output_length_);
    return s;
  }

  Kind kind() const { return kind_; }
  std::uint32_t memory_kib() const { return memory_kib_; }
  std::uint32_t time_cost() const { return time_cost_; }
  std::size_t slow_length() const { return output_length_; }
  std::size_t fast_length() const { return kFastHashLength; }

  // The blind pad is the leading bytes of H1 output.
  void require_pad_for(std::size_t key_length) const {
    if (slow_length() < key_length) {
      throw InvalidArgument("H1 output shorter than the key it must blind");
    }
  }

  Bytes slow(ByteView message, ByteView salt) const {
    if (salt.size() != kSaltLength) throw InvalidArgument("salt must be 32 bytes");
    detail::ensure_sodium();
    Bytes out(output_length_);
    if (kind_ == Kind::kSha256) {
      crypto_hash_sha256(out.data(), message.data(), message.size());
      return out;
    }
    // Argon2id takes a 16-byte salt; the full 32-byte salt is in the message.
    if (crypto_pwhash(out.data(), out.size(), reinterpret_cast<const char*>(message.data()),
                      message.size(), salt.data(), time_cost_,
                      static_cast<std::size_t>(memory_kib_) * 1024,
                      crypto_pwhash_ALG_ARGON2ID13) != 0) {
      throw BackendError("argon2id failed (out of memory?)");
    }
    return out;
  }

  Bytes fast(ByteView data) const {
    detail::ensure_sodium();
    Bytes out(kFastHashLength);
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
  }

  friend bool operator==(const HashBackend&, const HashBackend&) = default;

 private:
  void validate() const {
    if (memory_kib_ < kMinMemoryKib || memory_kib_ > kMaxMemoryKib) {
      throw InvalidArgument("argon2id memory cost out of range");
    }
    if (time_cost_ < 1 || time_cost_ > kMaxTimeCost) {
      throw InvalidArgument("argon2id time cost out of range");
    }
    if (parallelism_ != 1) throw InvalidArgument("argon2id parallelism must be 1");
    if (output_length_ < kMinOutputLength || output_length_ > kMaxOutputLength) {
      throw InvalidArgument("argon2id output length must be 32..64");
    }
  }

  Kind kind_ = Kind::kArgon2id;
  std::uint32_t memory_kib_ = kDefaultMemoryKib;
  std::uint32_t time_cost_ = kDefaultTimeCost;
  std::uint32_t parallelism_ = kDefaultParallelism;
  std::uint32_t output_length_ = kDefaultOutputLength;
};

inline Bytes slow_hash(const HashBackend& backend, std::string_view password,
                       const HashTarget& target, ByteView salt) {
  if (salt.size() != kSaltLength) throw InvalidArgument("salt must be 32 bytes");
  return backend.slow(encode_message(password, target, salt), salt);
}

}  // namespace mfchf
