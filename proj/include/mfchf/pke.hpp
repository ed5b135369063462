#pragma once

#include <string>

#include "mfchf/bytes.hpp"
#include "mfchf/random.hpp"

namespace mfchf {

// Public-key encryption to an OOBA recipient. Any IND-CCA scheme fits; the
// shipped adapter is libsodium's sealed box (X25519 + XSalsa20-Poly1305).
class Encryptor {
 public:
  virtual ~Encryptor() = default;
  // Stable identifier of the recipient key, stored in the record.
  virtual std::string fingerprint() const = 0;
  virtual Bytes encrypt(ByteView plaintext) const = 0;
};

inline std::string key_fingerprint(ByteView public_key) {
  detail::ensure_sodium();
  unsigned char digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest, public_key.data(), public_key.size());
  return to_base64(ByteView(digest, 16));
}

struct BoxKeyPair {
  Bytes public_key;
  Bytes secret_key;

  static BoxKeyPair generate(RandomSource& rng) {
    detail::ensure_sodium();
    Bytes seed = rng.bytes(crypto_box_SEEDBYTES);
    BoxKeyPair kp;
    kp.public_key.resize(crypto_box_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_box_SECRETKEYBYTES);
    crypto_box_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    wipe(seed);
    return kp;
  }

  // Recreates a key pair from its secret half.
  static BoxKeyPair from_secret(ByteView secret_key) {
    detail::ensure_sodium();
    if (secret_key.size() != crypto_box_SECRETKEYBYTES) {
      throw InvalidArgument("box secret key must be 32 bytes");
    }
    BoxKeyPair kp;
    kp.secret_key.assign(secret_key.begin(), secret_key.end());
    kp.public_key.resize(crypto_box_PUBLICKEYBYTES);
    crypto_scalarmult_base(kp.public_key.data(), kp.secret_key.data());
    return kp;
  }
};

class SealedBoxEncryptor final : public Encryptor {
 public:
  explicit SealedBoxEncryptor(Bytes public_key) : public_key_(std::move(public_key)) {
    if (public_key_.size() != crypto_box_PUBLICKEYBYTES) {
      throw InvalidArgument("box public key must be 32 bytes");
    }
  }

  std::string fingerprint() const override { return key_fingerprint(public_key_); }

  Bytes encrypt(ByteView plaintext) const override {
    detail::ensure_sodium();
    Bytes ct(plaintext.size() + crypto_box_SEALBYTES);
    if (crypto_box_seal(ct.data(), plaintext.data(), plaintext.size(),
                        public_key_.data()) != 0) {
      throw CryptoError("sealed box encryption failed");
    }
    return ct;
  }

  const Bytes& public_key() const { return public_key_; }

 private:
  Bytes public_key_;
};

// Held by the channel recipient (and the loopback test transport).
class SealedBoxDecryptor {
 public:
  explicit SealedBoxDecryptor(BoxKeyPair keys) : keys_(std::move(keys)) {}
  ~SealedBoxDecryptor() { wipe(keys_.secret_key); }
  SealedBoxDecryptor(const SealedBoxDecryptor&) = default;
  SealedBoxDecryptor& operator=(const SealedBoxDecryptor&) = default;

  Bytes decrypt(ByteView ct) const {
    detail::ensure_sodium();
    if (ct.size() < crypto_box_SEALBYTES) throw CryptoError("ciphertext too short");
    Bytes pt(ct.size() - crypto_box_SEALBYTES);
    if (crypto_box_seal_open(pt.data(), ct.data(), ct.size(), keys_.public_key.data(),
                             keys_.secret_key.data()) != 0) {
      throw CryptoError("sealed box decryption failed");
    }
    return pt;
  }

  SealedBoxEncryptor encryptor() const { return SealedBoxEncryptor(keys_.public_key); }

 private:
  BoxKeyPair keys_;
};

}  // namespace mfchf
