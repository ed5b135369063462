#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mfchf {
namespace {

using testing::cheap;
using testing::oracle_hotp;

struct Fixture {
  explicit Fixture(std::uint64_t seed) : rng(seed), code(generate_recovery_code(rng)) {
    auto s = account_setup("pw", code, cheap(), rng);
    bundle = std::move(s.bundle);
    key.emplace(std::move(s.key));
  }

  Otp next() const { return oracle_hotp(*key, counter); }

  void login() {
    auto r = account_login("pw", next(), bundle);
    ASSERT_TRUE(r);
    bundle = *r.bundle;
    ++counter;
  }

  SeededRandom rng;
  std::string code;
  AccountBundle bundle;
  std::optional<HmacKey> key;
  std::uint64_t counter = 1;
};

TEST(RecoveryCode, Format) {
  SeededRandom rng(600);
  const std::string code = generate_recovery_code(rng);
  EXPECT_EQ(code.size(), 26u + 6u);
  EXPECT_EQ(from_base32(code)->size(), kRecoveryCodeBytes);
  EXPECT_NE(code, generate_recovery_code(rng));
}

TEST(Account, LoginSynchronizesRecoveryCounter) {
  Fixture f(601);
  for (int i = 0; i < 3; ++i) f.login();
  EXPECT_EQ(f.bundle.primary.counter, 4u);
  EXPECT_EQ(f.bundle.password_recovery.counter, 4u);
  EXPECT_EQ(f.bundle.revision, 3u);
}

TEST(Account, RejectedLoginLeavesBundleIdentical) {
  Fixture f(602);
  const std::string before = emit_bundle(f.bundle);
  EXPECT_FALSE(account_login("wrong", f.next(), f.bundle));
  EXPECT_FALSE(account_login("pw", oracle_hotp(*f.key, 9), f.bundle));
  EXPECT_EQ(emit_bundle(f.bundle), before);
}

TEST(Account, PasswordRecoveryAfterLogins) {
  Fixture f(603);
  f.login();
  auto r = recover_password(f.code, f.next(), "new pw", f.bundle, f.rng);
  ASSERT_TRUE(r);
  f.bundle = *r.bundle;
  ++f.counter;
  EXPECT_FALSE(account_login("pw", f.next(), f.bundle));
  EXPECT_TRUE(account_login("new pw", f.next(), f.bundle));
  // The recovery-code hash follows the new password.
  EXPECT_TRUE(recover_hotp("new pw", f.code, f.bundle, f.rng));
  EXPECT_FALSE(recover_hotp("pw", f.code, f.bundle, f.rng));
}

TEST(Account, RecoveryAfterTenInterleavedLogins) {
  Fixture f(604);
  for (int i = 0; i < 10; ++i) {
    // Occasionally skip a code to exercise the window.
    if (f.rng.uniform(3) == 0) ++f.counter;
    f.login();
  }
  auto r = recover_password(f.code, f.next(), "pw2", f.bundle, f.rng);
  ASSERT_TRUE(r);
}

TEST(Account, PasswordRecoveryWithWrongCounterRejected) {
  Fixture f(605);
  f.login();
  EXPECT_FALSE(recover_password(f.code, oracle_hotp(*f.key, 1), "x", f.bundle, f.rng));
  EXPECT_FALSE(recover_password(f.code, oracle_hotp(*f.key, f.counter + 5), "x", f.bundle, f.rng));
  EXPECT_FALSE(recover_password("AAAA-" + f.code.substr(5), f.next(), "x", f.bundle, f.rng));
}

TEST(Account, HotpRecoveryIssuesFreshKey) {
  Fixture f(606);
  f.login();
  auto r = recover_hotp("pw", f.code, f.bundle, f.rng);
  ASSERT_TRUE(r);
  ASSERT_TRUE(r.key.has_value());
  EXPECT_FALSE(*r.key == *f.key);
  EXPECT_EQ(r.bundle->primary.counter, 1u);
  EXPECT_EQ(r.bundle->password_recovery.counter, 1u);
  EXPECT_FALSE(account_login("pw", f.next(), *r.bundle));
  EXPECT_TRUE(account_login("pw", oracle_hotp(*r.key, 1), *r.bundle));
}

TEST(Account, WrongRecoveryCodeNeverAccepts) {
  Fixture f(607);
  int accepts = 0;
  for (int i = 0; i < 1000; ++i) {
    if (recover_hotp("pw", generate_recovery_code(f.rng), f.bundle, f.rng)) ++accepts;
  }
  EXPECT_EQ(accepts, 0);
}

TEST(Account, RecoveryCodeAloneOpensNothing) {
  Fixture f(608);
  int accepts = 0;
  for (std::uint64_t o = 0; o < 50; ++o) {
    const Otp guess = Otp::decimal(o * 19997 % 1000000);
    if (account_login(f.code, guess, f.bundle)) ++accepts;
    if (recover_password(f.code, guess, "x", f.bundle, f.rng)) ++accepts;
  }
  if (recover_hotp("wrong", f.code, f.bundle, f.rng)) ++accepts;
  if (recover_hotp(f.code, f.code, f.bundle, f.rng)) ++accepts;
  EXPECT_EQ(accepts, 0);
}

TEST(Account, WeakestPathEntropy) {
  const auto paths = bundle_entropy(40.0);
  ASSERT_EQ(paths.size(), 3u);
  for (const auto& p : paths) EXPECT_GT(p.bits, 40.0) << p.path;
  EXPECT_NEAR(weakest_path_bits(paths), 40.0 + 6 * std::log2(10.0), 1e-9);
  EXPECT_NEAR(weakest_path_bits(paths), 60.0, 0.5);
  EXPECT_EQ(paths.front().path, "password+hotp");
}

TEST(Account, NoSecretsInSerializedBundle) {
  SeededRandom rng(609);
  for (int i = 0; i < 20; ++i) {
    const std::string code = generate_recovery_code(rng);
    auto s = account_setup("pw", code, cheap(), rng);
    const std::string text = emit_bundle(s.bundle);
    EXPECT_FALSE(testing::leaks(text, s.key.bytes()));
    EXPECT_FALSE(testing::leaks(text, code));
    const Otp target = mod_recover(s.bundle.primary.diffs[0], oracle_hotp(s.key, 1));
    EXPECT_FALSE(testing::leaks(text, target.text()));
  }
}

// --- persistence ---------------------------------------------------------------

TEST(Persistence, TokenLoginLeavesRecordUnchanged) {
  SeededRandom rng(700);
  auto [record, key] = hotp6_setup("pw", 2, cheap(), rng);
  auto v = hotp6_verify("pw", oracle_hotp(key, 1), record);
  ASSERT_TRUE(v);
  const auto token = mint_persistence(*v.session, 1700000000);
  const HotpRecord stored = *v.record;
  const std::string before = emit(stored);
  EXPECT_EQ(login_persistent("pw", token, stored), Verdict::kAccept);
  EXPECT_EQ(login_persistent("pw", token, stored), Verdict::kAccept);
  EXPECT_EQ(emit(stored), before);
  EXPECT_EQ(login_persistent("wrong", token, stored), Verdict::kReject);
}

TEST(Persistence, EncodeDecodeAndSchemeTag) {
  SeededRandom rng(701);
  auto [record, key] = hotp6_setup("pw", 2, cheap(), rng);
  auto v = hotp6_verify("pw", oracle_hotp(key, 1), record);
  const auto token = mint_persistence(*v.session, 42);
  const auto back = PersistenceToken::decode(token.encode());
  ASSERT_TRUE(back);
  EXPECT_EQ(back->scheme, "mfchf-hotp6");
  EXPECT_EQ(back->issued_at, 42);
  EXPECT_EQ(login_persistent("pw", *back, *v.record), Verdict::kAccept);
  EXPECT_FALSE(PersistenceToken::decode("garbage"));

  // Same target bytes under another scheme tag are refused.
  PersistenceToken cross = *back;
  cross.scheme = "mfchf-totp6";
  EXPECT_EQ(login_persistent("pw", cross, *v.record), Verdict::kReject);
  TotpParams p;
  auto totp = totp6_setup("pw", p, 1700000000, cheap(), rng);
  EXPECT_EQ(login_persistent("pw", *back, totp.record), Verdict::kReject);
}

TEST(Persistence, AllSchemes) {
  SeededRandom rng(702);
  const std::int64_t now = 1700000000;
  TotpParams p;
  p.window = 2;
  auto t = totp6_setup("pw", p, now, cheap(), rng);
  auto tv = totp6_verify("pw", testing::oracle_totp(t.key, now, p), t.record, now);
  ASSERT_TRUE(tv);
  EXPECT_EQ(login_persistent("pw", mint_persistence(*tv.session, now), *tv.record),
            Verdict::kAccept);

  const auto keys = BoxKeyPair::generate(rng);
  const SealedBoxDecryptor dec(keys);
  const SealedBoxEncryptor enc(keys.public_key);
  const OobaRecord o = ooba6_setup("pw", enc, cheap(), rng);
  auto ov = ooba6_verify("pw", Otp::parse(to_string(dec.decrypt(o.ct)), 36, 6), o, enc, rng);
  ASSERT_TRUE(ov);
  EXPECT_EQ(login_persistent("pw", mint_persistence(*ov.session, now), *ov.record),
            Verdict::kAccept);

  const auto hk = HmacKey::random(rng);
  const Hsha1Record h = hsha1_setup("pw", hk, cheap(), rng);
  const auto mac = hmac_sha1(hk, h.challenge);
  auto hv = hsha1_verify("pw", mac, h, rng);
  ASSERT_TRUE(hv);
  const auto token = mint_persistence(*hv.session, now);
  EXPECT_EQ(login_persistent("pw", token, *hv.record), Verdict::kAccept);
  EXPECT_EQ(login_persistent("px", token, *hv.record), Verdict::kReject);
}

TEST(Persistence, BundleTokenSurvivesLogins) {
  Fixture f(703);
  auto r = account_login("pw", f.next(), f.bundle);
  ASSERT_TRUE(r);
  const auto token = mint_persistence(*r.session, 0);
  f.bundle = *r.bundle;
  ++f.counter;
  f.login();
  EXPECT_EQ(login_persistent("pw", token, f.bundle), Verdict::kAccept);
  EXPECT_FALSE(testing::leaks(emit_bundle(f.bundle), token.encode()));
}

TEST(Persistence, ForgedTokensMatchGuessingRate) {
  SeededRandom rng(704);
  auto [record, key] = hotp6_setup("pw", 1, cheap(), rng, 2);
  int accepts = 0;
  constexpr int kTrials = 10000;
  for (int i = 0; i < kTrials; ++i) {
    PersistenceToken t;
    t.scheme = "mfchf-hotp2";
    t.value = to_bytes(Otp::decimal(rng.uniform(100), 2).text());
    if (login_persistent("pw", t, record) == Verdict::kAccept) ++accepts;
  }
  // Binomial(10^4, 10^-2): mean 100, sd ~9.9.
  EXPECT_GE(accepts, 60);
  EXPECT_LE(accepts, 140);
}

// --- delivery channel ----------------------------------------------------------

TEST(Channel, LoopbackDeliveryThenVerify) {
  SeededRandom rng(800);
  const auto keys = BoxKeyPair::generate(rng);
  const SealedBoxEncryptor enc(keys.public_key);
  LoopbackTransport loop{SealedBoxDecryptor(keys)};
  OobaChannel ch{&loop, enc.fingerprint()};
  OobaRecord record = ooba6_setup("pw", enc, cheap(), rng);
  for (int i = 0; i < 3; ++i) {
    const auto receipt = ooba_deliver(ch, record);
    EXPECT_EQ(receipt.transport, "loopback");
    ASSERT_TRUE(loop.last_otp());
    auto v = ooba6_verify("pw", Otp::parse(*loop.last_otp(), 36, 6), record, enc, rng);
    ASSERT_TRUE(v);
    record = *v.record;
  }
}

TEST(Channel, TransportFailureLeavesRecordUnchanged) {
  SeededRandom rng(801);
  const auto keys = BoxKeyPair::generate(rng);
  const SealedBoxEncryptor enc(keys.public_key);
  LoopbackTransport loop{SealedBoxDecryptor(keys)};
  OobaChannel ch{&loop, enc.fingerprint()};
  const OobaRecord record = ooba6_setup("pw", enc, cheap(), rng);
  const std::string before = emit(record);
  loop.fail_next();
  EXPECT_THROW(ooba_deliver(ch, record), TransportError);
  EXPECT_EQ(emit(record), before);
  EXPECT_NO_THROW(ooba_deliver(ch, record));
  OobaChannel wrong{&loop, "not-the-recipient"};
  EXPECT_THROW(ooba_deliver(wrong, record), InvalidArgument);
}

TEST(Channel, PayloadIsCiphertextOnly) {
  SeededRandom rng(802);
  const auto keys = BoxKeyPair::generate(rng);
  const SealedBoxEncryptor enc(keys.public_key);
  LoopbackTransport loop{SealedBoxDecryptor(keys)};
  OobaChannel ch{&loop, enc.fingerprint()};
  for (int i = 0; i < 100; ++i) {
    const OobaRecord record = ooba6_setup("pw", enc, HashBackend::sha256(), rng);
    ooba_deliver(ch, record);
    const Bytes& payload = loop.payloads().back();
    ASSERT_EQ(payload, record.ct);
    ASSERT_FALSE(contains(payload, as_bytes(*loop.last_otp())));
  }
}

TEST(Channel, SpoolWritesCiphertextFiles) {
  SeededRandom rng(803);
  const auto dir = std::filesystem::temp_directory_path() / "mfchf-spool-test";
  std::filesystem::remove_all(dir);
  const auto keys = BoxKeyPair::generate(rng);
  const SealedBoxEncryptor enc(keys.public_key);
  SpoolTransport spool(dir);
  OobaChannel ch{&spool, enc.fingerprint()};
  const OobaRecord record = ooba6_setup("pw", enc, cheap(), rng);
  const auto a = ooba_deliver(ch, record);
  const auto b = ooba_deliver(ch, record);
  EXPECT_NE(a.message_id, b.message_id);
  std::ifstream in(a.message_id, std::ios::binary);
  const Bytes on_disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(on_disk, record.ct);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mfchf
