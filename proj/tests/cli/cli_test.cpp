#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <regex>
#include <sstream>

#include "test_util.hpp"

namespace mfchf {
namespace {

struct Result {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = std::filesystem::temp_directory_path() /
             ("mfchf-cli-" + std::to_string(::getpid()) + "-" +
              ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(store_);
  }
  void TearDown() override { std::filesystem::remove_all(store_); }

  Result run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + MFCHF_CLI + " --store " + store_.string() + " " + args +
                            " 2>/dev/null";
    Result r;
    FILE* p = ::popen(cmd.c_str(), "r");
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  static std::string field(const std::string& out, const std::string& name) {
    std::smatch m;
    if (std::regex_search(out, m, std::regex("(^|\n)" + name + ": ([^\n]*)"))) return m[2];
    ADD_FAILURE() << "no '" << name << "' in:\n" << out;
    return "";
  }

  std::string store_bytes(const std::string& user) {
    std::ifstream in(store_ / (user + ".mfchf"), std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }

  std::string all_store_bytes() {
    std::string all;
    for (const auto& e : std::filesystem::recursive_directory_iterator(store_)) {
      if (!e.is_regular_file()) continue;
      std::ifstream in(e.path(), std::ios::binary);
      all += std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    return all;
  }

  static std::string otp(const std::string& secret, std::uint64_t counter) {
    return testing::oracle_hotp(HmacKey(*from_base32(secret)), counter).text();
  }

  std::filesystem::path store_;
};

TEST_F(Cli, HotpSetupVerifyAndDuplicate) {
  const Result s = run("setup hotp --user alice --password pw --cheap");
  ASSERT_EQ(s.code, 0) << s.out;
  const std::string secret = field(s.out, "secret");
  const std::string code = field(s.out, "recovery-code");
  EXPECT_EQ(field(s.out, "uri").rfind("otpauth://hotp/mfchf:alice?secret=" + secret, 0), 0u);

  // The provisioning secret and recovery code are never written to the store.
  const std::string stored = all_store_bytes();
  const Bytes raw_key = *from_base32(secret);
  EXPECT_FALSE(testing::leaks(stored, raw_key));
  EXPECT_FALSE(testing::leaks(stored, code));

  EXPECT_EQ(run("verify --user alice --password pw --otp " + otp(secret, 1)).code, 0);
  const std::string before = store_bytes("alice");
  EXPECT_EQ(run("verify --user alice --password pw --otp " + otp(secret, 1)).code, 1);
  EXPECT_EQ(run("verify --user alice --password nope --otp " + otp(secret, 2)).code, 1);
  EXPECT_EQ(store_bytes("alice"), before);
  EXPECT_EQ(run("verify --user alice --password pw --otp " + otp(secret, 2)).code, 0);
  EXPECT_NE(store_bytes("alice"), before);

  EXPECT_EQ(run("setup hotp --user alice --password other --cheap").code, 1);
  EXPECT_EQ(run("verify --user nobody --password pw --otp 123456").code, 1);
}

TEST_F(Cli, PersistenceToken) {
  const Result s = run("setup hotp --user bo --password pw --cheap");
  const std::string secret = field(s.out, "secret");
  const Result v = run("verify --user bo --password pw --persist --otp " + otp(secret, 1));
  ASSERT_EQ(v.code, 0);
  const std::string token = field(v.out, "token");
  const std::string before = store_bytes("bo");
  EXPECT_EQ(run("verify --user bo --password pw --token " + token).code, 0);
  EXPECT_EQ(run("verify --user bo --password wrong --token " + token).code, 1);
  EXPECT_EQ(store_bytes("bo"), before);
  EXPECT_EQ(all_store_bytes().find(token), std::string::npos);
}

TEST_F(Cli, PasswordRecoveryRoundTrip) {
  const Result s = run("setup hotp --user cy --password old --cheap");
  const std::string secret = field(s.out, "secret");
  const std::string code = field(s.out, "recovery-code");
  ASSERT_EQ(run("verify --user cy --password old --otp " + otp(secret, 1)).code, 0);
  EXPECT_EQ(run("recover --user cy --mode password --code " + code + " --otp " + otp(secret, 1) +
                " --new-password new")
                .code,
            1);
  ASSERT_EQ(run("recover --user cy --mode password --code " + code + " --otp " + otp(secret, 2) +
                " --new-password new")
                .code,
            0);
  EXPECT_EQ(run("verify --user cy --password old --otp " + otp(secret, 3)).code, 1);
  EXPECT_EQ(run("verify --user cy --password new --otp " + otp(secret, 3)).code, 0);
}

TEST_F(Cli, HotpRecoveryInvalidatesOldAuthenticator) {
  const Result s = run("setup hotp --user di --password pw --cheap");
  const std::string secret = field(s.out, "secret");
  const std::string code = field(s.out, "recovery-code");
  const Result r = run("recover --user di --mode hotp --password pw --code " + code);
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string fresh = field(r.out, "secret");
  EXPECT_NE(fresh, secret);
  EXPECT_EQ(run("verify --user di --password pw --otp " + otp(secret, 1)).code, 1);
  EXPECT_EQ(run("verify --user di --password pw --otp " + otp(fresh, 1)).code, 0);
  EXPECT_EQ(run("recover --user di --mode hotp --password pw --code WRONG-CODE").code, 1);
}

TEST_F(Cli, TotpFlow) {
  const Result s = run("setup totp --user ed --password pw --cheap --window 10 --now 1700000000");
  ASSERT_EQ(s.code, 0);
  const std::string secret = field(s.out, "secret");
  EXPECT_NE(field(s.out, "uri").find("&period=30"), std::string::npos);
  TotpParams p;
  const HmacKey key(*from_base32(secret));
  const std::int64_t t = 1700000000 + 90;
  EXPECT_EQ(run("verify --user ed --password pw --now " + std::to_string(t) + " --otp " +
                testing::oracle_totp(key, t, p).text())
                .code,
            0);
  const std::int64_t far = t + 3600;
  EXPECT_EQ(run("verify --user ed --password pw --now " + std::to_string(far) + " --otp " +
                testing::oracle_totp(key, far, p).text())
                .code,
            1);
  // The CLI authenticator agrees with the reference implementation.
  const Result c = run("code --key " + secret + " --now " + std::to_string(t));
  EXPECT_EQ(c.out, testing::oracle_totp(key, t, p).text() + "\n");
}

TEST_F(Cli, OobaFlow) {
  const auto sk = store_.string() + "-recipient.sk";
  const Result k = run("keygen --out " + sk);
  ASSERT_EQ(k.code, 0);
  const std::string pk = field(k.out, "public-key");
  const Result s = run("setup ooba --user fay --password pw --cheap --pk " + pk);
  ASSERT_EQ(s.code, 0);
  const std::string first = run("open --sk " + sk + " --ct " + field(s.out, "challenge")).out;
  ASSERT_EQ(first.size(), 7u);
  EXPECT_EQ(field(run("challenge --user fay").out, "challenge"), field(s.out, "challenge"));
  const Result v = run("verify --user fay --password pw --otp " + first.substr(0, 6));
  ASSERT_EQ(v.code, 0);
  const std::string next = run("open --sk " + sk + " --ct " + field(v.out, "challenge")).out;
  if (next != first) {
    EXPECT_EQ(run("verify --user fay --password pw --otp " + first.substr(0, 6)).code, 1);
  }
  EXPECT_EQ(run("verify --user fay --password pw --otp " + next.substr(0, 6)).code, 0);
  std::filesystem::remove(sk);
}

TEST_F(Cli, Hsha1Flow) {
  const Result s = run("setup hsha1 --user gus --password pw --cheap");
  ASSERT_EQ(s.code, 0);
  const std::string secret = field(s.out, "secret");
  const HmacKey key(*from_base32(secret));
  auto response = [&](const std::string& chal_hex) {
    const auto mac = oracle::hmac_sha1(testing::raw(key), *from_hex(chal_hex));
    return oracle::hex(mac.data(), mac.size());
  };
  const std::string chal = field(s.out, "challenge");
  EXPECT_EQ(run("respond --key " + secret + " --challenge " + chal).out, response(chal) + "\n");
  const Result v = run("verify --user gus --password pw --response " + response(chal));
  ASSERT_EQ(v.code, 0);
  EXPECT_EQ(run("verify --user gus --password pw --response " + response(chal)).code, 1);
  EXPECT_EQ(
      run("verify --user gus --password pw --response " + response(field(v.out, "challenge")))
          .code,
      0);
  EXPECT_FALSE(testing::leaks(all_store_bytes(), key.bytes()));
}

TEST_F(Cli, ExitCodeContract) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("setup hotp --user x").code, 2);
  EXPECT_EQ(run("setup hotp --user ../x --password pw --cheap").code, 2);
  EXPECT_EQ(run("setup rsa --user x --password pw").code, 2);
  EXPECT_EQ(run("--seed 5 setup hotp --user x --password pw --cheap").code, 2);
  EXPECT_EQ(run("--seed 5 --unsafe-deterministic-rng setup hotp --user x --password pw --cheap")
                .code,
            0);
  EXPECT_EQ(run("verify --user x --password pw --otp 12345").code, 2);
  EXPECT_EQ(run("verify --user x --password pw").code, 2);

  std::ofstream(store_ / "x.mfchf", std::ios::trunc) << "mfchf-bundle v=1 rev=0\n$mfchf-hotp6$v=9\n";
  EXPECT_EQ(run("verify --user x --password pw --otp 123456").code, 2);
  EXPECT_EQ(run("inspect --user x").code, 2);
}

TEST_F(Cli, SeededSetupIsReproducible) {
  const std::string flags = "--seed 7 --unsafe-deterministic-rng setup hotp --password pw --cheap";
  const Result a = run(flags + " --user one");
  const Result b = run(flags + " --user two");
  EXPECT_EQ(field(a.out, "secret"), field(b.out, "secret"));
}

TEST_F(Cli, CrashDuringWriteKeepsOldStore) {
  const Result s = run("setup hotp --user hal --password pw --cheap");
  const std::string secret = field(s.out, "secret");
  const std::string before = store_bytes("hal");
  const Result crashed =
      run("verify --user hal --password pw --otp " + otp(secret, 1), "MFCHF_FAULT=after-temp-write");
  EXPECT_EQ(crashed.code, 137);
  EXPECT_EQ(store_bytes("hal"), before);
  EXPECT_EQ(run("inspect --user hal").code, 0);
  EXPECT_EQ(run("verify --user hal --password pw --otp " + otp(secret, 1)).code, 0);
}

TEST_F(Cli, StoreFromEnvironment) {
  const std::string cmd = "MFCHF_STORE=" + store_.string() + " " + MFCHF_CLI +
                          " setup hotp --user env --password pw --cheap >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(std::filesystem::exists(store_ / "env.mfchf"));
}

TEST_F(Cli, InspectShowsNoSecrets) {
  const Result s = run("setup hotp --user ida --password pw --cheap --window 3");
  const Result i = run("inspect --user ida");
  ASSERT_EQ(i.code, 0);
  EXPECT_NE(i.out.find("scheme=mfchf-hotp6"), std::string::npos);
  EXPECT_NE(i.out.find("window=3"), std::string::npos);
  EXPECT_EQ(i.out.find(field(s.out, "secret")), std::string::npos);
}

TEST_F(Cli, AuthenticatorMatchesRfcVector) {
  const std::string key = to_base32(to_bytes("12345678901234567890"));
  EXPECT_EQ(run("code --key " + key + " --counter 0").out, "755224\n");
  EXPECT_EQ(run("code --key " + key + " --counter 9").out, "520489\n");
}

std::map<std::string, std::string> kv(const std::string& out) {
  std::map<std::string, std::string> m;
  static const std::regex re("([a-z_]+)=([^ \n]+)");
  for (auto it = std::sregex_iterator(out.begin(), out.end(), re); it != std::sregex_iterator();
       ++it) {
    m[(*it)[1]] = (*it)[2];
  }
  return m;
}

TEST_F(Cli, CrackPlainAndHotp) {
  const auto report = store_.string() + "-crack.jsonl";
  const auto t0 = std::chrono::steady_clock::now();
  const Result plain = run("crack --scheme plain --dict top100 --cheap --report " + report);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(plain.code, 0) << plain.out;
  EXPECT_LT(secs, 10.0);
  EXPECT_NE(plain.out.find("cracked: password="), std::string::npos);

  const Result hotp = run("crack --scheme hotp --digits 2 --dict top100 --cheap --absent");
  ASSERT_EQ(hotp.code, 0);
  const auto a = kv(plain.out), b = kv(hotp.out);
  EXPECT_EQ(std::stoull(b.at("search_space")), 100 * std::stoull(a.at("search_space")));
  EXPECT_EQ(b.at("attempts"), b.at("search_space"));
  EXPECT_NE(hotp.out.find("not cracked"), std::string::npos);

  std::ifstream in(report);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j.at("scheme"), "plain");
  EXPECT_EQ(j.at("search_space"), 100);
  EXPECT_TRUE(j.contains("projected_mean_s"));
  std::filesystem::remove(report);
  EXPECT_EQ(run("crack --scheme hsha1 --cheap").code, 2);
  EXPECT_EQ(run("crack --scheme hotp --digits 7 --cheap").code, 2);
}

TEST_F(Cli, BenchTotpFullDay) {
  const auto report = store_.string() + "-bench.jsonl";
  const Result r = run("bench --scheme totp --window 2920 --iterations 10 --report " + report);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto m = kv(r.out);
  const auto bytes = std::stoul(m.at("envelope_bytes"));
  EXPECT_GE(bytes, 7000u);
  EXPECT_LE(bytes, 16000u);
  EXPECT_NE(r.out.find("setup    mean="), std::string::npos);
  std::ifstream in(report);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(nlohmann::json::parse(line).at("window"), 2920);
  std::filesystem::remove(report);
  EXPECT_EQ(run("bench --scheme hotp --iterations 3").code, 2);
}

}  // namespace
}  // namespace mfchf
