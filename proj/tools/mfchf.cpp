#include <unistd.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfchf/mfchf.hpp"

namespace {

using namespace mfchf;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitUsage = 2;
constexpr std::string_view kIssuer = "mfchf";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Global {
  std::string store;
  std::optional<std::uint64_t> seed;
  bool unsafe_seed = false;
  std::unique_ptr<RandomSource> rng;

  RandomSource& random() {
    if (!rng) {
      if (seed && !unsafe_seed) {
        throw UsageError("--seed is for tests only; add --unsafe-deterministic-rng");
      }
      if (seed) {
        rng = std::make_unique<SeededRandom>(*seed);
      } else {
        rng = std::make_unique<SystemRandom>();
      }
    }
    return *rng;
  }

  Store open_store() const {
    Store s(store.empty() ? Store::default_root() : std::filesystem::path(store));
    // Test hook: simulate a crash between the temp write and the rename.
    if (const char* f = std::getenv("MFCHF_FAULT"); f && std::string_view(f) == "after-temp-write") {
      s.fault_hook = [](std::string_view) { ::_exit(137); };
    }
    return s;
  }
};

std::int64_t now_or(const std::optional<std::int64_t>& now) {
  return now ? *now : static_cast<std::int64_t>(std::time(nullptr));
}

HashBackend backend_from(const std::string& spec, bool cheap) {
  if (cheap) return HashBackend::cheap();
  return HashBackend::from_string(spec);
}

HmacKey key_from_base32(const std::string& text) {
  auto raw = from_base32(text);
  if (!raw) throw UsageError("key is not valid base32");
  return HmacKey(std::move(*raw));
}

Bytes bytes_from_hex(const std::string& text, std::size_t n, const char* what) {
  auto raw = from_hex(text);
  if (!raw || raw->size() != n) {
    throw UsageError(std::string(what) + " must be " + std::to_string(n) + " hex bytes");
  }
  return std::move(*raw);
}

std::filesystem::path recipient_path(const Store& store, const std::string& user) {
  return store.root() / "recipients" / (user + ".pub");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

void write_private(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.has_parent_path() ? path.parent_path() : ".");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content << "\n";
  if (!out) throw UsageError("cannot write " + path.string());
  std::filesystem::permissions(path, std::filesystem::perms::owner_read |
                                         std::filesystem::perms::owner_write);
}

void append_report(const std::string& path, const json& line) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  out << line.dump() << "\n";
  if (!out) throw UsageError("cannot write report " + path);
}

double ms(double seconds) { return seconds * 1e3; }

// --- setup -------------------------------------------------------------------

struct SetupArgs {
  std::string scheme;
  std::string user;
  std::string password;
  std::size_t window = 0;
  std::uint32_t digits = 6;
  std::string h1 = "argon2id";
  bool cheap = false;
  std::int64_t t0 = 0;
  std::uint32_t tx = 30;
  std::optional<std::int64_t> now;
  std::string pk;
  std::string key;
  std::string code;
  std::string spool;
};

int cmd_setup(Global& g, const SetupArgs& a) {
  Store store = g.open_store();
  store.path_for(a.user);
  if (store.exists(a.user)) {
    std::cerr << "error: user already exists: " << a.user << "\n";
    return kExitReject;
  }
  RandomSource& rng = g.random();
  const HashBackend backend = backend_from(a.h1, a.cheap);
  const Scheme scheme = parse_scheme(a.scheme);

  switch (scheme) {
    case Scheme::kHotp: {
      const std::string code = a.code.empty() ? generate_recovery_code(rng) : a.code;
      auto s = account_setup(a.password, code, backend, rng,
                             a.window ? a.window : kDefaultHotpWindow, a.digits);
      store.create(a.user, StoredEntry{"bundle",
                                       s.bundle.revision,
                                       {emit(s.bundle.primary), emit(s.bundle.password_recovery),
                                        emit(s.bundle.hotp_recovery)}});
      std::cout << "secret: " << to_base32(s.key.bytes()) << "\n"
                << "uri: " << hotp_uri(kIssuer, a.user, s.key, a.digits, 1) << "\n"
                << "recovery-code: " << code << "\n";
      return kExitOk;
    }
    case Scheme::kTotp: {
      TotpParams p;
      p.t0 = a.t0;
      p.tx = a.tx;
      p.digits = a.digits;
      p.window = static_cast<std::uint32_t>(a.window ? a.window : 2920);
      auto s = totp6_setup(a.password, p, now_or(a.now), backend, rng);
      store.create(a.user, StoredEntry{"record", 0, {emit(s.record)}});
      std::cout << "secret: " << to_base32(s.key.bytes()) << "\n"
                << "uri: " << totp_uri(kIssuer, a.user, s.key, p) << "\n";
      return kExitOk;
    }
    case Scheme::kOoba: {
      if (a.pk.empty()) throw UsageError("ooba setup needs --pk (see keygen)");
      auto pk = from_base64(a.pk);
      if (!pk) throw UsageError("--pk is not base64");
      const SealedBoxEncryptor enc(*pk);
      const OobaRecord r = ooba6_setup(a.password, enc, backend, rng,
                                       std::min<std::uint32_t>(a.digits, kOobaDigits));
      store.create(a.user, StoredEntry{"record", 0, {emit(r)}});
      const auto pub = recipient_path(store, a.user);
      std::filesystem::create_directories(pub.parent_path());
      std::ofstream(pub) << a.pk << "\n";
      std::cout << "recipient: " << r.pk << "\n"
                << "challenge: " << to_base64(ooba6_challenge(r)) << "\n";
      if (!a.spool.empty()) {
        SpoolTransport spool(a.spool);
        OobaChannel ch{&spool, r.pk};
        std::cout << "delivered: " << ooba_deliver(ch, r).message_id << "\n";
      }
      return kExitOk;
    }
    case Scheme::kHsha1: {
      const bool generated = a.key.empty();
      const HmacKey key = generated ? HmacKey::random(rng) : key_from_base32(a.key);
      const Hsha1Record r = hsha1_setup(a.password, key, backend, rng);
      store.create(a.user, StoredEntry{"record", 0, {emit(r)}});
      if (generated) std::cout << "secret: " << to_base32(key.bytes()) << "\n";
      std::cout << "challenge: " << to_hex(r.challenge) << "\n";
      return kExitOk;
    }
    case Scheme::kPlain:
      break;
  }
  throw UsageError("setup supports hotp, totp, ooba, hsha1");
}

// --- verify ------------------------------------------------------------------

struct VerifyArgs {
  std::string user;
  std::string password;
  std::string otp;
  std::string response;
  std::string token;
  bool persist = false;
  std::optional<std::int64_t> now;
};

StoredEntry load_entry(const Store& store, const std::string& user) {
  auto e = store.load(user);
  if (!e) throw StoreError("no such user: " + user);
  return *e;
}

int report_verdict(Verdict v) {
  switch (v) {
    case Verdict::kAccept:
      std::cout << "accept\n";
      return kExitOk;
    case Verdict::kOutOfWindow:
      std::cout << "reject: outside the stored time window\n";
      return kExitReject;
    case Verdict::kReject:
      break;
  }
  std::cout << "reject\n";
  return kExitReject;
}

void print_token(const VerifyArgs& a, const std::optional<SessionSecret>& session) {
  if (a.persist && session) {
    std::cout << "token: " << mint_persistence(*session, now_or(a.now)).encode() << "\n";
  }
}

int cmd_verify(Global& g, const VerifyArgs& a) {
  Store store = g.open_store();
  const StoredEntry entry = load_entry(store, a.user);
  const int given = !a.otp.empty() + !a.response.empty() + !a.token.empty();
  if (given != 1) throw UsageError("give exactly one of --otp, --response, --token");

  std::optional<PersistenceToken> token;
  if (!a.token.empty()) {
    token = PersistenceToken::decode(a.token);
    if (!token) return report_verdict(Verdict::kReject);
  }
  auto commit = [&](std::vector<std::string> lines) {
    store.replace(a.user, entry.revision, StoredEntry{entry.kind, entry.revision + 1, lines});
  };

  if (entry.kind == "bundle") {
    const AccountBundle bundle = parse_bundle(entry.serialize());
    if (token) return report_verdict(login_persistent(a.password, *token, bundle));
    if (a.otp.empty()) throw UsageError("hotp accounts take --otp or --token");
    auto r = account_login(a.password, Otp::parse(a.otp, 10, bundle.primary.digits), bundle);
    if (!r) return report_verdict(Verdict::kReject);
    commit({emit(r.bundle->primary), emit(r.bundle->password_recovery),
            emit(r.bundle->hotp_recovery)});
    report_verdict(Verdict::kAccept);
    print_token(a, r.session);
    return kExitOk;
  }

  const HashRecord record = parse(entry.lines.front());
  if (const auto* r = std::get_if<TotpRecord>(&record)) {
    if (token) return report_verdict(login_persistent(a.password, *token, *r));
    if (a.otp.empty()) throw UsageError("totp accounts take --otp or --token");
    auto v = totp6_verify(a.password, Otp::parse(a.otp, 10, r->params.digits), *r, now_or(a.now));
    if (!v) return report_verdict(v.verdict);
    commit({emit(*v.record)});
    report_verdict(Verdict::kAccept);
    print_token(a, v.session);
    return kExitOk;
  }
  if (const auto* r = std::get_if<OobaRecord>(&record)) {
    if (token) return report_verdict(login_persistent(a.password, *token, *r));
    if (a.otp.empty()) throw UsageError("ooba accounts take --otp or --token");
    auto pk = from_base64(read_file(recipient_path(store, a.user)));
    if (!pk) throw ParseError(ParseError::Kind::kMalformedField, "pk", "recipient key file");
    const SealedBoxEncryptor enc(*pk);
    auto v = ooba6_verify(a.password, Otp::parse(a.otp, 36, r->digits()), *r, enc, g.random());
    if (!v) return report_verdict(v.verdict);
    commit({emit(*v.record)});
    report_verdict(Verdict::kAccept);
    print_token(a, v.session);
    std::cout << "challenge: " << to_base64(ooba6_challenge(*v.record)) << "\n";
    return kExitOk;
  }
  if (const auto* r = std::get_if<Hsha1Record>(&record)) {
    if (token) return report_verdict(login_persistent(a.password, *token, *r));
    if (a.response.empty()) throw UsageError("hsha1 accounts take --response or --token");
    auto v = hsha1_verify(a.password, bytes_from_hex(a.response, kSha1Length, "--response"), *r,
                          g.random());
    if (!v) return report_verdict(v.verdict);
    commit({emit(*v.record)});
    report_verdict(Verdict::kAccept);
    print_token(a, v.session);
    std::cout << "challenge: " << to_hex(v.record->challenge) << "\n";
    return kExitOk;
  }
  throw ParseError(ParseError::Kind::kBadScheme, "", "store entry has an unexpected scheme");
}

// --- recover -----------------------------------------------------------------

struct RecoverArgs {
  std::string user;
  std::string mode;
  std::string code;
  std::string otp;
  std::string password;
  std::string new_password;
};

int cmd_recover(Global& g, const RecoverArgs& a) {
  Store store = g.open_store();
  const StoredEntry entry = load_entry(store, a.user);
  if (entry.kind != "bundle") throw UsageError("recovery is available for hotp accounts");
  const AccountBundle bundle = parse_bundle(entry.serialize());
  AccountResult r;
  if (a.mode == "password") {
    if (a.otp.empty() || a.new_password.empty()) {
      throw UsageError("password recovery needs --code, --otp and --new-password");
    }
    r = recover_password(a.code, Otp::parse(a.otp, 10, bundle.primary.digits), a.new_password,
                         bundle, g.random());
  } else if (a.mode == "hotp") {
    if (a.password.empty()) throw UsageError("hotp recovery needs --password and --code");
    r = recover_hotp(a.password, a.code, bundle, g.random());
  } else {
    throw UsageError("--mode must be password or hotp");
  }
  if (!r) return report_verdict(Verdict::kReject);
  store.replace(a.user, entry.revision,
                StoredEntry{"bundle", entry.revision + 1,
                            {emit(r.bundle->primary), emit(r.bundle->password_recovery),
                             emit(r.bundle->hotp_recovery)}});
  report_verdict(Verdict::kAccept);
  if (r.key) {
    std::cout << "secret: " << to_base32(r.key->bytes()) << "\n"
              << "uri: " << hotp_uri(kIssuer, a.user, *r.key, bundle.primary.digits, 1) << "\n";
  }
  return kExitOk;
}

// --- inspect / challenge -----------------------------------------------------

void describe(const HashRecord& record) {
  std::visit(
      [](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        std::cout << "  scheme=" << scheme_id(r) << " h1=" << r.backend.to_string()
                  << " bytes=" << emit(r).size();
        if constexpr (std::is_same_v<R, HotpRecord>) {
          std::cout << " counter=" << r.counter << " window=" << r.window();
        } else if constexpr (std::is_same_v<R, TotpRecord>) {
          std::cout << " interval=" << r.counter << " window=" << r.offsets.size()
                    << " tx=" << r.params.tx << " t0=" << r.params.t0;
        } else if constexpr (std::is_same_v<R, OobaRecord>) {
          std::cout << " recipient=" << r.pk;
        }
        std::cout << "\n";
      },
      record);
}

int cmd_inspect(Global& g, const std::string& user) {
  const Store store = g.open_store();
  const StoredEntry entry = load_entry(store, user);
  std::cout << "user=" << user << " kind=" << entry.kind << " revision=" << entry.revision
            << "\n";
  for (const auto& line : entry.lines) describe(parse(line));
  return kExitOk;
}

int cmd_challenge(Global& g, const std::string& user, const std::string& spool) {
  const Store store = g.open_store();
  const StoredEntry entry = load_entry(store, user);
  if (entry.kind != "record") throw UsageError("hotp accounts have no server challenge");
  const HashRecord record = parse(entry.lines.front());
  if (const auto* r = std::get_if<OobaRecord>(&record)) {
    std::cout << "challenge: " << to_base64(ooba6_challenge(*r)) << "\n";
    if (!spool.empty()) {
      SpoolTransport transport(spool);
      OobaChannel ch{&transport, r->pk};
      std::cout << "delivered: " << ooba_deliver(ch, *r).message_id << "\n";
    }
    return kExitOk;
  }
  if (const auto* r = std::get_if<Hsha1Record>(&record)) {
    std::cout << "challenge: " << to_hex(r->challenge) << "\n";
    return kExitOk;
  }
  throw UsageError("challenge applies to ooba and hsha1 accounts");
}

// --- crack -------------------------------------------------------------------

struct CrackArgs {
  std::string scheme;
  std::string dict = "top100";
  std::uint32_t digits = 2;
  std::string h1 = "argon2id";
  bool cheap = false;
  std::size_t workers = 1;
  double budget = 0;
  std::optional<std::size_t> plant;
  bool absent = false;
  std::string target;
  std::size_t project_dict = 10000;
  std::uint32_t full_digits = 6;
  std::string report;
};

std::vector<std::string> load_dictionary(const std::string& name) {
  if (name == "top100") return top100_dictionary();
  std::ifstream in(name);
  if (!in) throw UsageError("cannot read dictionary " + name);
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  if (words.empty()) throw UsageError("dictionary is empty");
  return words;
}

int cmd_crack(Global& g, const CrackArgs& a) {
  RandomSource& rng = g.random();
  const Scheme scheme = parse_scheme(a.scheme);
  const HashBackend backend = backend_from(a.h1, a.cheap);
  const std::vector<std::string> words = load_dictionary(a.dict);
  const std::uint32_t digits = scheme == Scheme::kPlain ? 0 : a.digits;
  if (digits > 6) throw UsageError("--digits must be at most 6");
  if (scheme != Scheme::kPlain && digits == 0) throw UsageError("--digits must be at least 1");

  std::string envelope;
  double verify_seconds = -1;
  if (!a.target.empty()) {
    envelope = read_file(a.target);
  } else {
    // Plant a fresh credential and time legitimate verification of it.
    const std::size_t index = a.plant ? *a.plant : rng.uniform(words.size());
    if (index >= words.size()) throw UsageError("--plant is past the end of the dictionary");
    const std::string password = a.absent ? "absent: " + to_hex(rng.bytes(8)) : words[index];
    std::vector<double> times;
    using Clock = std::chrono::steady_clock;
    switch (scheme) {
      case Scheme::kPlain: {
        const PlainRecord r = plain_setup(password, backend, rng);
        envelope = emit(r);
        for (int i = 0; i < 5; ++i) {
          const auto t0 = Clock::now();
          plain_verify(password, r);
          times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        }
        break;
      }
      case Scheme::kHotp: {
        auto s = hotp6_setup(password, kDefaultHotpWindow, backend, rng, digits);
        envelope = emit(s.record);
        for (int i = 0; i < 5; ++i) {
          const auto t0 = Clock::now();
          hotp6_verify(password, hotp(s.key, 1, digits), s.record);
          times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
        }
        break;
      }
      case Scheme::kTotp: {
        TotpParams p;
        p.digits = digits;
        p.window = 1;
        envelope = emit(totp6_setup(password, p, 1700000000, backend, rng).record);
        break;
      }
      case Scheme::kOoba: {
        const auto keys = BoxKeyPair::generate(rng);
        envelope = emit(ooba6_setup(password, SealedBoxEncryptor(keys.public_key), backend, rng,
                                    digits));
        break;
      }
      case Scheme::kHsha1:
        throw UsageError("hsha1's 160-bit key space cannot be enumerated");
    }
    if (!times.empty()) verify_seconds = TimingStats::of(times).median;
  }

  CrackJob job{scheme, words, digits, std::max<std::size_t>(1, a.workers), a.budget};
  const CrackReport rep = crack(job, envelope);
  CrackReport scaled = rep;
  scaled.dictionary_size = a.project_dict;
  const double projected = rep.throughput > 0 ? project_full_scale(scaled, digits ? a.full_digits : 0) : 0;

  std::cout << "scheme=" << scheme_name(scheme) << " digits=" << digits << " radix=" << rep.radix
            << " h1=" << backend.to_string() << " dictionary=" << words.size()
            << " workers=" << job.workers << "\n"
            << "search_space=" << rep.search_space << " attempts=" << rep.attempts
            << " hashes=" << rep.hashes_evaluated << " elapsed=" << rep.elapsed << "s"
            << " throughput=" << rep.throughput << "/s\n";
  if (rep.cracked) {
    std::cout << "cracked: password=" << *rep.password;
    if (rep.target) std::cout << " target=" << *rep.target;
    std::cout << "\n";
  } else {
    std::cout << "not cracked\n";
  }
  std::printf("%-8s %14s %18s %26s\n", "scheme", "verify_ms", "mean_crack_s",
              "projected_mean_s");
  std::printf("%-8s %14s %18.4g %26.4g   (dict=%zu, digits=%u)\n",
              std::string(scheme_name(scheme)).c_str(),
              verify_seconds >= 0 ? std::to_string(ms(verify_seconds)).c_str() : "-",
              rep.projected_mean_time(), projected, a.project_dict,
              digits ? a.full_digits : 0);

  append_report(a.report, json{{"kind", "crack"},
                               {"scheme", scheme_name(scheme)},
                               {"h1", backend.to_string()},
                               {"digits", digits},
                               {"radix", rep.radix},
                               {"dictionary", words.size()},
                               {"workers", job.workers},
                               {"search_space", rep.search_space},
                               {"attempts", rep.attempts},
                               {"hashes", rep.hashes_evaluated},
                               {"elapsed_s", rep.elapsed},
                               {"cracked", rep.cracked},
                               {"throughput", rep.throughput},
                               {"verify_s", verify_seconds},
                               {"mean_crack_s", rep.projected_mean_time()},
                               {"projected_dict", a.project_dict},
                               {"projected_digits", digits ? a.full_digits : 0},
                               {"projected_mean_s", projected}});
  return kExitOk;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
  std::string scheme;
  std::size_t window = 0;
  std::size_t iterations = 100;
  std::string h1 = "sha256";
  std::string report;
};

json stats_json(const TimingStats& s) {
  return {{"mean_ms", ms(s.mean)}, {"median_ms", ms(s.median)}, {"p95_ms", ms(s.p95)}};
}

int cmd_bench(Global& g, const BenchArgs& a) {
  const Scheme scheme = parse_scheme(a.scheme);
  const HashBackend backend = HashBackend::from_string(a.h1);
  const OverheadReport rep = bench_overhead(scheme, backend, a.iterations, a.window, g.random());
  std::cout << "scheme=" << scheme_name(scheme) << " h1=" << rep.backend
            << " iterations=" << rep.iterations;
  if (rep.window) std::cout << " window=" << rep.window;
  std::cout << "\n";
  auto line = [](const char* name, const TimingStats& s) {
    std::printf("%-8s mean=%.4fms median=%.4fms p95=%.4fms\n", name, ms(s.mean), ms(s.median),
                ms(s.p95));
  };
  line("setup", rep.setup);
  line("verify", rep.verify);
  if (rep.encrypt.samples) line("encrypt", rep.encrypt);
  std::cout << "envelope_bytes=" << rep.envelope_bytes << "\n";
  json j{{"kind", "bench"},
         {"scheme", scheme_name(scheme)},
         {"h1", rep.backend},
         {"iterations", rep.iterations},
         {"window", rep.window},
         {"setup", stats_json(rep.setup)},
         {"verify", stats_json(rep.verify)},
         {"envelope_bytes", rep.envelope_bytes}};
  if (rep.encrypt.samples) j["encrypt"] = stats_json(rep.encrypt);
  append_report(a.report, j);
  return kExitOk;
}

// --- client-side helpers -------------------------------------------------------

int cmd_keygen(Global& g, const std::string& out) {
  const BoxKeyPair keys = BoxKeyPair::generate(g.random());
  write_private(out, to_base64(keys.secret_key));
  std::cout << "public-key: " << to_base64(keys.public_key) << "\n"
            << "fingerprint: " << key_fingerprint(keys.public_key) << "\n";
  return kExitOk;
}

int cmd_open(const std::string& sk_file, const std::string& ct) {
  auto sk = from_base64(read_file(sk_file));
  auto c = from_base64(ct);
  if (!sk || !c) throw UsageError("secret key and ciphertext must be base64");
  const SealedBoxDecryptor dec(BoxKeyPair::from_secret(*sk));
  std::cout << to_string(dec.decrypt(*c)) << "\n";
  return kExitOk;
}

int cmd_code(const std::string& key, std::optional<std::uint64_t> counter,
             std::optional<std::int64_t> now, std::uint32_t digits, std::uint32_t tx,
             std::int64_t t0) {
  const HmacKey k = key_from_base32(key);
  if (counter) {
    std::cout << hotp(k, *counter, digits).text() << "\n";
  } else {
    TotpParams p;
    p.t0 = t0;
    p.tx = tx;
    p.digits = digits;
    p.validate();
    std::cout << totp(k, now_or(now), p).text() << "\n";
  }
  return kExitOk;
}

int cmd_respond(const std::string& key, const std::string& challenge) {
  const HmacKey k = key_from_base32(key);
  std::cout << to_hex(hmac_sha1(k, bytes_from_hex(challenge, kChallengeLength, "--challenge")))
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-factor credential hashing: provisioning, login, recovery, attack bench"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--store", g.store, "Store directory (default $MFCHF_STORE or ./.mfchf)");
  app.add_option("--seed", g.seed, "Deterministic RNG seed (tests only)");
  app.add_flag("--unsafe-deterministic-rng", g.unsafe_seed, "Allow --seed");

  std::function<int()> run;

  SetupArgs setup;
  auto* s = app.add_subcommand("setup", "Create a user");
  s->add_option("scheme", setup.scheme, "hotp | totp | ooba | hsha1")->required();
  s->add_option("--user", setup.user)->required();
  s->add_option("--password", setup.password)->required();
  s->add_option("--window", setup.window, "HOTP k (default 2) or TOTP w (default 2920)");
  s->add_option("--digits", setup.digits)->check(CLI::Range(1, 9));
  s->add_option("--h1", setup.h1, "argon2id[,m=..][,t=..][,l=..] | sha256");
  s->add_flag("--cheap", setup.cheap, "Minimum Argon2id cost");
  s->add_option("--t0", setup.t0);
  s->add_option("--tx", setup.tx)->check(CLI::PositiveNumber);
  s->add_option("--now", setup.now);
  s->add_option("--pk", setup.pk, "OOBA recipient public key (base64)");
  s->add_option("--key", setup.key, "hsha1 token secret (base32); generated if absent");
  s->add_option("--recovery-code", setup.code, "Use this recovery code instead of a fresh one");
  s->add_option("--spool", setup.spool, "Deliver the OOBA ciphertext to this directory");
  s->callback([&] { run = [&] { return cmd_setup(g, setup); }; });

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Log in");
  v->add_option("--user", verify.user)->required();
  v->add_option("--password", verify.password)->required();
  v->add_option("--otp", verify.otp);
  v->add_option("--response", verify.response, "hsha1 response (hex)");
  v->add_option("--token", verify.token, "Persistence token from an earlier --persist");
  v->add_flag("--persist", verify.persist, "Print a trusted-device token on success");
  v->add_option("--now", verify.now);
  v->callback([&] { run = [&] { return cmd_verify(g, verify); }; });

  RecoverArgs recover;
  auto* r = app.add_subcommand("recover", "Recover a password or a lost authenticator");
  r->add_option("--user", recover.user)->required();
  r->add_option("--mode", recover.mode, "password | hotp")->required();
  r->add_option("--code", recover.code, "Recovery code")->required();
  r->add_option("--otp", recover.otp);
  r->add_option("--password", recover.password);
  r->add_option("--new-password", recover.new_password);
  r->callback([&] { run = [&] { return cmd_recover(g, recover); }; });

  std::string inspect_user;
  auto* in = app.add_subcommand("inspect", "Describe a stored user without secrets");
  in->add_option("--user", inspect_user)->required();
  in->callback([&] { run = [&] { return cmd_inspect(g, inspect_user); }; });

  std::string challenge_user, challenge_spool;
  auto* ch = app.add_subcommand("challenge", "Print the pending OOBA ciphertext or hsha1 challenge");
  ch->add_option("--user", challenge_user)->required();
  ch->add_option("--spool", challenge_spool);
  ch->callback([&] { run = [&] { return cmd_challenge(g, challenge_user, challenge_spool); }; });

  CrackArgs crack_args;
  auto* c = app.add_subcommand("crack", "Dictionary x target-space attack");
  c->add_option("--scheme", crack_args.scheme, "plain | hotp | totp | ooba")->required();
  c->add_option("--dict", crack_args.dict, "top100 or a word-list file");
  c->add_option("--digits", crack_args.digits, "Reduced target digits");
  c->add_option("--h1", crack_args.h1);
  c->add_flag("--cheap", crack_args.cheap);
  c->add_option("--workers", crack_args.workers);
  c->add_option("--budget", crack_args.budget, "Seconds; 0 = unlimited");
  c->add_option("--plant", crack_args.plant, "Dictionary index of the planted password");
  c->add_flag("--absent", crack_args.absent, "Plant a password missing from the dictionary");
  c->add_option("--target", crack_args.target, "Crack this envelope file instead of planting");
  c->add_option("--project-dict", crack_args.project_dict);
  c->add_option("--full-digits", crack_args.full_digits);
  c->add_option("--report", crack_args.report, "Append a JSON line to this file");
  c->callback([&] { run = [&] { return cmd_crack(g, crack_args); }; });

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Setup/Verify overhead");
  b->add_option("--scheme", bench.scheme)->required();
  b->add_option("--window", bench.window);
  b->add_option("--iterations", bench.iterations);
  b->add_option("--h1", bench.h1, "Default sha256 isolates construction overhead");
  b->add_option("--report", bench.report);
  b->callback([&] { run = [&] { return cmd_bench(g, bench); }; });

  std::string keygen_out;
  auto* kg = app.add_subcommand("keygen", "OOBA recipient key pair");
  kg->add_option("--out", keygen_out, "Secret key file")->required();
  kg->callback([&] { run = [&] { return cmd_keygen(g, keygen_out); }; });

  std::string open_sk, open_ct;
  auto* op = app.add_subcommand("open", "Decrypt an OOBA ciphertext");
  op->add_option("--sk", open_sk)->required();
  op->add_option("--ct", open_ct)->required();
  op->callback([&] { run = [&] { return cmd_open(open_sk, open_ct); }; });

  std::string code_key;
  std::optional<std::uint64_t> code_counter;
  std::optional<std::int64_t> code_now;
  std::uint32_t code_digits = 6, code_tx = 30;
  std::int64_t code_t0 = 0;
  auto* cd = app.add_subcommand("code", "Authenticator: HOTP with --counter, else TOTP");
  cd->add_option("--key", code_key)->required();
  cd->add_option("--counter", code_counter);
  cd->add_option("--now", code_now);
  cd->add_option("--digits", code_digits)->check(CLI::Range(1, 9));
  cd->add_option("--tx", code_tx)->check(CLI::PositiveNumber);
  cd->add_option("--t0", code_t0);
  cd->callback([&] {
    run = [&] { return cmd_code(code_key, code_counter, code_now, code_digits, code_tx, code_t0); };
  });

  std::string respond_key, respond_challenge;
  auto* rs = app.add_subcommand("respond", "Token: HMAC-SHA1 response to a challenge");
  rs->add_option("--key", respond_key)->required();
  rs->add_option("--challenge", respond_challenge)->required();
  rs->callback([&] { run = [&] { return cmd_respond(respond_key, respond_challenge); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: corrupt record: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RevisionConflict& e) {
    std::cerr << "error: " << e.what() << "; retry\n";
    return kExitReject;
  } catch (const StoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitReject;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
