#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
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

enum class Scheme { kPlain, kHotp, kTotp, kOoba, kHsha1 };

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kPlain: return "plain";
    case Scheme::kHotp: return "hotp";
    case Scheme::kTotp: return "totp";
    case Scheme::kOoba: return "ooba";
    case Scheme::kHsha1: return "hsha1";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::kPlain, Scheme::kHotp, Scheme::kTotp, Scheme::kOoba, Scheme::kHsha1}) {
    if (scheme_name(s) == name) return s;
  }
  throw InvalidArgument("unknown scheme: " + std::string(name));
}

// --- single-factor baseline ----------------------------------------------------

// H1(password || 0x00 || 0x00 || salt): the conventional salted password hash
// at the same cost as the MFCHF variants.
struct PlainRecord {
  Bytes salt;
  Bytes digest;
  HashBackend backend;
};

inline PlainRecord plain_setup(std::string_view password, const HashBackend& backend,
                               RandomSource& rng = system_random()) {
  PlainRecord r;
  r.backend = backend;
  r.salt = rng.bytes(kSaltLength);
  r.digest = slow_hash(backend, password, Bytes{}, r.salt);
  return r;
}

inline bool plain_verify(std::string_view password, const PlainRecord& r) {
  return ct_equal(slow_hash(r.backend, password, Bytes{}, r.salt), r.digest);
}

inline std::string emit(const PlainRecord& r) {
  return "$plain$v=1$h1=" + r.backend.to_string() + "$salt=" + to_base64(r.salt) +
         "$digest=" + to_base64(r.digest);
}

inline PlainRecord parse_plain(std::string_view text) {
  constexpr std::string_view kPrefix = "$plain$v=1$h1=";
  if (text.substr(0, kPrefix.size()) != kPrefix) {
    throw ParseError(ParseError::Kind::kBadScheme, "", "not a plain baseline record");
  }
  // Reuse the rcode grammar: identical field layout.
  auto r = parse_as<RecoveryCodeRecord>("$mfchf-rcode$v=1$h1=" +
                                        std::string(text.substr(kPrefix.size())));
  return {std::move(r.salt), std::move(r.digest), r.backend};
}

// --- cracking --------------------------------------------------------------------

struct CrackJob {
  Scheme scheme = Scheme::kPlain;
  std::vector<std::string> dictionary;
  // Target-space digits; must match the target record (0 for plain).
  std::uint32_t otp_digits = 0;
  std::size_t workers = 1;
  // Seconds; 0 means no limit.
  double time_budget = 0.0;
};

struct CrackReport {
  Scheme scheme = Scheme::kPlain;
  std::size_t dictionary_size = 0;
  std::uint32_t radix = 10;
  std::uint32_t digits = 0;
  std::uint64_t search_space = 0;
  // Canonical-order attempts to the match when cracked, else hashes evaluated.
  std::uint64_t attempts = 0;
  std::uint64_t hashes_evaluated = 0;
  double elapsed = 0.0;
  bool cracked = false;
  std::optional<std::string> password;
  std::optional<std::string> target;
  double throughput = 0.0;

  // Mean-case time to exhaust half the search space at the measured rate.
  double projected_mean_time() const {
    return throughput > 0 ? static_cast<double>(search_space) / (2.0 * throughput) : 0.0;
  }

  std::string summary() const {
    std::ostringstream os;
    os << scheme_name(scheme) << ": " << (cracked ? "CRACKED" : "not cracked")
       << " attempts=" << attempts << " search_space=" << search_space
       << " elapsed=" << elapsed << "s throughput=" << throughput << "/s"
       << " projected_mean=" << projected_mean_time() << "s";
    if (password) os << " password=" << *password;
    if (target) os << " target=" << *target;
    return os.str();
  }
};

namespace detail {

// One candidate test against a parsed target; the attacker's inner loop.
class CrackTarget {
 public:
  CrackTarget(Scheme scheme, std::string_view text) : scheme_(scheme) {
    switch (scheme) {
      case Scheme::kPlain: {
        auto r = parse_plain(text);
        backend_ = r.backend;
        salt_ = r.salt;
        check_ = r.digest;
        break;
      }
      case Scheme::kHotp: {
        auto r = parse_as<HotpRecord>(text);
        backend_ = r.backend;
        salt_ = r.salt;
        check_ = r.outer;
        radix_ = 10;
        digits_ = r.digits;
        outer_ = true;
        break;
      }
      case Scheme::kTotp: {
        auto r = parse_as<TotpRecord>(text);
        backend_ = r.backend;
        salt_ = r.salt;
        check_ = r.outer;
        radix_ = 10;
        digits_ = r.params.digits;
        outer_ = true;
        break;
      }
      case Scheme::kOoba: {
        auto r = parse_as<OobaRecord>(text);
        backend_ = r.backend;
        salt_ = r.salt;
        check_ = r.digest;
        radix_ = 36;
        digits_ = r.digits();
        break;
      }
      case Scheme::kHsha1:
        throw InvalidArgument("hsha1 key space (2^160) cannot be enumerated");
    }
  }

  std::uint32_t radix() const { return radix_; }
  std::uint32_t digits() const { return digits_; }
  std::uint64_t targets() const { return digits_ == 0 ? 1 : otp_modulus(radix_, digits_); }

  HashTarget target_at(std::uint64_t t) const {
    if (digits_ == 0) return Bytes{};
    return Otp(t, radix_, digits_);
  }

  bool matches(std::string_view password, std::uint64_t t) const {
    Bytes h = slow_hash(backend_, password, target_at(t), salt_);
    if (outer_) h = backend_.fast(h);
    return ct_equal(h, check_);
  }

 private:
  Scheme scheme_;
  HashBackend backend_;
  Bytes salt_;
  Bytes check_;
  std::uint32_t radix_ = 10;
  std::uint32_t digits_ = 0;
  bool outer_ = false;
};

}  // namespace detail

// Exhaustive dictionary x target-space search in canonical order
// (dictionary-major, target ascending). Workers take strided candidate
// indices; the reported match is the first one in canonical order.
inline CrackReport crack(const CrackJob& job, std::string_view target_text) {
  if (job.dictionary.empty()) throw InvalidArgument("dictionary is empty");
  if (job.otp_digits > 6) throw InvalidArgument("otp digits must be at most 6");
  const detail::CrackTarget target(job.scheme, target_text);
  if (target.digits() != job.otp_digits) {
    throw InvalidArgument("job digit count does not match the target record");
  }

  CrackReport rep;
  rep.scheme = job.scheme;
  rep.dictionary_size = job.dictionary.size();
  rep.radix = target.radix();
  rep.digits = target.digits();
  const std::uint64_t per_word = target.targets();
  rep.search_space = per_word * job.dictionary.size();

  const std::size_t workers = std::max<std::size_t>(1, job.workers);
  std::atomic<std::uint64_t> best{rep.search_space};
  std::atomic<std::uint64_t> evaluated{0};
  std::atomic<bool> out_of_time{false};
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(
                  job.time_budget > 0 ? job.time_budget : 1e9));

  auto run = [&](std::size_t w) {
    std::uint64_t local = 0;
    for (std::uint64_t i = w; i < rep.search_space; i += workers) {
      if (i > best.load(std::memory_order_relaxed)) break;
      if (job.time_budget > 0 && (local & 0x0f) == 0 && Clock::now() > deadline) {
        out_of_time = true;
        break;
      }
      ++local;
      if (target.matches(job.dictionary[i / per_word], i % per_word)) {
        std::uint64_t cur = best.load();
        while (i < cur && !best.compare_exchange_weak(cur, i)) {
        }
        break;
      }
    }
    evaluated += local;
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }

  rep.elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  rep.hashes_evaluated = evaluated.load();
  rep.throughput = rep.elapsed > 0 ? static_cast<double>(rep.hashes_evaluated) / rep.elapsed : 0;
  const std::uint64_t hit = best.load();
  if (hit < rep.search_space) {
    rep.cracked = true;
    rep.attempts = hit + 1;
    rep.password = job.dictionary[hit / per_word];
    if (target.digits() > 0) {
      rep.target = Otp(hit % per_word, target.radix(), target.digits()).text();
    }
  } else {
    rep.attempts = rep.hashes_evaluated;
  }
  return rep;
}

// Mean-case crack time if the same attack faced a radix^full_digits target
// space, at the throughput measured in `report`.
inline double project_full_scale(const CrackReport& report, std::uint32_t full_digits) {
  if (!(report.throughput > 0)) throw InvalidArgument("report has zero throughput");
  const double space = static_cast<double>(report.dictionary_size) *
                       std::pow(static_cast<double>(report.radix), full_digits);
  return space / (2.0 * report.throughput);
}

// --- overhead benchmark ------------------------------------------------------------

struct TimingStats {
  double min = 0;
  double mean = 0;
  double median = 0;
  double p95 = 0;
  std::size_t samples = 0;

  static TimingStats of(std::vector<double> xs) {
    TimingStats s;
    s.samples = xs.size();
    if (xs.empty()) return s;
    std::sort(xs.begin(), xs.end());
    s.min = xs.front();
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    const std::size_t n = xs.size();
    s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
    s.p95 = xs[std::min(n - 1, static_cast<std::size_t>(std::ceil(0.95 * n)) - 1)];
    return s;
  }
};

struct OverheadReport {
  Scheme scheme = Scheme::kHotp;
  std::string backend;
  std::size_t iterations = 0;
  std::size_t window = 0;
  // Seconds.
  TimingStats setup;
  TimingStats verify;
  // Public-key encryption share of ooba setup+verify; empty otherwise.
  TimingStats encrypt;
  std::size_t envelope_bytes = 0;
};

namespace detail {

class TimedEncryptor final : public Encryptor {
 public:
  explicit TimedEncryptor(const Encryptor& inner) : inner_(inner) {}
  std::string fingerprint() const override { return inner_.fingerprint(); }
  Bytes encrypt(ByteView plaintext) const override {
    const auto t0 = std::chrono::steady_clock::now();
    Bytes ct = inner_.encrypt(plaintext);
    elapsed_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return ct;
  }
  double take() const {
    const double e = elapsed_;
    elapsed_ = 0;
    return e;
  }

 private:
  const Encryptor& inner_;
  mutable double elapsed_ = 0;
};

}  // namespace detail

// Times Setup and Verify `iterations` times each. Pass HashBackend::sha256()
// to isolate construction overhead from the cost of H1. `window` is k for
// hotp and w for totp.
inline OverheadReport bench_overhead(Scheme scheme, const HashBackend& backend,
                                     std::size_t iterations, std::size_t window = 0,
                                     RandomSource& rng = system_random()) {
  if (iterations < 10) throw InvalidArgument("bench needs at least 10 iterations");
  using Clock = std::chrono::steady_clock;
  auto secs = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  OverheadReport rep;
  rep.scheme = scheme;
  rep.backend = backend.to_string();
  rep.iterations = iterations;
  std::vector<double> setup, verify, encrypt;
  const std::string password = "correct horse battery staple";
  constexpr std::int64_t kNow = 1700000000;

  const BoxKeyPair recipient = BoxKeyPair::generate(rng);
  const SealedBoxDecryptor decryptor(recipient);
  const SealedBoxEncryptor sealed(recipient.public_key);
  const detail::TimedEncryptor timed(sealed);

  for (std::size_t i = 0; i < iterations; ++i) {
    bool ok = false;
    switch (scheme) {
      case Scheme::kPlain: {
        auto t0 = Clock::now();
        auto r = plain_setup(password, backend, rng);
        auto t1 = Clock::now();
        ok = plain_verify(password, r);
        auto t2 = Clock::now();
        setup.push_back(secs(t0, t1));
        verify.push_back(secs(t1, t2));
        rep.envelope_bytes = emit(r).size();
        break;
      }
      case Scheme::kHotp: {
        rep.window = window ? window : kDefaultHotpWindow;
        auto t0 = Clock::now();
        auto s = hotp6_setup(password, rep.window, backend, rng);
        auto t1 = Clock::now();
        const Otp otp = hotp(s.key, 1);
        auto t2 = Clock::now();
        ok = hotp6_verify(password, otp, s.record).accepted();
        auto t3 = Clock::now();
        setup.push_back(secs(t0, t1));
        verify.push_back(secs(t2, t3));
        rep.envelope_bytes = emit(s.record).size();
        break;
      }
      case Scheme::kTotp: {
        TotpParams params;
        params.window = static_cast<std::uint32_t>(window ? window : 2920);
        rep.window = params.window;
        auto t0 = Clock::now();
        auto s = totp6_setup(password, params, kNow, backend, rng);
        auto t1 = Clock::now();
        const Otp otp = totp(s.key, kNow, params);
        auto t2 = Clock::now();
        ok = totp6_verify(password, otp, s.record, kNow).accepted();
        auto t3 = Clock::now();
        setup.push_back(secs(t0, t1));
        verify.push_back(secs(t2, t3));
        rep.envelope_bytes = emit(s.record).size();
        break;
      }
      case Scheme::kOoba: {
        auto t0 = Clock::now();
        auto r = ooba6_setup(password, timed, backend, rng);
        auto t1 = Clock::now();
        const Otp otp = Otp::parse(to_string(decryptor.decrypt(r.ct)), 36, kOobaDigits);
        auto t2 = Clock::now();
        ok = ooba6_verify(password, otp, r, timed, rng).accepted();
        auto t3 = Clock::now();
        setup.push_back(secs(t0, t1));
        verify.push_back(secs(t2, t3));
        encrypt.push_back(timed.take());
        rep.envelope_bytes = emit(r).size();
        break;
      }
      case Scheme::kHsha1: {
        const HmacKey key = HmacKey::random(rng);
        auto t0 = Clock::now();
        auto r = hsha1_setup(password, key, backend, rng);
        auto t1 = Clock::now();
        const auto response = hmac_sha1(key, r.challenge);
        auto t2 = Clock::now();
        ok = hsha1_verify(password, response, r, rng).accepted();
        auto t3 = Clock::now();
        setup.push_back(secs(t0, t1));
        verify.push_back(secs(t2, t3));
        rep.envelope_bytes = emit(r).size();
        break;
      }
    }
    if (!ok) throw Error("bench: verification of a fresh record failed");
  }
  rep.setup = TimingStats::of(std::move(setup));
  rep.verify = TimingStats::of(std::move(verify));
  rep.encrypt = TimingStats::of(std::move(encrypt));
  return rep;
}

}  // namespace mfchf
