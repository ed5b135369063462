#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mfchf/bytes.hpp"
#include "mfchf/envelope.hpp"

namespace mfchf {

class StoreError : public Error {
 public:
  using Error::Error;
};

class DuplicateUser : public StoreError {
 public:
  using StoreError::StoreError;
};

class RevisionConflict : public StoreError {
 public:
  using StoreError::StoreError;
};

// Contents of one <store>/<user>.mfchf file:
//   mfchf-<kind> v=1 rev=<n>\n<line>\n...
// kind "bundle" holds primary, password-recovery and rcode envelopes (the
// account bundle format); kind "record" holds a single envelope.
struct StoredEntry {
  std::string kind;
  std::uint64_t revision = 0;
  std::vector<std::string> lines;

  std::string serialize() const {
    std::string s = "mfchf-" + kind + " v=1 rev=" + std::to_string(revision) + "\n";
    for (const auto& l : lines) s += l + "\n";
    return s;
  }

  static StoredEntry deserialize(std::string_view text) {
    StoredEntry e;
    std::vector<std::string_view> lines;
    while (!text.empty()) {
      const std::size_t nl = text.find('\n');
      if (nl == std::string_view::npos) {
        throw ParseError(ParseError::Kind::kMalformedField, "", "store: missing final newline");
      }
      lines.push_back(text.substr(0, nl));
      text.remove_prefix(nl + 1);
    }
    if (lines.empty()) throw ParseError(ParseError::Kind::kBadVersion, "", "store: empty file");
    const std::string_view header = lines[0];
    const std::size_t sp = header.find(' ');
    constexpr std::string_view kVersion = " v=1 rev=";
    if (header.substr(0, 6) != "mfchf-" || sp == std::string_view::npos ||
        header.substr(sp, kVersion.size()) != kVersion) {
      throw ParseError(ParseError::Kind::kBadVersion, "", "store: bad header");
    }
    e.kind = std::string(header.substr(6, sp - 6));
    if (e.kind != "bundle" && e.kind != "record") {
      throw ParseError(ParseError::Kind::kBadScheme, "", "store: unknown entry kind");
    }
    e.revision =
        envelope_detail::parse_int<std::uint64_t>("rev", header.substr(sp + kVersion.size()));
    for (std::size_t i = 1; i < lines.size(); ++i) e.lines.emplace_back(lines[i]);
    const std::size_t want = e.kind == "bundle" ? 3 : 1;
    if (e.lines.size() != want) {
      throw ParseError(ParseError::Kind::kMalformedField, "", "store: wrong envelope count");
    }
    return e;
  }
};

// File-per-user credential store. Writes go to a temp file that is fsynced
// and renamed over the old one, under an exclusive flock per user.
class Store {
 public:
  static constexpr std::string_view kEnvVar = "MFCHF_STORE";

  explicit Store(std::filesystem::path root) : root_(std::move(root)) {}

  static std::filesystem::path default_root() {
    if (const char* env = std::getenv(kEnvVar.data()); env && *env) return env;
    return ".mfchf";
  }

  const std::filesystem::path& root() const { return root_; }

  static bool valid_username(std::string_view user) {
    if (user.empty() || user.size() > 128 || user[0] == '.') return false;
    for (char c : user) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-' ||
            c == '@')) {
        return false;
      }
    }
    return true;
  }

  std::filesystem::path path_for(std::string_view user) const {
    if (!valid_username(user)) throw InvalidArgument("invalid username");
    return root_ / (std::string(user) + ".mfchf");
  }

  bool exists(std::string_view user) const { return std::filesystem::exists(path_for(user)); }

  std::optional<std::string> read_raw(std::string_view user) const {
    std::ifstream in(path_for(user), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Throws ParseError if the file exists but is corrupt.
  std::optional<StoredEntry> load(std::string_view user) const {
    auto raw = read_raw(user);
    if (!raw) return std::nullopt;
    return StoredEntry::deserialize(*raw);
  }

  void create(std::string_view user, const StoredEntry& entry) {
    auto lock = lock_user(user);
    if (exists(user)) throw DuplicateUser("user already exists: " + std::string(user));
    write_atomic(path_for(user), entry.serialize());
  }

  // Compare-and-swap on the stored revision.
  void replace(std::string_view user, std::uint64_t expected_revision,
               const StoredEntry& entry) {
    auto lock = lock_user(user);
    auto current = load(user);
    if (!current) throw StoreError("no such user: " + std::string(user));
    if (current->revision != expected_revision) {
      throw RevisionConflict("stored revision changed underneath this update");
    }
    write_atomic(path_for(user), entry.serialize());
  }

  // Called between the temp-file write and the rename; tests use it to
  // simulate a crash at the worst moment.
  std::function<void(std::string_view stage)> fault_hook;

 private:
  class UserLock {
   public:
    explicit UserLock(int fd) : fd_(fd) {}
    UserLock(UserLock&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    UserLock(const UserLock&) = delete;
    UserLock& operator=(const UserLock&) = delete;
    ~UserLock() {
      if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
      }
    }

   private:
    int fd_;
  };

  UserLock lock_user(std::string_view user) {
    std::filesystem::create_directories(root_);
    const auto path = root_ / ("." + std::string(user) + ".lock");
    if (!valid_username(user)) throw InvalidArgument("invalid username");
    const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
    if (fd < 0) throw StoreError("cannot open lock file: " + std::string(std::strerror(errno)));
    if (::flock(fd, LOCK_EX) != 0) {
      ::close(fd);
      throw StoreError("cannot lock user file");
    }
    return UserLock(fd);
  }

  void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
    if (fd < 0) throw StoreError("cannot create temp file: " + std::string(std::strerror(errno)));
    std::size_t off = 0;
    while (off < content.size()) {
      const ssize_t n = ::write(fd, content.data() + off, content.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        ::close(fd);
        throw StoreError("write failed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) throw StoreError("fsync failed");
    if (fault_hook) fault_hook("after-temp-write");
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw StoreError("rename failed: " + ec.message());
    const int dfd = ::open(path.parent_path().c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (dfd >= 0) {
      ::fsync(dfd);
      ::close(dfd);
    }
  }

  std::filesystem::path root_;
};

}  // namespace mfchf
