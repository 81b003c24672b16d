#include "wkam/cache.hpp"

#include "wkam/error.hpp"

#include <cstdlib>
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

namespace wkam {

namespace fs = std::filesystem;

FileLock::FileLock(const fs::path& path) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw ConfigError("cannot open lock file " + path.string());
  if (::flock(fd_, LOCK_EX) != 0) {
    ::close(fd_);
    throw ConfigError("cannot lock " + path.string());
  }
}

FileLock::~FileLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

fs::path Cache::resolve_root(const std::string& configured) {
  if (const char* env = std::getenv("WKAM_CACHE_DIR"); env && *env) return env;
  if (!configured.empty()) return configured;
  return ".wkam-cache";
}

Cache::Cache(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

bool Cache::contains(const std::string& key) const { return fs::is_directory(entry(key)); }

fs::path Cache::get_or_create(const std::string& key, const std::function<void(const fs::path&)>& fill) {
  const fs::path target = entry(key);
  if (fs::is_directory(target)) return target;
  FileLock lock(root_ / (key + ".lock"));
  if (fs::is_directory(target)) return target;
  const fs::path staging = root_ / (key + ".staging");
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    fill(staging);
  } catch (...) {
    fs::remove_all(staging);
    throw;
  }
  fs::rename(staging, target);
  return target;
}

}  // namespace wkam
