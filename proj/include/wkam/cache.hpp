#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace wkam {

// Content-addressed directory cache. Readers never see partial entries: a
// writer holds an exclusive lock on <key>.lock, fills a staging directory and
// renames it into place.
class Cache {
 public:
  // WKAM_CACHE_DIR overrides `configured`; an empty value falls back to ./.wkam-cache.
  static std::filesystem::path resolve_root(const std::string& configured);

  explicit Cache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path entry(const std::string& key) const { return root_ / key; }
  bool contains(const std::string& key) const;
  // Runs `fill` on a staging directory unless the entry exists; returns the entry path.
  std::filesystem::path get_or_create(const std::string& key,
                                      const std::function<void(const std::filesystem::path&)>& fill);

 private:
  std::filesystem::path root_;
};

class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace wkam
