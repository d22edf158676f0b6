#pragma once

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <string>

namespace testutil {

// Scratch directory removed at scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("asldigits_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path fixtures_dir() {
#ifdef ASLDIGITS_FIXTURES_DIR
  return ASLDIGITS_FIXTURES_DIR;
#else
  return "tests/fixtures";
#endif
}

}  // namespace testutil
