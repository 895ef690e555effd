#pragma once

#include <filesystem>
#include <string>

#include "dgt/model.hpp"

namespace dgt::test {

inline std::string data_path(const std::string& name) { return std::string(DGT_TEST_DATA) + "/" + name; }

inline std::vector<GameRecord> table2_games() { return load_games(data_path("table2_games.json")); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("dgt_test_" + name)) {
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

}  // namespace dgt::test
