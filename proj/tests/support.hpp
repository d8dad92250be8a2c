#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "diarize/scoring.hpp"

namespace testing {

/// Directory removed when it goes out of scope.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("diarize_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

/// Speakers A, B, C taking 0.8 s turns in rotation over [0, until).
inline void add_rotation(diarize::GroundTruthScript& script, double until, const char* const* labels, int n) {
  int k = 0;
  for (int i = 0; (i + 1) * 0.8 <= until + 1e-9; ++i, k = (k + 1) % n) {
    script.segments.push_back({diarize::TimeSpan(i * 0.8, (i + 1) * 0.8), labels[k]});
  }
}

}  // namespace testing
