#pragma once

#include "trialmix/signal.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("trialmix_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> tone(std::size_t n, double f, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    x[t] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs + phase);
  }
  return x;
}

inline std::vector<std::string> labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("ch" + std::to_string(i + 1));
  return out;
}

inline trialmix::Trial make_trial(trialmix::Matrix data, double fs, trialmix::ClassLabel label, int run, int id) {
  const auto n = static_cast<std::size_t>(data.cols());
  const auto channels = static_cast<std::size_t>(data.rows());
  return trialmix::Trial{trialmix::MultichannelSignal(std::move(data), fs, labels(channels)), label, run, id,
                         {{"all", trialmix::SampleRange{0, n}}}};
}

}  // namespace testing
