#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "lwe/core.hpp"
#include "lwe/templates.hpp"

namespace lwe::testing {

inline const TemplateStore& templates() {
  static const TemplateStore store = TemplateStore::load();
  return store;
}

// Deletes itself on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lwe-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline TestCase make_case(const std::string& id, std::optional<PreferredResponse> gold = PreferredResponse::First) {
  TestCase c;
  c.id = id;
  c.question = "What is in picture " + id + "?";
  c.response_a = "Answer one for " + id + ": a red bicycle leaning on a wall.";
  c.response_b = "Answer two for " + id + ": a blue car parked by a tree.";
  c.gold = gold;
  return c;
}

// n cases "case-0000"..., gold alternating unless a seed is given.
inline Dataset make_dataset(std::size_t n, std::optional<std::uint64_t> seed = std::nullopt) {
  Dataset d;
  std::mt19937_64 rng(seed.value_or(0));
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case-%04zu", i);
    auto gold = seed ? (rng() & 1 ? PreferredResponse::First : PreferredResponse::Second)
                     : (i % 2 ? PreferredResponse::Second : PreferredResponse::First);
    d.push_back(make_case(id, gold));
  }
  return d;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::filesystem::path test_data_dir() { return LWE_TEST_DATA_DIR; }

}  // namespace lwe::testing
