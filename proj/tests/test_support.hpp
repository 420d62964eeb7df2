// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "skelgen/autodiff/tensor.hpp"
#include "skelgen/rng.hpp"

namespace skelgen::test {

inline ad::Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  ad::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline std::filesystem::path env_dir(const char* var, const char* fallback) {
  const char* v = std::getenv(var);
  return v ? std::filesystem::path(v) : std::filesystem::path(fallback);
}

inline std::filesystem::path fixtures_dir() { return env_dir("SKELGEN_FIXTURES", "tests/fixtures"); }
inline std::filesystem::path configs_dir() { return env_dir("SKELGEN_CONFIGS", "configs"); }

inline std::filesystem::path skelgen_bin() { return env_dir("SKELGEN_BIN", "build/skelgen"); }

// Runs the CLI binary with `args`, returning its exit status.
inline int run_skelgen(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = "\"" + skelgen_bin().string() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("skelgen_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace skelgen::test
