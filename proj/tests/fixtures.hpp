#pragma once

#include "mfopf/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fixtures {

inline std::filesystem::path data(const std::string& name) { return std::filesystem::path(MFOPF_DATA_DIR) / name; }

inline mfopf::MultiFrequencyNetwork network(const std::string& case_file, const std::string& ext_file = {}) {
  const auto doc = mfopf::load_case(data(case_file));
  const auto ext = ext_file.empty() ? mfopf::ExtensionDocument{} : mfopf::load_extension(data(ext_file));
  return mfopf::merge(doc, ext);
}

inline mfopf::MultiFrequencyNetwork baseline(const std::string& case_file, const std::string& ext_file) {
  return mfopf::merge_baseline(mfopf::load_case(data(case_file)), mfopf::load_extension(data(ext_file)));
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Runs the command-line tool; returns its exit status.
inline int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(MFOPF_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mfopf_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
