#pragma once

#include <filesystem>
#include <string>

namespace testing {

/// Empty scratch directory under the build tree, recreated on each call.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::path(DEEPSCAN_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
