#include "test_support.hpp"

#include <atomic>
#include <filesystem>

namespace adco::test {

std::string scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const std::string dir =
      "adco_test_scratch/" + tag + "_" + std::to_string(counter++);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace adco::test
