// SPDX-License-Identifier: Apache-2.0
// Usage: make_fixtures <fixture dir>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fixture_recipes.hpp"

namespace {

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << " (" << bytes.size() << " bytes)\n";
}

}  // namespace

int main(int argc, char** argv) {
  namespace fx = arena::fixtures;
  const std::filesystem::path dir = argc > 1 ? argv[1] : ARENA_FIXTURE_DIR;
  try {
    std::filesystem::create_directories(dir);
    const auto report = fx::record_trajectory((dir / fx::kTrajectoryName).string());
    std::cout << "wrote " << report.path << " (" << report.episode_count << " episodes)\n";
    const auto basic = fx::basic_requests();
    write_file(dir / fx::kBasicRequestsName, fx::encode_all(basic));
    write_file(dir / fx::kBasicRepliesName, fx::replay_in_process(basic));
    const auto errors = fx::error_requests();
    write_file(dir / fx::kErrorRequestsName, fx::encode_all(errors));
    write_file(dir / fx::kErrorRepliesName, fx::replay_in_process(errors));
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
