#include "shiftbench/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "shiftbench/errors.hpp"
#include "shiftbench/rng.hpp"
#include "shiftbench/serialization.hpp"

namespace shiftbench::cli {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : inputs) {
    files.push_back({{"path", p.string()}, {"fnv1a64", file_digest(p)}});
  }
  const auto now = std::chrono::system_clock::now();
  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  return {{"command", command},
          {"argv", argv},
          {"config", config},
          {"seeds", seeds},
          {"inputs", files},
          {"version", SHIFTBENCH_VERSION},
          {"rng", std::string(CounterRng::kName) + " v" + std::to_string(CounterRng::kVersion)},
          {"timestamp", secs}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, path.string() + ": cannot write manifest");
  out << to_json().dump(2) << '\n';
}

}  // namespace shiftbench::cli
