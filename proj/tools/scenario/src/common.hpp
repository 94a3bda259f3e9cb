#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtrap/errors.hpp"
#include "mgtrap/scenario/commands.hpp"
#include "mgtrap/scenario/config.hpp"
#include "mgtrap/trajectory_io.hpp"

namespace mgtrap::scenario::detail {

using json = nlohmann::ordered_json;

inline void say(const RunOptions& opts, const std::string& line) {
  if (opts.log) *opts.log << line << '\n' << std::flush;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

/// Run bookkeeping; the only output that legitimately differs between reruns.
struct Manifest {
  explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  std::string started = utc_now();
  std::vector<std::string> outputs;
  json extra = json::object();

  void add(const std::filesystem::path& out_dir, const std::filesystem::path& file) {
    outputs.push_back(std::filesystem::relative(file, out_dir).generic_string());
  }

  void write(const std::filesystem::path& out_dir, const ScenarioConfig& cfg, std::uint64_t seed) const {
    json j;
    j["command"] = command;
    j["tool_version"] = tool_version();
    j["config_hash"] = hex64(cfg.hash);
    j["seed"] = seed;
    j["started_utc"] = started;
    j["finished_utc"] = utc_now();
    for (const auto& [k, v] : extra.items()) j[k] = v;
    j["outputs"] = outputs;
    write_json(out_dir / "manifest.json", j);
  }
};

}  // namespace mgtrap::scenario::detail
