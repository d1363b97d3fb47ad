#pragma once

// Command implementations behind the cilm executable. Each command reads an
// optional JSON config, writes CSV files under the output directory and
// throws on invalid input.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cilm::app {

struct Options {
  std::filesystem::path config;  // empty: all defaults
  std::uint64_t seed = 1;
  int workers = 0;  // 0: OpenMP default
  std::filesystem::path out = ".";
};

const std::vector<std::string>& command_names();

// Returns the files written, relative to opts.out, in write order.
std::vector<std::filesystem::path> run_command(const std::string& command, const Options& opts);

std::vector<std::filesystem::path> cmd_simulate(const Options& opts);
std::vector<std::filesystem::path> cmd_cluster(const Options& opts);
std::vector<std::filesystem::path> cmd_fit(const Options& opts);
std::vector<std::filesystem::path> cmd_assess(const Options& opts);
std::vector<std::filesystem::path> cmd_forecast(const Options& opts);
std::vector<std::filesystem::path> cmd_bench(const Options& opts);
std::vector<std::filesystem::path> cmd_replicate_study(const Options& opts);

}  // namespace cilm::app
