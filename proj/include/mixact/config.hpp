#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mixact/schedule.hpp"

namespace mixact {

// Fully-resolved run settings. The file format is flat `key = value` lines
// ('#' comments allowed); render_config() emits exactly that format, so an
// echoed config can be fed back in unchanged.
struct RunConfig {
  std::string dataset = "mnist";
  std::filesystem::path data_root = "data";
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
  std::size_t batch_size = 64;
  std::size_t subset_train = 0;  // 0 = whole split
  std::size_t subset_test = 0;
  double epochs_scale = 1.0;
  bool adam_reset_t_per_phase = true;
  std::vector<PhaseConfig> schedule = Schedule::three_cycle_default().phases;
  std::vector<std::pair<double, double>> curve_ranges = {
      {-3.0, 3.0}, {-1.0, 1.0}, {-10.0, 10.0}, {-100.0, 100.0}};
};

// "lo:hi" with lo < hi.
std::pair<double, double> parse_range(const std::string& text);

// Comma-separated "group:lr:epochs" triples.
std::vector<PhaseConfig> parse_schedule(const std::string& text);

// Applies one key/value pair; unknown keys and malformed values raise
// ConfigError.
void apply_config_value(RunConfig& config, const std::string& key,
                        const std::string& value);

// Reads a key = value file into config (later lines win).
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Full key = value dump, one line per key, parseable by apply_config_file.
std::string render_config(const RunConfig& config);

// Schedule with every phase's epochs scaled by config.epochs_scale and
// rounded to the nearest count, but never below 1.
Schedule scaled_schedule(const RunConfig& config);

}  // namespace mixact
