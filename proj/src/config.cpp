#include "mixact/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mixact/errors.hpp"

namespace mixact {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& text, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + what + " wants a number, got '" + text + "'");
  }
}

std::uint64_t parse_uint(const std::string& text, const std::string& what) {
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: " + what + " wants a non-negative integer, got '" +
                      text + "'");
  }
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config: " + what + " wants true or false, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::pair<double, double> parse_range(const std::string& text) {
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() != 2) {
    throw ConfigError("config: range wants lo:hi, got '" + text + "'");
  }
  const double lo = parse_double(trim(parts[0]), "range low end");
  const double hi = parse_double(trim(parts[1]), "range high end");
  if (!(lo < hi)) {
    throw ConfigError("config: range low end must be below high end in '" +
                      text + "'");
  }
  return {lo, hi};
}

std::vector<PhaseConfig> parse_schedule(const std::string& text) {
  std::vector<PhaseConfig> phases;
  for (const std::string& item : split(text, ',')) {
    const std::vector<std::string> parts = split(trim(item), ':');
    if (parts.size() != 3) {
      throw ConfigError("config: schedule phase wants group:lr:epochs, got '" +
                        item + "'");
    }
    PhaseConfig phase;
    phase.trainable_group = trim(parts[0]);
    if (phase.trainable_group != "backbone" && phase.trainable_group != "mixture") {
      throw ConfigError("config: schedule group must be backbone or mixture, got '" +
                        phase.trainable_group + "'");
    }
    phase.lr = parse_double(trim(parts[1]), "schedule learning rate");
    if (!(phase.lr > 0.0)) {
      throw ConfigError("config: schedule learning rate must be positive in '" +
                        item + "'");
    }
    phase.epochs = static_cast<std::size_t>(
        parse_uint(trim(parts[2]), "schedule epochs"));
    phases.push_back(phase);
  }
  if (phases.empty()) throw ConfigError("config: schedule is empty");
  return phases;
}

void apply_config_value(RunConfig& config, const std::string& key,
                        const std::string& value) {
  if (key == "dataset") {
    config.dataset = value;
  } else if (key == "data_root") {
    config.data_root = value;
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else if (key == "seed") {
    config.seed = parse_uint(value, "seed");
  } else if (key == "batch_size") {
    config.batch_size = static_cast<std::size_t>(parse_uint(value, "batch_size"));
    if (config.batch_size == 0)
      throw ConfigError("config: batch_size must be at least 1");
  } else if (key == "subset_train") {
    config.subset_train = static_cast<std::size_t>(parse_uint(value, "subset_train"));
  } else if (key == "subset_test") {
    config.subset_test = static_cast<std::size_t>(parse_uint(value, "subset_test"));
  } else if (key == "epochs_scale") {
    config.epochs_scale = parse_double(value, "epochs_scale");
    if (!(config.epochs_scale > 0.0))
      throw ConfigError("config: epochs_scale must be positive");
  } else if (key == "adam_reset_t_per_phase") {
    config.adam_reset_t_per_phase = parse_bool(value, "adam_reset_t_per_phase");
  } else if (key == "schedule") {
    config.schedule = parse_schedule(value);
  } else if (key == "curve_ranges") {
    std::vector<std::pair<double, double>> ranges;
    for (const std::string& item : split(value, ','))
      ranges.push_back(parse_range(trim(item)));
    config.curve_ranges = ranges;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + " of '" +
                        path.string() + "' is not key = value: '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: line " + std::to_string(line_no) + " of '" +
                        path.string() + "' has an empty key");
    }
    apply_config_value(config, key, value);
  }
}

std::string render_config(const RunConfig& config) {
  std::ostringstream out;
  out << "dataset = " << config.dataset << '\n';
  out << "data_root = " << config.data_root.string() << '\n';
  out << "out_dir = " << config.out_dir.string() << '\n';
  out << "seed = " << config.seed << '\n';
  out << "batch_size = " << config.batch_size << '\n';
  out << "subset_train = " << config.subset_train << '\n';
  out << "subset_test = " << config.subset_test << '\n';
  out << "epochs_scale = " << format_double(config.epochs_scale) << '\n';
  out << "adam_reset_t_per_phase = "
      << (config.adam_reset_t_per_phase ? "true" : "false") << '\n';
  out << "schedule = ";
  for (std::size_t i = 0; i < config.schedule.size(); ++i) {
    const PhaseConfig& p = config.schedule[i];
    out << (i ? "," : "") << p.trainable_group << ':' << format_double(p.lr)
        << ':' << p.epochs;
  }
  out << '\n';
  out << "curve_ranges = ";
  for (std::size_t i = 0; i < config.curve_ranges.size(); ++i) {
    out << (i ? "," : "") << format_double(config.curve_ranges[i].first) << ':'
        << format_double(config.curve_ranges[i].second);
  }
  out << '\n';
  return out.str();
}

Schedule scaled_schedule(const RunConfig& config) {
  Schedule s;
  s.phases = config.schedule;
  for (PhaseConfig& phase : s.phases) {
    const double scaled =
        static_cast<double>(phase.epochs) * config.epochs_scale;
    phase.epochs = static_cast<std::size_t>(
        std::max<long long>(1, std::llround(scaled)));
  }
  return s;
}

}  // namespace mixact
