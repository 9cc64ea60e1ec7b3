#include "eegalign/config.hpp"

#include <charconv>
#include <sstream>

#include "eegalign/error.hpp"
#include "eegalign/io.hpp"
#include "eegalign/report.hpp"

namespace eegalign {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_as(const std::string& key, const std::string& value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ValidationError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return v;
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += report::format_number(v[i]);
  }
  return out;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_as<double>("list", trim(item)));
  if (out.empty()) throw ValidationError("empty number list");
  return out;
}

std::vector<features::Band> parse_bands(const std::string& text) {
  std::vector<features::Band> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    if (dash == std::string::npos) throw ValidationError("band '" + item + "' must look like lo-hi");
    const double lo = parse_as<double>("bands", item.substr(0, dash));
    const double hi = parse_as<double>("bands", item.substr(dash + 1));
    if (!(lo >= 0.0 && lo < hi)) throw ValidationError("band '" + item + "' must satisfy 0 <= lo < hi");
    out.push_back({lo, hi});
  }
  if (out.empty()) throw ValidationError("empty band list");
  return out;
}

void Config::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "fs") {
    fs = parse_as<double>(key, value);
    if (!(fs > 0.0)) throw ValidationError("fs must be positive");
  } else if (key == "pad_ms") {
    pad_ms = parse_as<double>(key, value);
  } else if (key == "notch_hz") {
    notch_hz = parse_as<double>(key, value);
  } else if (key == "notch_q") {
    notch_q = parse_as<double>(key, value);
  } else if (key == "hp_hz") {
    hp_hz = parse_as<double>(key, value);
  } else if (key == "hp_order") {
    hp_order = parse_as<int>(key, value);
  } else if (key == "n_frames") {
    n_frames = parse_as<std::size_t>(key, value);
  } else if (key == "bands") {
    bands = parse_bands(value);
  } else if (key == "alphas") {
    alphas = parse_number_list(value);
  } else if (key == "folds") {
    folds = parse_as<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = parse_as<std::uint64_t>(key, value);
  } else if (key == "ratio") {
    ratio = parse_as<double>(key, value);
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

std::map<std::string, std::string> Config::to_map() const {
  std::string band_text;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (i) band_text += ',';
    band_text += report::format_number(bands[i].lo_hz) + "-" + report::format_number(bands[i].hi_hz);
  }
  return {
      {"fs", report::format_number(fs)},
      {"pad_ms", report::format_number(pad_ms)},
      {"notch_hz", report::format_number(notch_hz)},
      {"notch_q", report::format_number(notch_q)},
      {"hp_hz", report::format_number(hp_hz)},
      {"hp_order", std::to_string(hp_order)},
      {"n_frames", std::to_string(n_frames)},
      {"bands", band_text},
      {"alphas", alphas.empty() ? std::string("default") : list_text(alphas)},
      {"folds", std::to_string(folds)},
      {"seed", std::to_string(seed)},
      {"ratio", report::format_number(ratio)},
  };
}

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(ln) + ": expected key=value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) { return parse_config(io::read_text(path)); }

}  // namespace eegalign
