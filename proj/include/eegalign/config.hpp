#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "eegalign/features.hpp"

namespace eegalign {

// Pipeline knobs shared by the CLI stages. Loaded from flat `key=value` text;
// `#` starts a comment.
struct Config {
  double fs = kDefaultSamplingRate;
  double pad_ms = 150.0;
  double notch_hz = 60.0;
  double notch_q = 30.0;
  double hp_hz = 2.0;
  int hp_order = 4;
  std::size_t n_frames = kCanonicalFrames;
  std::vector<features::Band> bands = features::default_bands();
  std::vector<double> alphas;  // empty: default grid
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double ratio = 0.8;

  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_map() const;
};

Config parse_config(const std::string& text);
Config load_config(const std::filesystem::path& path);

std::vector<double> parse_number_list(const std::string& text);
std::vector<features::Band> parse_bands(const std::string& text);

}  // namespace eegalign
