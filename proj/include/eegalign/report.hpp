#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eegalign/core.hpp"
#include "eegalign/ridge.hpp"
#include "eegalign/sweep.hpp"

namespace eegalign::report {

struct Electrode {
  std::string name;
  double x = 0, y = 0;  // top view, unit disc, nose at +y
};

struct Montage {
  std::vector<Electrode> electrodes;
};

// CSV with header `name,x,y`.
Montage read_montage(const std::filesystem::path& path);
// Approximate 10-10 layout of the 60 retained channels.
Montage default_montage();
std::vector<std::string> default_channel_names();

// L2 norm of the weights feeding each channel's targets, min-max normalized to
// [0, 1] (all equal -> 0.5). `columns` maps W's columns to flattened tensor
// indices; empty means W spans the whole tensor.
std::vector<double> channel_weight_map(const RowMatrix& W, const TensorShape& shape,
                                       std::span<const std::size_t> columns = {});
inline std::vector<double> channel_weight_map(const align::RidgeModel& m,
                                              const TensorShape& shape) {
  return channel_weight_map(m.W, shape);
}

struct Rgb {
  int r = 0, g = 0, b = 0;
};
// Blue (0) - white (0.5) - red (1).
Rgb diverging_color(double score);

std::string topomap_svg(std::span<const double> scores, std::span<const std::string> channels,
                        const Montage& montage, const std::string& title = {});
// One circle per channel; throws ValidationError naming any channel missing from the montage.
void render_topomap_svg(std::span<const double> scores, std::span<const std::string> channels,
                        const Montage& montage, const std::filesystem::path& path,
                        const std::string& title = {});

enum class Format { Csv, Json };

// Fixed six-significant-digit formatting used for every emitted number.
std::string format_number(double v);

std::string results_csv(std::span<const align::SweepResult> results);
std::string results_json(std::span<const align::SweepResult> results);
void write_results(std::span<const align::SweepResult> results, const std::filesystem::path& path,
                   Format format);
std::vector<align::SweepResult> read_results_json(const std::filesystem::path& path);

}  // namespace eegalign::report
