#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "eegalign/core.hpp"
#include "eegalign/sigproc.hpp"

namespace eegalign::features {

struct FrameGrid {
  std::vector<std::size_t> starts;
  std::size_t win = 0;
};

struct Band {
  double lo_hz;
  double hi_hz;  // half-open [lo, hi)
};

std::vector<Band> default_bands();

struct FeatureOptions {
  std::size_t n_frames = kCanonicalFrames;
  std::size_t smooth_window = 5;
  std::size_t min_fft = 256;
  std::vector<Band> bands = default_bands();
  std::size_t expected_channels = kCanonicalChannels;
};

inline constexpr std::size_t kTimeFeatures = 5;

// win = max(8, floor(L/16)); starts[i] = round(i*(L-win)/(n_frames-1)).
FrameGrid frame_segment(std::size_t length, std::size_t n_frames = kCanonicalFrames);
inline FrameGrid frame_segment(const sigproc::Segment& seg,
                               std::size_t n_frames = kCanonicalFrames) {
  return frame_segment(static_cast<std::size_t>(seg.samples.cols()), n_frames);
}

// Zero-crossing rate: sign changes between consecutive samples over (n - 1).
double zero_crossing_rate(std::span<const double> frame);

// Five time-domain features of one frame, given the matching envelope slice.
std::array<double, kTimeFeatures> time_features(std::span<const double> frame,
                                                std::span<const double> env_frame,
                                                std::size_t smooth_window);

// Hann-windowed, zero-padded band energies (sum of squared bin magnitudes whose
// centre frequency falls in each band).
std::vector<double> band_energies(std::span<const double> frame, double fs,
                                  std::span<const Band> bands, std::size_t min_fft = 256);

FeatureTensor compute_feature_tensor(const sigproc::Segment& seg, const FrameGrid& grid,
                                     double fs, const FeatureOptions& opts = {});

// Per-(channel, feature) cell statistics from the training split.
struct CellStats {
  double median = 0, iqr = 1, p5 = 0, p95 = 0;
  double clamp_mean = 0, clamp_std = 0;  // after clipping, used for the sigma clamp
  double mean = 0, std = 1;              // after clamping, used for standardization
};

struct PostprocStats {
  TensorShape shape;
  std::vector<CellStats> cells;  // shape.cell_count()
};

struct PostprocOptions {
  bool baseline = true;
  bool robust_scale = true;
  bool clip = true;
  bool clamp = true;
  bool standardize = true;
  double clip_lo_pct = 5.0;
  double clip_hi_pct = 95.0;
  double clamp_sigma = 20.0;
};

struct PostprocResult {
  std::vector<FeatureTensor> tensors;
  PostprocStats stats;
};

// Baseline correction, robust scaling, percentile clipping, sigma clamping and
// standardization, in that order. Statistics come only from `train_idx` and are
// applied to every tensor.
PostprocResult postprocess(std::vector<FeatureTensor> tensors,
                           std::span<const std::size_t> train_idx,
                           const PostprocOptions& opts = {});

// Linear-interpolated percentile (numpy default), pct in [0, 100]. Reorders `values`.
double percentile(std::span<double> values, double pct);

}  // namespace eegalign::features
