#include "eegalign/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "eegalign/error.hpp"
#include "eegalign/parallel.hpp"
#include "eegalign/simd.hpp"

namespace eegalign::features {
namespace {

// Neumaier-compensated mean.
double compensated_mean(std::span<const double> v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return (s + c) / static_cast<double>(v.size());
}

struct MeanStd {
  double mean = 0, std = 0;
};

MeanStd population_mean_std(std::span<const double> v) {
  const double m = compensated_mean(v);
  const double ss = simd::sum_sq_dev(v, m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

std::size_t fft_size(std::size_t win, std::size_t min_fft) {
  std::size_t n = 1;
  while (n < std::max(win, min_fft)) n <<= 1;
  return n;
}

class BandAnalyzer {
 public:
  BandAnalyzer(double fs, std::span<const Band> bands, std::size_t min_fft)
      : fs_(fs), bands_(bands), min_fft_(min_fft) {}

  void energies(std::span<const double> frame, double* out) {
    const std::size_t win = frame.size();
    const std::size_t nfft = fft_size(win, min_fft_);
    if (hann_.size() != win) {
      hann_.resize(win);
      for (std::size_t i = 0; i < win; ++i) {
        hann_[i] = win == 1 ? 1.0
                            : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                   static_cast<double>(win - 1));
      }
    }
    buf_.assign(nfft, 0.0);
    for (std::size_t i = 0; i < win; ++i) buf_[i] = frame[i] * hann_[i];
    fft_.fwd(spec_, buf_);
    const double df = fs_ / static_cast<double>(nfft);
    for (std::size_t b = 0; b < bands_.size(); ++b) out[b] = 0.0;
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
      const double f = static_cast<double>(k) * df;
      const double power = std::norm(spec_[k]);
      for (std::size_t b = 0; b < bands_.size(); ++b) {
        if (f >= bands_[b].lo_hz && f < bands_[b].hi_hz) out[b] += power;
      }
    }
  }

 private:
  double fs_;
  std::span<const Band> bands_;
  std::size_t min_fft_;
  Eigen::FFT<double> fft_;
  std::vector<double> hann_;
  std::vector<double> buf_;
  std::vector<std::complex<double>> spec_;
};

std::size_t odd_window(std::size_t requested, std::size_t length) {
  std::size_t w = std::min(requested, length);
  if (w % 2 == 0) --w;
  return std::max<std::size_t>(w, 1);
}

}  // namespace

std::vector<Band> default_bands() {
  return {{2, 4}, {4, 8}, {8, 12}, {12, 20}, {20, 30}, {30, 45}, {45, 70}, {70, 100}, {100, 150}};
}

FrameGrid frame_segment(std::size_t length, std::size_t n_frames) {
  if (n_frames < 2) throw ValidationError("frame grid needs at least 2 frames");
  if (length < 17) {
    throw ValidationError("segment of " + std::to_string(length) +
                          " samples is too short for framing (need at least 17)");
  }
  FrameGrid grid;
  grid.win = std::max<std::size_t>(8, length / 16);
  const std::size_t span = length - grid.win;
  const std::size_t denom = n_frames - 1;
  grid.starts.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    // round(i * span / denom), halves rounded up
    grid.starts[i] = (2 * i * span + denom) / (2 * denom);
  }
  return grid;
}

double zero_crossing_rate(std::span<const double> frame) {
  if (frame.size() < 2) return 0.0;
  std::size_t changes = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    changes += (frame[i - 1] >= 0.0) != (frame[i] >= 0.0);
  }
  return static_cast<double>(changes) / static_cast<double>(frame.size() - 1);
}

std::array<double, kTimeFeatures> time_features(std::span<const double> frame,
                                                std::span<const double> env_frame,
                                                std::size_t smooth_window) {
  const auto n = static_cast<double>(frame.size());
  const auto sm = sigproc::smooth(frame, odd_window(smooth_window, frame.size()));
  const double env_n = static_cast<double>(env_frame.size());
  return {
      simd::sum(sm) / n,
      std::sqrt(simd::dot(sm, sm) / n),
      std::sqrt(simd::dot(env_frame, env_frame) / env_n),
      zero_crossing_rate(frame),
      simd::sum(env_frame) / env_n,
  };
}

std::vector<double> band_energies(std::span<const double> frame, double fs,
                                  std::span<const Band> bands, std::size_t min_fft) {
  BandAnalyzer analyzer(fs, bands, min_fft);
  std::vector<double> out(bands.size());
  analyzer.energies(frame, out.data());
  return out;
}

FeatureTensor compute_feature_tensor(const sigproc::Segment& seg, const FrameGrid& grid,
                                     double fs, const FeatureOptions& opts) {
  const auto channels = static_cast<std::size_t>(seg.samples.rows());
  const auto length = static_cast<std::size_t>(seg.samples.cols());
  if (channels != opts.expected_channels) {
    std::ostringstream os;
    os << "segment for word " << seg.word_index << " has " << channels << " channels, expected "
       << opts.expected_channels;
    throw ValidationError(os.str());
  }
  if (grid.starts.size() != opts.n_frames) {
    throw ValidationError("frame grid has " + std::to_string(grid.starts.size()) +
                          " frames, expected " + std::to_string(opts.n_frames));
  }
  for (std::size_t s : grid.starts) {
    if (s + grid.win > length) throw ValidationError("frame grid exceeds segment length");
  }

  FeatureTensor t;
  t.shape = TensorShape{channels, kTimeFeatures + opts.bands.size(), opts.n_frames};
  t.data.assign(t.shape.size(), 0.0);
  t.word_index = seg.word_index;
  for (std::size_t s : grid.starts) t.baseline_frames += s + grid.win <= seg.pre_pad_samples;

  BandAnalyzer analyzer(fs, opts.bands, opts.min_fft);
  std::vector<double> bands(opts.bands.size());
  std::vector<double> row(length);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < length; ++i) row[i] = seg.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
    const auto env = sigproc::envelope(row);
    for (std::size_t fr = 0; fr < grid.starts.size(); ++fr) {
      const std::span<const double> frame(row.data() + grid.starts[fr], grid.win);
      const std::span<const double> env_frame(env.data() + grid.starts[fr], grid.win);
      const auto tf = time_features(frame, env_frame, opts.smooth_window);
      for (std::size_t f = 0; f < kTimeFeatures; ++f) t.at(c, f, fr) = tf[f];
      analyzer.energies(frame, bands.data());
      for (std::size_t b = 0; b < bands.size(); ++b) t.at(c, kTimeFeatures + b, fr) = bands[b];
    }
  }
  return t;
}

double percentile(std::span<double> values, double pct) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + frac * (b - a);
}

PostprocResult postprocess(std::vector<FeatureTensor> tensors,
                           std::span<const std::size_t> train_idx, const PostprocOptions& opts) {
  if (train_idx.empty()) throw ValidationError("postprocess needs a non-empty training set");
  if (tensors.empty()) throw ValidationError("postprocess needs at least one tensor");
  const TensorShape shape = tensors.front().shape;
  for (const auto& t : tensors) {
    if (!(t.shape == shape) || t.data.size() != shape.size()) {
      throw ValidationError("feature tensors have inconsistent shapes (word " +
                            std::to_string(t.word_index) + ")");
    }
  }
  for (std::size_t i : train_idx) {
    if (i >= tensors.size()) {
      throw ValidationError("training index " + std::to_string(i) + " out of range");
    }
  }

  PostprocResult result;
  result.stats.shape = shape;
  result.stats.cells.resize(shape.cell_count());
  const std::size_t frames = shape.frames;

  parallel_for(shape.cell_count(), [&](std::size_t cell) {
    const std::size_t offset = cell * frames;
    auto run = [&](FeatureTensor& t) { return std::span<double>(t.data.data() + offset, frames); };
    std::vector<double> train_vals(train_idx.size() * frames);
    auto gather = [&] {
      for (std::size_t j = 0; j < train_idx.size(); ++j) {
        const auto r = run(tensors[train_idx[j]]);
        std::copy(r.begin(), r.end(), train_vals.begin() + static_cast<std::ptrdiff_t>(j * frames));
      }
    };
    CellStats& st = result.stats.cells[cell];

    if (opts.baseline) {
      for (auto& t : tensors) {
        const std::size_t nb = std::min(t.baseline_frames, frames);
        if (nb == 0) continue;
        auto r = run(t);
        const double base = compensated_mean(r.first(nb));
        simd::affine(r, base, 1.0);
      }
    }
    if (opts.robust_scale) {
      gather();
      const double q25 = percentile(train_vals, 25.0);
      const double q75 = percentile(train_vals, 75.0);
      st.median = percentile(train_vals, 50.0);
      st.iqr = q75 - q25;
      const double divisor = st.iqr > 0.0 ? st.iqr : 1.0;
      for (auto& t : tensors) simd::affine(run(t), st.median, 1.0 / divisor);
    }
    if (opts.clip) {
      gather();
      st.p5 = percentile(train_vals, opts.clip_lo_pct);
      st.p95 = percentile(train_vals, opts.clip_hi_pct);
      for (auto& t : tensors) simd::clamp(run(t), st.p5, st.p95);
    }
    if (opts.clamp) {
      gather();
      const auto ms = population_mean_std(train_vals);
      st.clamp_mean = ms.mean;
      st.clamp_std = ms.std;
      const double lo = ms.mean - opts.clamp_sigma * ms.std;
      const double hi = ms.mean + opts.clamp_sigma * ms.std;
      for (auto& t : tensors) simd::clamp(run(t), lo, hi);
    }
    if (opts.standardize) {
      gather();
      const auto ms = population_mean_std(train_vals);
      st.mean = ms.mean;
      st.std = ms.std;
      const double divisor = ms.std > 0.0 ? ms.std : 1.0;
      for (auto& t : tensors) simd::affine(run(t), ms.mean, 1.0 / divisor);
    }
  });

  result.tensors = std::move(tensors);
  return result;
}

}  // namespace eegalign::features
