#include "eegalign/sigproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <complex>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "eegalign/error.hpp"
#include "eegalign/parallel.hpp"

namespace eegalign::sigproc {
namespace {

using State = std::array<double, 2>;

// Steady-state DF2T state of one section for a unit step input.
State unit_step_state(const Biquad& s) {
  const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  State z{};
  z[1] = s.b2 - s.a2 * gain;
  z[0] = s.b1 - s.a1 * gain + z[1];
  return z;
}

double dc_gain(const Biquad& s) { return (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2); }

void run_cascade(std::span<const Biquad> sections, std::span<const State> unit_states,
                 std::vector<double>& x) {
  if (x.empty()) return;
  double scale = x.front();
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const Biquad& s = sections[k];
    double z0 = unit_states[k][0] * scale;
    double z1 = unit_states[k][1] * scale;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z0;
      z0 = s.b1 * in - s.a1 * out + z1;
      z1 = s.b2 * in - s.a2 * out;
      v = out;
    }
    scale *= dc_gain(s);
  }
}

template <class Fn>
Recording map_channels(const Recording& rec, Fn&& fn) {
  Recording out = rec;
  parallel_for(rec.channels(), [&](std::size_t c) {
    const auto row = rec.samples.row(static_cast<Eigen::Index>(c));
    std::vector<double> filtered = fn(std::span<const double>(row.data(), row.size()));
    out.samples.row(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::RowVectorXd>(filtered.data(), static_cast<Eigen::Index>(filtered.size()));
  });
  return out;
}

}  // namespace

Biquad design_notch(double freq_hz, double q, double fs) {
  if (!(q > 0.0)) throw ValidationError("notch quality factor must be positive");
  if (!(freq_hz > 0.0) || !(freq_hz < fs / 2.0)) {
    std::ostringstream os;
    os << "notch frequency " << freq_hz << " Hz must lie in (0, " << fs / 2.0 << ") Hz";
    throw ValidationError(os.str());
  }
  const double w0 = 2.0 * std::numbers::pi * freq_hz / fs;
  const double bw = w0 / q;
  const double gain = 1.0 / (1.0 + std::tan(bw / 2.0));
  const double c = std::cos(w0);
  return Biquad{gain, -2.0 * gain * c, gain, -2.0 * gain * c, 2.0 * gain - 1.0};
}

std::vector<Biquad> design_butter_highpass(double cutoff_hz, int order, double fs) {
  if (order < 1) throw ValidationError("high-pass order must be at least 1");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0)) {
    std::ostringstream os;
    os << "high-pass cutoff " << cutoff_hz << " Hz must lie in (0, " << fs / 2.0 << ") Hz";
    throw ValidationError(os.str());
  }
  // Bilinear transform with prewarping: each conjugate pole pair becomes an RBJ
  // high-pass biquad with the Butterworth Q of that pair.
  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);
  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const double q = 1.0 / (2.0 * std::sin((2.0 * k + 1.0) * std::numbers::pi / (2.0 * order)));
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    sections.push_back(Biquad{(1.0 + cw) / 2.0 / a0, -(1.0 + cw) / a0, (1.0 + cw) / 2.0 / a0,
                              -2.0 * cw / a0, (1.0 - alpha) / a0});
  }
  if (order % 2 == 1) {
    const double kt = std::tan(w0 / 2.0);
    sections.push_back(Biquad{1.0 / (1.0 + kt), -1.0 / (1.0 + kt), 0.0, (kt - 1.0) / (kt + 1.0), 0.0});
  }
  return sections;
}

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0 || sections.empty()) return {x.begin(), x.end()};

  std::size_t ntaps = 2 * sections.size() + 1;
  std::size_t trailing_b = 0, trailing_a = 0;
  for (const auto& s : sections) {
    trailing_b += s.b2 == 0.0;
    trailing_a += s.a2 == 0.0;
  }
  ntaps -= std::min(trailing_b, trailing_a);
  const std::size_t padlen = std::min(3 * ntaps, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  std::vector<State> states;
  states.reserve(sections.size());
  for (const auto& s : sections) states.push_back(unit_step_state(s));

  run_cascade(sections, states, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, states, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
          ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

int harmonics_below_nyquist(double base_hz, double fs) {
  if (!(base_hz > 0.0)) return 0;
  int n = 0;
  while ((n + 1) * base_hz < fs / 2.0) ++n;
  return n;
}

Recording notch_filter(const Recording& rec, double base_hz, int n_harmonics, double q) {
  if (n_harmonics < 1) throw ValidationError("notch needs at least one harmonic");
  if (!(q > 0.0)) throw ValidationError("notch quality factor must be positive");
  std::vector<Biquad> sections;
  for (int h = 1; h <= n_harmonics; ++h) {
    const double f = base_hz * h;
    if (!(f < rec.fs / 2.0)) {
      std::ostringstream os;
      os << "notch harmonic " << h << " at " << f << " Hz is at or above Nyquist ("
         << rec.fs / 2.0 << " Hz)";
      throw ValidationError(os.str());
    }
    sections.push_back(design_notch(f, q, rec.fs));
  }
  return map_channels(rec, [&](std::span<const double> x) { return filtfilt(sections, x); });
}

Recording highpass_filter(const Recording& rec, double cutoff_hz, int order) {
  const auto sections = design_butter_highpass(cutoff_hz, order, rec.fs);
  return map_channels(rec, [&](std::span<const double> x) { return filtfilt(sections, x); });
}

std::vector<double> smooth(std::span<const double> x, std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw ValidationError("smoothing window must be odd, got " + std::to_string(window));
  }
  if (window > x.size()) {
    throw ValidationError("smoothing window " + std::to_string(window) +
                          " exceeds signal length " + std::to_string(x.size()));
  }
  const std::size_t n = x.size();
  if (window == 1) return {x.begin(), x.end()};
  const std::size_t half = window / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<double> envelope(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) throw ValidationError("envelope needs at least 4 samples");
  Eigen::FFT<double> fft;
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k < n) {
      spec[k] *= 2.0;
    } else if (2 * k > n) {
      spec[k] = 0.0;
    }
  }
  std::vector<std::complex<double>> analytic;
  fft.inv(analytic, spec);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(analytic[i]);
  return out;
}

Segmentation segment_words(const Recording& rec, std::span<const WordAlignment> aligns,
                           double pad_ms) {
  if (pad_ms < 0.0) throw ValidationError("segment pad must be non-negative");
  const auto pad = static_cast<std::int64_t>(std::llround(pad_ms * rec.fs / 1000.0));
  const auto total = static_cast<std::int64_t>(rec.length());
  Segmentation out;
  for (std::size_t w = 0; w < aligns.size(); ++w) {
    const auto onset = static_cast<std::int64_t>(std::llround(aligns[w].onset_s * rec.fs));
    auto offset = static_cast<std::int64_t>(std::llround(aligns[w].offset_s * rec.fs));
    offset = std::max(offset, onset + 1);
    const std::int64_t start = onset - pad;
    const std::int64_t stop = offset + pad;
    if (start < 0 || stop > total) {
      std::ostringstream os;
      os << "window [" << start << ", " << stop << ") for '" << aligns[w].word
         << "' exceeds recording of " << total << " samples";
      out.rejects.push_back({w, os.str()});
      continue;
    }
    Segment seg;
    seg.word_index = w;
    seg.pre_pad_samples = static_cast<std::size_t>(pad);
    seg.samples = rec.samples.middleCols(start, stop - start);
    out.segments.push_back(std::move(seg));
  }
  return out;
}

}  // namespace eegalign::sigproc
