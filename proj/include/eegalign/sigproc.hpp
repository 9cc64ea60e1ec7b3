#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eegalign/core.hpp"

namespace eegalign::sigproc {

// Second-order section in direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

Biquad design_notch(double freq_hz, double q, double fs);
// Butterworth high-pass as a cascade of second-order (and one first-order) sections.
std::vector<Biquad> design_butter_highpass(double cutoff_hz, int order, double fs);

// Zero-phase forward-backward filtering with odd-extension padding and
// steady-state initial conditions.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x);

Recording notch_filter(const Recording& rec, double base_hz = 60.0, int n_harmonics = 4,
                       double q = 30.0);
// Number of harmonics of base_hz that stay strictly below Nyquist.
int harmonics_below_nyquist(double base_hz, double fs);

Recording highpass_filter(const Recording& rec, double cutoff_hz = 2.0, int order = 4);

// Centered moving average; edge samples average over the in-bounds part of the window.
std::vector<double> smooth(std::span<const double> x, std::size_t window = 5);

// Magnitude of the analytic signal (FFT Hilbert transform).
std::vector<double> envelope(std::span<const double> x);

struct Segment {
  RowMatrix samples;  // [channels x L]
  std::size_t word_index = 0;
  std::size_t pre_pad_samples = 0;
};

struct SegmentRejection {
  std::size_t word_index = 0;
  std::string reason;
};

struct Segmentation {
  std::vector<Segment> segments;
  std::vector<SegmentRejection> rejects;
};

// One segment per alignment spanning [onset - pad, offset + pad]. Windows that
// leave the recording are reported in `rejects`, never truncated.
Segmentation segment_words(const Recording& rec, std::span<const WordAlignment> aligns,
                           double pad_ms = 150.0);

}  // namespace eegalign::sigproc
