#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "eegalign/error.hpp"
#include "eegalign/sigproc.hpp"
#include "eegalign/synth.hpp"
#include "oracles.hpp"

using namespace eegalign;
using namespace eegalign::sigproc;

namespace {

constexpr double kFs = 500.0;

// |H(e^{jw})| of a cascade, evaluated straight from the coefficients.
double cascade_gain(const std::vector<Biquad>& sections, double f, double fs) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z1 * z1) / (1.0 + s.a1 * z1 + s.a2 * z1 * z1);
  }
  return std::abs(h);
}

Recording one_channel(std::vector<double> x, double fs = kFs) {
  Recording rec;
  rec.fs = fs;
  rec.channel_names = {"Cz"};
  rec.samples = Eigen::Map<RowMatrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  return rec;
}

std::vector<double> row0(const Recording& rec) {
  return {rec.samples.data(), rec.samples.data() + rec.samples.cols()};
}

double db(double ratio) { return 20.0 * std::log10(ratio); }

}  // namespace

TEST_CASE("notch removes a 60 Hz tone by at least 30 dB") {
  // one minute of hum; the edge ringdown of a Q=30 notch is a fixed cost
  const auto x = synth::sinusoid(60.0, 1.0, kFs, 30000);
  const auto y = row0(notch_filter(one_channel(x), 60.0, 1, 30.0));
  CHECK(oracle::rms(y) <= 0.0316 * oracle::rms(x));
}

TEST_CASE("notch passes a 10 Hz tone within 1 dB") {
  const auto x = synth::sinusoid(10.0, 1.0, kFs, 5000);
  const auto y = row0(notch_filter(one_channel(x), 60.0, 4, 30.0));
  CHECK(std::fabs(db(oracle::rms(y) / oracle::rms(x))) < 1.0);
}

TEST_CASE("notch design has a zero at the notch and unit gain far away") {
  const std::vector<Biquad> s{design_notch(60.0, 30.0, kFs)};
  CHECK(cascade_gain(s, 60.0, kFs) < 1e-12);
  CHECK(cascade_gain(s, 0.0, kFs) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cascade_gain(s, kFs / 2, kFs) == doctest::Approx(1.0).epsilon(1e-12));
  // -3 dB bandwidth of the bilinear notch is w0/Q wide around the centre.
  const double bw = 60.0 / 30.0;
  const double lo = 60.0 - bw / 2, hi = 60.0 + bw / 2;
  CHECK(cascade_gain(s, lo, kFs) == doctest::Approx(std::sqrt(0.5)).epsilon(0.02));
  CHECK(cascade_gain(s, hi, kFs) == doctest::Approx(std::sqrt(0.5)).epsilon(0.02));
}

TEST_CASE("notch harmonics at or above Nyquist are rejected by name") {
  CHECK(harmonics_below_nyquist(60.0, 500.0) == 4);
  CHECK(harmonics_below_nyquist(60.0, 240.0) == 1);
  CHECK(harmonics_below_nyquist(50.0, 200.0) == 1);  // 100 Hz sits on Nyquist
  try {
    notch_filter(one_channel(std::vector<double>(100, 0.0)), 60.0, 5, 30.0);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("300") != std::string::npos);
  }
}

TEST_CASE("all-zero input stays zero") {
  const std::vector<double> z(777, 0.0);
  for (double v : row0(notch_filter(one_channel(z)))) CHECK(v == 0.0);
  for (double v : row0(highpass_filter(one_channel(z)))) CHECK(v == 0.0);
}

TEST_CASE("high-pass rejects a DC offset") {
  const std::vector<double> x(5000, 5.0);
  const auto y = row0(highpass_filter(one_channel(x), 2.0, 4));
  double peak = 0;
  for (double v : y) peak = std::max(peak, std::fabs(v));
  CHECK(peak < 0.01);
}

TEST_CASE("high-pass passes 20 Hz within 1 dB") {
  const auto x = synth::sinusoid(20.0, 3.0, kFs, 5000);
  const auto y = row0(highpass_filter(one_channel(x), 2.0, 4));
  CHECK(std::fabs(db(oracle::rms(y) / oracle::rms(x))) < 1.0);
}

TEST_CASE("high-pass magnitude matches the prewarped Butterworth response") {
  for (int order : {1, 2, 3, 4, 5}) {
    const auto s = design_butter_highpass(2.0, order, kFs);
    CHECK(s.size() == static_cast<std::size_t>((order + 1) / 2));
    const double wc = std::tan(std::numbers::pi * 2.0 / kFs);
    for (double f : {0.5, 1.0, 2.0, 3.0, 10.0, 60.0, 200.0}) {
      const double wf = std::tan(std::numbers::pi * f / kFs);
      const double expected = 1.0 / std::sqrt(1.0 + std::pow(wc / wf, 2.0 * order));
      CHECK(cascade_gain(s, f, kFs) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(design_butter_highpass(0.0, 4, kFs), ValidationError);
  CHECK_THROWS_AS(design_butter_highpass(300.0, 4, kFs), ValidationError);
  CHECK_THROWS_AS(design_butter_highpass(2.0, 0, kFs), ValidationError);
}

TEST_CASE("filters are linear") {
  const auto x = oracle::random_matrix(1, 3000, 11);
  const auto y = oracle::random_matrix(1, 3000, 12);
  const double a = 1.7, b = -0.4;
  const RowMatrix mix = a * x + b * y;
  auto as_rec = [](const RowMatrix& m) {
    return one_channel(std::vector<double>(m.data(), m.data() + m.size()));
  };
  for (int which = 0; which < 2; ++which) {
    auto f = [&](const Recording& r) { return which ? highpass_filter(r) : notch_filter(r); };
    const RowMatrix lhs = f(as_rec(mix)).samples;
    const RowMatrix rhs = a * f(as_rec(x)).samples + b * f(as_rec(y)).samples;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * rhs.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("forward-backward filtering has no group delay") {
  const std::size_t n = 2000, centre = 1000;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) - centre) / kFs;
    x[i] = std::exp(-t * t / (2 * 0.02 * 0.02)) * std::cos(2 * std::numbers::pi * 25.0 * t);
  }
  const auto y = row0(highpass_filter(notch_filter(one_channel(x))));
  int best_lag = 999;
  double best = -1e300;
  for (int lag = -50; lag <= 50; ++lag) {
    double acc = 0;
    for (std::size_t i = 100; i + 100 < n; ++i) acc += x[i] * y[static_cast<std::size_t>(static_cast<int>(i) + lag)];
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("smoothing uses partial windows at the edges") {
  const std::vector<double> ones{1, 1, 1, 1};
  CHECK(smooth(ones, 3) == ones);
  const std::vector<double> x{0, 3, 0};
  const auto y = smooth(x, 3);
  CHECK(y[0] == doctest::Approx(1.5));
  CHECK(y[1] == doctest::Approx(1.0));
  CHECK(y[2] == doctest::Approx(1.5));
  const std::vector<double> r{0.3, -2, 5, 7};
  CHECK(smooth(r, 1) == r);
  CHECK_THROWS_AS(smooth(r, 2), ValidationError);
  CHECK_THROWS_AS(smooth(r, 5), ValidationError);
}

TEST_CASE("envelope of a sinusoid is its amplitude") {
  const double amp = 2.5;
  const auto x = synth::sinusoid(7.0, amp, kFs, 1000, 0.3);
  const auto e = envelope(x);
  for (std::size_t i = 100; i < 900; ++i) CHECK(std::fabs(e[i] - amp) <= 0.02 * amp);
}

TEST_CASE("envelope bounds the rectified signal and vanishes on zeros") {
  const auto m = oracle::random_matrix(1, 513, 21);
  const std::vector<double> x(m.data(), m.data() + m.size());
  double peak = 0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  const auto e = envelope(x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(e[i] >= std::fabs(x[i]) - 1e-9 * peak);
  for (double v : envelope(std::vector<double>(64, 0.0))) CHECK(v == 0.0);
}

TEST_CASE("segment index arithmetic") {
  const auto rec = one_channel(std::vector<double>(2000, 0.0));
  const std::vector<WordAlignment> w{{"a", 1.0, 1.4}};
  const auto s = segment_words(rec, w, 150.0);
  REQUIRE(s.segments.size() == 1);
  CHECK(s.segments[0].samples.cols() == 350);
  CHECK(s.segments[0].pre_pad_samples == 75);
  // the segment starts at sample 425
  Recording ramp = rec;
  for (Eigen::Index i = 0; i < 2000; ++i) ramp.samples(0, i) = static_cast<double>(i);
  CHECK(segment_words(ramp, w, 150.0).segments[0].samples(0, 0) == 425.0);
}

TEST_CASE("one-sample words still give a segment; early words are rejected") {
  const auto rec = one_channel(std::vector<double>(2000, 0.0));
  const std::vector<WordAlignment> tiny{{"t", 1.0 - 0.002, 1.0}};
  const auto s = segment_words(rec, tiny, 0.0);
  REQUIRE(s.segments.size() == 1);
  CHECK(s.segments[0].samples.cols() >= 1);

  const std::vector<WordAlignment> words{{"early", 0.05, 0.3}, {"ok", 1.0, 1.3}, {"late", 3.8, 3.95}};
  const auto r = segment_words(rec, words, 150.0);
  CHECK(r.segments.size() + r.rejects.size() == words.size());
  REQUIRE(r.rejects.size() == 2);
  CHECK(r.rejects[0].word_index == 0);
  CHECK(r.rejects[1].word_index == 2);
  CHECK(r.segments[0].word_index == 1);
}
