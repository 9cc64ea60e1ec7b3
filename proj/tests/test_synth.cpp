#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "eegalign/error.hpp"
#include "eegalign/synth.hpp"

using namespace eegalign;
using namespace eegalign::synth;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n_words = 40;
  s.n_layers = 4;
  s.dims = 3;
  s.n_targets = 20;
  s.shape = {4, 2, 5};
  return s;
}

double pvar(const RowMatrix& m) { return (m.array() - m.mean()).square().mean(); }

}  // namespace

TEST_CASE("dataset settings are validated") {
  CHECK_NOTHROW(validate_spec(small_spec()));
  auto s = small_spec();
  s.n_words = 9;
  CHECK_THROWS_AS(validate_spec(s), ValidationError);
  s = small_spec();
  s.snr = 0;
  CHECK_THROWS_AS(validate_spec(s), ValidationError);
  s = small_spec();
  s.n_targets = 41;
  CHECK_THROWS_AS(validate_spec(s), ValidationError);
  s = small_spec();
  s.signal_layers = {8};
  CHECK_THROWS_AS(validate_spec(s), ValidationError);
  s = small_spec();
  s.dims = 0;
  CHECK_THROWS_AS(validate_spec(s), ValidationError);
}

TEST_CASE("datasets are deterministic in the seed") {
  const auto a = gen_dataset(small_spec());
  const auto b = gen_dataset(small_spec());
  CHECK(a.Y == b.Y);
  CHECK(a.stacks.models[1].layers[2] == b.stacks.models[1].layers[2]);
  auto s = small_spec();
  s.seed = 1;
  CHECK(gen_dataset(s).Y != a.Y);
}

TEST_CASE("dataset layout") {
  const auto ds = gen_dataset(small_spec());
  REQUIRE(ds.stacks.models.size() == 2);
  CHECK(ds.stacks.models[0].model == ModelId::Wav2Vec2);
  CHECK(ds.stacks.models[1].model == ModelId::Clip);
  CHECK(ds.stacks.models[0].layers.size() == 4);
  CHECK(ds.stacks.models[0].layers[0].rows() == 40);
  CHECK(ds.stacks.models[0].layers[0].cols() == 3);
  CHECK(ds.Y.rows() == 40);
  CHECK(ds.Y.cols() == 40);
  REQUIRE(ds.target_columns.size() == 20);
  for (std::size_t j = 0; j < 20; ++j) CHECK(ds.target_columns[j] == 2 * j);
  for (Eigen::Index c = 1; c < 40; c += 2) CHECK(ds.Y.col(c).isZero(0.0));
  CHECK(ds.W_true.size() == 1);
}

TEST_CASE("noise is scaled to the requested SNR") {
  for (double snr : {0.5, 4.0, 100.0}) {
    auto s = small_spec();
    s.snr = snr;
    s.signal_layers = {1, 6};
    const auto ds = gen_dataset(s);
    const auto order = align::default_order(ds.stacks);
    RowMatrix signal = ds.stacks.layer(order[1]) * ds.W_true[0] + ds.stacks.layer(order[6]) * ds.W_true[1];
    RowMatrix observed(40, 20);
    for (std::size_t j = 0; j < 20; ++j) observed.col(j) = ds.Y.col(ds.target_columns[j]);
    const double ratio = pvar(signal) / pvar(observed - signal);
    CHECK(ratio == doctest::Approx(snr).epsilon(1e-9));
  }
  auto s = small_spec();
  s.snr = std::numeric_limits<double>::infinity();
  const auto ds = gen_dataset(s);
  const auto order = align::default_order(ds.stacks);
  RowMatrix observed(40, 20);
  for (std::size_t j = 0; j < 20; ++j) observed.col(j) = ds.Y.col(ds.target_columns[j]);
  CHECK((observed - ds.stacks.layer(order[3]) * ds.W_true[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("raw stacks project the reduced scores") {
  const auto ds = gen_dataset(small_spec());
  const auto raw = gen_raw_stacks(ds.stacks, ModelId::Clip, 16, 5);
  REQUIRE(raw.size() == 40);
  for (const auto& st : raw) {
    CHECK(st.model == ModelId::Clip);
    CHECK(st.layers.rows() == 4);
    CHECK(st.layers.cols() == 16);
  }
  CHECK(gen_raw_stacks(ds.stacks, ModelId::Clip, 16, 5)[7].layers == raw[7].layers);
}

TEST_CASE("sinusoid samples") {
  const auto s = sinusoid(10.0, 2.0, 500.0, 100, 0.0);
  REQUIRE(s.size() == 100);
  CHECK(s[0] == 0.0);
  CHECK(std::abs(s[50]) < 1e-12);
  CHECK(s[12] == doctest::Approx(2.0 * std::sin(2.0 * std::numbers::pi * 10.0 * 12.0 / 500.0)));
}

TEST_CASE("synthetic recordings") {
  RecordingSpec spec;
  spec.n_words = 5;
  const auto sess = gen_recording(spec);
  CHECK(sess.recording.channels() == 62);
  CHECK(sess.recording.channel_names[60] == "VEOG");
  CHECK(sess.recording.channel_names[61] == "AUD");
  CHECK(sess.recording.fs == 500.0);
  REQUIRE(sess.alignments.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(sess.alignments[i].onset_s == doctest::Approx(1.0 + 0.5 * static_cast<double>(i)));
    CHECK(sess.alignments[i].offset_s > sess.alignments[i].onset_s);
    CHECK(sess.alignments[i].offset_s * 500.0 < static_cast<double>(sess.recording.length()));
  }
  CHECK(sess.recording.samples.allFinite());
  CHECK(gen_recording(spec).recording.samples == sess.recording.samples);
}

TEST_CASE("OLS oracle") {
  RowMatrix X(5, 2);
  X << 1, 0, 2, 1, 3, 0, 4, 1, 5, 3;
  RowMatrix Y = (X * (Eigen::Matrix<double, 2, 1>() << 2.0, -1.0).finished()).array() + 4.0;
  const auto sol = ols_oracle(X, Y);
  CHECK(sol.W(0, 0) == doctest::Approx(2.0));
  CHECK(sol.W(1, 0) == doctest::Approx(-1.0));
  CHECK(sol.intercept(0) == doctest::Approx(4.0));
  RowMatrix Xs(5, 2);
  Xs.col(0) = X.col(0);
  Xs.col(1) = 2.0 * X.col(0);
  CHECK_THROWS_AS(ols_oracle(Xs, Y), ValidationError);
}
