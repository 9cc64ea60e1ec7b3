#include "eegalign/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "eegalign/error.hpp"
#include "eegalign/report.hpp"

namespace eegalign::synth {
namespace {

RowMatrix normal_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal;
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

double population_variance(const RowMatrix& m) {
  const double mean = m.mean();
  return (m.array() - mean).square().mean();
}

}  // namespace

void validate_spec(const SynthSpec& spec) {
  if (spec.n_words < 10) throw ValidationError("synthetic datasets need at least 10 words");
  if (!(spec.snr > 0.0)) throw ValidationError("snr must be positive");
  if (spec.n_layers < 1 || spec.dims < 1) throw ValidationError("need at least one layer and one dimension");
  if (spec.n_targets < 1 || spec.n_targets > spec.shape.size()) {
    throw ValidationError("n_targets must lie in [1, " + std::to_string(spec.shape.size()) + "]");
  }
  for (std::size_t l : spec.signal_layers) {
    if (l >= 2 * spec.n_layers) {
      throw ValidationError("signal layer " + std::to_string(l) + " is outside the " +
                            std::to_string(2 * spec.n_layers) + "-layer sweep order");
    }
  }
}

SynthDataset gen_dataset(const SynthSpec& spec) {
  validate_spec(spec);
  std::mt19937_64 rng(spec.seed);
  SynthDataset ds;
  ds.stacks.method = "pca";
  for (ModelId model : {ModelId::Wav2Vec2, ModelId::Clip}) {
    align::ReducedStacks rs;
    rs.model = model;
    for (std::size_t l = 0; l < spec.n_layers; ++l) rs.layers.push_back(normal_matrix(rng, spec.n_words, spec.dims));
    ds.stacks.models.push_back(std::move(rs));
  }
  const auto order = align::default_order(ds.stacks);

  RowMatrix signal = RowMatrix::Zero(static_cast<Eigen::Index>(spec.n_words),
                                     static_cast<Eigen::Index>(spec.n_targets));
  for (std::size_t l : spec.signal_layers) {
    RowMatrix W = normal_matrix(rng, spec.dims, spec.n_targets);
    signal += ds.stacks.layer(order[l]) * W;
    ds.W_true.push_back(std::move(W));
  }
  RowMatrix noise = normal_matrix(rng, spec.n_words, spec.n_targets);
  double noise_scale = 1.0;
  if (!spec.signal_layers.empty()) {
    noise_scale = std::isinf(spec.snr)
                      ? 0.0
                      : std::sqrt(population_variance(signal) / (spec.snr * population_variance(noise)));
  }
  const RowMatrix values = signal + noise_scale * noise;

  const std::size_t q = spec.shape.size();
  ds.Y = RowMatrix::Zero(static_cast<Eigen::Index>(spec.n_words), static_cast<Eigen::Index>(q));
  for (std::size_t j = 0; j < spec.n_targets; ++j) {
    const std::size_t col = j * q / spec.n_targets;
    ds.target_columns.push_back(col);
    ds.Y.col(static_cast<Eigen::Index>(col)) = values.col(static_cast<Eigen::Index>(j));
  }
  return ds;
}

std::vector<EmbeddingStack> gen_raw_stacks(const align::StackSet& stacks, ModelId model,
                                           std::size_t raw_dims, std::uint64_t seed) {
  const align::ReducedStacks* source = nullptr;
  for (const auto& m : stacks.models) {
    if (m.model == model) source = &m;
  }
  if (source == nullptr || source->layers.empty()) {
    throw ValidationError("no stacks for model " + std::string(model_name(model)));
  }
  std::mt19937_64 rng(seed);
  const std::size_t n = static_cast<std::size_t>(source->layers.front().rows());
  const std::size_t k = static_cast<std::size_t>(source->layers.front().cols());
  std::vector<RowMatrix> raw_layers;
  for (const auto& L : source->layers) {
    const RowMatrix projection = normal_matrix(rng, k, raw_dims);
    raw_layers.push_back(L * projection + 0.01 * normal_matrix(rng, n, raw_dims));
  }
  std::vector<EmbeddingStack> out(n);
  for (std::size_t w = 0; w < n; ++w) {
    out[w].model = model;
    out[w].layers.resize(static_cast<Eigen::Index>(raw_layers.size()), static_cast<Eigen::Index>(raw_dims));
    for (std::size_t l = 0; l < raw_layers.size(); ++l) {
      out[w].layers.row(static_cast<Eigen::Index>(l)) = raw_layers[l].row(static_cast<Eigen::Index>(w));
    }
  }
  return out;
}

std::vector<double> sinusoid(double freq_hz, double amplitude, double fs, std::size_t n, double phase) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

SyntheticSession gen_recording(const RecordingSpec& spec) {
  if (spec.n_words < 1) throw ValidationError("synthetic recording needs at least one word");
  if (!(spec.fs > 0.0) || !(spec.word_spacing_s > 0.0)) {
    throw ValidationError("sampling rate and word spacing must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  SyntheticSession s;
  auto& rec = s.recording;
  rec.fs = spec.fs;
  rec.channel_names = spec.channels;
  if (rec.channel_names.empty()) {
    rec.channel_names = report::default_channel_names();
    rec.channel_names.push_back("VEOG");
    rec.channel_names.push_back("AUD");
  }
  const double duration = 2.0 * spec.lead_s + static_cast<double>(spec.n_words) * spec.word_spacing_s;
  const auto n = static_cast<std::size_t>(std::ceil(duration * spec.fs));

  for (std::size_t w = 0; w < spec.n_words; ++w) {
    WordAlignment a;
    a.word = "w" + std::to_string(w);
    a.onset_s = spec.lead_s + static_cast<double>(w) * spec.word_spacing_s;
    a.offset_s = a.onset_s + spec.word_spacing_s * (0.4 + 0.3 * uniform(rng));
    s.alignments.push_back(std::move(a));
  }

  const std::size_t channels = rec.channel_names.size();
  rec.samples.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < channels; ++c) {
    const bool noisy = rec.channel_names[c] == "VEOG" || rec.channel_names[c] == "AUD";
    const double offset = 20.0 * normal(rng);
    const double alpha_phase = two_pi * uniform(rng);
    const double evoked_gain = 2.0 + 2.0 * uniform(rng);
    const double noise_sd = noisy ? 40.0 : 5.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double time = static_cast<double>(t) / spec.fs;
      rec.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) =
          offset + 4.0 * std::sin(two_pi * 0.3 * time) + 3.0 * std::sin(two_pi * 10.0 * time + alpha_phase) +
          8.0 * std::sin(two_pi * 60.0 * time) + noise_sd * normal(rng);
    }
    for (const auto& a : s.alignments) {
      const double peak = a.onset_s + 0.1;
      const auto lo = static_cast<std::size_t>(std::max(0.0, (peak - 0.15) * spec.fs));
      const auto hi = std::min(n, static_cast<std::size_t>((peak + 0.15) * spec.fs));
      for (std::size_t t = lo; t < hi; ++t) {
        const double dt = static_cast<double>(t) / spec.fs - peak;
        rec.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) +=
            evoked_gain * std::exp(-dt * dt / (2.0 * 0.03 * 0.03));
      }
    }
  }
  return s;
}

OlsSolution ols_oracle(const RowMatrix& X, const RowMatrix& Y) {
  if (X.rows() != Y.rows() || X.rows() < 2) throw ValidationError("ols_oracle: need matching rows, n >= 2");
  const Eigen::RowVectorXd xm = X.colwise().mean();
  const Eigen::RowVectorXd ym = Y.colwise().mean();
  const Eigen::MatrixXd Xc = X.rowwise() - xm;
  const Eigen::MatrixXd Yc = Y.rowwise() - ym;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xc);
  if (qr.rank() < Xc.cols()) throw ValidationError("ols_oracle: X'X is singular");
  OlsSolution s;
  s.W = qr.solve(Yc);
  s.intercept = (ym - xm * s.W).transpose();
  return s;
}

}  // namespace eegalign::synth
