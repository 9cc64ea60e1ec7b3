#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "eegalign/core.hpp"
#include "eegalign/sweep.hpp"

namespace eegalign::synth {

struct SynthSpec {
  std::size_t n_words = 200;
  std::size_t n_layers = kLayersPerModel;  // per model
  std::size_t dims = kDefaultComponents;
  std::vector<std::size_t> signal_layers{3};  // positions in the default sweep order
  double snr = 100.0;                         // var(signal)/var(noise); infinity disables noise
  std::uint64_t seed = 0;
  std::size_t n_targets = 600;  // non-constant targets spread over the tensor
  TensorShape shape{};
};

void validate_spec(const SynthSpec& spec);

struct SynthDataset {
  align::StackSet stacks;                  // wav2vec2 then clip, standard-normal scores
  RowMatrix Y;                             // [n_words x shape.size()]
  std::vector<RowMatrix> W_true;           // one [dims x n_targets] per signal layer
  std::vector<std::size_t> target_columns; // flattened tensor index of each active target
};

// Y = sum over signal layers of X_l W_l + white noise scaled to the requested
// SNR, written into evenly spaced tensor positions; the other positions stay 0.
SynthDataset gen_dataset(const SynthSpec& spec);

// Raw per-word stacks whose layer rows are fixed random projections of the
// reduced scores plus small noise, for exercising the reduce stage.
std::vector<EmbeddingStack> gen_raw_stacks(const align::StackSet& stacks, ModelId model,
                                           std::size_t raw_dims, std::uint64_t seed);

std::vector<double> sinusoid(double freq_hz, double amplitude, double fs, std::size_t n,
                             double phase = 0.0);

struct RecordingSpec {
  std::size_t n_words = 200;
  double fs = kDefaultSamplingRate;
  double word_spacing_s = 0.5;
  double lead_s = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> channels;  // empty: 60 montage channels + VEOG + AUD
};

struct SyntheticSession {
  Recording recording;
  std::vector<WordAlignment> alignments;
};

// Background noise, 10 Hz rhythm, 60 Hz line hum and word-locked responses.
SyntheticSession gen_recording(const RecordingSpec& spec);

struct OlsSolution {
  RowMatrix W;
  Vector intercept;
};

// Least squares on centered data by column-pivoted QR. Throws ValidationError
// when X'X is singular.
OlsSolution ols_oracle(const RowMatrix& X, const RowMatrix& Y);

}  // namespace eegalign::synth
