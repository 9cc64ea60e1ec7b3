#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace eegalign {

// Sample-major data matrices: one observation (word, epoch) per contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultSamplingRate = 500.0;
inline constexpr std::size_t kCanonicalChannels = 60;
inline constexpr std::size_t kCanonicalFeatures = 14;
inline constexpr std::size_t kCanonicalFrames = 159;
inline constexpr std::size_t kLayersPerModel = 13;
inline constexpr std::size_t kDefaultComponents = 10;

// Continuous multi-channel EEG in microvolts, [channels x samples].
struct Recording {
  RowMatrix samples;
  std::vector<std::string> channel_names;
  double fs = kDefaultSamplingRate;

  std::size_t channels() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(samples.cols()); }
};

struct WordAlignment {
  std::string word;
  double onset_s = 0.0;
  double offset_s = 0.0;
};

// (channels, features, frames); row-major flattening with frames fastest.
struct TensorShape {
  std::size_t channels = kCanonicalChannels;
  std::size_t features = kCanonicalFeatures;
  std::size_t frames = kCanonicalFrames;

  std::size_t size() const { return channels * features * frames; }
  std::size_t cell_count() const { return channels * features; }
  bool operator==(const TensorShape&) const = default;
};

struct FeatureTensor {
  TensorShape shape;
  std::vector<double> data;  // shape.size() values
  std::size_t word_index = 0;
  // Leading frames that lie entirely inside the pre-onset pad; used for baseline correction.
  std::size_t baseline_frames = 0;

  double& at(std::size_t c, std::size_t f, std::size_t t) {
    return data[(c * shape.features + f) * shape.frames + t];
  }
  double at(std::size_t c, std::size_t f, std::size_t t) const {
    return data[(c * shape.features + f) * shape.frames + t];
  }
};

enum class ModelId { Wav2Vec2, Clip };

std::string_view model_name(ModelId id);
ModelId parse_model(std::string_view name);

// One word's per-layer embedding vectors, [layers x D].
struct EmbeddingStack {
  ModelId model = ModelId::Wav2Vec2;
  RowMatrix layers;
};

// Removes the named channels, preserving the order of the rest, and checks every
// sample is finite. Throws ValidationError on unknown names or non-finite data.
Recording validate_recording(const Recording& rec, const std::vector<std::string>& drop);

// Throws unless the tensor has the expected shape and only finite values.
void validate_feature_tensor(const FeatureTensor& t, const TensorShape& expected);

// Throws unless every stack has the given model, 13 rows, and one common width.
void validate_stacks(const std::vector<EmbeddingStack>& stacks, ModelId model);

}  // namespace eegalign
