#include "eegalign/core.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "eegalign/error.hpp"

namespace eegalign {

std::string_view model_name(ModelId id) {
  switch (id) {
    case ModelId::Wav2Vec2:
      return "wav2vec2";
    case ModelId::Clip:
      return "clip";
  }
  return "unknown";
}

ModelId parse_model(std::string_view name) {
  if (name == "wav2vec2") return ModelId::Wav2Vec2;
  if (name == "clip") return ModelId::Clip;
  throw ValidationError("unknown model '" + std::string(name) + "' (expected wav2vec2 or clip)");
}

Recording validate_recording(const Recording& rec, const std::vector<std::string>& drop) {
  if (rec.channel_names.size() != rec.channels()) {
    std::ostringstream os;
    os << "recording has " << rec.channels() << " rows but " << rec.channel_names.size()
       << " channel names";
    throw ValidationError(os.str());
  }
  if (!(rec.fs > 0.0) || !std::isfinite(rec.fs)) {
    throw ValidationError("sampling rate must be positive, got " + std::to_string(rec.fs));
  }

  std::unordered_set<std::string> dropped;
  for (const auto& name : drop) {
    bool found = false;
    for (const auto& ch : rec.channel_names) found = found || ch == name;
    if (!found) throw ValidationError("cannot drop unknown channel '" + name + "'");
    dropped.insert(name);
  }

  std::vector<Eigen::Index> keep;
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    if (!dropped.contains(rec.channel_names[c])) keep.push_back(static_cast<Eigen::Index>(c));
  }

  Recording out;
  out.fs = rec.fs;
  out.samples.resize(static_cast<Eigen::Index>(keep.size()), rec.samples.cols());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto c = keep[i];
    for (Eigen::Index t = 0; t < rec.samples.cols(); ++t) {
      const double v = rec.samples(c, t);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "non-finite sample in channel '" << rec.channel_names[c] << "' at index " << t;
        throw ValidationError(os.str());
      }
    }
    out.samples.row(static_cast<Eigen::Index>(i)) = rec.samples.row(c);
    out.channel_names.push_back(rec.channel_names[c]);
  }
  return out;
}

void validate_feature_tensor(const FeatureTensor& t, const TensorShape& expected) {
  if (!(t.shape == expected) || t.data.size() != expected.size()) {
    std::ostringstream os;
    os << "feature tensor for word " << t.word_index << " has shape (" << t.shape.channels << ", "
       << t.shape.features << ", " << t.shape.frames << "), expected (" << expected.channels
       << ", " << expected.features << ", " << expected.frames << ")";
    throw ValidationError(os.str());
  }
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    if (!std::isfinite(t.data[i])) {
      throw ValidationError("feature tensor for word " + std::to_string(t.word_index) +
                            " has a non-finite value at flat index " + std::to_string(i));
    }
  }
}

void validate_stacks(const std::vector<EmbeddingStack>& stacks, ModelId model) {
  Eigen::Index width = -1;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    const auto& s = stacks[i];
    if (s.model != model) {
      throw ValidationError("stack " + std::to_string(i) + " belongs to " +
                            std::string(model_name(s.model)) + ", expected " +
                            std::string(model_name(model)));
    }
    if (s.layers.rows() != static_cast<Eigen::Index>(kLayersPerModel)) {
      throw ValidationError("stack " + std::to_string(i) + " has " +
                            std::to_string(s.layers.rows()) + " layers, expected 13");
    }
    if (width >= 0 && s.layers.cols() != width) {
      throw ValidationError("stack " + std::to_string(i) + " has width " +
                            std::to_string(s.layers.cols()) + ", others have " +
                            std::to_string(width));
    }
    width = s.layers.cols();
  }
}

}  // namespace eegalign
