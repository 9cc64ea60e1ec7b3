#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eegalign/core.hpp"
#include "eegalign/ridge.hpp"

namespace eegalign::align {

enum class Strategy { Single, Concat, Sum };
std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct LayerRef {
  ModelId model = ModelId::Wav2Vec2;
  std::size_t layer = 0;
  bool operator==(const LayerRef&) const = default;
};

// "wav2vec2:3", "clip_7" or "wav2vec2_layer_3".
LayerRef parse_layer_ref(std::string_view text);

// Reduced embeddings of one model: per layer an [n_words x k] score matrix.
struct ReducedStacks {
  ModelId model = ModelId::Wav2Vec2;
  std::vector<RowMatrix> layers;
};

struct StackSet {
  std::vector<ReducedStacks> models;
  std::string method = "pca";

  const RowMatrix& layer(LayerRef ref) const;
  std::size_t words() const;
};

// Every wav2vec2 layer in depth order, then every clip layer.
std::vector<LayerRef> default_order(const StackSet& stacks);

struct DesignMatrix {
  RowMatrix X;
  std::string label;
};

// SINGLE(position) uses order[position]; CONCAT and SUM combine order[0..position].
DesignMatrix build_design(const StackSet& stacks, Strategy strategy, std::size_t position,
                          std::span<const LayerRef> order);
std::string design_label(Strategy strategy, std::size_t position, std::span<const LayerRef> order,
                         std::string_view method);

struct SweepConfig {
  std::vector<double> alphas = default_alphas();
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double ratio = 0.8;
  TensorShape shape{};
  std::vector<LayerRef> order;          // empty: default_order
  std::vector<std::size_t> positions;   // empty: every position
};

struct SweepResult {
  std::string label;
  Strategy strategy = Strategy::Single;
  std::size_t position = 0;
  std::size_t p = 0;
  double alpha = 0;
  double train_r2 = 0, test_r2 = 0;
  double train_corr = 0, test_corr = 0;
  std::vector<double> channel_scores;
  CvTable cv;
};

struct SweepReport {
  std::vector<SweepResult> results;
  std::size_t best = 0;  // max test R^2, ties by test correlation
};

// Y is [n_words x shape.size()], flattened feature tensors in the same word order
// as the stacks. Columns constant over every row carry no signal and are dropped
// before fitting; their weights are zero.
SweepReport layer_sweep(const StackSet& stacks, const RowMatrix& Y, Strategy family,
                        const SweepConfig& cfg);

struct FittedConfiguration {
  SweepResult result;
  RidgeModel model;  // full-width weights [p x shape.size()]
};

FittedConfiguration fit_configuration(const StackSet& stacks, const RowMatrix& Y,
                                      Strategy strategy, std::size_t position,
                                      const SweepConfig& cfg);

std::size_t best_result(std::span<const SweepResult> results);

struct Retrieval {
  std::size_t rank = 0;  // 1-based
  bool hit = false;      // rank <= k
};

// Ranks the candidates by cosine similarity between their predicted responses
// and y_true. Ties rank in favour of the true candidate.
Retrieval contrastive_retrieval(const RidgeModel& model, const RowMatrix& candidates,
                                std::span<const double> y_true, std::size_t true_index,
                                std::size_t k);

}  // namespace eegalign::align
