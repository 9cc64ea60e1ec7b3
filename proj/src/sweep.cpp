#include "eegalign/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "eegalign/error.hpp"
#include "eegalign/parallel.hpp"
#include "eegalign/report.hpp"
#include "eegalign/simd.hpp"

namespace eegalign::align {
namespace {

RowMatrix take_rows(const RowMatrix& M, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = M.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::size_t parse_index(std::string_view s, std::string_view whole) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError("cannot parse layer reference '" + std::string(whole) + "'");
  }
  return v;
}

// Data shared by every position of one sweep.
struct SweepData {
  std::vector<LayerRef> order;
  Split split;
  std::vector<std::size_t> active;  // non-constant target columns
  RowMatrix Ytr, Yte;               // compacted to the active columns
};

SweepData prepare(const StackSet& stacks, const RowMatrix& Y, const SweepConfig& cfg) {
  const std::size_t n = stacks.words();
  if (static_cast<std::size_t>(Y.rows()) != n) {
    throw ValidationError("targets have " + std::to_string(Y.rows()) + " rows but stacks hold " +
                          std::to_string(n) + " words");
  }
  if (static_cast<std::size_t>(Y.cols()) != cfg.shape.size()) {
    throw ValidationError("targets have " + std::to_string(Y.cols()) +
                          " columns, tensor shape implies " + std::to_string(cfg.shape.size()));
  }
  SweepData d;
  d.order = cfg.order.empty() ? default_order(stacks) : cfg.order;
  d.split = split_train_test(n, cfg.ratio, cfg.seed);
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const double first = Y(0, j);
    for (Eigen::Index i = 1; i < Y.rows(); ++i) {
      if (Y(i, j) != first) {
        d.active.push_back(static_cast<std::size_t>(j));
        break;
      }
    }
  }
  if (d.active.empty()) throw ValidationError("every target column is constant");
  auto compact = [&](std::span<const std::size_t> rows) {
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d.active.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = Y.row(static_cast<Eigen::Index>(rows[i]));
      for (std::size_t j = 0; j < d.active.size(); ++j) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = src(static_cast<Eigen::Index>(d.active[j]));
      }
    }
    return out;
  };
  d.Ytr = compact(d.split.train);
  d.Yte = compact(d.split.test);
  return d;
}

struct PositionFit {
  SweepResult result;
  RidgeModel compact_model;
};

PositionFit run_position(const StackSet& stacks, const SweepData& d, Strategy strategy,
                         std::size_t position, const SweepConfig& cfg) {
  const std::string label = design_label(strategy, position, d.order, stacks.method);
  try {
    const DesignMatrix design = build_design(stacks, strategy, position, d.order);
    const RowMatrix Xtr = take_rows(design.X, d.split.train);
    const RowMatrix Xte = take_rows(design.X, d.split.test);
    CvResult cv = ridge_cv(Xtr, d.Ytr, cfg.alphas, cfg.folds, cfg.seed);
    const Score tr = score(cv.model, Xtr, d.Ytr);
    const Score te = score(cv.model, Xte, d.Yte);

    PositionFit out;
    SweepResult& r = out.result;
    r.label = design.label;
    r.strategy = strategy;
    r.position = position;
    r.p = static_cast<std::size_t>(design.X.cols());
    r.alpha = cv.alpha;
    r.train_r2 = tr.r2;
    r.test_r2 = te.r2;
    r.train_corr = tr.corr;
    r.test_corr = te.corr;
    r.channel_scores = report::channel_weight_map(cv.model.W, cfg.shape, d.active);
    r.cv = std::move(cv.table);
    out.compact_model = std::move(cv.model);
    return out;
  } catch (const ValidationError& e) {
    throw ValidationError(label + ": " + e.what());
  }
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Single:
      return "single";
    case Strategy::Concat:
      return "concat";
    case Strategy::Sum:
      return "sum";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "single") return Strategy::Single;
  if (name == "concat") return Strategy::Concat;
  if (name == "sum") return Strategy::Sum;
  throw ValidationError("unknown strategy '" + std::string(name) + "' (expected single, concat or sum)");
}

LayerRef parse_layer_ref(std::string_view text) {
  for (ModelId model : {ModelId::Wav2Vec2, ModelId::Clip}) {
    const std::string_view name = model_name(model);
    if (!text.starts_with(name)) continue;
    std::string_view rest = text.substr(name.size());
    for (std::string_view sep : {std::string_view("_layer_"), std::string_view(":"), std::string_view("_")}) {
      if (rest.starts_with(sep)) return {model, parse_index(rest.substr(sep.size()), text)};
    }
  }
  throw ValidationError("cannot parse layer reference '" + std::string(text) +
                        "' (expected e.g. wav2vec2:3 or clip_7)");
}

const RowMatrix& StackSet::layer(LayerRef ref) const {
  for (const auto& m : models) {
    if (m.model != ref.model) continue;
    if (ref.layer >= m.layers.size()) {
      throw ValidationError(std::string(model_name(ref.model)) + " has no layer " +
                            std::to_string(ref.layer));
    }
    return m.layers[ref.layer];
  }
  throw ValidationError("no reduced stacks for model " + std::string(model_name(ref.model)));
}

std::size_t StackSet::words() const {
  for (const auto& m : models) {
    if (!m.layers.empty()) return static_cast<std::size_t>(m.layers.front().rows());
  }
  return 0;
}

std::vector<LayerRef> default_order(const StackSet& stacks) {
  std::vector<LayerRef> order;
  for (ModelId model : {ModelId::Wav2Vec2, ModelId::Clip}) {
    for (const auto& m : stacks.models) {
      if (m.model != model) continue;
      for (std::size_t l = 0; l < m.layers.size(); ++l) order.push_back({model, l});
    }
  }
  return order;
}

std::string design_label(Strategy strategy, std::size_t position, std::span<const LayerRef> order,
                         std::string_view method) {
  if (position >= order.size()) {
    throw ValidationError("sweep position " + std::to_string(position) + " is beyond the " +
                          std::to_string(order.size()) + "-entry layer order");
  }
  std::ostringstream os;
  if (strategy == Strategy::Single) {
    os << model_name(order[position].model) << "_layer_" << order[position].layer << '_' << method;
    return os.str();
  }
  std::size_t i = 0;
  bool first = true;
  while (i <= position) {
    std::size_t j = i;
    while (j + 1 <= position && order[j + 1].model == order[i].model &&
           order[j + 1].layer == order[j].layer + 1) {
      ++j;
    }
    if (!first) os << '_';
    os << model_name(order[i].model) << '_' << order[i].layer << '-' << order[j].layer;
    first = false;
    i = j + 1;
  }
  os << '_' << method << '_' << strategy_name(strategy);
  return os.str();
}

DesignMatrix build_design(const StackSet& stacks, Strategy strategy, std::size_t position,
                          std::span<const LayerRef> order) {
  DesignMatrix d;
  d.label = design_label(strategy, position, order, stacks.method);
  if (strategy == Strategy::Single) {
    d.X = stacks.layer(order[position]);
    return d;
  }
  const RowMatrix& first = stacks.layer(order[0]);
  for (std::size_t i = 1; i <= position; ++i) {
    const RowMatrix& L = stacks.layer(order[i]);
    if (L.rows() != first.rows() || L.cols() != first.cols()) {
      throw ValidationError("layer " + std::to_string(i) + " of the sweep order has shape " +
                            std::to_string(L.rows()) + "x" + std::to_string(L.cols()) +
                            ", expected " + std::to_string(first.rows()) + "x" +
                            std::to_string(first.cols()));
    }
  }
  if (strategy == Strategy::Sum) {
    d.X = first;
    for (std::size_t i = 1; i <= position; ++i) d.X += stacks.layer(order[i]);
  } else {
    const Eigen::Index k = first.cols();
    d.X.resize(first.rows(), k * static_cast<Eigen::Index>(position + 1));
    for (std::size_t i = 0; i <= position; ++i) {
      d.X.middleCols(static_cast<Eigen::Index>(i) * k, k) = stacks.layer(order[i]);
    }
  }
  return d;
}

std::size_t best_result(std::span<const SweepResult> results) {
  if (results.empty()) throw ValidationError("no sweep results to rank");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const auto& a = results[i];
    const auto& b = results[best];
    if (a.test_r2 > b.test_r2 || (a.test_r2 == b.test_r2 && a.test_corr > b.test_corr)) best = i;
  }
  return best;
}

SweepReport layer_sweep(const StackSet& stacks, const RowMatrix& Y, Strategy family,
                        const SweepConfig& cfg) {
  const SweepData data = prepare(stacks, Y, cfg);
  std::vector<std::size_t> positions = cfg.positions;
  if (positions.empty()) {
    positions.resize(data.order.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  }
  SweepReport report;
  report.results.resize(positions.size());
  parallel_for(positions.size(), [&](std::size_t i) {
    report.results[i] = run_position(stacks, data, family, positions[i], cfg).result;
  });
  report.best = best_result(report.results);
  return report;
}

FittedConfiguration fit_configuration(const StackSet& stacks, const RowMatrix& Y,
                                      Strategy strategy, std::size_t position,
                                      const SweepConfig& cfg) {
  const SweepData data = prepare(stacks, Y, cfg);
  PositionFit fit = run_position(stacks, data, strategy, position, cfg);

  FittedConfiguration out;
  out.result = std::move(fit.result);
  RidgeModel& m = out.model;
  m.alpha = fit.compact_model.alpha;
  m.W = RowMatrix::Zero(fit.compact_model.W.rows(), Y.cols());
  // Constant columns are predicted by their (shared) value.
  m.intercept = Y.row(0).transpose();
  for (std::size_t j = 0; j < data.active.size(); ++j) {
    const auto dst = static_cast<Eigen::Index>(data.active[j]);
    m.W.col(dst) = fit.compact_model.W.col(static_cast<Eigen::Index>(j));
    m.intercept(dst) = fit.compact_model.intercept(static_cast<Eigen::Index>(j));
  }
  return out;
}

Retrieval contrastive_retrieval(const RidgeModel& model, const RowMatrix& candidates,
                                std::span<const double> y_true, std::size_t true_index,
                                std::size_t k) {
  const auto m = static_cast<std::size_t>(candidates.rows());
  if (m < 2) throw ValidationError("retrieval needs at least 2 candidates");
  if (k < 1 || k > m) throw ValidationError("retrieval k must lie in [1, candidates]");
  if (true_index >= m) throw ValidationError("true candidate index out of range");
  if (y_true.size() != model.q()) {
    throw ValidationError("observed response has " + std::to_string(y_true.size()) +
                          " values, model predicts " + std::to_string(model.q()));
  }
  const auto& kern = simd::active();
  const double y_norm = std::sqrt(kern.dot(y_true.data(), y_true.data(), y_true.size()));
  if (y_norm == 0.0) throw ValidationError("observed response has zero norm");

  const RowMatrix pred = predict(model, candidates);
  std::vector<double> sim(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double* row = pred.row(static_cast<Eigen::Index>(j)).data();
    const double norm = std::sqrt(kern.dot(row, row, model.q()));
    if (norm == 0.0) {
      throw ValidationError("prediction for candidate " + std::to_string(j) + " has zero norm");
    }
    sim[j] = kern.dot(row, y_true.data(), model.q()) / (norm * y_norm);
  }
  Retrieval r;
  r.rank = 1;
  for (std::size_t j = 0; j < m; ++j) {
    if (j != true_index && sim[j] > sim[true_index]) ++r.rank;
  }
  r.hit = r.rank <= k;
  return r;
}

}  // namespace eegalign::align
