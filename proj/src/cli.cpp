#include "eegalign/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "eegalign/config.hpp"
#include "eegalign/dimred.hpp"
#include "eegalign/error.hpp"
#include "eegalign/features.hpp"
#include "eegalign/io.hpp"
#include "eegalign/manifest.hpp"
#include "eegalign/parallel.hpp"
#include "eegalign/report.hpp"
#include "eegalign/sigproc.hpp"
#include "eegalign/sweep.hpp"
#include "eegalign/synth.hpp"

namespace eegalign::cli {
namespace fs = std::filesystem;
namespace {

constexpr const char* kFeaturesFile = "features.ltns";
constexpr const char* kWordIndexFile = "word_index.ltns";
constexpr const char* kMethodFile = "method.txt";
constexpr const char* kDesignFile = "design.txt";

// Config-key flags shared by every subcommand. `--config` supplies defaults and
// any flag given explicitly overrides it.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) {
    app->add_option("--config", config_path_, "key=value config file");
    for (const char* key : {"fs", "pad_ms", "notch_hz", "notch_q", "hp_hz", "hp_order", "n_frames",
                            "bands", "alphas", "folds", "seed", "ratio"}) {
      std::string names = "--" + std::string(key);
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) names += ",--" + dashed;
      options_.emplace_back(key, app->add_option(names, values_[key], "overrides config key " + std::string(key)));
    }
  }

  Config resolve() const {
    Config cfg = config_path_.empty() ? Config{} : load_config(config_path_);
    for (const auto& [key, opt] : options_) {
      if (opt->count() > 0) cfg.set(key, values_.at(key));
    }
    return cfg;
  }

  std::string config_path() const { return config_path_; }

 private:
  std::string config_path_;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, CLI::Option*>> options_;
};

TensorShape shape_for(const Config& cfg) {
  return {kCanonicalChannels, features::kTimeFeatures + cfg.bands.size(), cfg.n_frames};
}

align::SweepConfig sweep_config(const Config& cfg, const TensorShape& shape) {
  align::SweepConfig sc;
  if (!cfg.alphas.empty()) sc.alphas = cfg.alphas;
  sc.folds = cfg.folds;
  sc.seed = cfg.seed;
  sc.ratio = cfg.ratio;
  sc.shape = shape;
  return sc;
}

void require_exists(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("no such file or directory: " + p.string());
}

fs::path stack_path(const fs::path& dir, ModelId model, std::size_t idx) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%05zu.ltns", std::string(model_name(model)).c_str(), idx);
  return dir / name;
}

// Word indices of every `{model}_NNNNN.ltns` file in dir, ascending.
std::vector<std::size_t> list_stack_ids(const fs::path& dir, ModelId model) {
  const std::regex pattern("^" + std::string(model_name(model)) + "_([0-9]{5,})\\.ltns$");
  std::vector<std::size_t> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern)) {
      ids.push_back(std::stoull(m[1].str()));
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void write_stack_files(const fs::path& dir, ModelId model, const std::vector<RowMatrix>& layers,
                       std::span<const std::size_t> word_ids) {
  const auto k = layers.front().cols();
  for (std::size_t w = 0; w < word_ids.size(); ++w) {
    RowMatrix stack(static_cast<Eigen::Index>(layers.size()), k);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      stack.row(static_cast<Eigen::Index>(l)) = layers[l].row(static_cast<Eigen::Index>(w));
    }
    io::write_tensor(stack_path(dir, model, word_ids[w]), stack);
  }
}

// Reduced stacks for the given words; a model with no files at all is skipped.
align::StackSet load_stack_set(const fs::path& dir, std::span<const std::size_t> word_ids) {
  require_exists(dir);
  align::StackSet set;
  if (fs::exists(dir / kMethodFile)) {
    std::string method = io::read_text(dir / kMethodFile);
    method.erase(method.find_last_not_of(" \n\r\t") + 1);
    set.method = method;
  }
  for (ModelId model : {ModelId::Wav2Vec2, ModelId::Clip}) {
    if (list_stack_ids(dir, model).empty()) continue;
    align::ReducedStacks rs;
    rs.model = model;
    for (std::size_t w = 0; w < word_ids.size(); ++w) {
      const RowMatrix stack = io::to_matrix(io::read_tensor(stack_path(dir, model, word_ids[w])));
      if (stack.rows() != static_cast<Eigen::Index>(kLayersPerModel)) {
        throw ValidationError(stack_path(dir, model, word_ids[w]).string() + ": expected " +
                              std::to_string(kLayersPerModel) + " layers");
      }
      if (rs.layers.empty()) rs.layers.assign(kLayersPerModel, RowMatrix(word_ids.size(), stack.cols()));
      if (stack.cols() != rs.layers.front().cols()) {
        throw ValidationError(stack_path(dir, model, word_ids[w]).string() + ": width differs from other words");
      }
      for (std::size_t l = 0; l < kLayersPerModel; ++l) {
        rs.layers[l].row(static_cast<Eigen::Index>(w)) = stack.row(static_cast<Eigen::Index>(l));
      }
    }
    set.models.push_back(std::move(rs));
  }
  if (set.models.empty()) throw ValidationError("no reduced stack files in " + dir.string());
  return set;
}

struct FeatureSet {
  RowMatrix Y;
  TensorShape shape;
  std::vector<std::size_t> word_ids;
};

FeatureSet load_features(const fs::path& dir) {
  require_exists(dir / kFeaturesFile);
  const io::Tensor t = io::read_tensor(dir / kFeaturesFile);
  if (t.dims.size() != 4) throw ValidationError(kFeaturesFile + std::string(" must be rank 4 (words, channels, features, frames)"));
  FeatureSet fset;
  fset.shape = {t.dims[1], t.dims[2], t.dims[3]};
  fset.Y = io::to_matrix(t);
  if (fs::exists(dir / kWordIndexFile)) {
    const io::Tensor idx = io::read_tensor(dir / kWordIndexFile);
    if (idx.values.size() != t.dims[0]) throw ValidationError("word index length does not match the feature tensor");
    for (double v : idx.values) fset.word_ids.push_back(static_cast<std::size_t>(v));
  } else {
    for (std::size_t i = 0; i < t.dims[0]; ++i) fset.word_ids.push_back(i);
  }
  return fset;
}

void write_features(const fs::path& dir, const RowMatrix& Y, const TensorShape& shape,
                    std::span<const std::size_t> word_ids, io::DType dtype) {
  io::Tensor t = io::make_tensor(Y, dtype);
  t.dims = {static_cast<std::uint64_t>(Y.rows()), shape.channels, shape.features, shape.frames};
  io::write_tensor(dir / kFeaturesFile, t);
  io::Tensor idx;
  idx.dims = {word_ids.size()};
  idx.values.assign(word_ids.begin(), word_ids.end());
  io::write_tensor(dir / kWordIndexFile, idx);
}

io::DType parse_dtype(const std::string& s) {
  if (s == "float64") return io::DType::Float64;
  if (s == "float32") return io::DType::Float32;
  throw ValidationError("dtype must be float32 or float64, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- preprocess --------------------------------------------------------------

struct PreprocessArgs {
  std::string recording, channels, alignments, out, drop = "VEOG,AUD";
};

int do_preprocess(const PreprocessArgs& a, const ConfigFlags& flags, std::ostream& out, std::ostream& err) {
  const Config cfg = flags.resolve();
  for (const auto& p : {a.recording, a.channels, a.alignments}) require_exists(p);
  auto cmap = cfg.to_map();
  cmap["drop"] = a.drop;
  RunManifest manifest("preprocess", cmap);
  for (const auto& p : {a.recording, a.channels, a.alignments}) manifest.add_input(p);

  Recording rec;
  {
    auto timer = manifest.time_stage("load");
    const io::Tensor t = io::read_tensor(a.recording);
    if (t.dims.size() != 2) throw ValidationError(a.recording + ": recording must be rank 2 (channels, samples)");
    rec.samples = io::to_matrix(t);
    for (auto& line : io::read_lines(a.channels)) {
      if (!line.empty()) rec.channel_names.push_back(line);
    }
    if (rec.channel_names.size() != rec.channels()) {
      throw ValidationError(a.channels + ": " + std::to_string(rec.channel_names.size()) +
                            " names for " + std::to_string(rec.channels()) + " channels");
    }
    rec.fs = cfg.fs;
  }
  const io::AlignmentTable table = io::read_alignments(a.alignments);
  for (const auto& w : table.warnings) err << "warning: " << w << "\n";

  sigproc::Segmentation segs;
  {
    auto timer = manifest.time_stage("filter");
    rec = validate_recording(rec, split_list(a.drop));
    const int harmonics = std::min(4, sigproc::harmonics_below_nyquist(cfg.notch_hz, rec.fs));
    if (harmonics > 0) rec = sigproc::notch_filter(rec, cfg.notch_hz, harmonics, cfg.notch_q);
    rec = sigproc::highpass_filter(rec, cfg.hp_hz, cfg.hp_order);
    segs = sigproc::segment_words(rec, table.rows, cfg.pad_ms);
  }
  if (segs.segments.empty()) throw ValidationError("no word window fits inside the recording");

  features::FeatureOptions fopts;
  fopts.n_frames = cfg.n_frames;
  fopts.bands = cfg.bands;
  std::vector<FeatureTensor> tensors(segs.segments.size());
  {
    auto timer = manifest.time_stage("features");
    parallel_for(segs.segments.size(), [&](std::size_t i) {
      const auto& seg = segs.segments[i];
      tensors[i] = features::compute_feature_tensor(seg, features::frame_segment(seg, cfg.n_frames), rec.fs, fopts);
    });
  }
  const auto split = align::split_train_test(tensors.size(), cfg.ratio, cfg.seed);
  features::PostprocResult post;
  {
    auto timer = manifest.time_stage("postprocess");
    post = features::postprocess(std::move(tensors), split.train);
  }

  const fs::path dir = a.out;
  fs::create_directories(dir);
  const TensorShape shape = post.tensors.front().shape;
  RowMatrix Y(static_cast<Eigen::Index>(post.tensors.size()), static_cast<Eigen::Index>(shape.size()));
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < post.tensors.size(); ++i) {
    Y.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(post.tensors[i].data.data(), static_cast<Eigen::Index>(shape.size()));
    ids.push_back(post.tensors[i].word_index);
  }
  write_features(dir, Y, shape, ids, io::DType::Float64);
  std::ostringstream rejects;
  rejects << "word_index,word,reason\n";
  for (const auto& r : segs.rejects) {
    rejects << r.word_index << ',' << table.rows[r.word_index].word << ',' << r.reason << '\n';
  }
  io::write_text(dir / "rejects.csv", rejects.str());
  for (const char* f : {kFeaturesFile, kWordIndexFile, "rejects.csv"}) manifest.add_output(dir / f);
  manifest.write(dir);
  out << "preprocess: " << post.tensors.size() << " words, " << segs.rejects.size() << " rejected -> "
      << dir.string() << "\n";
  return kExitOk;
}

// ---- reduce ------------------------------------------------------------------

struct ReduceArgs {
  std::string input, out, method = "pca";
  std::size_t k = kDefaultComponents;
  dimred::IcaOptions ica;
};

int do_reduce(const ReduceArgs& a, const ConfigFlags& flags, std::ostream& out, std::ostream&) {
  const Config cfg = flags.resolve();
  const dimred::Method method = dimred::parse_method(a.method);
  require_exists(a.input);
  auto cmap = cfg.to_map();
  cmap["method"] = a.method;
  cmap["k"] = std::to_string(a.k);
  if (method == dimred::Method::Ica) {
    cmap["ica_tol"] = report::format_number(a.ica.tol);
    cmap["ica_max_iter"] = std::to_string(a.ica.max_iter);
  }
  RunManifest manifest("reduce", cmap);
  manifest.add_input(a.input);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::ostringstream table;
  table << (method == dimred::Method::Pca ? "model,layer,component,variance,ratio\n" : "model,layer,iterations\n");
  std::size_t models = 0;
  for (ModelId model : {ModelId::Wav2Vec2, ModelId::Clip}) {
    const auto ids = list_stack_ids(a.input, model);
    if (ids.empty()) continue;
    ++models;
    auto timer = manifest.time_stage(std::string(model_name(model)));
    const auto header = io::read_tensor_header(stack_path(a.input, model, ids.front()));
    if (header.dims.size() != 2 || header.dims[0] != kLayersPerModel) {
      throw ValidationError(stack_path(a.input, model, ids.front()).string() + ": expected a (13, D) stack");
    }
    const auto width = static_cast<Eigen::Index>(header.dims[1]);
    std::vector<RowMatrix> reduced(kLayersPerModel);
    for (std::size_t l = 0; l < kLayersPerModel; ++l) {
      RowMatrix X(static_cast<Eigen::Index>(ids.size()), width);
      for (std::size_t w = 0; w < ids.size(); ++w) {
        const fs::path p = stack_path(a.input, model, ids[w]);
        const auto row = io::read_tensor_row(p, l);
        if (static_cast<Eigen::Index>(row.size()) != width) {
          throw ValidationError(p.string() + ": width differs from other words");
        }
        X.row(static_cast<Eigen::Index>(w)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), width);
      }
      const std::string prefix = std::string(model_name(model)) + ',' + std::to_string(l) + ',';
      if (method == dimred::Method::Pca) {
        const auto m = dimred::pca_fit(X, a.k);
        reduced[l] = dimred::pca_transform(m, X);
        for (std::size_t c = 0; c < m.k(); ++c) {
          table << prefix << c << ',' << report::format_number(m.explained_variance[static_cast<Eigen::Index>(c)])
                << ',' << report::format_number(m.explained_variance_ratio[static_cast<Eigen::Index>(c)]) << '\n';
        }
      } else {
        const auto m = dimred::ica_fit(X, a.k, cfg.seed, a.ica);
        reduced[l] = dimred::ica_transform(m, X);
        table << prefix << m.iterations << '\n';
      }
    }
    write_stack_files(dir, model, reduced, ids);
  }
  if (models == 0) throw ValidationError("no raw stack files ({model}_NNNNN.ltns) in " + a.input);
  const std::string table_name = method == dimred::Method::Pca ? "explained_variance.csv" : "ica_iterations.csv";
  io::write_text(dir / table_name, table.str());
  io::write_text(dir / kMethodFile, std::string(dimred::method_name(method)) + "\n");
  manifest.add_output(dir / table_name);
  manifest.add_output(dir / kMethodFile);
  manifest.write(dir);
  out << "reduce: " << models << " model(s) -> " << dir.string() << "\n";
  return kExitOk;
}

// ---- sweep -------------------------------------------------------------------

struct SweepArgs {
  std::string stacks, features, out, strategy = "single", layer, format = "both";
  std::optional<std::size_t> upto;
  bool save_model = false;
};

void save_model(const fs::path& dir, const align::FittedConfiguration& fit, const std::string& method) {
  fs::create_directories(dir);
  io::write_tensor(dir / "weights.ltns", fit.model.W);
  RowMatrix intercept = fit.model.intercept.transpose();
  io::Tensor it = io::make_tensor(intercept);
  it.dims = {static_cast<std::uint64_t>(intercept.cols())};
  io::write_tensor(dir / "intercept.ltns", it);
  io::Tensor alpha;
  alpha.dims = {1};
  alpha.values = {fit.model.alpha};
  io::write_tensor(dir / "alpha.ltns", alpha);
  std::ostringstream os;
  os << "strategy=" << align::strategy_name(fit.result.strategy) << "\nposition=" << fit.result.position
     << "\nlabel=" << fit.result.label << "\nmethod=" << method << "\n";
  io::write_text(dir / kDesignFile, os.str());
}

int do_sweep(const SweepArgs& a, const ConfigFlags& flags, std::ostream& out, std::ostream&) {
  const Config cfg = flags.resolve();
  const align::Strategy strategy = align::parse_strategy(a.strategy);
  if (a.format != "csv" && a.format != "json" && a.format != "both") {
    throw ValidationError("format must be csv, json or both");
  }
  auto cmap = cfg.to_map();
  cmap["strategy"] = a.strategy;
  if (!a.layer.empty()) cmap["layer"] = a.layer;
  if (a.upto) cmap["upto"] = std::to_string(*a.upto);
  RunManifest manifest("sweep", cmap);

  FeatureSet fset;
  align::StackSet stacks;
  {
    auto timer = manifest.time_stage("load");
    fset = load_features(a.features);
    stacks = load_stack_set(a.stacks, fset.word_ids);
  }
  manifest.add_input(fs::path(a.features) / kFeaturesFile);
  manifest.add_input(a.stacks);

  align::SweepConfig sc = sweep_config(cfg, fset.shape);
  sc.order = align::default_order(stacks);
  if (!a.layer.empty()) {
    const auto ref = align::parse_layer_ref(a.layer);
    const auto it = std::find(sc.order.begin(), sc.order.end(), ref);
    if (it == sc.order.end()) throw ValidationError("layer '" + a.layer + "' is not in the loaded stacks");
    sc.positions = {static_cast<std::size_t>(it - sc.order.begin())};
  }
  if (a.upto) {
    if (*a.upto >= sc.order.size()) throw ValidationError("--upto is past the last layer");
    sc.positions = {*a.upto};
  }
  align::SweepReport rep;
  {
    auto timer = manifest.time_stage("sweep");
    rep = align::layer_sweep(stacks, fset.Y, strategy, sc);
  }

  const fs::path dir = a.out;
  fs::create_directories(dir);
  const std::string stem = "results_" + std::string(align::strategy_name(strategy));
  if (a.format != "json") {
    report::write_results(rep.results, dir / (stem + ".csv"), report::Format::Csv);
    manifest.add_output(dir / (stem + ".csv"));
  }
  if (a.format != "csv") {
    report::write_results(rep.results, dir / (stem + ".json"), report::Format::Json);
    manifest.add_output(dir / (stem + ".json"));
  }
  std::ostringstream cv;
  cv << "label,fold,alpha,r2\n";
  for (const auto& r : rep.results) {
    for (const auto& row : r.cv.rows) {
      cv << r.label << ',' << row.fold << ',' << report::format_number(row.alpha) << ','
         << report::format_number(row.r2) << '\n';
    }
  }
  const std::string cv_name = "cv_" + std::string(align::strategy_name(strategy)) + ".csv";
  io::write_text(dir / cv_name, cv.str());
  manifest.add_output(dir / cv_name);

  const auto& best = rep.results[rep.best];
  if (a.save_model) {
    auto timer = manifest.time_stage("save_model");
    const auto fit = align::fit_configuration(stacks, fset.Y, strategy, best.position, sc);
    const fs::path mdir = dir / ("model_" + std::string(align::strategy_name(strategy)));
    save_model(mdir, fit, stacks.method);
    manifest.add_output(mdir);
  }
  manifest.write(dir);
  out << "sweep: best " << best.label << " test_r2=" << report::format_number(best.test_r2)
      << " test_corr=" << report::format_number(best.test_corr) << "\n";
  return kExitOk;
}

// ---- report ------------------------------------------------------------------

struct ReportArgs {
  std::string results, out, montage, channels;
  bool all = false;
};

std::string file_safe(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

int do_report(const ReportArgs& a, const ConfigFlags& flags, std::ostream& out, std::ostream&) {
  const Config cfg = flags.resolve();
  require_exists(a.results);
  auto cmap = cfg.to_map();
  cmap["all"] = a.all ? "true" : "false";
  RunManifest manifest("report", cmap);
  manifest.add_input(a.results);
  const auto results = report::read_results_json(a.results);
  if (results.empty()) throw ValidationError(a.results + ": no result rows");
  report::Montage montage = report::default_montage();
  if (!a.montage.empty()) {
    require_exists(a.montage);
    montage = report::read_montage(a.montage);
    manifest.add_input(a.montage);
  }
  std::vector<std::string> channels = report::default_channel_names();
  if (!a.channels.empty()) {
    require_exists(a.channels);
    channels.clear();
    for (auto& line : io::read_lines(a.channels)) {
      if (!line.empty()) channels.push_back(line);
    }
    manifest.add_input(a.channels);
  }

  const fs::path dir = a.out;
  fs::create_directories(dir);
  auto render = [&](const align::SweepResult& r, const fs::path& path) {
    if (r.channel_scores.size() != channels.size()) {
      throw ValidationError(r.label + ": " + std::to_string(r.channel_scores.size()) + " channel scores for " +
                            std::to_string(channels.size()) + " channel names");
    }
    report::render_topomap_svg(r.channel_scores, channels, montage, path, r.label);
    manifest.add_output(path);
  };
  {
    auto timer = manifest.time_stage("render");
    render(results[align::best_result(results)], dir / "topomap_best.svg");
    if (a.all) {
      for (const auto& r : results) render(r, dir / ("topomap_" + file_safe(r.label) + ".svg"));
    }
  }
  manifest.write(dir);
  out << "report: " << (a.all ? results.size() + 1 : 1) << " topomap(s) -> " << dir.string() << "\n";
  return kExitOk;
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string out, dtype = "float64";
  std::size_t words = 200, dims = kDefaultComponents, targets = 600, raw_dims = 0;
  double snr = 100.0;
  std::vector<std::size_t> signal_layers{3};
  bool recording = false;
};

int do_synth(const SynthArgs& a, const ConfigFlags& flags, std::ostream& out, std::ostream&) {
  const Config cfg = flags.resolve();
  const io::DType dtype = parse_dtype(a.dtype);
  synth::SynthSpec spec;
  spec.n_words = a.words;
  spec.dims = a.dims;
  spec.n_targets = a.targets;
  spec.snr = a.snr;
  spec.signal_layers = a.signal_layers;
  spec.seed = cfg.seed;
  spec.shape = shape_for(cfg);
  synth::validate_spec(spec);

  auto cmap = cfg.to_map();
  cmap["words"] = std::to_string(a.words);
  cmap["dims"] = std::to_string(a.dims);
  cmap["targets"] = std::to_string(a.targets);
  cmap["snr"] = report::format_number(a.snr);
  std::string layers;
  for (std::size_t l : a.signal_layers) layers += (layers.empty() ? "" : ",") + std::to_string(l);
  cmap["signal_layers"] = layers;
  cmap["raw_dims"] = std::to_string(a.raw_dims);
  cmap["recording"] = a.recording ? "true" : "false";
  cmap["dtype"] = a.dtype;
  RunManifest manifest("synth", cmap);

  const fs::path dir = a.out;
  fs::create_directories(dir / "reduced");
  synth::SynthDataset ds;
  {
    auto timer = manifest.time_stage("generate");
    ds = synth::gen_dataset(spec);
  }
  std::vector<std::size_t> ids(spec.n_words);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  {
    auto timer = manifest.time_stage("write");
    write_features(dir, ds.Y, spec.shape, ids, dtype);
    for (const auto& m : ds.stacks.models) write_stack_files(dir / "reduced", m.model, m.layers, ids);
    io::write_text(dir / "reduced" / kMethodFile, ds.stacks.method + "\n");
  }
  manifest.add_output(dir / kFeaturesFile);
  manifest.add_output(dir / kWordIndexFile);
  manifest.add_output(dir / "reduced");

  if (a.raw_dims > 0) {
    auto timer = manifest.time_stage("raw_stacks");
    fs::create_directories(dir / "raw");
    for (const auto& m : ds.stacks.models) {
      const auto raw = synth::gen_raw_stacks(ds.stacks, m.model, a.raw_dims, spec.seed + 1);
      for (std::size_t w = 0; w < raw.size(); ++w) io::write_tensor(stack_path(dir / "raw", m.model, w), raw[w].layers);
    }
    manifest.add_output(dir / "raw");
  }
  if (a.recording) {
    auto timer = manifest.time_stage("recording");
    synth::RecordingSpec rspec;
    rspec.n_words = spec.n_words;
    rspec.fs = cfg.fs;
    rspec.seed = spec.seed + 2;
    const auto session = synth::gen_recording(rspec);
    io::write_tensor(dir / "recording.ltns", session.recording.samples);
    std::string names;
    for (const auto& c : session.recording.channel_names) names += c + "\n";
    io::write_text(dir / "channels.txt", names);
    io::write_alignments(dir / "alignments.csv", session.alignments);
    for (const char* f : {"recording.ltns", "channels.txt", "alignments.csv"}) manifest.add_output(dir / f);
  }
  manifest.write(dir);
  out << "synth: " << spec.n_words << " words, " << spec.n_targets << " targets -> " << dir.string() << "\n";
  return kExitOk;
}

// ---- retrieve ----------------------------------------------------------------

struct RetrieveArgs {
  std::string model, stacks, features, out, ks = "1,10";
  bool all_words = false;
};

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::map<std::string, std::string> kv;
  for (const auto& line : io::read_lines(path)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

int do_retrieve(const RetrieveArgs& a, const ConfigFlags& flags, std::ostream& out, std::ostream&) {
  const Config cfg = flags.resolve();
  const fs::path mdir = a.model;
  for (const char* f : {"weights.ltns", "intercept.ltns", "alpha.ltns", kDesignFile}) require_exists(mdir / f);
  std::vector<std::size_t> ks;
  for (const auto& s : split_list(a.ks)) {
    const double v = std::stod(s);
    if (!(v >= 1.0)) throw ValidationError("k values must be >= 1");
    ks.push_back(static_cast<std::size_t>(v));
  }
  if (ks.empty()) throw ValidationError("no k values given");

  auto cmap = cfg.to_map();
  cmap["k"] = a.ks;
  cmap["candidates"] = a.all_words ? "all" : "test";
  RunManifest manifest("retrieve", cmap);
  manifest.add_input(mdir);

  align::RidgeModel model;
  model.W = io::to_matrix(io::read_tensor(mdir / "weights.ltns"));
  const io::Tensor it = io::read_tensor(mdir / "intercept.ltns");
  model.intercept = Eigen::Map<const Vector>(it.values.data(), static_cast<Eigen::Index>(it.values.size()));
  model.alpha = io::read_tensor(mdir / "alpha.ltns").values.at(0);
  const auto design = read_key_values(mdir / kDesignFile);
  if (!design.contains("strategy") || !design.contains("position")) {
    throw ValidationError((mdir / kDesignFile).string() + ": needs strategy and position");
  }

  const FeatureSet fset = load_features(a.features);
  const align::StackSet stacks = load_stack_set(a.stacks, fset.word_ids);
  manifest.add_input(fs::path(a.features) / kFeaturesFile);
  manifest.add_input(a.stacks);
  const auto order = align::default_order(stacks);
  const auto X = align::build_design(stacks, align::parse_strategy(design.at("strategy")),
                                     std::stoull(design.at("position")), order).X;
  if (static_cast<std::size_t>(X.cols()) != model.p() || static_cast<std::size_t>(fset.Y.cols()) != model.q()) {
    throw ValidationError("model dimensions do not match the stacks and features");
  }

  std::vector<std::size_t> rows;
  if (a.all_words) {
    for (std::size_t i = 0; i < fset.word_ids.size(); ++i) rows.push_back(i);
  } else {
    rows = align::split_train_test(fset.word_ids.size(), cfg.ratio, cfg.seed).test;
  }
  if (rows.size() < 2) throw ValidationError("retrieval needs at least two candidate words");
  RowMatrix candidates(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    candidates.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  }

  std::vector<std::size_t> ranks(rows.size());
  {
    auto timer = manifest.time_stage("rank");
    parallel_for(rows.size(), [&](std::size_t i) {
      const auto y = fset.Y.row(static_cast<Eigen::Index>(rows[i]));
      const std::vector<double> y_true(y.data(), y.data() + y.size());
      ranks[i] = align::contrastive_retrieval(model, candidates, y_true, i, 1).rank;
    });
  }

  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::ostringstream table;
  table << "k,accuracy,queries,candidates\n";
  for (std::size_t k : ks) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r <= k; });
    const double acc = static_cast<double>(hits) / static_cast<double>(ranks.size());
    table << k << ',' << report::format_number(acc) << ',' << ranks.size() << ',' << rows.size() << '\n';
    out << "retrieve: top-" << k << " accuracy " << report::format_number(acc) << "\n";
  }
  io::write_text(dir / "retrieval.csv", table.str());
  manifest.add_output(dir / "retrieval.csv");
  manifest.write(dir);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layer-wise alignment of speech and text model embeddings with EEG", "eegalign"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Filter, segment and featurize a recording");
  ConfigFlags pre_flags(pre_cmd);
  pre_cmd->add_option("--recording", pre.recording, "recording tensor (channels, samples)")->required();
  pre_cmd->add_option("--channels", pre.channels, "channel names, one per line")->required();
  pre_cmd->add_option("--alignments", pre.alignments, "word,onset_s,offset_s CSV")->required();
  pre_cmd->add_option("--drop", pre.drop, "comma-separated channels to remove")->capture_default_str();
  pre_cmd->add_option("--out", pre.out, "output directory")->required();

  ReduceArgs red;
  auto* red_cmd = app.add_subcommand("reduce", "Reduce raw layer stacks to k components per layer");
  ConfigFlags red_flags(red_cmd);
  red_cmd->add_option("--input", red.input, "directory of {model}_NNNNN.ltns raw stacks")->required();
  red_cmd->add_option("--method", red.method, "pca or ica")->capture_default_str();
  red_cmd->add_option("--k", red.k, "components per layer")->capture_default_str();
  red_cmd->add_option("--ica-tol", red.ica.tol, "FastICA convergence tolerance")->capture_default_str();
  red_cmd->add_option("--ica-max-iter", red.ica.max_iter, "FastICA iteration limit")->capture_default_str();
  red_cmd->add_option("--out", red.out, "output directory")->required();

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "Ridge sweep over layers or layer aggregates");
  ConfigFlags sw_flags(sw_cmd);
  sw_cmd->add_option("--stacks", sw.stacks, "directory of reduced stacks")->required();
  sw_cmd->add_option("--features", sw.features, "directory holding features.ltns")->required();
  sw_cmd->add_option("--strategy", sw.strategy, "single, concat or sum")->capture_default_str();
  auto* layer_opt = sw_cmd->add_option("--layer", sw.layer, "evaluate one layer, e.g. wav2vec2:3");
  sw_cmd->add_option("--upto", sw.upto, "evaluate one position of the sweep order")->excludes(layer_opt);
  sw_cmd->add_option("--format", sw.format, "csv, json or both")->capture_default_str();
  sw_cmd->add_flag("--save-model", sw.save_model, "store the best configuration's full model");
  sw_cmd->add_option("--out", sw.out, "output directory")->required();

  ReportArgs rp;
  auto* rp_cmd = app.add_subcommand("report", "Render channel-weight topomaps");
  ConfigFlags rp_flags(rp_cmd);
  rp_cmd->add_option("--results", rp.results, "results JSON from sweep")->required();
  rp_cmd->add_option("--montage", rp.montage, "montage CSV (name,x,y)");
  rp_cmd->add_option("--channel-names", rp.channels, "channel names, one per line");
  rp_cmd->add_flag("--all", rp.all, "one topomap per result row");
  rp_cmd->add_option("--out", rp.out, "output directory")->required();

  SynthArgs sy;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with planted layers");
  ConfigFlags sy_flags(sy_cmd);
  sy_cmd->add_option("--words", sy.words)->capture_default_str();
  sy_cmd->add_option("--dims", sy.dims, "components per layer")->capture_default_str();
  sy_cmd->add_option("--targets", sy.targets, "non-constant feature targets")->capture_default_str();
  sy_cmd->add_option("--snr", sy.snr, "signal to noise variance ratio (inf for none)")->capture_default_str();
  sy_cmd->add_option("--signal-layers", sy.signal_layers, "planted sweep positions")->delimiter(',');
  sy_cmd->add_option("--raw-dims", sy.raw_dims, "also write raw stacks of this width");
  sy_cmd->add_flag("--recording", sy.recording, "also write a continuous recording");
  sy_cmd->add_option("--dtype", sy.dtype, "feature tensor dtype")->capture_default_str();
  sy_cmd->add_option("--out", sy.out, "output directory")->required();

  RetrieveArgs rt;
  auto* rt_cmd = app.add_subcommand("retrieve", "Rank candidate words by predicted response");
  ConfigFlags rt_flags(rt_cmd);
  rt_cmd->add_option("--model", rt.model, "model directory from sweep --save-model")->required();
  rt_cmd->add_option("--stacks", rt.stacks, "directory of reduced stacks")->required();
  rt_cmd->add_option("--features", rt.features, "directory holding features.ltns")->required();
  rt_cmd->add_option("--k", rt.ks, "comma-separated cutoffs")->capture_default_str();
  rt_cmd->add_flag("--all-words", rt.all_words, "use every word instead of the test split");
  rt_cmd->add_option("--out", rt.out, "output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();  // already scoped to the parsed subcommand
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitValidation;
  }

  try {
    if (pre_cmd->parsed()) return do_preprocess(pre, pre_flags, out, err);
    if (red_cmd->parsed()) return do_reduce(red, red_flags, out, err);
    if (sw_cmd->parsed()) return do_sweep(sw, sw_flags, out, err);
    if (rp_cmd->parsed()) return do_report(rp, rp_flags, out, err);
    if (sy_cmd->parsed()) return do_synth(sy, sy_flags, out, err);
    if (rt_cmd->parsed()) return do_retrieve(rt, rt_flags, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: invalid value: " << e.what() << "\n";
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace eegalign::cli
