#include <doctest.h>

#include <filesystem>
#include <unistd.h>
#include <sstream>

#include "eegalign/cli.hpp"
#include "eegalign/io.hpp"
#include "eegalign/report.hpp"

using namespace eegalign;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("eegalign_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small synthetic dataset shared by the pipeline checks.
const fs::path& synth_dir() {
  static const fs::path dir = [] {
    const auto d = temp_dir("cli_synth");
    const auto r = run({"synth", "--words", "60", "--targets", "200", "--snr", "100", "--out", (d / "data").string()});
    REQUIRE(r.code == 0);
    return d / "data";
  }();
  return dir;
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  const auto r = run({"sweep", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(run({"sweep", "--stacks", "a", "--features", "b", "--out", "c", "--layer", "wav2vec2:0", "--upto", "3"}).code == 1);
}

TEST_CASE("missing inputs exit 2 and name the path") {
  const auto dir = temp_dir("cli_missing");
  const auto missing = (dir / "nowhere").string();
  const auto r = run({"sweep", "--stacks", missing, "--features", missing, "--out", (dir / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("nowhere") != std::string::npos);
}

TEST_CASE("bad values exit 1") {
  const auto dir = temp_dir("cli_bad");
  CHECK(run({"synth", "--words", "5", "--out", (dir / "a").string()}).code == 1);
  CHECK(run({"synth", "--dtype", "float16", "--out", (dir / "b").string()}).code == 1);
  CHECK(run({"sweep", "--stacks", (synth_dir() / "reduced").string(), "--features", synth_dir().string(),
             "--strategy", "median", "--out", (dir / "c").string()})
            .code == 1);
  CHECK(run({"synth", "--words", "20", "--seed", "x", "--out", (dir / "d").string()}).code == 1);
}

TEST_CASE("synth then single-layer sweep finds the planted layer") {
  const auto dir = temp_dir("cli_single");
  const auto r = run({"sweep", "--stacks", (synth_dir() / "reduced").string(), "--features", synth_dir().string(),
                      "--strategy", "single", "--format", "both", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto results = report::read_results_json(dir / "results_single.json");
  REQUIRE(results.size() == 26);
  const auto best = align::best_result(results);
  CHECK(results[best].label == "wav2vec2_layer_3_pca");
  CHECK(results[best].test_r2 >= 0.9);
  CHECK(io::read_lines(dir / "results_single.csv").size() == 27);
  CHECK(fs::exists(dir / "cv_single.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("sum up to position 0 reproduces single layer 0") {
  const auto a = temp_dir("cli_sum0");
  const auto b = temp_dir("cli_single0");
  const auto stacks = (synth_dir() / "reduced").string();
  const auto feats = synth_dir().string();
  REQUIRE(run({"sweep", "--stacks", stacks, "--features", feats, "--strategy", "sum", "--upto", "0", "--format",
               "json", "--out", a.string()})
              .code == 0);
  REQUIRE(run({"sweep", "--stacks", stacks, "--features", feats, "--strategy", "single", "--layer", "wav2vec2:0",
               "--format", "json", "--out", b.string()})
              .code == 0);
  const auto ra = report::read_results_json(a / "results_sum.json");
  const auto rb = report::read_results_json(b / "results_single.json");
  REQUIRE(ra.size() == 1);
  REQUIRE(rb.size() == 1);
  CHECK(ra[0].alpha == rb[0].alpha);
  CHECK(ra[0].train_r2 == rb[0].train_r2);
  CHECK(ra[0].test_r2 == rb[0].test_r2);
  CHECK(ra[0].test_corr == rb[0].test_corr);
  CHECK(ra[0].channel_scores == rb[0].channel_scores);
}

TEST_CASE("repeated runs produce identical result files") {
  const auto a = temp_dir("cli_det_a");
  const auto b = temp_dir("cli_det_b");
  for (const auto& d : {a, b}) {
    REQUIRE(run({"sweep", "--stacks", (synth_dir() / "reduced").string(), "--features", synth_dir().string(),
                 "--strategy", "concat", "--format", "both", "--save-model", "--out", d.string()})
                .code == 0);
  }
  for (const char* f : {"results_concat.csv", "results_concat.json", "cv_concat.csv"}) {
    CHECK(io::read_text(a / f) == io::read_text(b / f));
  }
  CHECK(io::read_text(a / "model_concat" / "weights.ltns") == io::read_text(b / "model_concat" / "weights.ltns"));

  const auto rep = temp_dir("cli_report");
  REQUIRE(run({"report", "--results", (a / "results_concat.json").string(), "--out", rep.string()}).code == 0);
  CHECK(io::read_text(rep / "topomap_best.svg").find("<circle") != std::string::npos);

  const auto ret = temp_dir("cli_retrieve");
  REQUIRE(run({"retrieve", "--model", (a / "model_concat").string(), "--stacks", (synth_dir() / "reduced").string(),
               "--features", synth_dir().string(), "--out", ret.string()})
              .code == 0);
  const auto lines = io::read_lines(ret / "retrieval.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "k,accuracy,queries,candidates");
}

TEST_CASE("config file values apply and flags override them") {
  const auto dir = temp_dir("cli_cfg");
  io::write_text(dir / "cfg.txt", "alphas=1,10\nfolds=3\n");
  const auto stacks = (synth_dir() / "reduced").string();
  const auto feats = synth_dir().string();
  REQUIRE(run({"sweep", "--stacks", stacks, "--features", feats, "--layer", "wav2vec2:3", "--config",
               (dir / "cfg.txt").string(), "--format", "json", "--out", (dir / "a").string()})
              .code == 0);
  const auto ra = report::read_results_json(dir / "a" / "results_single.json");
  CHECK((ra[0].alpha == 1.0 || ra[0].alpha == 10.0));
  REQUIRE(run({"sweep", "--stacks", stacks, "--features", feats, "--layer", "wav2vec2:3", "--config",
               (dir / "cfg.txt").string(), "--alphas", "1000", "--format", "json", "--out", (dir / "b").string()})
              .code == 0);
  CHECK(report::read_results_json(dir / "b" / "results_single.json")[0].alpha == 1000.0);
}
