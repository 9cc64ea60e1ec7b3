#include <doctest.h>

#include "eegalign/config.hpp"
#include "eegalign/error.hpp"

using namespace eegalign;

TEST_CASE("config defaults") {
  const Config c = parse_config("");
  CHECK(c.fs == 500.0);
  CHECK(c.notch_hz == 60.0);
  CHECK(c.hp_hz == 2.0);
  CHECK(c.hp_order == 4);
  CHECK(c.n_frames == 159);
  CHECK(c.bands.size() == 9);
  CHECK(c.alphas.empty());
  CHECK(c.folds == 5);
  CHECK(c.ratio == 0.8);
}

TEST_CASE("config parsing with comments and whitespace") {
  const Config c = parse_config(
      "# pipeline\n"
      "fs = 250   # downsampled\n"
      "\n"
      "seed=42\n"
      "  alphas = 0.1, 1,10\n"
      "bands=1-4, 4-8,8-13\n"
      "ratio=0.75\n"
      "folds=3\n");
  CHECK(c.fs == 250.0);
  CHECK(c.seed == 42);
  CHECK(c.alphas == std::vector<double>{0.1, 1.0, 10.0});
  REQUIRE(c.bands.size() == 3);
  CHECK(c.bands[1].lo_hz == 4.0);
  CHECK(c.bands[1].hi_hz == 8.0);
  CHECK(c.ratio == 0.75);
  CHECK(c.folds == 3);
}

TEST_CASE("config rejects bad lines, keys and values") {
  CHECK_THROWS_AS(parse_config("fs\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("colour=red\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("fs=abc\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("fs=-5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("seed=1.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("bands=8-4\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("bands=4\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("alphas=\n"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/cfg.txt"), IoError);
}

TEST_CASE("config map round-trips through set") {
  Config a = parse_config("fs=250\nalphas=0.5,2\nbands=1-3,3-30\nseed=7\n");
  Config b;
  for (const auto& [k, v] : a.to_map()) {
    if (k == "alphas" && v == "default") continue;
    b.set(k, v);
  }
  CHECK(b.to_map() == a.to_map());
}
