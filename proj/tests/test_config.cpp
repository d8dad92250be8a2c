#include <doctest.h>

#include <fstream>

#include "diarize/config.hpp"
#include "support.hpp"

using namespace diarize;

TEST_CASE("default configuration literals") {
  const PipelineConfig c;
  CHECK(c.sample_rate_hz == 16000);
  CHECK(c.seg_duration_s == 16.0);
  CHECK(c.segmentation_step == 0.1);
  CHECK(c.max_local_speakers == 4);
  CHECK(c.max_overlap == 2);
  CHECK(c.median_kernel_frames == 11);
  CHECK(c.binarize_onset == 0.5);
  CHECK(c.binarize_offset == 0.5);
  CHECK(c.max_speakers == 20);
  CHECK(c.ahc_threshold == 0.6);
  CHECK(c.vbx_max_iters == 20);
  CHECK(c.vbx_fa == 0.07);
  CHECK(c.vbx_fb == 0.8);
  CHECK(c.lda_dim == 128);
  CHECK(c.embedding_dim == 256);
  CHECK(c.min_num_frames == 1);
  CHECK(c.vbx_loop_p == 0.9);
  CHECK(c.window_samples() == 256000);
  CHECK(c.hop_samples() == 25600);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config text parsing") {
  const PipelineConfig c = parse_config(
      "# tuned\n"
      "ahc_threshold = 0.8   # stricter\n"
      "\n"
      "  vbx_max_iters=5\n");
  CHECK(c.ahc_threshold == 0.8);
  CHECK(c.vbx_max_iters == 5);
  CHECK(c.lda_dim == 128);

  CHECK_THROWS_AS(parse_config("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("vbx_max_iters = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("vbx_fa = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just words\n"), ConfigError);
}

TEST_CASE("format_config round-trips every key") {
  PipelineConfig c;
  c.vbx_fa = 0.123;
  c.median_kernel_frames = 7;
  const PipelineConfig back = parse_config(format_config(c));
  for (const auto& key : config_keys()) CHECK(back.get(key) == c.get(key));
  CHECK(config_keys().size() == 17);
}

TEST_CASE("validation rejects inconsistent settings") {
  PipelineConfig c;
  c.median_kernel_frames = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_overlap = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.binarize_offset = 0.7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.lda_dim = 300;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.vbx_loop_p = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config files") {
  testing::TempDir dir;
  {
    std::ofstream os(dir / "c.cfg");
    os << "max_speakers = 6\n";
  }
  CHECK(load_config_file(dir / "c.cfg").max_speakers == 6);
  try {
    load_config_file(dir / "missing.cfg");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("missing.cfg") != std::string::npos);
  }
}
