#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "diarize/scoring.hpp"

using namespace diarize;

namespace {

GroundTruthScript script_of(std::vector<Segment> segs, double duration) {
  GroundTruthScript s;
  s.recording_id = "t";
  s.segments = std::move(segs);
  s.duration_s = duration;
  return s;
}

int argmax_at(const FrameScores& s, std::size_t f) { return argmax_class(s.row(f)); }

}  // namespace

TEST_CASE("oracle: one speaker covering the chunk") {
  const auto script = script_of({{TimeSpan(0.0, 20.0), "A"}}, 20.0);
  OracleScorerConfig cfg;
  cfg.p_correct = 1.0;
  const FrameScores s = oracle_score(script, TimeSpan(0.0, 16.0), 0, build_codec(4, 2), cfg);
  REQUIRE(s.rows() == 799);
  REQUIRE(s.cols() == 11);
  for (std::size_t f = 0; f < s.rows(); ++f) CHECK(argmax_at(s, f) == 1);
  for (double v : s.flat()) CHECK(std::isfinite(v));
}

TEST_CASE("oracle: empty script gives silence") {
  const auto script = script_of({}, 20.0);
  const FrameScores s = oracle_score(script, TimeSpan(0.0, 16.0), 0, build_codec(4, 2), {});
  for (std::size_t f = 0; f < s.rows(); ++f) CHECK(argmax_at(s, f) == 0);
}

TEST_CASE("oracle: overlapping pair maps to the first two slots") {
  const auto script = script_of({{TimeSpan(0.0, 20.0), "A"}, {TimeSpan(1.1, 20.0), "B"}}, 20.0);
  const FrameScores s = oracle_score(script, TimeSpan(1.0, 17.0), 3, build_codec(4, 2), {});
  CHECK(argmax_at(s, 0) == 1);
  for (std::size_t f = 10; f < s.rows(); ++f) CHECK(argmax_at(s, f) == 5);
  // Rows are normalised log-probabilities.
  for (std::size_t f = 0; f < s.rows(); ++f) CHECK(logsumexp(s.row(f)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("slot assignment follows first activity and truncates overlap") {
  const auto script = script_of(
      {{TimeSpan(5.0, 9.0), "Z"}, {TimeSpan(2.0, 9.0), "Y"}, {TimeSpan(1.0, 6.0), "X"}, {TimeSpan(4.0, 4.5), "W"}},
      10.0);
  const LocalSlots slots = assign_local_slots(script, 0.0, 799, 4, 2);
  CHECK(slots.slot_speaker == std::vector<std::string>{"X", "Y", "W", "Z"});
  // Frames near 5.5 s hold X, Y and Z; Z has the least chunk activity and is cut.
  const auto f55 = static_cast<std::size_t>(time_to_frame(5.5));
  CHECK(slots.activity(f55, 0) == 1);
  CHECK(slots.activity(f55, 1) == 1);
  CHECK(slots.activity(f55, 3) == 0);
  for (std::size_t f = 0; f < slots.activity.rows(); ++f) {
    int n = 0;
    for (std::size_t s = 0; s < 4; ++s) n += slots.activity(f, s);
    CHECK(n <= 2);
  }
  // Only S slots survive; the least active speaker is dropped.
  const LocalSlots two = assign_local_slots(script, 0.0, 799, 2, 2);
  CHECK(two.slot_speaker == std::vector<std::string>{"X", "Y"});
}

TEST_CASE("label noise is seeded") {
  const auto script = script_of({{TimeSpan(0.0, 20.0), "A"}}, 20.0);
  OracleScorerConfig cfg;
  cfg.label_noise = 0.5;
  cfg.rng_seed = 11;
  const auto codec = build_codec(4, 2);
  const FrameScores a = oracle_score(script, TimeSpan(0.0, 16.0), 2, codec, cfg);
  const FrameScores b = oracle_score(script, TimeSpan(0.0, 16.0), 2, codec, cfg);
  CHECK(a == b);
  int flipped = 0;
  for (std::size_t f = 0; f < a.rows(); ++f) flipped += argmax_at(a, f) != 1;
  CHECK(flipped > 200);
  CHECK(flipped < 600);
  cfg.label_noise = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("score files round-trip") {
  const auto script = script_of({{TimeSpan(0.0, 9.0), "A"}, {TimeSpan(6.0, 30.0), "B"}}, 30.0);
  const auto codec = build_codec(4, 2);
  std::vector<FrameScores> scores;
  for (std::size_t c = 0; c < 10; ++c) {
    scores.push_back(oracle_score(script, TimeSpan(1.6 * static_cast<double>(c), 1.6 * static_cast<double>(c) + 16.0), c,
                                  codec, {}));
  }
  std::stringstream ss;
  write_scores(ss, scores);
  const auto back = import_scores(ss, 10, 799, 11);
  REQUIRE(back.size() == 10);
  for (std::size_t c = 0; c < 10; ++c) CHECK(back[c] == scores[c]);
}

TEST_CASE("score file errors and renormalisation") {
  const auto make = [](const std::string& row) {
    return "diarize-scores 1\nchunks 1 frames 2 classes 3\nchunk 0\n0 0 0\n" + row + "\n";
  };
  {
    std::stringstream ss(make("0 nan 0"));
    try {
      import_scores(ss, 1, 2, 3);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("chunk 0") != std::string::npos);
      CHECK(msg.find("frame 1") != std::string::npos);
    }
  }
  {
    std::stringstream ss(make("0 0 0"));
    std::vector<std::string> warnings;
    const auto s = import_scores(ss, 1, 2, 3, &warnings);
    CHECK_FALSE(warnings.empty());
    for (double v : s[0].flat()) CHECK(v == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
  }
  {
    std::stringstream ss(make("0 0 0"));
    CHECK_THROWS_AS(import_scores(ss, 2, 2, 3), ShapeError);
  }
  {
    std::stringstream ss("diarize-scores 1\nchunks 1 frames 2 classes 3\nchunk 0\n0 0 0\n");
    CHECK_THROWS_AS(import_scores(ss, 1, 2, 3), ParseError);
  }
}

TEST_CASE("imported scorer checks chunk geometry") {
  ImportedScorer scorer({FrameScores(799, 11, -std::log(11.0))});
  std::vector<float> window(256000, 0.0F);
  CHECK(scorer.score(window, 0, TimeSpan(0.0, 16.0)).rows() == 799);
  CHECK_THROWS_AS(scorer.score(window, 1, TimeSpan(1.6, 17.6)), ShapeError);
  std::vector<float> shorter(128000, 0.0F);
  CHECK_THROWS_AS(scorer.score(shorter, 0, TimeSpan(0.0, 8.0)), ShapeError);
}

TEST_CASE("logsumexp is stable") {
  const std::vector<double> big = {1000.0, 1000.0};
  CHECK(logsumexp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> tiny = {-1000.0, -std::numeric_limits<double>::infinity()};
  CHECK(logsumexp(tiny) == doctest::Approx(-1000.0));
}

TEST_CASE("script validation") {
  auto bad = script_of({{TimeSpan(0.0, 2.0), "A"}, {TimeSpan(1.0, 3.0), "A"}}, 5.0);
  CHECK_THROWS(bad.validate());
  auto late = script_of({{TimeSpan(0.0, 6.0), "A"}}, 5.0);
  CHECK_THROWS(late.validate());
  auto ok = script_of({{TimeSpan(0.0, 2.0), "B"}, {TimeSpan(1.0, 3.0), "A"}}, 5.0);
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.speakers() == std::vector<std::string>{"A", "B"});
}
