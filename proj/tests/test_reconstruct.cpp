#include <doctest.h>

#include <map>

#include "diarize/reconstruct.hpp"
#include "diarize/scoring.hpp"

using namespace diarize;

TEST_CASE("reconstruction relabels slots and takes the max") {
  Matrix<double> seg(3, 3, 0.0);
  for (std::size_t t = 0; t < 3; ++t) {
    seg(t, 0) = 0.3;
    seg(t, 1) = 0.8;
    seg(t, 2) = 0.9;
  }
  ClusterAssignment a;
  a.labels = Matrix<int>(1, 3, 0);
  a.labels(0, 0) = 1;
  a.labels(0, 1) = 1;
  a.labels(0, 2) = ClusterAssignment::kInactive;
  a.n_clusters = 2;
  const std::vector<Matrix<double>> chunks = {seg};
  const ClusteredSegmentation cs = reconstruct(std::span<const Matrix<double>>(chunks), a);
  REQUIRE(cs.size() == 1);
  REQUIRE(cs[0].cols() == 2);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(cs[0](t, 0) == 0.0);
    CHECK(cs[0](t, 1) == 0.8);
  }
  a.labels(0, 2) = 5;
  CHECK_THROWS_AS(reconstruct(std::span<const Matrix<double>>(chunks), a), ShapeError);
}

TEST_CASE("binarize with hysteresis") {
  const std::vector<double> ones(50, 1.0);
  const auto all = binarize(ones, 1, 0, 0.5, 0.5);
  REQUIRE(all.size() == 1);
  CHECK(all[0].first == 0);
  CHECK(all[0].last == 50);

  const std::vector<double> wobble = {0.0, 0.7, 0.45, 0.6, 0.35, 0.2, 0.8, 0.8};
  const auto h = binarize(wobble, 1, 0, 0.5, 0.4);
  REQUIRE(h.size() == 2);
  CHECK(h[0].first == 1);
  CHECK(h[0].last == 4);
  CHECK(h[1].first == 6);
  CHECK(h[1].last == 8);
  CHECK(binarize(wobble, 1, 0, 0.5, 0.5).size() == 3);

  // Strided access picks one column of a row-major matrix.
  const std::vector<double> two_cols = {1, 0, 1, 0, 0, 1};
  const auto col1 = binarize(two_cols, 2, 1, 0.5, 0.5);
  REQUIRE(col1.size() == 1);
  CHECK(col1[0].first == 2);
}

TEST_CASE("binarized annotation uses frame times and first-segment naming") {
  AggregatedActivity agg;
  agg.scores = Matrix<double>(400, 2, 0.0);
  agg.coverage.assign(400, 1);
  for (std::size_t t = 100; t < 200; ++t) agg.scores(t, 1) = 0.6;
  for (std::size_t t = 250; t < 300; ++t) agg.scores(t, 0) = 0.9;
  const Annotation ann = binarize_to_annotation(agg, PipelineConfig{}, "rec");
  REQUIRE(ann.size() == 2);
  CHECK(ann.segments()[0].speaker == "SPEAKER_00");
  CHECK(ann.segments()[0].span.start_s == doctest::Approx(frame_to_time(100)));
  CHECK(ann.segments()[0].span.end_s == doctest::Approx(frame_to_time(200)));
  CHECK(ann.segments()[1].speaker == "SPEAKER_01");
  CHECK(ann.recording_id() == "rec");
  CHECK(speaker_name(12) == "SPEAKER_12");
}

TEST_CASE("chunk-local slots map back to the script raster") {
  GroundTruthScript script;
  script.recording_id = "r";
  script.segments = {{TimeSpan(0.0, 10.0), "A"}, {TimeSpan(8.0, 25.0), "B"}, {TimeSpan(12.0, 14.0), "C"},
                     {TimeSpan(26.0, 29.5), "A"}};
  script.duration_s = 30.0;
  const PipelineConfig cfg;
  const ChunkBatch batch = chunk_layout(480000, cfg);
  const FrameLayout layout = frame_layout(batch, cfg.frame_rate());
  const std::map<std::string, int> global = {{"A", 0}, {"B", 1}, {"C", 2}};

  std::vector<MultilabelActivity> local;
  ClusterAssignment a;
  a.labels = Matrix<int>(batch.size(), 4, ClusterAssignment::kInactive);
  a.n_clusters = 3;
  for (std::size_t c = 0; c < batch.size(); ++c) {
    const LocalSlots slots = assign_local_slots(script, batch.chunk_start_s(c), 799, 4, 2);
    for (std::size_t s = 0; s < slots.slot_speaker.size(); ++s) a.labels(c, s) = global.at(slots.slot_speaker[s]);
    local.push_back(slots.activity);
  }
  AggregatedActivity activity;
  const Annotation ann = to_diarization(reconstruct(std::span<const MultilabelActivity>(local), a),
                                        layout.chunk_start_frames, layout.total_frames, cfg, "r", &activity);
  REQUIRE(activity.scores.cols() == 3);
  for (std::size_t f = 0; f < layout.total_frames; ++f) {
    const double t = frame_to_time(static_cast<std::int64_t>(f));
    for (const auto& [label, k] : global) {
      bool on = false;
      for (const auto& seg : script.segments) on = on || (seg.speaker == label && seg.span.contains(t));
      CHECK(activity.scores(f, static_cast<std::size_t>(k)) == (on ? 1.0 : 0.0));
    }
  }
  CHECK(ann.labels() == std::vector<std::string>{"SPEAKER_00", "SPEAKER_01", "SPEAKER_02"});
  CHECK(ann.size() == 4);
}
