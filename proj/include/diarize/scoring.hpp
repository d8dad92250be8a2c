#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "diarize/core.hpp"
#include "diarize/powerset.hpp"

namespace diarize {

/// Reference speech turns used to drive the oracle backends.
struct GroundTruthScript {
  std::string recording_id;
  std::vector<Segment> segments;  // may overlap across speakers, never within one
  double duration_s = 0.0;

  /// Distinct speaker labels, sorted.
  std::vector<std::string> speakers() const;
  /// Throws if a speaker's own segments overlap or a segment lies outside [0, duration].
  void validate() const;
};

/// Produces powerset log-probabilities for one chunk.
class FrameScorer {
 public:
  virtual ~FrameScorer() = default;
  /// Must return frames_for_samples(chunk.size()) rows of K log-softmax values.
  virtual FrameScores score(std::span<const float> chunk, std::size_t chunk_index, TimeSpan chunk_span) const = 0;
};

struct OracleScorerConfig {
  double p_correct = 0.95;
  double label_noise = 0.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// The local view of a chunk: which global speaker sits in which slot, and
/// their truncated frame-level activity.
struct LocalSlots {
  std::vector<std::string> slot_speaker;  // size <= S, slot order
  MultilabelActivity activity;            // frames x S, at most O ones per row
};

/// Maps speakers active inside the chunk to slots in order of first activity
/// (keeping the S longest-active), rasterised at frame centres. Frames with more
/// than O speakers keep the O with the most activity in the chunk.
LocalSlots assign_local_slots(const GroundTruthScript& script, double chunk_start_s, std::int64_t num_frames,
                              int num_speakers, int max_overlap, const FrameRate& fr = {});

/// Synthetic stand-in for the segmentation network, driven by the script.
FrameScores oracle_score(const GroundTruthScript& script, TimeSpan chunk_span, std::size_t chunk_index,
                         const PowersetCodec& codec, const OracleScorerConfig& cfg, const FrameRate& fr = {});

class OracleScorer final : public FrameScorer {
 public:
  OracleScorer(GroundTruthScript script, PowersetCodec codec, OracleScorerConfig cfg, FrameRate fr = {});
  FrameScores score(std::span<const float> chunk, std::size_t chunk_index, TimeSpan chunk_span) const override;

 private:
  GroundTruthScript script_;
  PowersetCodec codec_;
  OracleScorerConfig cfg_;
  FrameRate fr_;
};

/// Replays precomputed scores, one matrix per chunk index.
class ImportedScorer final : public FrameScorer {
 public:
  explicit ImportedScorer(std::vector<FrameScores> scores);
  FrameScores score(std::span<const float> chunk, std::size_t chunk_index, TimeSpan chunk_span) const override;
  std::size_t size() const { return scores_.size(); }

 private:
  std::vector<FrameScores> scores_;
};

// Score file layout (text):
//   diarize-scores 1
//   chunks <N> frames <F> classes <K>
//   chunk <c>            (repeated N times, c = 0..N-1)
//   <K floats>           (F lines per chunk, columns in powerset class order)
void write_scores(std::ostream& os, std::span<const FrameScores> scores);
void write_scores(const std::filesystem::path& path, std::span<const FrameScores> scores);

/// Zero expected_* values skip that check. Rows whose logsumexp deviates from 0 by
/// more than 1e-3 are renormalised and reported through `warnings`.
std::vector<FrameScores> import_scores(std::istream& is, std::size_t expected_chunks, std::size_t expected_frames,
                                       std::size_t num_classes, std::vector<std::string>* warnings = nullptr);
std::vector<FrameScores> import_scores(const std::filesystem::path& path, std::size_t expected_chunks,
                                       std::size_t expected_frames, std::size_t num_classes,
                                       std::vector<std::string>* warnings = nullptr);

double logsumexp(std::span<const double> row);

}  // namespace diarize
