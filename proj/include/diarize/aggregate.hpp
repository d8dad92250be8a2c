#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diarize/audio.hpp"
#include "diarize/config.hpp"
#include "diarize/core.hpp"
#include "diarize/powerset.hpp"

namespace diarize {

/// Overlap-add average of per-chunk frame values on the recording-level frame grid.
struct AggregatedActivity {
  Matrix<double> scores;             // total_frames x columns
  std::vector<std::int32_t> coverage;  // chunks covering each frame
  FrameRate frame_rate;
  double origin_s = 0.0;  // time of frame 0's receptive-field start

  std::size_t total_frames() const { return scores.rows(); }
  double frame_time(std::size_t frame) const {
    return origin_s + frame_to_time(static_cast<std::int64_t>(frame), frame_rate);
  }
};

/// Output-grid placement of a chunk batch.
struct FrameLayout {
  std::vector<std::size_t> chunk_start_frames;  // round(start_samples / hop)
  std::size_t frames_per_chunk = 0;
  std::size_t total_frames = 0;  // frames with centres up to the end of the last chunk
};

/// chunk_start_frames[i] = round(start_i / hop); total = round((start_last + W) / hop) + 1.
FrameLayout frame_layout(const ChunkBatch& batch, const FrameRate& fr);

/// Mean over covering chunks at each output frame; frames no chunk covers are 0.
AggregatedActivity overlap_add(std::span<const Matrix<double>> per_chunk, std::span<const std::size_t> chunk_starts,
                               std::size_t total_frames, const FrameRate& fr = {});
AggregatedActivity overlap_add(std::span<const MultilabelActivity> per_chunk, std::span<const std::size_t> chunk_starts,
                               std::size_t total_frames, const FrameRate& fr = {});

/// Sliding median of odd width along rows, independently per column, with
/// reflect padding (d c b a | a b c d | d c b a).
Matrix<double> median_filter_time(const Matrix<double>& activity, int kernel);
MultilabelActivity median_filter_time(const MultilabelActivity& activity, int kernel);

/// Instantaneous speaker count: round(sum of aggregated columns), clipped to max_speakers.
std::vector<std::int32_t> speaker_count(const AggregatedActivity& agg, const PipelineConfig& cfg);

}  // namespace diarize
