#pragma once

#include <span>
#include <string>
#include <vector>

#include "diarize/aggregate.hpp"
#include "diarize/cluster.hpp"
#include "diarize/config.hpp"
#include "diarize/core.hpp"

namespace diarize {

/// Per chunk: frames x n_clusters activity of the global speakers.
using ClusteredSegmentation = std::vector<Matrix<double>>;

/// s'[c, t, k] = max over local slots l with cluster(c, l) = k of s[c, t, l]; 0 when none.
ClusteredSegmentation reconstruct(std::span<const Matrix<double>> seg, const ClusterAssignment& assignment);
ClusteredSegmentation reconstruct(std::span<const MultilabelActivity> seg, const ClusterAssignment& assignment);

/// Active frame runs [first, last) of one score column.
struct FrameRun {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Hysteresis thresholding: a run opens when the score exceeds `onset` and
/// closes at the first frame whose score falls below `offset`.
std::vector<FrameRun> binarize(std::span<const double> scores, std::size_t stride, std::size_t column, double onset,
                               double offset);

/// Turns continuous per-frame global activity into labelled segments. Run
/// [a, b) spans frame_time(a) to frame_time(b). Labels SPEAKER_00, SPEAKER_01, ...
/// follow the order of each speaker's first segment.
Annotation binarize_to_annotation(const AggregatedActivity& agg, const PipelineConfig& cfg,
                                  const std::string& recording_id);

/// Second overlap-add over chunks, then binarize and label.
Annotation to_diarization(const ClusteredSegmentation& cs, std::span<const std::size_t> chunk_start_frames,
                          std::size_t total_frames, const PipelineConfig& cfg, const std::string& recording_id,
                          AggregatedActivity* global_activity = nullptr);

/// "SPEAKER_" followed by a zero-padded two-digit index.
std::string speaker_name(std::size_t index);

}  // namespace diarize
