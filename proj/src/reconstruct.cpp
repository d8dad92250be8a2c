#include "diarize/reconstruct.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace diarize {

ClusteredSegmentation reconstruct(std::span<const Matrix<double>> seg, const ClusterAssignment& assignment) {
  if (seg.size() != assignment.labels.rows()) throw ShapeError("reconstruct: assignment and activity differ in chunks");
  const auto clusters = static_cast<std::size_t>(std::max(assignment.n_clusters, 0));
  ClusteredSegmentation out;
  out.reserve(seg.size());
  for (std::size_t c = 0; c < seg.size(); ++c) {
    if (seg[c].cols() != assignment.labels.cols()) throw ShapeError("reconstruct: slot count mismatch");
    Matrix<double> m(seg[c].rows(), clusters, 0.0);
    for (std::size_t slot = 0; slot < seg[c].cols(); ++slot) {
      const int k = assignment.labels(c, slot);
      if (k < 0) continue;
      if (static_cast<std::size_t>(k) >= clusters) throw ShapeError("reconstruct: cluster id out of range");
      for (std::size_t t = 0; t < seg[c].rows(); ++t) {
        m(t, static_cast<std::size_t>(k)) = std::max(m(t, static_cast<std::size_t>(k)), seg[c](t, slot));
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

ClusteredSegmentation reconstruct(std::span<const MultilabelActivity> seg, const ClusterAssignment& assignment) {
  std::vector<Matrix<double>> real;
  real.reserve(seg.size());
  for (const auto& m : seg) real.push_back(matrix_cast<double>(m));
  return reconstruct(std::span<const Matrix<double>>(real), assignment);
}

std::vector<FrameRun> binarize(std::span<const double> scores, std::size_t stride, std::size_t column, double onset,
                               double offset) {
  std::vector<FrameRun> runs;
  const std::size_t frames = stride == 0 ? 0 : scores.size() / stride;
  bool active = false;
  std::size_t start = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double v = scores[t * stride + column];
    if (!active && v > onset) {
      active = true;
      start = t;
    } else if (active && v < offset) {
      runs.push_back({start, t});
      active = false;
    }
  }
  if (active) runs.push_back({start, frames});
  return runs;
}

std::string speaker_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "SPEAKER_%02zu", index);
  return buf;
}

Annotation binarize_to_annotation(const AggregatedActivity& agg, const PipelineConfig& cfg,
                                  const std::string& recording_id) {
  const std::size_t speakers = agg.scores.cols();
  std::vector<std::vector<FrameRun>> runs(speakers);
  for (std::size_t k = 0; k < speakers; ++k) {
    runs[k] = binarize(agg.scores.flat(), speakers, k, cfg.binarize_onset, cfg.binarize_offset);
  }
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < speakers; ++k) {
    if (!runs[k].empty()) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return runs[a].front().first < runs[b].front().first; });

  Annotation ann(recording_id);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::string label = speaker_name(rank);
    for (const FrameRun& r : runs[order[rank]]) ann.add(TimeSpan(agg.frame_time(r.first), agg.frame_time(r.last)), label);
  }
  return ann;
}

Annotation to_diarization(const ClusteredSegmentation& cs, std::span<const std::size_t> chunk_start_frames,
                          std::size_t total_frames, const PipelineConfig& cfg, const std::string& recording_id,
                          AggregatedActivity* global_activity) {
  if (cs.empty()) throw ShapeError("to_diarization: empty clustered segmentation");
  AggregatedActivity agg = overlap_add(std::span<const Matrix<double>>(cs), chunk_start_frames, total_frames,
                                       cfg.frame_rate());
  Annotation ann = binarize_to_annotation(agg, cfg, recording_id);
  if (global_activity != nullptr) *global_activity = std::move(agg);
  return ann;
}

}  // namespace diarize
