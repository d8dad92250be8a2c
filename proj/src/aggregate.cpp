#include "diarize/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diarize/kernels.hpp"

namespace diarize {
namespace {

std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t period = 2 * n;
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

template <typename T>
Matrix<T> median_filter_impl(const Matrix<T>& in, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("median kernel must be an odd integer >= 1");
  if (kernel == 1 || in.rows() == 0) return in;
  const auto n = static_cast<std::ptrdiff_t>(in.rows());
  const std::ptrdiff_t half = kernel / 2;
  Matrix<T> out(in.rows(), in.cols());
  std::vector<T> window(static_cast<std::size_t>(kernel));
  for (std::size_t c = 0; c < in.cols(); ++c) {
    for (std::ptrdiff_t t = 0; t < n; ++t) {
      for (std::ptrdiff_t j = -half; j <= half; ++j) {
        window[static_cast<std::size_t>(j + half)] = in(reflect_index(t + j, n), c);
      }
      auto mid = window.begin() + half;
      std::nth_element(window.begin(), mid, window.end());
      out(static_cast<std::size_t>(t), c) = *mid;
    }
  }
  return out;
}

}  // namespace

FrameLayout frame_layout(const ChunkBatch& batch, const FrameRate& fr) {
  if (batch.size() == 0) throw ShapeError("frame layout of an empty chunk batch");
  FrameLayout layout;
  layout.frames_per_chunk = static_cast<std::size_t>(frames_for_samples(batch.window_samples, fr));
  const auto hop = static_cast<double>(fr.conv_hop);
  for (std::int64_t start : batch.chunk_start_samples) {
    layout.chunk_start_frames.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(start) / hop)));
  }
  const double end = static_cast<double>(batch.chunk_start_samples.back() + batch.window_samples);
  layout.total_frames = static_cast<std::size_t>(std::llround(end / hop)) + 1;
  layout.total_frames = std::max(layout.total_frames, layout.chunk_start_frames.back() + layout.frames_per_chunk);
  return layout;
}

AggregatedActivity overlap_add(std::span<const Matrix<double>> per_chunk, std::span<const std::size_t> chunk_starts,
                               std::size_t total_frames, const FrameRate& fr) {
  if (per_chunk.empty()) throw ShapeError("overlap-add needs at least one chunk");
  if (per_chunk.size() != chunk_starts.size()) throw ShapeError("overlap-add: chunk and start counts differ");
  const std::size_t frames = per_chunk.front().rows();
  const std::size_t cols = per_chunk.front().cols();
  for (std::size_t c = 0; c < per_chunk.size(); ++c) {
    if (per_chunk[c].rows() != frames || per_chunk[c].cols() != cols)
      throw ShapeError("overlap-add: chunk " + std::to_string(c) + " has a different shape");
    if (c > 0 && chunk_starts[c] <= chunk_starts[c - 1])
      throw ShapeError("overlap-add: chunk starts must be strictly increasing");
  }

  AggregatedActivity agg;
  agg.frame_rate = fr;
  agg.scores = Matrix<double>(total_frames, cols, 0.0);
  agg.coverage.assign(total_frames, 0);
  for (std::size_t c = 0; c < per_chunk.size(); ++c) {
    const std::size_t start = chunk_starts[c];
    if (start >= total_frames) continue;
    const std::size_t n = std::min(frames, total_frames - start);
    kernels::axpy(1.0, per_chunk[c].flat().first(n * cols), agg.scores.flat().subspan(start * cols, n * cols));
    for (std::size_t t = start; t < start + n; ++t) ++agg.coverage[t];
  }
  for (std::size_t t = 0; t < total_frames; ++t) {
    if (agg.coverage[t] == 0) continue;
    const double inv = 1.0 / agg.coverage[t];
    for (double& v : agg.scores.row(t)) v *= inv;
  }
  return agg;
}

AggregatedActivity overlap_add(std::span<const MultilabelActivity> per_chunk, std::span<const std::size_t> chunk_starts,
                               std::size_t total_frames, const FrameRate& fr) {
  std::vector<Matrix<double>> as_real;
  as_real.reserve(per_chunk.size());
  for (const auto& m : per_chunk) as_real.push_back(matrix_cast<double>(m));
  return overlap_add(std::span<const Matrix<double>>(as_real), chunk_starts, total_frames, fr);
}

Matrix<double> median_filter_time(const Matrix<double>& activity, int kernel) {
  return median_filter_impl(activity, kernel);
}

MultilabelActivity median_filter_time(const MultilabelActivity& activity, int kernel) {
  return median_filter_impl(activity, kernel);
}

std::vector<std::int32_t> speaker_count(const AggregatedActivity& agg, const PipelineConfig& cfg) {
  std::vector<std::int32_t> count(agg.total_frames(), 0);
  for (std::size_t t = 0; t < agg.total_frames(); ++t) {
    const double total = kernels::sum(agg.scores.row(t));
    // Banker's rounding, as numpy's rint.
    const auto rounded = static_cast<std::int32_t>(std::nearbyint(total));
    count[t] = std::clamp(rounded, 0, cfg.max_speakers);
  }
  return count;
}

}  // namespace diarize
