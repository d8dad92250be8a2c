#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diarize/config.hpp"
#include "diarize/core.hpp"

namespace diarize {

/// Mono waveform with samples in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate_hz = 16000;
  std::string recording_id;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// Overlapping fixed-length windows over an AudioBuffer.
struct ChunkBatch {
  Matrix<float> chunks;  // n_chunks x window_samples, zero-padded tail
  std::int64_t window_samples = 0;
  std::int64_t hop_samples = 0;
  std::vector<std::int64_t> chunk_start_samples;
  std::int64_t real_samples_in_last = 0;
  std::int64_t total_samples = 0;
  int sample_rate_hz = 16000;

  std::size_t size() const { return chunk_start_samples.size(); }
  double chunk_start_s(std::size_t i) const {
    return static_cast<double>(chunk_start_samples[i]) / sample_rate_hz;
  }
  TimeSpan chunk_span(std::size_t i) const {
    return {chunk_start_s(i), static_cast<double>(chunk_start_samples[i] + window_samples) / sample_rate_hz};
  }
};

/// Reads a RIFF/WAVE file holding 16-bit integer or 32-bit float PCM.
/// Multi-channel input is averaged to mono. The recording id defaults to the file stem.
AudioBuffer load_wav(const std::filesystem::path& path);

/// Writes 16-bit mono PCM. Samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioBuffer& buf);

/// Chunk count for T samples: the complete windows, plus one zero-padded window
/// when they leave a tail uncovered (or when T < W).
std::int64_t chunk_count(std::int64_t total_samples, std::int64_t window, std::int64_t hop);

/// Slices the buffer into windows of seg_duration_s with step segmentation_step * W.
ChunkBatch sliding_window(const AudioBuffer& buf, const PipelineConfig& cfg);

/// Same geometry as sliding_window without materialising samples (chunks matrix left empty).
ChunkBatch chunk_layout(std::int64_t total_samples, const PipelineConfig& cfg);

}  // namespace diarize
