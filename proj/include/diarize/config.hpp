#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "diarize/core.hpp"

namespace diarize {

/// Pipeline hyperparameters. Defaults reproduce the reference inference setup.
struct PipelineConfig {
  int sample_rate_hz = 16000;
  double seg_duration_s = 16.0;
  double segmentation_step = 0.1;
  int max_local_speakers = 4;  // S
  int max_overlap = 2;         // O
  int median_kernel_frames = 11;
  double binarize_onset = 0.5;
  double binarize_offset = 0.5;
  int max_speakers = 20;
  double ahc_threshold = 0.6;
  int vbx_max_iters = 20;
  double vbx_fa = 0.07;
  double vbx_fb = 0.8;
  int lda_dim = 128;
  int embedding_dim = 256;
  int min_num_frames = 1;
  double vbx_loop_p = 0.9;

  /// Throws ConfigError on the first violated constraint.
  void validate() const;

  std::int64_t window_samples() const;
  std::int64_t hop_samples() const;
  FrameRate frame_rate() const { return FrameRate{sample_rate_hz, 400, 320}; }

  /// Sets one field from its textual key/value. Unknown keys throw ConfigError.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
};

/// Every key accepted by PipelineConfig::set, in declaration order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; '#' starts a comment. Keys are PipelineConfig field names.
PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});
std::string format_config(const PipelineConfig& cfg);

}  // namespace diarize
