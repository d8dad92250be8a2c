#include "diarize/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

namespace diarize {
namespace {

using IntField = int PipelineConfig::*;
using RealField = double PipelineConfig::*;

struct FieldEntry {
  const char* key;
  std::variant<IntField, RealField> member;
};

const std::vector<FieldEntry>& field_table() {
  static const std::vector<FieldEntry> table = {
      {"sample_rate_hz", &PipelineConfig::sample_rate_hz},
      {"seg_duration_s", &PipelineConfig::seg_duration_s},
      {"segmentation_step", &PipelineConfig::segmentation_step},
      {"max_local_speakers", &PipelineConfig::max_local_speakers},
      {"max_overlap", &PipelineConfig::max_overlap},
      {"median_kernel_frames", &PipelineConfig::median_kernel_frames},
      {"binarize_onset", &PipelineConfig::binarize_onset},
      {"binarize_offset", &PipelineConfig::binarize_offset},
      {"max_speakers", &PipelineConfig::max_speakers},
      {"ahc_threshold", &PipelineConfig::ahc_threshold},
      {"vbx_max_iters", &PipelineConfig::vbx_max_iters},
      {"vbx_fa", &PipelineConfig::vbx_fa},
      {"vbx_fb", &PipelineConfig::vbx_fb},
      {"lda_dim", &PipelineConfig::lda_dim},
      {"embedding_dim", &PipelineConfig::embedding_dim},
      {"min_num_frames", &PipelineConfig::min_num_frames},
      {"vbx_loop_p", &PipelineConfig::vbx_loop_p},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void PipelineConfig::validate() const {
  require(sample_rate_hz > 0, "sample_rate_hz must be positive");
  require(seg_duration_s > 0.0, "seg_duration_s must be positive");
  require(segmentation_step > 0.0 && segmentation_step <= 1.0, "segmentation_step must be in (0, 1]");
  require(max_local_speakers >= 1, "max_local_speakers must be >= 1");
  require(max_local_speakers <= 16, "max_local_speakers must be <= 16");
  require(max_overlap >= 1 && max_overlap <= max_local_speakers,
          "max_overlap must satisfy 1 <= max_overlap <= max_local_speakers");
  require(median_kernel_frames >= 1 && median_kernel_frames % 2 == 1,
          "median_kernel_frames must be an odd integer >= 1");
  require(binarize_offset <= binarize_onset, "binarize_offset must not exceed binarize_onset");
  require(max_speakers >= 1, "max_speakers must be >= 1");
  require(vbx_max_iters >= 1, "vbx_max_iters must be >= 1");
  require(vbx_fa > 0.0 && vbx_fb > 0.0, "vbx_fa and vbx_fb must be positive");
  require(vbx_loop_p >= 0.0 && vbx_loop_p < 1.0, "vbx_loop_p must be in [0, 1)");
  require(lda_dim >= 1 && embedding_dim >= lda_dim, "require 1 <= lda_dim <= embedding_dim");
  require(min_num_frames >= 0, "min_num_frames must be non-negative");
  require(window_samples() >= 400, "window shorter than one analysis frame");
  require(hop_samples() >= 1, "hop must be at least one sample");
}

std::int64_t PipelineConfig::window_samples() const {
  return static_cast<std::int64_t>(std::llround(seg_duration_s * sample_rate_hz));
}

std::int64_t PipelineConfig::hop_samples() const {
  return static_cast<std::int64_t>(std::llround(segmentation_step * static_cast<double>(window_samples())));
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  for (const auto& entry : field_table()) {
    if (key != entry.key) continue;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if (std::holds_alternative<IntField>(entry.member)) {
      int parsed = 0;
      auto [ptr, ec] = std::from_chars(first, last, parsed);
      if (ec != std::errc{} || ptr != last)
        throw ConfigError("config key '" + std::string(key) + "' expects an integer, got '" + std::string(value) + "'");
      this->*std::get<IntField>(entry.member) = parsed;
    } else {
      double parsed = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, parsed);
      if (ec != std::errc{} || ptr != last || !std::isfinite(parsed))
        throw ConfigError("config key '" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
      this->*std::get<RealField>(entry.member) = parsed;
    }
    return;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string PipelineConfig::get(std::string_view key) const {
  for (const auto& entry : field_table()) {
    if (key != entry.key) continue;
    if (std::holds_alternative<IntField>(entry.member)) return std::to_string(this->*std::get<IntField>(entry.member));
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), this->*std::get<RealField>(entry.member));
    return std::string(buf, ptr);
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& entry : field_table()) out.emplace_back(entry.key);
    return out;
  }();
  return keys;
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), base);
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream os;
  for (const auto& key : config_keys()) os << key << " = " << cfg.get(key) << '\n';
  return os.str();
}

}  // namespace diarize
