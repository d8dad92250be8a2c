#include "diarize/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace diarize {

TimeSpan::TimeSpan(double start, double end) : start_s(start), end_s(end) {
  if (!(start >= 0.0) || !(end > start)) {
    std::ostringstream os;
    os << "invalid time span [" << start << ", " << end << ")";
    throw Error(os.str());
  }
}

void Annotation::add(TimeSpan span, std::string speaker) {
  Segment seg{span, std::move(speaker)};
  auto key = [](const Segment& s) { return std::tie(s.span.start_s, s.speaker, s.span.end_s); };
  auto pos = std::upper_bound(segments_.begin(), segments_.end(), seg,
                              [&](const Segment& a, const Segment& b) { return key(a) < key(b); });
  segments_.insert(pos, std::move(seg));
}

std::vector<std::string> Annotation::labels() const {
  std::vector<std::string> out;
  for (const auto& s : segments_) {
    if (std::find(out.begin(), out.end(), s.speaker) == out.end()) out.push_back(s.speaker);
  }
  return out;
}

double Annotation::total_speech_duration() const {
  double total = 0.0;
  for (const auto& s : segments_) total += s.span.duration();
  return total;
}

std::vector<TimeSpan> Annotation::speaker_timeline(const std::string& speaker) const {
  std::vector<TimeSpan> spans;
  for (const auto& s : segments_) {
    if (s.speaker != speaker) continue;
    if (!spans.empty() && s.span.start_s <= spans.back().end_s) {
      spans.back().end_s = std::max(spans.back().end_s, s.span.end_s);
    } else {
      spans.push_back(s.span);
    }
  }
  return spans;
}

double Annotation::extent_end() const {
  double end = 0.0;
  for (const auto& s : segments_) end = std::max(end, s.span.end_s);
  return end;
}

std::int64_t frames_for_samples(std::int64_t n_samples, const FrameRate& fr) {
  if (n_samples < fr.conv_window) throw Error("input shorter than one analysis window");
  return (n_samples - fr.conv_window) / fr.conv_hop + 1;
}

double frame_to_time(std::int64_t frame, const FrameRate& fr) {
  return (static_cast<double>(frame) * static_cast<double>(fr.conv_hop) +
          0.5 * static_cast<double>(fr.conv_window)) /
         static_cast<double>(fr.sample_rate_hz);
}

std::int64_t time_to_frame(double t_s, const FrameRate& fr) {
  const double samples = t_s * fr.sample_rate_hz - 0.5 * static_cast<double>(fr.conv_window);
  const auto frame = static_cast<std::int64_t>(std::llround(samples / static_cast<double>(fr.conv_hop)));
  return std::max<std::int64_t>(frame, 0);
}

}  // namespace diarize
