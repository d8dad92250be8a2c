#include "diarize/powerset.hpp"

#include <bit>
#include <string>

namespace diarize {
namespace {

// Appends every size-k subset of {0..n-1} in lexicographic order of its sorted members.
void enumerate_combinations(int n, int k, std::vector<SpeakerSet>& out) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    SpeakerSet mask = 0;
    for (int i : idx) mask |= SpeakerSet{1} << i;
    out.push_back(mask);
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) return;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace

int popcount(SpeakerSet s) { return std::popcount(s); }

int powerset_size(int num_speakers, int max_overlap) {
  long long total = 0;
  long long binom = 1;
  for (int k = 0; k <= max_overlap; ++k) {
    total += binom;
    binom = binom * (num_speakers - k) / (k + 1);
  }
  return static_cast<int>(total);
}

PowersetCodec::PowersetCodec(int num_speakers, int max_overlap)
    : num_speakers_(num_speakers), max_overlap_(max_overlap) {
  if (num_speakers < 1) throw ConfigError("powerset requires at least one speaker");
  if (num_speakers > 16) throw ConfigError("powerset supports at most 16 local speakers");
  if (max_overlap < 1 || max_overlap > num_speakers)
    throw ConfigError("powerset requires 1 <= max_overlap <= num_speakers, got O=" + std::to_string(max_overlap) +
                      ", S=" + std::to_string(num_speakers));
  for (int k = 0; k <= max_overlap; ++k) {
    if (k == 0) {
      classes_.push_back(0);
    } else {
      enumerate_combinations(num_speakers, k, classes_);
    }
  }
  index_of_.assign(std::size_t{1} << num_speakers, -1);
  mapping_ = Matrix<std::uint8_t>(classes_.size(), static_cast<std::size_t>(num_speakers), 0);
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    index_of_[classes_[i]] = static_cast<int>(i);
    for (int s = 0; s < num_speakers; ++s) {
      if (classes_[i] & (SpeakerSet{1} << s)) mapping_(i, static_cast<std::size_t>(s)) = 1;
    }
  }
}

int PowersetCodec::encode(SpeakerSet active) const {
  if (active >> num_speakers_ != 0) throw Error("speaker index out of range for powerset encoding");
  const int idx = index_of_[active];
  if (idx < 0) {
    throw Error("active set of " + std::to_string(popcount(active)) + " speakers exceeds max_overlap " +
                std::to_string(max_overlap_));
  }
  return idx;
}

int PowersetCodec::encode(std::span<const int> active_slots) const {
  SpeakerSet mask = 0;
  for (int s : active_slots) {
    if (s < 0 || s >= num_speakers_) throw Error("speaker index out of range for powerset encoding");
    mask |= SpeakerSet{1} << s;
  }
  return encode(mask);
}

SpeakerSet PowersetCodec::decode(int class_index) const {
  if (class_index < 0 || class_index >= num_classes()) throw Error("powerset class index out of range");
  return classes_[static_cast<std::size_t>(class_index)];
}

PowersetCodec build_codec(int num_speakers, int max_overlap) { return {num_speakers, max_overlap}; }

int argmax_class(std::span<const double> row) {
  int best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

MultilabelActivity to_multilabel(const FrameScores& scores, const PowersetCodec& codec) {
  if (scores.cols() != static_cast<std::size_t>(codec.num_classes())) {
    throw ShapeError("frame scores have " + std::to_string(scores.cols()) + " columns, codec expects " +
                     std::to_string(codec.num_classes()));
  }
  const auto s_count = static_cast<std::size_t>(codec.num_speakers());
  MultilabelActivity out(scores.rows(), s_count, 0);
  for (std::size_t t = 0; t < scores.rows(); ++t) {
    const auto k = static_cast<std::size_t>(argmax_class(scores.row(t)));
    const auto m = codec.mapping().row(k);
    std::copy(m.begin(), m.end(), out.row(t).begin());
  }
  return out;
}

}  // namespace diarize
