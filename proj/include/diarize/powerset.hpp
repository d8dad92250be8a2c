#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diarize/core.hpp"

namespace diarize {

/// Bitmask over local speaker slots: bit s set <=> slot s active.
using SpeakerSet = std::uint32_t;

/// Per-chunk frames x K log-probabilities, columns in powerset class order.
using FrameScores = Matrix<double>;
/// Per-chunk frames x S binary activity.
using MultilabelActivity = Matrix<std::uint8_t>;

/// Class inventory for at most O simultaneous speakers out of S local slots.
///
/// Classes are ordered by cardinality, then lexicographically by slot index:
/// for (S, O) = (4, 2) that is {}, {0}, {1}, {2}, {3}, {0,1}, {0,2}, {0,3},
/// {1,2}, {1,3}, {2,3}.
class PowersetCodec {
 public:
  PowersetCodec(int num_speakers, int max_overlap);

  int num_speakers() const noexcept { return num_speakers_; }
  int max_overlap() const noexcept { return max_overlap_; }
  int num_classes() const noexcept { return static_cast<int>(classes_.size()); }

  const std::vector<SpeakerSet>& classes() const noexcept { return classes_; }
  /// K x S indicator matrix; row k marks the speakers of class k.
  const Matrix<std::uint8_t>& mapping() const noexcept { return mapping_; }

  int encode(SpeakerSet active) const;
  int encode(std::span<const int> active_slots) const;
  SpeakerSet decode(int class_index) const;

 private:
  int num_speakers_;
  int max_overlap_;
  std::vector<SpeakerSet> classes_;
  std::vector<int> index_of_;  // indexed by bitmask, -1 when not representable
  Matrix<std::uint8_t> mapping_;
};

PowersetCodec build_codec(int num_speakers, int max_overlap);

/// sum_{k=0}^{O} C(S, k)
int powerset_size(int num_speakers, int max_overlap);

/// Row-wise argmax (lowest index on ties) mapped through the codec's indicator matrix.
MultilabelActivity to_multilabel(const FrameScores& scores, const PowersetCodec& codec);

/// argmax with lowest-index tie breaking.
int argmax_class(std::span<const double> row);

int popcount(SpeakerSet s);

}  // namespace diarize
