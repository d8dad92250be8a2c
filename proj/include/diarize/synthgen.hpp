#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "diarize/core.hpp"
#include "diarize/scoring.hpp"

namespace diarize {

/// Targets for a synthetic conversation.
struct MeetingSpec {
  double duration_s = 60.0;
  int n_speakers = 4;
  double mean_turn_s = 2.5;
  double overlap_fraction = 0.1;  // share of time with two active speakers
  double silence_fraction = 0.1;  // share of time with nobody speaking
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Shares of the timeline by number of active speakers; they sum to 1.
struct SpeakerFractions {
  double silence = 0.0;
  double single = 0.0;
  double overlap = 0.0;
};

/// Rasterises the script at `resolution_s` cell centres over [0, duration).
SpeakerFractions measure_fractions(const GroundTruthScript& script, double resolution_s = 0.01);

/// Alternating turns with exponential lengths. Overlap appears only where a turn
/// starts before the previous one ends, and never more than two speakers talk at
/// once. Throws Error with the achieved fractions when 100 attempts all miss the
/// targets by more than 0.03.
GroundTruthScript generate(const MeetingSpec& spec);

/// One segment per script turn.
Annotation script_to_rttm(const GroundTruthScript& script);

/// Script files are RTTM with an extra `;; duration <seconds>` comment line.
void write_script(std::ostream& os, const GroundTruthScript& script);
void write_script(const std::filesystem::path& path, const GroundTruthScript& script);
/// Without a duration comment the duration is the latest segment end.
GroundTruthScript read_script(std::istream& is);
GroundTruthScript read_script(const std::filesystem::path& path);

}  // namespace diarize
