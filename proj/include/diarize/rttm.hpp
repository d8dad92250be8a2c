#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "diarize/core.hpp"

namespace diarize {

/// One SPEAKER line of an RTTM file.
struct RttmRecord {
  std::string type = "SPEAKER";
  std::string file_id;
  int channel = 1;
  double onset_s = 0.0;
  double duration_s = 0.0;
  std::string speaker;
  bool operator==(const RttmRecord&) const = default;
};

/// `SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>` with 3-decimal times.
std::string format_rttm_line(const RttmRecord& rec);
/// Ten whitespace-separated fields; throws ParseError mentioning `line_no`.
RttmRecord parse_rttm_line(std::string_view line, std::size_t line_no);

std::vector<RttmRecord> to_records(const Annotation& ann);
std::vector<RttmRecord> read_rttm_records(std::istream& is);

void write_rttm(std::ostream& os, const Annotation& ann);
void write_rttm(const std::filesystem::path& path, const Annotation& ann);
/// Blank lines and lines starting with '#' or ';;' are skipped.
Annotation read_rttm(std::istream& is);
Annotation read_rttm(const std::filesystem::path& path);

/// Error components in seconds.
struct DerBreakdown {
  double t_miss = 0.0;
  double t_fa = 0.0;
  double t_conf = 0.0;
  double t_ref = 0.0;
  double der = 0.0;
};

struct DerOptions {
  double collar_s = 0.0;      // excluded on both sides of every reference boundary
  bool skip_overlap = false;  // ignore regions where the reference has >= 2 speakers
};

/// Diarization error rate under the optimal one-to-one speaker mapping.
/// Throws Error when the scored reference speech time is zero.
DerBreakdown der(const Annotation& ref, const Annotation& hyp, const DerOptions& opts = {});

/// Maximum-weight one-to-one assignment; returns, for each row, the chosen column or -1.
std::vector<int> max_weight_assignment(const Matrix<double>& weight);

}  // namespace diarize
