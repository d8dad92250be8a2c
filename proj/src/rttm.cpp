#include "diarize/rttm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace diarize {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_comment_or_blank(std::string_view line) {
  const auto first = line.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return true;
  line = line.substr(first);
  return line.starts_with('#') || line.starts_with(";;");
}

double parse_time(std::string_view tok, std::size_t line_no, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError("RTTM line " + std::to_string(line_no) + ": non-numeric " + what + " '" + std::string(tok) + "'");
  }
  return v;
}

// Per-speaker merged timelines of an annotation.
std::map<std::string, std::vector<TimeSpan>> timelines(const Annotation& ann) {
  std::map<std::string, std::vector<TimeSpan>> out;
  for (const auto& label : ann.labels()) out[label] = ann.speaker_timeline(label);
  return out;
}

bool active_at(const std::vector<TimeSpan>& tl, double t) {
  auto it = std::upper_bound(tl.begin(), tl.end(), t, [](double v, const TimeSpan& s) { return v < s.start_s; });
  if (it == tl.begin()) return false;
  return std::prev(it)->contains(t);
}

}  // namespace

std::string format_rttm_line(const RttmRecord& rec) {
  char buf[64];
  std::ostringstream os;
  os << rec.type << ' ' << rec.file_id << ' ' << rec.channel << ' ';
  std::snprintf(buf, sizeof(buf), "%.3f %.3f", rec.onset_s, rec.duration_s);
  os << buf << " <NA> <NA> " << rec.speaker << " <NA> <NA>";
  return os.str();
}

RttmRecord parse_rttm_line(std::string_view line, std::size_t line_no) {
  const auto f = split_ws(line);
  if (f.size() != 10) {
    throw ParseError("RTTM line " + std::to_string(line_no) + ": expected 10 fields, found " + std::to_string(f.size()));
  }
  RttmRecord rec;
  rec.type = std::string(f[0]);
  rec.file_id = std::string(f[1]);
  int channel = 0;
  auto [ptr, ec] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), channel);
  if (ec != std::errc{} || ptr != f[2].data() + f[2].size()) {
    throw ParseError("RTTM line " + std::to_string(line_no) + ": non-numeric channel '" + std::string(f[2]) + "'");
  }
  rec.channel = channel;
  rec.onset_s = parse_time(f[3], line_no, "onset");
  rec.duration_s = parse_time(f[4], line_no, "duration");
  if (rec.onset_s < 0.0) throw ParseError("RTTM line " + std::to_string(line_no) + ": negative onset");
  if (!(rec.duration_s > 0.0)) throw ParseError("RTTM line " + std::to_string(line_no) + ": non-positive duration");
  rec.speaker = std::string(f[7]);
  return rec;
}

std::vector<RttmRecord> to_records(const Annotation& ann) {
  std::vector<RttmRecord> out;
  out.reserve(ann.size());
  for (const auto& seg : ann.segments()) {
    RttmRecord rec;
    rec.file_id = ann.recording_id();
    rec.onset_s = seg.span.start_s;
    rec.duration_s = seg.span.duration();
    rec.speaker = seg.speaker;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RttmRecord> read_rttm_records(std::istream& is) {
  std::vector<RttmRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    out.push_back(parse_rttm_line(line, line_no));
  }
  return out;
}

void write_rttm(std::ostream& os, const Annotation& ann) {
  for (const auto& rec : to_records(ann)) os << format_rttm_line(rec) << '\n';
}

void write_rttm(const std::filesystem::path& path, const Annotation& ann) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write RTTM file '" + path.string() + "'");
  write_rttm(os, ann);
}

Annotation read_rttm(std::istream& is) {
  Annotation ann;
  bool first = true;
  for (const auto& rec : read_rttm_records(is)) {
    if (first) {
      ann.set_recording_id(rec.file_id);
      first = false;
    }
    ann.add(TimeSpan(rec.onset_s, rec.onset_s + rec.duration_s), rec.speaker);
  }
  return ann;
}

Annotation read_rttm(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open RTTM file '" + path.string() + "'");
  return read_rttm(is);
}

std::vector<int> max_weight_assignment(const Matrix<double>& weight) {
  const std::size_t rows = weight.rows();
  const std::size_t cols = weight.cols();
  std::vector<int> result(rows, -1);
  if (rows == 0 || cols == 0) return result;

  // Square cost matrix, 1-indexed, for the O(n^3) shortest augmenting path method.
  const std::size_t n = std::max(rows, cols);
  double peak = 0.0;
  for (double w : weight.flat()) peak = std::max(peak, w);
  const auto cost = [&](std::size_t i, std::size_t j) {
    const double w = (i < rows && j < cols) ? weight(i, j) : 0.0;
    return peak - w;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i >= 1 && i <= rows && j <= cols) result[i - 1] = static_cast<int>(j - 1);
  }
  return result;
}

DerBreakdown der(const Annotation& ref, const Annotation& hyp, const DerOptions& opts) {
  const auto ref_tl = timelines(ref);
  const auto hyp_tl = timelines(hyp);

  std::vector<double> points;
  for (const auto& s : ref.segments()) {
    points.push_back(s.span.start_s);
    points.push_back(s.span.end_s);
    if (opts.collar_s > 0.0) {
      for (double b : {s.span.start_s, s.span.end_s}) {
        points.push_back(b - opts.collar_s);
        points.push_back(b + opts.collar_s);
      }
    }
  }
  for (const auto& s : hyp.segments()) {
    points.push_back(s.span.start_s);
    points.push_back(s.span.end_s);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  std::vector<double> boundaries;
  if (opts.collar_s > 0.0) {
    for (const auto& s : ref.segments()) {
      boundaries.push_back(s.span.start_s);
      boundaries.push_back(s.span.end_s);
    }
  }
  const auto in_collar = [&](double t) {
    for (double b : boundaries) {
      if (std::abs(t - b) < opts.collar_s) return true;
    }
    return false;
  };

  std::vector<std::string> ref_labels, hyp_labels;
  for (const auto& [l, _] : ref_tl) ref_labels.push_back(l);
  for (const auto& [l, _] : hyp_tl) hyp_labels.push_back(l);

  struct Piece {
    double duration;
    std::vector<std::size_t> ref_active;
    std::vector<std::size_t> hyp_active;
  };
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double d = points[i + 1] - points[i];
    if (!(d > 0.0)) continue;
    const double mid = 0.5 * (points[i] + points[i + 1]);
    if (opts.collar_s > 0.0 && in_collar(mid)) continue;
    Piece piece{d, {}, {}};
    for (std::size_t r = 0; r < ref_labels.size(); ++r) {
      if (active_at(ref_tl.at(ref_labels[r]), mid)) piece.ref_active.push_back(r);
    }
    if (opts.skip_overlap && piece.ref_active.size() >= 2) continue;
    for (std::size_t h = 0; h < hyp_labels.size(); ++h) {
      if (active_at(hyp_tl.at(hyp_labels[h]), mid)) piece.hyp_active.push_back(h);
    }
    if (piece.ref_active.empty() && piece.hyp_active.empty()) continue;
    pieces.push_back(std::move(piece));
  }

  Matrix<double> overlap(ref_labels.size(), hyp_labels.size(), 0.0);
  for (const auto& p : pieces) {
    for (std::size_t r : p.ref_active) {
      for (std::size_t h : p.hyp_active) overlap(r, h) += p.duration;
    }
  }
  const std::vector<int> mapping = max_weight_assignment(overlap);

  DerBreakdown out;
  for (const auto& p : pieces) {
    const double n_ref = static_cast<double>(p.ref_active.size());
    const double n_hyp = static_cast<double>(p.hyp_active.size());
    double correct = 0.0;
    for (std::size_t r : p.ref_active) {
      const int h = mapping[r];
      if (h >= 0 && std::find(p.hyp_active.begin(), p.hyp_active.end(), static_cast<std::size_t>(h)) != p.hyp_active.end())
        correct += 1.0;
    }
    out.t_ref += p.duration * n_ref;
    out.t_miss += p.duration * std::max(0.0, n_ref - n_hyp);
    out.t_fa += p.duration * std::max(0.0, n_hyp - n_ref);
    out.t_conf += p.duration * (std::min(n_ref, n_hyp) - correct);
  }
  if (!(out.t_ref > 0.0)) throw Error("DER is undefined: reference contains no scored speech");
  out.der = (out.t_miss + out.t_fa + out.t_conf) / out.t_ref;
  return out;
}

}  // namespace diarize
