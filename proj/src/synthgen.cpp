#include "diarize/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "diarize/rttm.hpp"

namespace diarize {
namespace {

constexpr int kMaxAttempts = 100;
constexpr double kTolerance = 0.03;
constexpr double kMinTurn = 0.2;
// Share of a turn that incoming plus outgoing overlap may occupy.
constexpr double kOverlapCap = 0.9;

double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

std::string label_for(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%02d", index);
  return buf;
}

std::vector<double> exp_weights(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = exp1(rng) + 1e-6;
  return w;
}

// Spreads `budget` over the transitions between consecutive turns, proportionally
// to random weights, subject to o[j-1] + o[j] <= cap * len[j] for every turn j.
bool distribute_overlap(double budget, const std::vector<double>& len, std::vector<double>& o, std::mt19937_64& rng) {
  const std::size_t m = o.size();
  if (budget <= 0.0) return true;
  if (m == 0) return false;
  const std::vector<double> w = exp_weights(m, rng);
  const auto slack = [&](std::size_t j) {
    const double left = kOverlapCap * len[j] - (j > 0 ? o[j - 1] : 0.0) - o[j];
    const double right = kOverlapCap * len[j + 1] - o[j] - (j + 1 < m ? o[j + 1] : 0.0);
    return std::max(0.0, std::min(left, right));
  };
  double remaining = budget;
  for (int pass = 0; pass < 200 && remaining > 1e-9; ++pass) {
    double open_weight = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (slack(j) > 1e-12) open_weight += w[j];
    }
    if (open_weight <= 0.0) return false;
    const double share = remaining;
    for (std::size_t j = 0; j < m && remaining > 1e-9; ++j) {
      const double s = slack(j);
      if (s <= 1e-12) continue;
      const double inc = std::min({share * w[j] / open_weight, s, remaining});
      o[j] += inc;
      remaining -= inc;
    }
  }
  return remaining <= 1e-6;
}

struct Attempt {
  GroundTruthScript script;
  SpeakerFractions achieved;
  bool complete = false;
};

Attempt attempt(const MeetingSpec& spec, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(spec.rng_seed), static_cast<std::uint32_t>(spec.rng_seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  const double d = spec.duration_s;
  const double talk = d * (1.0 - spec.silence_fraction + spec.overlap_fraction);
  const double overlap_budget = d * spec.overlap_fraction;
  const double silence_budget = d * spec.silence_fraction;

  std::exponential_distribution<double> turn_dist(1.0 / spec.mean_turn_s);
  const double max_turn = std::max(kMinTurn, 4.0 * spec.mean_turn_s);
  std::vector<double> len;
  double total = 0.0;
  while (total < talk) {
    const double l = std::clamp(turn_dist(rng), kMinTurn, max_turn);
    len.push_back(l);
    total += l;
  }
  for (auto& l : len) l *= talk / total;

  Attempt out;
  out.script.duration_s = d;
  out.script.recording_id = "meeting";
  std::vector<double> overlap(len.size() - 1, 0.0);
  if (!distribute_overlap(overlap_budget, len, overlap, rng)) return out;

  // Silence goes to the lead-in, the tail, and every transition without overlap.
  std::vector<std::size_t> slots{0, len.size()};
  for (std::size_t j = 0; j < overlap.size(); ++j) {
    if (overlap[j] == 0.0) slots.push_back(j + 1);
  }
  std::vector<double> gap(len.size() + 1, 0.0);
  const std::vector<double> w = exp_weights(slots.size(), rng);
  const double w_sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t k = 0; k < slots.size(); ++k) gap[slots[k]] = silence_budget * w[k] / w_sum;

  const int n = spec.n_speakers;
  std::uniform_int_distribution<int> first(0, n - 1);
  std::uniform_int_distribution<int> other(0, std::max(0, n - 2));
  int speaker = first(rng);
  std::set<int> used;
  double t = gap[0];
  for (std::size_t i = 0; i < len.size(); ++i) {
    if (i > 0 && n > 1) {
      const int step = other(rng);
      speaker = step >= speaker ? step + 1 : step;
    }
    used.insert(speaker);
    const double start = round_ms(t);
    const double end = std::min(round_ms(t + len[i]), d);
    if (end > start) out.script.segments.push_back({TimeSpan(start, end), label_for(speaker)});
    t += len[i];
    if (i < overlap.size()) t += gap[i + 1] - overlap[i];
  }
  std::stable_sort(out.script.segments.begin(), out.script.segments.end(),
                   [](const Segment& a, const Segment& b) { return a.span.start_s < b.span.start_s; });
  out.complete = static_cast<int>(used.size()) == n;
  out.achieved = measure_fractions(out.script);
  return out;
}

}  // namespace

void MeetingSpec::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("meeting duration must be positive");
  if (n_speakers < 1) throw ConfigError("meeting needs at least one speaker");
  if (!(mean_turn_s > 0.0)) throw ConfigError("mean turn length must be positive");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) throw ConfigError("overlap fraction must be in [0, 1)");
  if (!(silence_fraction >= 0.0 && silence_fraction < 1.0)) throw ConfigError("silence fraction must be in [0, 1)");
  if (n_speakers == 1 && overlap_fraction > 0.0) throw ConfigError("overlap needs at least two speakers");
}

SpeakerFractions measure_fractions(const GroundTruthScript& script, double resolution_s) {
  const auto cells = static_cast<std::size_t>(std::llround(script.duration_s / resolution_s));
  SpeakerFractions f;
  if (cells == 0) return f;
  std::vector<int> count(cells, 0);
  for (const auto& seg : script.segments) {
    const auto lo = static_cast<std::int64_t>(std::ceil(seg.span.start_s / resolution_s - 0.5));
    const auto hi = static_cast<std::int64_t>(std::ceil(seg.span.end_s / resolution_s - 0.5));
    for (std::int64_t c = std::max<std::int64_t>(lo, 0); c < std::min<std::int64_t>(hi, cells); ++c) ++count[c];
  }
  std::size_t silent = 0, single = 0;
  for (int c : count) {
    if (c == 0) ++silent;
    if (c == 1) ++single;
  }
  f.silence = static_cast<double>(silent) / cells;
  f.single = static_cast<double>(single) / cells;
  f.overlap = static_cast<double>(cells - silent - single) / cells;
  return f;
}

GroundTruthScript generate(const MeetingSpec& spec) {
  spec.validate();
  SpeakerFractions last;
  for (int i = 0; i < kMaxAttempts; ++i) {
    Attempt a = attempt(spec, i);
    last = a.achieved;
    if (!a.complete) continue;
    if (std::abs(a.achieved.silence - spec.silence_fraction) <= kTolerance &&
        std::abs(a.achieved.overlap - spec.overlap_fraction) <= kTolerance) {
      a.script.validate();
      return std::move(a.script);
    }
  }
  std::ostringstream msg;
  msg << "could not realise the meeting targets in " << kMaxAttempts << " attempts; last achieved silence "
      << last.silence << " overlap " << last.overlap << " (targets " << spec.silence_fraction << ", "
      << spec.overlap_fraction << ")";
  throw Error(msg.str());
}

Annotation script_to_rttm(const GroundTruthScript& script) {
  Annotation ann(script.recording_id);
  for (const auto& seg : script.segments) ann.add(seg.span, seg.speaker);
  return ann;
}

void write_script(std::ostream& os, const GroundTruthScript& script) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), ";; duration %.3f\n", script.duration_s);
  os << buf;
  write_rttm(os, script_to_rttm(script));
}

void write_script(const std::filesystem::path& path, const GroundTruthScript& script) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write script file '" + path.string() + "'");
  write_script(os, script);
}

GroundTruthScript read_script(std::istream& is) {
  std::stringstream body;
  double duration = -1.0;
  std::string line;
  while (std::getline(is, line)) {
    const auto pos = line.find(";; duration");
    if (pos != std::string::npos && line.find_first_not_of(" \t") == pos) {
      try {
        duration = std::stod(line.substr(pos + 11));
      } catch (const std::exception&) {
        throw ParseError("malformed duration comment: '" + line + "'");
      }
      body << '\n';
      continue;
    }
    body << line << '\n';
  }
  const Annotation ann = read_rttm(body);
  GroundTruthScript script;
  script.recording_id = ann.recording_id();
  script.segments = ann.segments();
  script.duration_s = duration >= 0.0 ? duration : ann.extent_end();
  script.validate();
  return script;
}

GroundTruthScript read_script(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open script file '" + path.string() + "'");
  GroundTruthScript script = read_script(is);
  if (script.recording_id.empty()) script.recording_id = path.stem().string();
  return script;
}

}  // namespace diarize
