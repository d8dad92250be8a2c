#include "diarize/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "text_io.hpp"

namespace diarize {

std::vector<std::string> GroundTruthScript::speakers() const {
  std::set<std::string> labels;
  for (const auto& s : segments) labels.insert(s.speaker);
  return {labels.begin(), labels.end()};
}

void GroundTruthScript::validate() const {
  std::map<std::string, std::vector<TimeSpan>> per_speaker;
  for (const auto& s : segments) {
    if (s.span.end_s > duration_s + 1e-9) {
      throw Error("script segment of " + s.speaker + " ends after the script duration");
    }
    per_speaker[s.speaker].push_back(s.span);
  }
  for (auto& [label, spans] : per_speaker) {
    std::sort(spans.begin(), spans.end(), [](const TimeSpan& a, const TimeSpan& b) { return a.start_s < b.start_s; });
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].start_s < spans[i - 1].end_s) throw Error("script segments of " + label + " overlap");
    }
  }
}

void OracleScorerConfig::validate() const {
  if (!(p_correct > 0.0 && p_correct <= 1.0)) throw ConfigError("p_correct must be in (0, 1]");
  if (!(label_noise >= 0.0 && label_noise < 1.0)) throw ConfigError("label_noise must be in [0, 1)");
}

LocalSlots assign_local_slots(const GroundTruthScript& script, double chunk_start_s, std::int64_t num_frames,
                              int num_speakers, int max_overlap, const FrameRate& fr) {
  const auto frames = static_cast<std::size_t>(num_frames);
  const double chunk_end_s = chunk_start_s + frame_to_time(num_frames, fr);

  struct Candidate {
    std::string label;
    std::vector<std::uint8_t> raster;
    std::size_t active = 0;
    std::size_t first = 0;
  };
  std::map<std::string, Candidate> by_label;
  for (const auto& seg : script.segments) {
    if (seg.span.end_s <= chunk_start_s || seg.span.start_s >= chunk_end_s) continue;
    auto& cand = by_label[seg.speaker];
    if (cand.raster.empty()) {
      cand.label = seg.speaker;
      cand.raster.assign(frames, 0);
    }
    for (std::size_t f = 0; f < frames; ++f) {
      const double t = chunk_start_s + frame_to_time(static_cast<std::int64_t>(f), fr);
      if (seg.span.contains(t)) cand.raster[f] = 1;
    }
  }

  std::vector<Candidate> active;
  for (auto& [label, cand] : by_label) {
    cand.active = static_cast<std::size_t>(std::count(cand.raster.begin(), cand.raster.end(), std::uint8_t{1}));
    if (cand.active == 0) continue;
    cand.first = static_cast<std::size_t>(std::find(cand.raster.begin(), cand.raster.end(), 1) - cand.raster.begin());
    active.push_back(std::move(cand));
  }
  const auto by_first = [](const Candidate& a, const Candidate& b) {
    return std::tie(a.first, a.label) < std::tie(b.first, b.label);
  };
  if (active.size() > static_cast<std::size_t>(num_speakers)) {
    std::stable_sort(active.begin(), active.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.active != b.active) return a.active > b.active;
      return by_first(a, b);
    });
    active.resize(static_cast<std::size_t>(num_speakers));
  }
  std::sort(active.begin(), active.end(), by_first);

  LocalSlots out;
  out.activity = MultilabelActivity(frames, static_cast<std::size_t>(num_speakers), 0);
  for (const auto& cand : active) out.slot_speaker.push_back(cand.label);

  // Slots ranked by chunk-level activity for overlap truncation.
  std::vector<std::size_t> rank(active.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return active[a].active > active[b].active; });

  for (std::size_t f = 0; f < frames; ++f) {
    int kept = 0;
    for (std::size_t slot : rank) {
      if (!active[slot].raster[f]) continue;
      if (kept == max_overlap) break;
      out.activity(f, slot) = 1;
      ++kept;
    }
  }
  return out;
}

FrameScores oracle_score(const GroundTruthScript& script, TimeSpan chunk_span, std::size_t chunk_index,
                         const PowersetCodec& codec, const OracleScorerConfig& cfg, const FrameRate& fr) {
  cfg.validate();
  const auto window = static_cast<std::int64_t>(std::llround(chunk_span.duration() * fr.sample_rate_hz));
  const std::int64_t frames = frames_for_samples(window, fr);
  const LocalSlots slots =
      assign_local_slots(script, chunk_span.start_s, frames, codec.num_speakers(), codec.max_overlap(), fr);

  const auto k_count = static_cast<std::size_t>(codec.num_classes());
  const double peak = std::log(cfg.p_correct);
  // p_correct = 1 leaves no mass for the others; a finite floor keeps the file format finite.
  const double rest = std::max(std::log((1.0 - cfg.p_correct) / static_cast<double>(k_count - 1)), -100.0);

  std::seed_seq seq{static_cast<std::uint32_t>(cfg.rng_seed), static_cast<std::uint32_t>(cfg.rng_seed >> 32),
                    static_cast<std::uint32_t>(chunk_index), static_cast<std::uint32_t>(chunk_index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, k_count - 1);

  FrameScores scores(static_cast<std::size_t>(frames), k_count, rest);
  for (std::size_t f = 0; f < scores.rows(); ++f) {
    SpeakerSet set = 0;
    for (std::size_t s = 0; s < slots.activity.cols(); ++s) {
      if (slots.activity(f, s)) set |= SpeakerSet{1} << s;
    }
    auto cls = static_cast<std::size_t>(codec.encode(set));
    if (cfg.label_noise > 0.0 && coin(rng) < cfg.label_noise) cls = pick(rng);
    scores(f, cls) = peak;
  }
  return scores;
}

OracleScorer::OracleScorer(GroundTruthScript script, PowersetCodec codec, OracleScorerConfig cfg, FrameRate fr)
    : script_(std::move(script)), codec_(std::move(codec)), cfg_(cfg), fr_(fr) {
  cfg_.validate();
  script_.validate();
}

FrameScores OracleScorer::score(std::span<const float>, std::size_t chunk_index, TimeSpan chunk_span) const {
  return oracle_score(script_, chunk_span, chunk_index, codec_, cfg_, fr_);
}

ImportedScorer::ImportedScorer(std::vector<FrameScores> scores) : scores_(std::move(scores)) {}

FrameScores ImportedScorer::score(std::span<const float> chunk, std::size_t chunk_index, TimeSpan) const {
  if (chunk_index >= scores_.size()) {
    throw ShapeError("imported scores hold " + std::to_string(scores_.size()) + " chunks, chunk " +
                     std::to_string(chunk_index) + " requested");
  }
  const auto expected = static_cast<std::size_t>(frames_for_samples(static_cast<std::int64_t>(chunk.size())));
  if (scores_[chunk_index].rows() != expected) {
    throw ShapeError("imported scores for chunk " + std::to_string(chunk_index) + " have " +
                     std::to_string(scores_[chunk_index].rows()) + " frames, window yields " +
                     std::to_string(expected));
  }
  return scores_[chunk_index];
}

double logsumexp(std::span<const double> row) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : row) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : row) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

void write_scores(std::ostream& os, std::span<const FrameScores> scores) {
  const std::size_t frames = scores.empty() ? 0 : scores.front().rows();
  const std::size_t classes = scores.empty() ? 0 : scores.front().cols();
  os << "diarize-scores 1\n";
  os << "chunks " << scores.size() << " frames " << frames << " classes " << classes << '\n';
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (scores[c].rows() != frames || scores[c].cols() != classes) throw ShapeError("ragged score matrices");
    os << "chunk " << c << '\n';
    for (std::size_t f = 0; f < frames; ++f) detail::write_row(os, scores[c].row(f));
  }
}

void write_scores(const std::filesystem::path& path, std::span<const FrameScores> scores) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write score file '" + path.string() + "'");
  write_scores(os, scores);
}

std::vector<FrameScores> import_scores(std::istream& is, std::size_t expected_chunks, std::size_t expected_frames,
                                       std::size_t num_classes, std::vector<std::string>* warnings) {
  detail::TokenReader rd(is, "score file");
  rd.expect("diarize-scores");
  if (rd.next_size("format version") != 1) rd.fail("unsupported format version");
  rd.expect("chunks");
  const std::size_t chunks = rd.next_size("chunk count");
  rd.expect("frames");
  const std::size_t frames = rd.next_size("frame count");
  rd.expect("classes");
  const std::size_t classes = rd.next_size("class count");

  const auto mismatch = [&](const char* what, std::size_t got, std::size_t want) {
    throw ShapeError("score file has " + std::to_string(got) + " " + what + ", expected " + std::to_string(want));
  };
  if (expected_chunks && chunks != expected_chunks) mismatch("chunks", chunks, expected_chunks);
  if (expected_frames && frames != expected_frames) mismatch("frames", frames, expected_frames);
  if (num_classes && classes != num_classes) mismatch("classes", classes, num_classes);

  std::vector<FrameScores> out;
  out.reserve(chunks);
  std::size_t renormalised = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    rd.expect("chunk");
    if (rd.next_size("chunk index") != c) rd.fail("chunk records out of order at chunk " + std::to_string(c));
    FrameScores m(frames, classes);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t k = 0; k < classes; ++k) {
        const double v = rd.next_double("score value");
        if (!std::isfinite(v)) {
          throw ParseError("score file: non-finite value at chunk " + std::to_string(c) + ", frame " +
                           std::to_string(f) + ", class " + std::to_string(k));
        }
        m(f, k) = v;
      }
      const double lse = logsumexp(m.row(f));
      if (std::abs(lse) > 1e-3) {
        for (double& v : m.row(f)) v -= lse;
        ++renormalised;
      }
    }
    out.push_back(std::move(m));
  }
  if (!rd.at_end()) rd.fail("trailing data after " + std::to_string(chunks) + " chunks");
  if (renormalised > 0 && warnings != nullptr) {
    warnings->push_back("score file: renormalised " + std::to_string(renormalised) +
                        " rows that were not valid log-softmax");
  }
  return out;
}

std::vector<FrameScores> import_scores(const std::filesystem::path& path, std::size_t expected_chunks,
                                       std::size_t expected_frames, std::size_t num_classes,
                                       std::vector<std::string>* warnings) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open score file '" + path.string() + "'");
  return import_scores(is, expected_chunks, expected_frames, num_classes, warnings);
}

}  // namespace diarize
