// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "diarize/aggregate.hpp"
#include "diarize/cluster.hpp"
#include "diarize/pipeline.hpp"
#include "diarize/powerset.hpp"
#include "diarize/rttm.hpp"
#include "diarize/synthgen.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace diarize;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

class Checker {
 public:
  explicit Checker(Outcome& out) : out_(out) {}
  void expect(bool cond, const std::string& what) {
    if (!cond && out_.ok) {
      out_.ok = false;
      out_.detail = what;
    }
  }

 private:
  Outcome& out_;
};

Outcome windowing() {
  Outcome o;
  Checker c(o);
  const ChunkBatch b = sliding_window(AudioBuffer{std::vector<float>(480000, 0.0F), 16000, "w"}, PipelineConfig{});
  c.expect(b.size() == 10, "chunk count " + std::to_string(b.size()));
  for (std::size_t i = 0; i < b.size() && i < 10; ++i) {
    c.expect(b.chunk_start_samples[i] == static_cast<std::int64_t>(25600 * i), "start of chunk " + std::to_string(i));
  }
  c.expect(b.real_samples_in_last == 249600, "real samples in last chunk " + std::to_string(b.real_samples_in_last));
  c.expect(b.chunks.cols() == 256000, "window width");
  return o;
}

Outcome frame_count() {
  Outcome o;
  Checker c(o);
  c.expect(frames_for_samples(256000) == 799, "frames_for_samples(256000) = " + std::to_string(frames_for_samples(256000)));
  return o;
}

Outcome powerset() {
  Outcome o;
  Checker c(o);
  const PowersetCodec codec = build_codec(4, 2);
  c.expect(codec.num_classes() == 11, "K = " + std::to_string(codec.num_classes()));
  std::map<int, int> rows_by_sum;
  for (std::size_t k = 0; k < codec.mapping().rows(); ++k) {
    int s = 0;
    for (auto v : codec.mapping().row(k)) s += v;
    ++rows_by_sum[s];
  }
  c.expect(rows_by_sum[0] == 1 && rows_by_sum[1] == 4 && rows_by_sum[2] == 6 && rows_by_sum.size() == 3,
           "row sums of M");
  const std::vector<int> pair = {0, 1};
  c.expect(codec.encode(pair) == 5, "encode({s1,s2}) = " + std::to_string(codec.encode(pair)));
  return o;
}

Outcome aggregation() {
  Outcome o;
  Checker c(o);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t frames = 30 + rng() % 50;
    const std::size_t chunks = 1 + rng() % 10;
    std::vector<std::size_t> starts;
    std::size_t s = 0;
    std::vector<Matrix<double>> per;
    for (std::size_t k = 0; k < chunks; ++k) {
      starts.push_back(s);
      s += 1 + rng() % frames;
      Matrix<double> m(frames, 4);
      for (double& v : m.flat()) v = u(rng);
      per.push_back(std::move(m));
    }
    const std::size_t total = starts.back() + frames + 3;
    const auto got = overlap_add(std::span<const Matrix<double>>(per), starts, total);
    const auto want = oracle::overlap_add(per, starts, total);
    for (std::size_t i = 0; i < want.size(); ++i) {
      c.expect(std::abs(got.scores.data()[i] - want.data()[i]) <= 1e-9, "overlap-add differs from the oracle");
    }
    MultilabelActivity bin(frames, 4);
    for (auto& v : bin.flat()) v = static_cast<std::uint8_t>(rng() % 2);
    c.expect(median_filter_time(bin, 11) == oracle::median(bin, 11), "median filter differs from the oracle");
    c.expect(median_filter_time(per[0], 5) == oracle::median(per[0], 5), "real median filter differs from the oracle");
  }
  const FrameLayout l = frame_layout(chunk_layout(480000, PipelineConfig{}), FrameRate{});
  c.expect(l.total_frames == 1521, "total frames " + std::to_string(l.total_frames));
  return o;
}

Outcome rttm_round_trip() {
  static const char* const listing =
      "SPEAKER EN2002a_30s 1  0.013  2.640 <NA> <NA> SPEAKER_00 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1  0.792 12.820 <NA> <NA> SPEAKER_03 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1  5.753  0.660 <NA> <NA> SPEAKER_00 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1  7.993  2.560 <NA> <NA> SPEAKER_00 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 10.553  0.140 <NA> <NA> SPEAKER_01 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 10.692  2.900 <NA> <NA> SPEAKER_00 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 13.692  4.660 <NA> <NA> SPEAKER_01 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 17.812  0.360 <NA> <NA> SPEAKER_03 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 18.933  0.340 <NA> <NA> SPEAKER_00 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 19.593  0.380 <NA> <NA> SPEAKER_01 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 20.332  1.900 <NA> <NA> SPEAKER_03 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 23.293  0.180 <NA> <NA> SPEAKER_01 <NA> <NA>\n"
      "SPEAKER EN2002a_30s 1 23.453  6.940 <NA> <NA> SPEAKER_02 <NA> <NA>\n";
  Outcome o;
  Checker c(o);
  std::istringstream is(listing);
  const auto records = read_rttm_records(is);
  c.expect(records.size() == 13, "record count " + std::to_string(records.size()));
  std::istringstream is2(listing);
  const Annotation a = read_rttm(is2);
  c.expect(a.labels().size() == 4, "label count");
  double longest = 0.0;
  for (const auto& r : records) longest = std::max(longest, r.duration_s);
  c.expect(longest == 12.820, "longest duration");

  std::ostringstream first;
  write_rttm(first, a);
  std::istringstream back(first.str());
  std::ostringstream second;
  write_rttm(second, read_rttm(back));
  c.expect(first.str() == second.str(), "write(read(x)) is not canonical");
  // Canonical form: same fields with single spaces.
  std::istringstream lines(listing);
  std::istringstream out(first.str());
  std::string want, got;
  while (std::getline(lines, want) && std::getline(out, got)) {
    std::istringstream wf(want), gf(got);
    std::string x, y;
    while (wf >> x && gf >> y) c.expect(x == y, "field mismatch: " + x + " vs " + y);
  }
  return o;
}

Outcome der_correctness() {
  Outcome o;
  Checker c(o);
  std::mt19937_64 rng(123);
  int compared = 0;
  while (compared < 100) {
    const Annotation ref = oracle::random_annotation(rng, 3, 5, 10.0, "r");
    const Annotation hyp = oracle::random_annotation(rng, 3, 5, 10.0, "h");
    c.expect(der(ref, ref).der == 0.0, "der(x, x) != 0");
    const auto sampled = oracle::sampled_der(ref, hyp);
    if (sampled.ref <= 0.0) continue;
    const double d = der(ref, hyp).der;
    c.expect(std::abs(d - sampled.der) <= 1e-3,
             "pair " + std::to_string(compared) + ": " + std::to_string(d) + " vs " + std::to_string(sampled.der));
    ++compared;
  }
  return o;
}

Outcome clustering_recovery() {
  Outcome o;
  Checker c(o);
  const PldaModel model = generate_plda_model(256, 128, 100.0, 2024);
  const std::vector<int> counts(4, 10);
  const LabeledEmbeddings data = sample_speakers_and_embeddings(PldaGenerator{model, 7}, 4, counts);
  Matrix<double> emb(data.vectors.rows(), model.embedding_dim());
  for (std::size_t r = 0; r < emb.rows(); ++r) {
    const auto e = lift_to_embedding(data.vectors.row(r), model);
    std::copy(e.begin(), e.end(), emb.row(r).begin());
  }
  const Matrix<double> y = project_all(emb, model);
  const PipelineConfig cfg;
  const std::vector<int> init = ahc(y, PldaScorer(model), cfg.ahc_threshold);
  const VbxState st = vbx_refine(y, init, model.across_ratio(), VbxOptions::from(cfg));
  const double ari = oracle::adjusted_rand_index(st.labels, data.labels);
  c.expect(ari == 1.0, "ARI " + std::to_string(ari));
  for (std::size_t t = 0; t < st.gamma.rows(); ++t) {
    double s = 0.0;
    for (double v : st.gamma.row(t)) s += v;
    c.expect(std::abs(s - 1.0) <= 1e-9, "gamma row " + std::to_string(t) + " sums to " + std::to_string(s));
  }
  for (std::size_t i = 1; i < st.elbo_trace.size(); ++i) {
    c.expect(st.elbo_trace[i] >= st.elbo_trace[i - 1] - 1e-8 * std::abs(st.elbo_trace[i - 1]),
             "ELBO decreased at iteration " + std::to_string(i));
  }
  c.expect(!st.elbo_trace.empty(), "no ELBO trace");
  return o;
}

Outcome permutation_resolution() {
  Outcome o;
  Checker c(o);
  GroundTruthScript s;
  s.recording_id = "perm";
  s.segments = {{TimeSpan(0.5, 3.0), "A"},  {TimeSpan(4.0, 7.0), "B"},   {TimeSpan(9.0, 11.0), "B"},
                {TimeSpan(12.0, 14.0), "A"}, {TimeSpan(16.0, 20.0), "C"}, {TimeSpan(25.0, 28.0), "D"}};
  s.duration_s = 30.0;
  PipelineInputs in;
  in.script = s;
  in.seed = 1;
  const PipelineConfig cfg;
  const PipelineRun r = run(in, cfg);

  // Same speaker, different local slots.
  const LocalSlots c0 = assign_local_slots(s, r.batch.chunk_start_s(0), 799, 4, 2);
  const LocalSlots c5 = assign_local_slots(s, r.batch.chunk_start_s(5), 799, 4, 2);
  c.expect(!c0.slot_speaker.empty() && c0.slot_speaker[0] == "A", "A is not slot 0 in chunk 0");
  c.expect(c5.slot_speaker.size() > 1 && c5.slot_speaker[1] == "A", "A is not slot 1 in chunk 5");

  std::map<std::string, int> global_of;
  std::map<int, std::string> speaker_of;
  for (std::size_t chunk = 0; chunk < r.batch.size(); ++chunk) {
    const LocalSlots slots = assign_local_slots(s, r.batch.chunk_start_s(chunk), 799, 4, 2);
    for (std::size_t slot = 0; slot < slots.slot_speaker.size(); ++slot) {
      const int g = r.clustering.assignment.labels(chunk, slot);
      const std::string& who = slots.slot_speaker[slot];
      c.expect(g >= 0, "active slot without a global id");
      if (g < 0) continue;
      const auto [it, fresh] = global_of.emplace(who, g);
      c.expect(it->second == g, who + " split across global ids");
      const auto [jt, fresh2] = speaker_of.emplace(g, who);
      c.expect(jt->second == who, "global id shared by two speakers");
    }
  }
  c.expect(global_of.size() == 4, "speakers mapped: " + std::to_string(global_of.size()));
  return o;
}

Outcome end_to_end() {
  Outcome o;
  Checker c(o);
  MeetingSpec spec;
  spec.duration_s = 60.0;
  spec.n_speakers = 4;
  spec.silence_fraction = 0.08;
  spec.overlap_fraction = 0.28;
  spec.rng_seed = 7;
  const GroundTruthScript script = generate(spec);
  PipelineInputs in;
  in.script = script;
  in.p_correct = 0.95;
  in.separation_ratio = 100.0;
  in.seed = 7;
  const PipelineRun r = run(in, PipelineConfig{});
  const double d = der(script_to_rttm(script), r.annotation).der;
  c.expect(d < 0.05, "DER " + std::to_string(d));
  c.expect(r.annotation.labels().size() == 4, "speakers " + std::to_string(r.annotation.labels().size()));

  const SpeakerFractions truth = measure_fractions(script);
  double silence = 0, overlap = 0, frames = 0;
  for (std::size_t f = 0; f < r.count.size() && r.aggregated.frame_time(f) < script.duration_s; ++f) {
    silence += r.count[f] == 0;
    overlap += r.count[f] >= 2;
    frames += 1;
  }
  c.expect(std::abs(silence / frames - truth.silence) <= 0.05, "silence share " + std::to_string(silence / frames));
  c.expect(std::abs(overlap / frames - truth.overlap) <= 0.05, "overlap share " + std::to_string(overlap / frames));
  return o;
}

Outcome inactive_sentinel() {
  Outcome o;
  Checker c(o);
  static const char* const labels[] = {"A", "B", "C"};
  GroundTruthScript s;
  s.recording_id = "sentinel";
  testing::add_rotation(s, 28.0, labels, 3);
  s.segments.push_back({TimeSpan(28.5, 29.5), "D"});
  s.duration_s = 30.0;
  PipelineInputs in;
  in.script = s;
  const PipelineRun r = run(in, PipelineConfig{});
  testing::TempDir dir;
  write_dump(r, dir.path());
  const std::string text = testing::slurp(dir / "assignment.csv");
  std::size_t sentinels = 0;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) sentinels += cell == "-2";
  }
  c.expect(sentinels == 8, "sentinel entries " + std::to_string(sentinels));
  c.expect(r.clustering.assignment.inactive_count() == 8, "inactive count");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime bound
    std::function<Outcome()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "windowing arithmetic", 1.0, windowing},
      {2, "frame count", 0.0, frame_count},
      {3, "powerset inventory", 0.0, powerset},
      {4, "aggregation oracles", 2.0, aggregation},
      {5, "RTTM round trip", 0.0, rttm_round_trip},
      {6, "DER correctness", 10.0, der_correctness},
      {7, "PLDA and clustering recovery", 5.0, clustering_recovery},
      {8, "permutation resolution", 0.0, permutation_resolution},
      {9, "end-to-end synthetic DER", 10.0, end_to_end},
      {10, "inactive sentinel", 0.0, inactive_sentinel},
  };
  int failures = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.body();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && cr.limit_s > 0.0 && secs >= cr.limit_s) {
      o.ok = false;
      o.detail = "took " + std::to_string(secs) + " s";
    }
    failures += !o.ok;
    std::printf("%s criterion %d: %s (%.3f s)%s%s\n", o.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                o.ok ? "" : " - ", o.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
