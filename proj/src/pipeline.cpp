#include "diarize/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>

#include "diarize/rttm.hpp"
#include "text_io.hpp"

namespace diarize {
namespace {

[[noreturn]] void rethrow_in_stage(int stage, const char* name) {
  const std::string prefix = "stage " + std::to_string(stage) + " (" + name + "): ";
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const ParseError& e) {
    throw ParseError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

template <typename F>
void stage(PipelineRun& run, int index, const char* name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (...) {
    rethrow_in_stage(index, name);
  }
  const auto t1 = std::chrono::steady_clock::now();
  run.timings.push_back({name, std::chrono::duration<double, std::milli>(t1 - t0).count()});
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  return os;
}

void write_frame_time(std::ostream& os, const AggregatedActivity& agg, std::size_t t) {
  os << t << ',';
  detail::write_double(os, agg.frame_time(t));
}

}  // namespace

double PipelineRun::total_ms() const {
  double total = 0.0;
  for (const auto& t : timings) total += t.milliseconds;
  return total;
}

PipelineRun run_pipeline(const AudioBuffer& audio, const FrameScorer& scorer, const Embedder& embedder,
                         const PldaModel& plda, const PipelineConfig& cfg) {
  cfg.validate();
  plda.validate();
  if (embedder.dim() != plda.embedding_dim()) {
    throw ShapeError("embedder produces " + std::to_string(embedder.dim()) + "-dim vectors, PLDA expects " +
                     std::to_string(plda.embedding_dim()));
  }
  const FrameRate fr = cfg.frame_rate();
  const PowersetCodec codec = build_codec(cfg.max_local_speakers, cfg.max_overlap);

  PipelineRun run;
  run.config = cfg;
  run.recording_id = audio.recording_id;

  stage(run, 1, "windowing", [&] {
    run.batch = sliding_window(audio, cfg);
    run.layout = frame_layout(run.batch, fr);
  });

  stage(run, 2, "segmentation", [&] {
    run.scores.reserve(run.batch.size());
    run.raw.reserve(run.batch.size());
    run.activity.reserve(run.batch.size());
    for (std::size_t c = 0; c < run.batch.size(); ++c) {
      FrameScores s = scorer.score(run.batch.chunks.row(c), c, run.batch.chunk_span(c));
      if (s.rows() != run.layout.frames_per_chunk || s.cols() != static_cast<std::size_t>(codec.num_classes())) {
        throw ShapeError("scorer returned " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                         " for chunk " + std::to_string(c) + ", expected " +
                         std::to_string(run.layout.frames_per_chunk) + "x" + std::to_string(codec.num_classes()));
      }
      MultilabelActivity ml = to_multilabel(s, codec);
      run.activity.push_back(median_filter_time(ml, cfg.median_kernel_frames));
      run.raw.push_back(std::move(ml));
      run.scores.push_back(std::move(s));
    }
  });

  stage(run, 3, "aggregation", [&] {
    run.aggregated = overlap_add(std::span<const MultilabelActivity>(run.activity), run.layout.chunk_start_frames,
                                 run.layout.total_frames, fr);
    run.count = speaker_count(run.aggregated, cfg);
  });

  stage(run, 4, "masking", [&] { run.masks = clean_masks(run.activity, cfg.min_num_frames); });

  stage(run, 5, "embedding", [&] { run.embeddings = extract_embeddings(run.batch, run.activity, run.masks, embedder); });

  stage(run, 6, "clustering", [&] { run.clustering = assign(run.embeddings, run.activity, plda, cfg); });

  stage(run, 7, "reconstruction", [&] {
    run.clustered = reconstruct(std::span<const MultilabelActivity>(run.activity), run.clustering.assignment);
    if (run.clustering.assignment.n_clusters == 0) {
      run.annotation = Annotation(run.recording_id);
      run.global_activity = run.aggregated;
      run.global_activity.scores = Matrix<double>(run.layout.total_frames, 0);
      return;
    }
    run.annotation = to_diarization(run.clustered, run.layout.chunk_start_frames, run.layout.total_frames, cfg,
                                    run.recording_id, &run.global_activity);
  });
  return run;
}

AudioBuffer silent_buffer(const GroundTruthScript& script, int sample_rate_hz) {
  AudioBuffer buf;
  buf.sample_rate_hz = sample_rate_hz;
  buf.recording_id = script.recording_id;
  buf.samples.assign(static_cast<std::size_t>(std::llround(script.duration_s * sample_rate_hz)), 0.0F);
  return buf;
}

PipelineRun run(const PipelineInputs& inputs, const PipelineConfig& cfg) {
  cfg.validate();
  if (!inputs.audio && !inputs.script) throw ConfigError("pipeline needs audio, a script, or both");
  if (!inputs.scores && !inputs.script) throw ConfigError("no segmentation backend: supply scores or an oracle script");
  if (!inputs.embeddings && !inputs.script) {
    throw ConfigError("no embedding backend: supply embeddings or an oracle script");
  }

  const AudioBuffer audio = inputs.audio ? *inputs.audio : silent_buffer(*inputs.script, cfg.sample_rate_hz);
  const FrameRate fr = cfg.frame_rate();
  const PldaModel plda = inputs.plda ? *inputs.plda
                                     : generate_plda_model(cfg.embedding_dim, cfg.lda_dim, inputs.separation_ratio,
                                                           inputs.seed);

  std::unique_ptr<FrameScorer> scorer;
  if (inputs.scores) {
    scorer = std::make_unique<ImportedScorer>(*inputs.scores);
  } else {
    OracleScorerConfig oc;
    oc.p_correct = inputs.p_correct;
    oc.label_noise = inputs.label_noise;
    oc.rng_seed = inputs.seed;
    scorer = std::make_unique<OracleScorer>(*inputs.script, build_codec(cfg.max_local_speakers, cfg.max_overlap), oc,
                                            fr);
  }

  std::unique_ptr<Embedder> embedder;
  if (inputs.embeddings) {
    embedder = std::make_unique<ImportedEmbedder>(*inputs.embeddings);
  } else {
    embedder = std::make_unique<SyntheticEmbedder>(*inputs.script, PldaGenerator{plda, inputs.seed},
                                                   cfg.max_local_speakers, cfg.max_overlap, fr);
  }

  PipelineRun out = run_pipeline(audio, *scorer, *embedder, plda, cfg);
  if (out.recording_id.empty()) out.recording_id = "session";
  out.annotation.set_recording_id(out.recording_id);
  return out;
}

const std::vector<std::pair<int, std::string>>& dump_tables() {
  static const std::vector<std::pair<int, std::string>> tables = {
      {1, "chunks.csv"},   {2, "multilabel.csv"}, {3, "coverage.csv"},   {3, "activity.csv"},
      {3, "count.csv"},    {5, "embeddings.csv"}, {6, "assignment.csv"}, {7, "global_activity.csv"},
  };
  return tables;
}

void write_dump(const PipelineRun& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dump directory '" + dir.string() + "': " + ec.message());
  const std::size_t slots = static_cast<std::size_t>(run.config.max_local_speakers);

  {
    auto os = open_csv(dir / "chunks.csv");
    os << "chunk,start_sample,start_s,end_s,start_frame\n";
    for (std::size_t c = 0; c < run.batch.size(); ++c) {
      const TimeSpan span = run.batch.chunk_span(c);
      os << c << ',' << run.batch.chunk_start_samples[c] << ',';
      detail::write_double(os, span.start_s);
      os << ',';
      detail::write_double(os, span.end_s);
      os << ',' << run.layout.chunk_start_frames[c] << '\n';
    }
  }
  {
    auto os = open_csv(dir / "multilabel.csv");
    os << "chunk,frame";
    for (std::size_t s = 0; s < slots; ++s) os << ",slot_" << s;
    os << '\n';
    for (std::size_t c = 0; c < run.activity.size(); ++c) {
      const auto& m = run.activity[c];
      for (std::size_t t = 0; t < m.rows(); ++t) {
        os << c << ',' << t;
        for (std::size_t s = 0; s < m.cols(); ++s) os << ',' << static_cast<int>(m(t, s));
        os << '\n';
      }
    }
  }
  const AggregatedActivity& agg = run.aggregated;
  {
    auto os = open_csv(dir / "coverage.csv");
    os << "frame,time_s,coverage\n";
    for (std::size_t t = 0; t < agg.total_frames(); ++t) {
      write_frame_time(os, agg, t);
      os << ',' << agg.coverage[t] << '\n';
    }
  }
  {
    auto os = open_csv(dir / "activity.csv");
    os << "frame,time_s";
    for (std::size_t s = 0; s < agg.scores.cols(); ++s) os << ",slot_" << s;
    os << '\n';
    for (std::size_t t = 0; t < agg.total_frames(); ++t) {
      write_frame_time(os, agg, t);
      for (double v : agg.scores.row(t)) {
        os << ',';
        detail::write_double(os, v);
      }
      os << '\n';
    }
  }
  {
    auto os = open_csv(dir / "count.csv");
    os << "frame,time_s,count\n";
    for (std::size_t t = 0; t < run.count.size(); ++t) {
      write_frame_time(os, agg, t);
      os << ',' << run.count[t] << '\n';
    }
  }
  {
    auto os = open_csv(dir / "embeddings.csv");
    os << "chunk,slot,valid";
    for (std::size_t d = 0; d < run.embeddings.dim(); ++d) os << ",e" << d;
    os << '\n';
    for (std::size_t c = 0; c < run.embeddings.chunks(); ++c) {
      for (std::size_t s = 0; s < run.embeddings.speakers(); ++s) {
        const bool valid = run.embeddings.valid(c, s);
        os << c << ',' << s << ',' << (valid ? 1 : 0);
        for (std::size_t d = 0; d < run.embeddings.dim(); ++d) {
          os << ',';
          if (valid) {
            detail::write_double(os, run.embeddings.vector(c, s)[d]);
          } else {
            os << "nan";
          }
        }
        os << '\n';
      }
    }
  }
  {
    auto os = open_csv(dir / "assignment.csv");
    const Matrix<int>& labels = run.clustering.assignment.labels;
    os << "chunk";
    for (std::size_t s = 0; s < labels.cols(); ++s) os << ",slot_" << s;
    os << '\n';
    for (std::size_t c = 0; c < labels.rows(); ++c) {
      os << c;
      for (int v : labels.row(c)) os << ',' << v;
      os << '\n';
    }
  }
  {
    auto os = open_csv(dir / "global_activity.csv");
    const AggregatedActivity& g = run.global_activity;
    os << "frame,time_s";
    for (std::size_t k = 0; k < g.scores.cols(); ++k) os << ",cluster_" << k;
    os << '\n';
    for (std::size_t t = 0; t < g.total_frames(); ++t) {
      write_frame_time(os, g, t);
      for (double v : g.scores.row(t)) {
        os << ',';
        detail::write_double(os, v);
      }
      os << '\n';
    }
  }
  write_rttm(dir / (run.recording_id + ".rttm"), run.annotation);
}

}  // namespace diarize
