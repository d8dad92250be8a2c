#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diarize/aggregate.hpp"
#include "diarize/audio.hpp"
#include "diarize/cluster.hpp"
#include "diarize/config.hpp"
#include "diarize/core.hpp"
#include "diarize/embedding.hpp"
#include "diarize/plda.hpp"
#include "diarize/powerset.hpp"
#include "diarize/reconstruct.hpp"
#include "diarize/scoring.hpp"

namespace diarize {

struct StageTiming {
  std::string stage;
  double milliseconds = 0.0;
};

/// Everything a run produced, stage by stage.
struct PipelineRun {
  PipelineConfig config;
  std::string recording_id;

  ChunkBatch batch;
  FrameLayout layout;
  std::vector<FrameScores> scores;          // chunks x (frames x K)
  std::vector<MultilabelActivity> raw;      // argmax decoded, before smoothing
  std::vector<MultilabelActivity> activity; // median-filtered, chunks x (frames x S)
  AggregatedActivity aggregated;            // total_frames x S
  std::vector<std::int32_t> count;          // total_frames
  CleanMasks masks;
  EmbeddingSet embeddings;
  ClusteringResult clustering;
  ClusteredSegmentation clustered;
  AggregatedActivity global_activity;  // total_frames x n_clusters
  Annotation annotation;
  std::vector<StageTiming> timings;

  double total_ms() const;
};

/// Runs every stage in order. Failures are rethrown with the same error type and
/// a message prefixed by the stage number and name.
PipelineRun run_pipeline(const AudioBuffer& audio, const FrameScorer& scorer, const Embedder& embedder,
                         const PldaModel& plda, const PipelineConfig& cfg);

/// Backend selection for `run`. Audio is optional when a script is given; the
/// windowing then runs over silence of the script's duration. Imported scores or
/// embeddings take precedence over the script-driven oracles.
struct PipelineInputs {
  std::optional<AudioBuffer> audio;
  std::optional<GroundTruthScript> script;
  std::optional<std::vector<FrameScores>> scores;
  std::optional<EmbeddingSet> embeddings;
  std::optional<PldaModel> plda;  // generated from the seed when absent

  double p_correct = 0.95;
  double label_noise = 0.0;
  double separation_ratio = 100.0;
  std::uint64_t seed = 0;
};

PipelineRun run(const PipelineInputs& inputs, const PipelineConfig& cfg);

/// Zero-filled buffer of the script's duration.
AudioBuffer silent_buffer(const GroundTruthScript& script, int sample_rate_hz);

/// Writes CSV intermediates plus `<recording>.rttm` into `dir` (created if missing).
void write_dump(const PipelineRun& run, const std::filesystem::path& dir);

/// CSV file names of the dump, indexed by stage (1..7).
const std::vector<std::pair<int, std::string>>& dump_tables();

}  // namespace diarize
