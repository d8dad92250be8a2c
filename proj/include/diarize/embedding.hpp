#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diarize/audio.hpp"
#include "diarize/core.hpp"
#include "diarize/plda.hpp"
#include "diarize/powerset.hpp"
#include "diarize/scoring.hpp"

namespace diarize {

/// Overlap-excluded pooling masks for every (chunk, local speaker).
struct CleanMasks {
  std::vector<MultilabelActivity> masks;  // per chunk: frames x S
  Matrix<std::uint8_t> fallback_used;     // chunks x S

  std::size_t clean_frames(std::size_t chunk, std::size_t slot) const;
};

/// m[t] = s[t] * 1[sum_k s_k[t] < 2]; falls back to the full activity when the
/// clean frame count drops below min_num_frames for an active speaker.
CleanMasks clean_masks(std::span<const MultilabelActivity> seg, int min_num_frames);

/// L2-normalised vectors per (chunk, local speaker).
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(std::size_t chunks, std::size_t speakers, std::size_t dim);

  std::size_t chunks() const { return chunks_; }
  std::size_t speakers() const { return speakers_; }
  std::size_t dim() const { return dim_; }

  bool valid(std::size_t c, std::size_t s) const { return valid_[c * speakers_ + s] != 0; }
  std::span<const double> vector(std::size_t c, std::size_t s) const;
  /// Normalises and stores. Vectors with zero norm or non-finite entries are stored as invalid.
  void set(std::size_t c, std::size_t s, std::span<const double> v);
  void invalidate(std::size_t c, std::size_t s);
  std::size_t valid_count() const;

 private:
  std::size_t chunks_ = 0;
  std::size_t speakers_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<std::uint8_t> valid_;
};

struct EmbedRequest {
  std::size_t chunk_index = 0;
  std::size_t slot = 0;
  TimeSpan chunk_span;
  std::span<const float> waveform;
  std::span<const std::uint8_t> mask;  // one value per segmentation frame
};

/// Speaker-embedding backend.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  /// Raw (not necessarily normalised) embedding; nullopt marks the slot invalid.
  virtual std::optional<std::vector<double>> embed(const EmbedRequest& request) const = 0;
};

/// PLDA-consistent vectors for the speakers of a ground-truth script. A slot's
/// global speaker is resolved with the oracle scorer's slot assignment.
class SyntheticEmbedder final : public Embedder {
 public:
  SyntheticEmbedder(GroundTruthScript script, PldaGenerator gen, int num_speakers, int max_overlap,
                    FrameRate fr = {});

  std::size_t dim() const override { return gen_.model.embedding_dim(); }
  std::optional<std::vector<double>> embed(const EmbedRequest& request) const override;

  /// LDA-space mean of a script speaker.
  std::span<const double> speaker_mean(const std::string& label) const;

 private:
  std::vector<double> draw_mean(std::uint64_t stream) const;

  GroundTruthScript script_;
  PldaGenerator gen_;
  int num_speakers_;
  int max_overlap_;
  FrameRate fr_;
  std::map<std::string, std::vector<double>> means_;
};

/// Free-function form of SyntheticEmbedder::embed for one slot.
std::optional<std::vector<double>> synthetic_embed(TimeSpan chunk_span, std::size_t chunk_index,
                                                   std::size_t local_speaker, std::span<const std::uint8_t> mask,
                                                   const SyntheticEmbedder& embedder);

/// Replays an EmbeddingSet.
class ImportedEmbedder final : public Embedder {
 public:
  explicit ImportedEmbedder(EmbeddingSet set) : set_(std::move(set)) {}
  std::size_t dim() const override { return set_.dim(); }
  std::optional<std::vector<double>> embed(const EmbedRequest& request) const override;

 private:
  EmbeddingSet set_;
};

/// Embeds every active (chunk, slot); inactive slots stay invalid.
EmbeddingSet extract_embeddings(const ChunkBatch& batch, std::span<const MultilabelActivity> seg,
                                const CleanMasks& masks, const Embedder& embedder);

// Embedding file layout (text):
//   diarize-embeddings 1
//   chunks <N> speakers <S> dim <D>
//   <c> <s> <D floats>     (one line per slot, N*S lines; invalid slots written as nan)
void write_embeddings(std::ostream& os, const EmbeddingSet& set);
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
/// Zero expected_* values skip that check. NaN rows become invalid; rows whose norm is
/// off by more than 1e-3 are normalised and reported through `warnings`.
EmbeddingSet import_embeddings(std::istream& is, std::size_t expected_chunks, std::size_t expected_speakers,
                               std::size_t expected_dim, std::vector<std::string>* warnings = nullptr);
EmbeddingSet import_embeddings(const std::filesystem::path& path, std::size_t expected_chunks,
                               std::size_t expected_speakers, std::size_t expected_dim,
                               std::vector<std::string>* warnings = nullptr);

}  // namespace diarize
