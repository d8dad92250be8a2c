#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "diarize/config.hpp"
#include "diarize/core.hpp"
#include "diarize/embedding.hpp"
#include "diarize/plda.hpp"
#include "diarize/powerset.hpp"

namespace diarize {

/// Global identity of every (chunk, local slot); kInactive marks empty slots.
struct ClusterAssignment {
  static constexpr int kInactive = -2;

  Matrix<int> labels;  // chunks x S
  int n_clusters = 0;

  std::size_t inactive_count() const;
};

/// Average-linkage agglomeration on a similarity matrix: repeatedly merges the
/// pair of clusters with the highest mean pairwise similarity while it is at
/// least `threshold`. Labels are contiguous in order of first appearance.
std::vector<int> ahc_from_similarity(const Matrix<double>& similarity, double threshold);

/// AHC over pairwise PLDA log-likelihood ratios of projected vectors.
std::vector<int> ahc(const Matrix<double>& projected, const PldaScorer& scorer, double threshold);

struct VbxState {
  Matrix<double> gamma;       // units x speakers responsibilities
  Matrix<double> post_mean;   // speakers x dim, posterior means of the speaker factors
  Matrix<double> post_var;    // speakers x dim, posterior variances (diagonal)
  std::vector<double> elbo_trace;
  std::vector<int> labels;    // argmax of gamma, contiguous by first appearance
  int iterations = 0;
  int dropped_speakers = 0;
};

struct VbxOptions {
  int max_iters = 20;
  double fa = 0.07;
  double fb = 0.8;
  double loop_p = 0.9;
  double rel_tolerance = 1e-6;
  double drop_threshold = 1e-3;

  static VbxOptions from(const PipelineConfig& cfg);
};

/// VB-HMM refinement of an initial labelling. `projected` rows are ordered
/// chronologically and live in the whitened PLDA space; `across_ratio` is the
/// speaker-factor variance per dimension.
VbxState vbx_refine(const Matrix<double>& projected, std::span<const int> init_labels,
                    std::span<const double> across_ratio, const VbxOptions& opts);

struct ClusteringResult {
  ClusterAssignment assignment;
  std::vector<int> ahc_labels;
  VbxState vbx;
  std::vector<std::pair<std::size_t, std::size_t>> units;  // (chunk, slot) of each clustered row
};

/// Inactive slots get kInactive, the rest are clustered with AHC
/// followed by VB-HMM, and ids are renumbered by first chronological appearance.
ClusteringResult assign(const EmbeddingSet& embeddings, std::span<const MultilabelActivity> seg,
                        const PldaModel& model, const PipelineConfig& cfg);

/// Renumbers labels 0..k-1 in order of first appearance.
std::vector<int> relabel_by_first_appearance(std::span<const int> labels);

}  // namespace diarize
