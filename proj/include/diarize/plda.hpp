#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "diarize/core.hpp"

namespace diarize {

/// Two-covariance PLDA stored in the simultaneously diagonalised basis.
///
/// Embeddings x (embedding_dim) are centred by `mean`, projected with
/// `lda` (embedding_dim x lda_dim), length-normalised to sqrt(lda_dim) and
/// divided by sqrt(phi_within). In that space the within-speaker covariance is
/// the identity and the across-speaker covariance is diag(phi_across / phi_within).
struct PldaModel {
  std::vector<double> mean;  // embedding_dim
  Matrix<double> lda;        // embedding_dim x lda_dim
  std::vector<double> phi_across;
  std::vector<double> phi_within;

  std::size_t embedding_dim() const { return lda.rows(); }
  std::size_t lda_dim() const { return lda.cols(); }

  /// Across-speaker variance in the whitened scoring space.
  std::vector<double> across_ratio() const;

  void validate() const;
  bool operator==(const PldaModel&) const = default;
};

/// Centre, LDA, length-normalise, whiten.
std::vector<double> project(std::span<const double> x, const PldaModel& model);
/// Row-wise project.
Matrix<double> project_all(const Matrix<double>& x, const PldaModel& model);

/// Precomputed per-dimension coefficients of the closed-form LLR.
class PldaScorer {
 public:
  explicit PldaScorer(std::span<const double> across_ratio);
  explicit PldaScorer(const PldaModel& model) : PldaScorer(model.across_ratio()) {}

  /// log p(a, b | same) - log p(a, b | different) for whitened vectors.
  double llr(std::span<const double> a, std::span<const double> b) const;
  /// Symmetric pairwise LLR matrix of the rows of y.
  Matrix<double> pairwise(const Matrix<double>& y) const;

  std::size_t dim() const { return quad_.size(); }

 private:
  double constant_ = 0.0;
  std::vector<double> quad_;   // coefficient of a_d^2 + b_d^2
  std::vector<double> cross_;  // coefficient of a_d * b_d
};

double llr_score(std::span<const double> a, std::span<const double> b, const PldaModel& model);

/// Deterministic sampler for the generative model behind a PldaModel.
struct PldaGenerator {
  PldaModel model;
  std::uint64_t rng_seed = 0;
};

struct LabeledEmbeddings {
  Matrix<double> vectors;   // rows in LDA space, before whitening
  std::vector<int> labels;  // ground-truth speaker index per row
};

/// Speaker means ~ N(0, diag(phi_across)); observations ~ N(mean, diag(phi_within)).
LabeledEmbeddings sample_speakers_and_embeddings(const PldaGenerator& gen, int n_speakers,
                                                 std::span<const int> per_speaker_counts);

/// Lifts an LDA-space vector to a unit-norm embedding: normalise(mean + lda * z).
std::vector<double> lift_to_embedding(std::span<const double> z, const PldaModel& model);

/// Random model: orthonormal LDA basis, zero mean, phi_across = r/(1+r), phi_within = 1/(1+r)
/// for separation ratio r.
PldaModel generate_plda_model(int embedding_dim, int lda_dim, double separation_ratio, std::uint64_t seed);

// Model file layout (text):
//   diarize-plda 1
//   embedding_dim <D> lda_dim <d>
//   mean <D floats>
//   lda <D rows of d floats>
//   phi_across <d floats>
//   phi_within <d floats>
void save_plda(std::ostream& os, const PldaModel& model);
void save_plda(const std::filesystem::path& path, const PldaModel& model);
PldaModel load_plda(std::istream& is);
PldaModel load_plda(const std::filesystem::path& path);

}  // namespace diarize
