#include "diarize/plda.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "diarize/kernels.hpp"
#include "text_io.hpp"

namespace diarize {

std::vector<double> PldaModel::across_ratio() const {
  std::vector<double> out(phi_across.size());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = phi_across[d] / phi_within[d];
  return out;
}

void PldaModel::validate() const {
  const std::size_t d = lda_dim();
  if (embedding_dim() == 0 || d == 0) throw ShapeError("PLDA model has an empty projection");
  if (d > embedding_dim()) throw ShapeError("PLDA lda_dim exceeds embedding_dim");
  if (mean.size() != embedding_dim()) throw ShapeError("PLDA mean has the wrong dimension");
  if (phi_across.size() != d || phi_within.size() != d) throw ShapeError("PLDA variances have the wrong dimension");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(phi_across[i] >= 0.0) || !std::isfinite(phi_across[i])) throw Error("PLDA phi_across must be >= 0");
    if (!(phi_within[i] > 0.0) || !std::isfinite(phi_within[i])) throw Error("PLDA phi_within must be > 0");
  }
  for (double v : lda.flat()) {
    if (!std::isfinite(v)) throw Error("PLDA projection contains non-finite values");
  }
}

std::vector<double> project(std::span<const double> x, const PldaModel& model) {
  if (x.size() != model.embedding_dim()) {
    throw ShapeError("embedding has dimension " + std::to_string(x.size()) + ", PLDA model expects " +
                     std::to_string(model.embedding_dim()));
  }
  const std::size_t d = model.lda_dim();
  std::vector<double> y(d, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double centred = x[i] - model.mean[i];
    if (centred != 0.0) kernels::axpy(centred, model.lda.row(i), y);
  }
  const double norm = std::sqrt(kernels::dot(y, y));
  const double scale = norm > 0.0 ? std::sqrt(static_cast<double>(d)) / norm : 0.0;
  for (std::size_t j = 0; j < d; ++j) y[j] = y[j] * scale / std::sqrt(model.phi_within[j]);
  return y;
}

Matrix<double> project_all(const Matrix<double>& x, const PldaModel& model) {
  Matrix<double> out(x.rows(), model.lda_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto y = project(x.row(r), model);
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

PldaScorer::PldaScorer(std::span<const double> across_ratio) {
  quad_.resize(across_ratio.size());
  cross_.resize(across_ratio.size());
  for (std::size_t d = 0; d < across_ratio.size(); ++d) {
    const double a = across_ratio[d];
    const double same_det = 2.0 * a + 1.0;
    constant_ += std::log(a + 1.0) - 0.5 * std::log(same_det);
    quad_[d] = 0.5 / (a + 1.0) - 0.5 * (a + 1.0) / same_det;
    cross_[d] = a / same_det;
  }
}

double PldaScorer::llr(std::span<const double> a, std::span<const double> b) const {
  if (a.size() != dim() || b.size() != dim()) throw ShapeError("PLDA scoring dimension mismatch");
  return constant_ + kernels::weighted_dot(quad_, a, a) + kernels::weighted_dot(quad_, b, b) +
         kernels::weighted_dot(cross_, a, b);
}

Matrix<double> PldaScorer::pairwise(const Matrix<double>& y) const {
  if (y.cols() != dim()) throw ShapeError("PLDA scoring dimension mismatch");
  const std::size_t n = y.rows();
  std::vector<double> self(n);
  for (std::size_t i = 0; i < n; ++i) self[i] = kernels::weighted_dot(quad_, y.row(i), y.row(i));
  Matrix<double> out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double s = constant_ + self[i] + self[j] + kernels::weighted_dot(cross_, y.row(i), y.row(j));
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

double llr_score(std::span<const double> a, std::span<const double> b, const PldaModel& model) {
  return PldaScorer(model).llr(a, b);
}

LabeledEmbeddings sample_speakers_and_embeddings(const PldaGenerator& gen, int n_speakers,
                                                 std::span<const int> per_speaker_counts) {
  if (n_speakers < 1) throw Error("need at least one speaker");
  if (per_speaker_counts.size() != static_cast<std::size_t>(n_speakers))
    throw ShapeError("per_speaker_counts must list one count per speaker");
  int total = 0;
  for (int c : per_speaker_counts) {
    if (c < 1) throw Error("every speaker needs at least one observation");
    total += c;
  }
  const std::size_t d = gen.model.lda_dim();
  std::mt19937_64 rng(gen.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  LabeledEmbeddings out;
  out.vectors = Matrix<double>(static_cast<std::size_t>(total), d);
  std::size_t row = 0;
  std::vector<double> centre(d);
  for (int s = 0; s < n_speakers; ++s) {
    for (std::size_t j = 0; j < d; ++j) centre[j] = std::sqrt(gen.model.phi_across[j]) * normal(rng);
    for (int k = 0; k < per_speaker_counts[static_cast<std::size_t>(s)]; ++k, ++row) {
      for (std::size_t j = 0; j < d; ++j) out.vectors(row, j) = centre[j] + std::sqrt(gen.model.phi_within[j]) * normal(rng);
      out.labels.push_back(s);
    }
  }
  return out;
}

std::vector<double> lift_to_embedding(std::span<const double> z, const PldaModel& model) {
  if (z.size() != model.lda_dim()) throw ShapeError("LDA-space vector has the wrong dimension");
  std::vector<double> x(model.mean);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += kernels::dot(model.lda.row(i), z);
  const double norm = std::sqrt(kernels::dot(x, x));
  if (norm > 0.0) {
    for (double& v : x) v /= norm;
  }
  return x;
}

PldaModel generate_plda_model(int embedding_dim, int lda_dim, double separation_ratio, std::uint64_t seed) {
  if (lda_dim < 1 || embedding_dim < lda_dim) throw ConfigError("require 1 <= lda_dim <= embedding_dim");
  if (!(separation_ratio >= 0.0)) throw ConfigError("separation ratio must be non-negative");
  const auto big = static_cast<std::size_t>(embedding_dim);
  const auto small = static_cast<std::size_t>(lda_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);

  // Columns stored contiguously while orthonormalising (modified Gram-Schmidt).
  Matrix<double> cols(small, big);
  for (double& v : cols.flat()) v = normal(rng);
  for (std::size_t j = 0; j < small; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      const double proj = kernels::dot(cols.row(j), cols.row(k));
      kernels::axpy(-proj, cols.row(k), cols.row(j));
    }
    const double norm = std::sqrt(kernels::dot(cols.row(j), cols.row(j)));
    for (double& v : cols.row(j)) v /= norm;
  }

  PldaModel model;
  model.mean.assign(big, 0.0);
  model.lda = Matrix<double>(big, small);
  for (std::size_t i = 0; i < big; ++i) {
    for (std::size_t j = 0; j < small; ++j) model.lda(i, j) = cols(j, i);
  }
  for (std::size_t j = 0; j < small; ++j) {
    const double r = separation_ratio * std::exp2(jitter(rng));
    model.phi_across.push_back(r / (1.0 + r));
    model.phi_within.push_back(1.0 / (1.0 + r));
  }
  return model;
}

void save_plda(std::ostream& os, const PldaModel& model) {
  model.validate();
  os << "diarize-plda 1\n";
  os << "embedding_dim " << model.embedding_dim() << " lda_dim " << model.lda_dim() << '\n';
  os << "mean\n";
  detail::write_row(os, model.mean);
  os << "lda\n";
  for (std::size_t i = 0; i < model.embedding_dim(); ++i) detail::write_row(os, model.lda.row(i));
  os << "phi_across\n";
  detail::write_row(os, model.phi_across);
  os << "phi_within\n";
  detail::write_row(os, model.phi_within);
}

void save_plda(const std::filesystem::path& path, const PldaModel& model) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write PLDA model '" + path.string() + "'");
  save_plda(os, model);
}

PldaModel load_plda(std::istream& is) {
  detail::TokenReader rd(is, "PLDA model");
  rd.expect("diarize-plda");
  if (rd.next_size("format version") != 1) rd.fail("unsupported format version");
  rd.expect("embedding_dim");
  const std::size_t big = rd.next_size("embedding_dim");
  rd.expect("lda_dim");
  const std::size_t small = rd.next_size("lda_dim");
  if (big == 0 || small == 0 || small > big) rd.fail("invalid dimensions");

  const auto read_vec = [&](std::size_t n, const char* what) {
    std::vector<double> v(n);
    for (auto& x : v) x = rd.next_double(what);
    return v;
  };
  PldaModel model;
  rd.expect("mean");
  model.mean = read_vec(big, "mean");
  rd.expect("lda");
  model.lda = Matrix<double>(big, small);
  for (double& v : model.lda.flat()) v = rd.next_double("lda");
  rd.expect("phi_across");
  model.phi_across = read_vec(small, "phi_across");
  rd.expect("phi_within");
  model.phi_within = read_vec(small, "phi_within");
  if (!rd.at_end()) rd.fail("trailing data");
  model.validate();
  return model;
}

PldaModel load_plda(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open PLDA model '" + path.string() + "'");
  return load_plda(is);
}

}  // namespace diarize
