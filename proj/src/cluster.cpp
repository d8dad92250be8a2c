#include "diarize/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "diarize/kernels.hpp"

namespace diarize {
namespace {

double log_sum_exp(std::span<const double> v) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : v) peak = std::max(peak, x);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

struct ForwardBackward {
  Matrix<double> gamma;
  double log_px = 0.0;
};

ForwardBackward forward_backward(const Matrix<double>& log_emit, const Matrix<double>& log_trans,
                                 std::span<const double> log_init) {
  const std::size_t frames = log_emit.rows();
  const std::size_t states = log_emit.cols();
  Matrix<double> fwd(frames, states);
  Matrix<double> bwd(frames, states, 0.0);
  std::vector<double> terms(states);

  for (std::size_t s = 0; s < states; ++s) fwd(0, s) = log_init[s] + log_emit(0, s);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      for (std::size_t i = 0; i < states; ++i) terms[i] = fwd(t - 1, i) + log_trans(i, s);
      fwd(t, s) = log_emit(t, s) + log_sum_exp(terms);
    }
  }
  for (std::size_t t = frames - 1; t-- > 0;) {
    for (std::size_t i = 0; i < states; ++i) {
      for (std::size_t j = 0; j < states; ++j) terms[j] = log_trans(i, j) + log_emit(t + 1, j) + bwd(t + 1, j);
      bwd(t, i) = log_sum_exp(terms);
    }
  }

  ForwardBackward out;
  out.log_px = log_sum_exp(fwd.row(frames - 1));
  out.gamma = Matrix<double>(frames, states);
  for (std::size_t t = 0; t < frames; ++t) {
    double total = 0.0;
    for (std::size_t s = 0; s < states; ++s) {
      const double g = std::exp(fwd(t, s) + bwd(t, s) - out.log_px);
      out.gamma(t, s) = g;
      total += g;
    }
    for (std::size_t s = 0; s < states; ++s) out.gamma(t, s) /= total;
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix<double>& m) {
  std::vector<int> out(m.rows());
  for (std::size_t t = 0; t < m.rows(); ++t) out[t] = argmax_class(m.row(t));
  return out;
}

}  // namespace

std::size_t ClusterAssignment::inactive_count() const {
  return static_cast<std::size_t>(std::count(labels.flat().begin(), labels.flat().end(), kInactive));
}

std::vector<int> relabel_by_first_appearance(std::span<const int> labels) {
  std::map<int, int> remap;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

std::vector<int> ahc_from_similarity(const Matrix<double>& similarity, double threshold) {
  const std::size_t n = similarity.rows();
  if (n == 0) throw Error("agglomerative clustering needs at least one embedding");
  if (similarity.cols() != n) throw ShapeError("similarity matrix must be square");

  Matrix<double> sim = similarity;
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[i] = i;

  for (std::size_t remaining = n; remaining > 1; --remaining) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (alive[j] && sim(i, j) > best) {
          best = sim(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best >= threshold)) break;
    // Lance-Williams update for average linkage; cluster bj folds into bi.
    const double wi = static_cast<double>(size[bi]);
    const double wj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      const double merged = (wi * sim(bi, k) + wj * sim(bj, k)) / (wi + wj);
      sim(bi, k) = merged;
      sim(k, bi) = merged;
    }
    size[bi] += size[bj];
    alive[bj] = false;
    for (auto& o : owner) {
      if (o == bj) o = bi;
    }
  }
  std::vector<int> raw(owner.begin(), owner.end());
  return relabel_by_first_appearance(raw);
}

std::vector<int> ahc(const Matrix<double>& projected, const PldaScorer& scorer, double threshold) {
  if (projected.rows() == 0) throw Error("agglomerative clustering needs at least one embedding");
  return ahc_from_similarity(scorer.pairwise(projected), threshold);
}

VbxOptions VbxOptions::from(const PipelineConfig& cfg) {
  VbxOptions o;
  o.max_iters = cfg.vbx_max_iters;
  o.fa = cfg.vbx_fa;
  o.fb = cfg.vbx_fb;
  o.loop_p = cfg.vbx_loop_p;
  return o;
}

VbxState vbx_refine(const Matrix<double>& projected, std::span<const int> init_labels,
                    std::span<const double> across_ratio, const VbxOptions& opts) {
  const std::size_t units = projected.rows();
  const std::size_t dim = projected.cols();
  if (units == 0) throw Error("VB-HMM refinement needs at least one unit");
  if (init_labels.size() != units) throw ShapeError("VB-HMM: one initial label per unit required");
  if (across_ratio.size() != dim) throw ShapeError("VB-HMM: across-speaker variance has the wrong dimension");

  const std::vector<int> init = relabel_by_first_appearance(init_labels);
  const std::size_t speakers = static_cast<std::size_t>(*std::max_element(init.begin(), init.end())) + 1;

  // Per-unit constant of the log Gaussian and the rotated observations.
  std::vector<double> unit_const(units);
  Matrix<double> rho(units, dim);
  std::vector<double> sqrt_phi(dim);
  for (std::size_t d = 0; d < dim; ++d) sqrt_phi[d] = std::sqrt(across_ratio[d]);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t t = 0; t < units; ++t) {
    const auto y = projected.row(t);
    unit_const[t] = -0.5 * (kernels::dot(y, y) + static_cast<double>(dim) * log_2pi);
    for (std::size_t d = 0; d < dim; ++d) rho(t, d) = y[d] * sqrt_phi[d];
  }

  Matrix<double> log_trans(speakers, speakers);
  const double stay = speakers == 1 ? 1.0 : opts.loop_p;
  const double move = speakers == 1 ? 0.0 : (1.0 - opts.loop_p) / static_cast<double>(speakers - 1);
  for (std::size_t i = 0; i < speakers; ++i) {
    for (std::size_t j = 0; j < speakers; ++j) log_trans(i, j) = std::log(i == j ? stay : move);
  }
  const std::vector<double> log_init(speakers, -std::log(static_cast<double>(speakers)));

  VbxState st;
  st.gamma = Matrix<double>(units, speakers, 0.0);
  for (std::size_t t = 0; t < units; ++t) st.gamma(t, static_cast<std::size_t>(init[t])) = 1.0;
  st.post_mean = Matrix<double>(speakers, dim);
  st.post_var = Matrix<double>(speakers, dim);

  const double ratio = opts.fa / opts.fb;
  Matrix<double> log_emit(units, speakers);
  std::vector<double> penalty_w(dim);
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    // Speaker-factor posteriors given the current responsibilities.
    double kl_term = 0.0;
    for (std::size_t s = 0; s < speakers; ++s) {
      double occupancy = 0.0;
      for (std::size_t t = 0; t < units; ++t) occupancy += st.gamma(t, s);
      auto mean = st.post_mean.row(s);
      auto var = st.post_var.row(s);
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::size_t t = 0; t < units; ++t) {
        if (st.gamma(t, s) != 0.0) kernels::axpy(st.gamma(t, s), rho.row(t), mean);
      }
      for (std::size_t d = 0; d < dim; ++d) {
        var[d] = 1.0 / (1.0 + ratio * occupancy * across_ratio[d]);
        mean[d] *= ratio * var[d];
        kl_term += std::log(var[d]) - var[d] - mean[d] * mean[d] + 1.0;
      }
    }

    // Fa-scaled expected log-likelihood of every unit under every speaker.
    for (std::size_t s = 0; s < speakers; ++s) {
      const auto mean = st.post_mean.row(s);
      const auto var = st.post_var.row(s);
      for (std::size_t d = 0; d < dim; ++d) penalty_w[d] = var[d] + mean[d] * mean[d];
      const double penalty = 0.5 * kernels::dot(penalty_w, across_ratio);
      for (std::size_t t = 0; t < units; ++t) {
        log_emit(t, s) = opts.fa * (kernels::dot(rho.row(t), mean) - penalty + unit_const[t]);
      }
    }

    ForwardBackward fb = forward_backward(log_emit, log_trans, log_init);
    const double elbo = fb.log_px + opts.fb * 0.5 * kl_term;
    if (!std::isfinite(elbo)) {
      throw NumericError("VB-HMM produced a non-finite ELBO at iteration " + std::to_string(iter));
    }
    st.gamma = std::move(fb.gamma);
    st.elbo_trace.push_back(elbo);
    st.iterations = iter + 1;
    if (iter > 0) {
      const double prev = st.elbo_trace[st.elbo_trace.size() - 2];
      if (elbo - prev < opts.rel_tolerance * std::abs(prev)) break;
    }
  }

  // Prune speakers that ended up with (almost) no responsibility.
  std::vector<std::size_t> keep;
  for (std::size_t s = 0; s < speakers; ++s) {
    double occupancy = 0.0;
    for (std::size_t t = 0; t < units; ++t) occupancy += st.gamma(t, s);
    if (occupancy >= opts.drop_threshold) keep.push_back(s);
  }
  st.dropped_speakers = static_cast<int>(speakers - keep.size());
  if (!keep.empty() && keep.size() < speakers) {
    Matrix<double> gamma(units, keep.size());
    Matrix<double> mean(keep.size(), dim);
    Matrix<double> var(keep.size(), dim);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      for (std::size_t t = 0; t < units; ++t) gamma(t, k) = st.gamma(t, keep[k]);
      std::copy_n(st.post_mean.row(keep[k]).begin(), dim, mean.row(k).begin());
      std::copy_n(st.post_var.row(keep[k]).begin(), dim, var.row(k).begin());
    }
    for (std::size_t t = 0; t < units; ++t) {
      double total = 0.0;
      for (double g : gamma.row(t)) total += g;
      for (double& g : gamma.row(t)) g /= total;
    }
    st.gamma = std::move(gamma);
    st.post_mean = std::move(mean);
    st.post_var = std::move(var);
  }
  st.labels = relabel_by_first_appearance(argmax_rows(st.gamma));
  return st;
}

ClusteringResult assign(const EmbeddingSet& embeddings, std::span<const MultilabelActivity> seg,
                        const PldaModel& model, const PipelineConfig& cfg) {
  if (seg.size() != embeddings.chunks()) throw ShapeError("clustering: activity and embeddings differ in chunk count");
  const std::size_t speakers = embeddings.speakers();
  ClusteringResult out;
  out.assignment.labels = Matrix<int>(embeddings.chunks(), speakers, ClusterAssignment::kInactive);

  for (std::size_t c = 0; c < embeddings.chunks(); ++c) {
    if (seg[c].cols() != speakers) throw ShapeError("clustering: activity and embeddings differ in speaker count");
    for (std::size_t s = 0; s < speakers; ++s) {
      bool active = false;
      for (std::size_t t = 0; t < seg[c].rows() && !active; ++t) active = seg[c](t, s) != 0;
      if (active && embeddings.valid(c, s)) out.units.emplace_back(c, s);
    }
  }
  if (out.units.empty()) return out;

  Matrix<double> projected(out.units.size(), model.lda_dim());
  for (std::size_t u = 0; u < out.units.size(); ++u) {
    const auto [c, s] = out.units[u];
    const auto y = project(embeddings.vector(c, s), model);
    std::copy(y.begin(), y.end(), projected.row(u).begin());
  }

  const PldaScorer scorer(model);
  out.ahc_labels = ahc(projected, scorer, cfg.ahc_threshold);
  out.vbx = vbx_refine(projected, out.ahc_labels, model.across_ratio(), VbxOptions::from(cfg));

  for (std::size_t u = 0; u < out.units.size(); ++u) {
    const auto [c, s] = out.units[u];
    out.assignment.labels(c, s) = out.vbx.labels[u];
  }
  out.assignment.n_clusters = *std::max_element(out.vbx.labels.begin(), out.vbx.labels.end()) + 1;
  return out;
}

}  // namespace diarize
