#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "diarize/cluster.hpp"
#include "oracles.hpp"

using namespace diarize;

namespace {

// Naive average linkage: recompute every cluster-pair mean from the original matrix.
std::vector<int> naive_average_linkage(const Matrix<double>& sim, double threshold) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < sim.rows(); ++i) clusters.push_back({i});
  while (clusters.size() > 1) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double total = 0;
        for (std::size_t i : clusters[a]) {
          for (std::size_t j : clusters[b]) total += sim(i, j);
        }
        const double avg = total / static_cast<double>(clusters[a].size() * clusters[b].size());
        if (avg > best) {
          best = avg;
          ba = a;
          bb = b;
        }
      }
    }
    if (best < threshold) break;
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  std::vector<int> raw(sim.rows());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t i : clusters[c]) raw[i] = static_cast<int>(*std::min_element(clusters[c].begin(), clusters[c].end()));
  }
  return relabel_by_first_appearance(raw);
}

struct GeneratedUnits {
  PldaModel model;
  Matrix<double> projected;
  std::vector<int> truth;
};

GeneratedUnits generated_units(int speakers, int per_speaker, std::uint64_t seed) {
  GeneratedUnits g;
  g.model = generate_plda_model(256, 128, 100.0, seed);
  const std::vector<int> counts(static_cast<std::size_t>(speakers), per_speaker);
  const LabeledEmbeddings data = sample_speakers_and_embeddings(PldaGenerator{g.model, seed + 1}, speakers, counts);
  Matrix<double> emb(data.vectors.rows(), g.model.embedding_dim());
  for (std::size_t r = 0; r < emb.rows(); ++r) {
    const auto e = lift_to_embedding(data.vectors.row(r), g.model);
    std::copy(e.begin(), e.end(), emb.row(r).begin());
  }
  g.projected = project_all(emb, g.model);
  g.truth = data.labels;
  return g;
}

}  // namespace

TEST_CASE("AHC elementary cases") {
  Matrix<double> low(3, 3, -5.0);
  CHECK(ahc_from_similarity(low, 0.0) == std::vector<int>{0, 1, 2});
  CHECK(ahc_from_similarity(Matrix<double>(1, 1, 0.0), 0.0) == std::vector<int>{0});

  Matrix<double> groups(6, 6, -20.0);
  const std::vector<int> truth = {0, 1, 0, 1, 1, 0};
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      if (truth[i] == truth[j]) groups(i, j) = 20.0 + static_cast<double>(i + j);
    }
  }
  CHECK(ahc_from_similarity(groups, 0.0) == truth);
  CHECK_THROWS_AS(ahc_from_similarity(Matrix<double>(2, 3), 0.0), ShapeError);
}

TEST_CASE("AHC matches naive average linkage") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t size = 2 + rng() % 12;
    Matrix<double> sim(size, size, 0.0);
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = i + 1; j < size; ++j) sim(i, j) = sim(j, i) = n(rng);
    }
    const double thr = n(rng) * 0.5;
    CHECK(ahc_from_similarity(sim, thr) == naive_average_linkage(sim, thr));
  }
}

TEST_CASE("relabel by first appearance") {
  const std::vector<int> in = {7, 7, 3, 9, 3, 7};
  CHECK(relabel_by_first_appearance(in) == std::vector<int>{0, 0, 1, 2, 1, 0});
}

TEST_CASE("VB-HMM invariants on generated data") {
  const GeneratedUnits g = generated_units(4, 10, 17);
  const PldaScorer scorer(g.model);
  const std::vector<int> init = ahc(g.projected, scorer, 0.6);
  const VbxState st = vbx_refine(g.projected, init, g.model.across_ratio(), VbxOptions{});
  CHECK(oracle::adjusted_rand_index(st.labels, g.truth) == 1.0);
  for (std::size_t t = 0; t < st.gamma.rows(); ++t) {
    double total = 0.0;
    for (double v : st.gamma.row(t)) total += v;
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
  REQUIRE(!st.elbo_trace.empty());
  for (std::size_t i = 1; i < st.elbo_trace.size(); ++i) {
    CHECK(st.elbo_trace[i] >= st.elbo_trace[i - 1] - 1e-8 * std::abs(st.elbo_trace[i - 1]));
  }
  CHECK(st.iterations >= 1);
  CHECK(st.iterations <= 20);
}

TEST_CASE("VB-HMM keeps a correct labelling") {
  const GeneratedUnits g = generated_units(3, 8, 5);
  const VbxState st = vbx_refine(g.projected, g.truth, g.model.across_ratio(), VbxOptions{});
  CHECK(st.labels == g.truth);
  CHECK(st.dropped_speakers == 0);
}

TEST_CASE("VB-HMM with one unit") {
  const GeneratedUnits g = generated_units(1, 1, 3);
  const std::vector<int> init = {0};
  const VbxState st = vbx_refine(g.projected, init, g.model.across_ratio(), VbxOptions{});
  REQUIRE(st.gamma.rows() == 1);
  REQUIRE(st.gamma.cols() == 1);
  CHECK(st.gamma(0, 0) == doctest::Approx(1.0));
  CHECK(st.labels == std::vector<int>{0});
}

TEST_CASE("VB-HMM merges a spurious split") {
  // One speaker split in two by the initial labels: one cluster loses all units.
  const GeneratedUnits g = generated_units(1, 12, 8);
  std::vector<int> init(12, 0);
  for (std::size_t i = 6; i < 12; ++i) init[i] = 1;
  const VbxState st = vbx_refine(g.projected, init, g.model.across_ratio(), VbxOptions{});
  std::set<int> distinct(st.labels.begin(), st.labels.end());
  CHECK(distinct.size() == 1);
}

TEST_CASE("VB-HMM reports non-finite input") {
  GeneratedUnits g = generated_units(2, 3, 1);
  g.projected(2, 5) = std::numeric_limits<double>::quiet_NaN();
  try {
    vbx_refine(g.projected, g.truth, g.model.across_ratio(), VbxOptions{});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
  const std::vector<int> short_init = {0};
  CHECK_THROWS_AS(vbx_refine(g.projected, short_init, g.model.across_ratio(), VbxOptions{}), ShapeError);
}

TEST_CASE("assignment of slots") {
  const PldaModel model = generate_plda_model(16, 8, 100.0, 2);
  const PipelineConfig cfg = [] {
    PipelineConfig c;
    c.embedding_dim = 16;
    c.lda_dim = 8;
    return c;
  }();
  {
    const std::vector<MultilabelActivity> seg = {MultilabelActivity(20, 4, 0), MultilabelActivity(20, 4, 0)};
    const ClusteringResult r = assign(EmbeddingSet(2, 4, 16), seg, model, cfg);
    CHECK(r.assignment.n_clusters == 0);
    CHECK(r.assignment.inactive_count() == 8);
  }
  {
    std::vector<MultilabelActivity> seg = {MultilabelActivity(20, 4, 0), MultilabelActivity(20, 4, 0)};
    seg[1](3, 2) = 1;
    EmbeddingSet set(2, 4, 16);
    std::vector<double> v(16, 0.0);
    v[0] = 1.0;
    set.set(1, 2, v);
    const ClusteringResult r = assign(set, seg, model, cfg);
    CHECK(r.assignment.n_clusters == 1);
    CHECK(r.assignment.labels(1, 2) == 0);
    CHECK(r.assignment.inactive_count() == 7);
  }
  {
    // Active slot without a usable embedding is reported with the sentinel.
    std::vector<MultilabelActivity> seg = {MultilabelActivity(20, 4, 0)};
    seg[0](0, 0) = 1;
    const ClusteringResult r = assign(EmbeddingSet(1, 4, 16), seg, model, cfg);
    CHECK(r.assignment.labels(0, 0) == ClusterAssignment::kInactive);
  }
}
