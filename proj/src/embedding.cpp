#include "diarize/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "diarize/kernels.hpp"
#include "text_io.hpp"

namespace diarize {
namespace {

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kMeanStream = 0x6d65616eULL;
constexpr std::uint64_t kUnmappedStream = 0x756e6d70ULL;

}  // namespace

std::size_t CleanMasks::clean_frames(std::size_t chunk, std::size_t slot) const {
  const auto& m = masks[chunk];
  std::size_t n = 0;
  for (std::size_t t = 0; t < m.rows(); ++t) n += m(t, slot);
  return n;
}

CleanMasks clean_masks(std::span<const MultilabelActivity> seg, int min_num_frames) {
  CleanMasks out;
  const std::size_t speakers = seg.empty() ? 0 : seg.front().cols();
  out.fallback_used = Matrix<std::uint8_t>(seg.size(), speakers, 0);
  for (std::size_t c = 0; c < seg.size(); ++c) {
    const auto& act = seg[c];
    MultilabelActivity mask(act.rows(), act.cols(), 0);
    for (std::size_t t = 0; t < act.rows(); ++t) {
      int active = 0;
      for (std::uint8_t v : act.row(t)) active += v != 0;
      if (active >= 2) continue;
      for (std::size_t k = 0; k < act.cols(); ++k) mask(t, k) = act(t, k) != 0;
    }
    for (std::size_t k = 0; k < act.cols(); ++k) {
      std::size_t clean = 0;
      std::size_t total = 0;
      for (std::size_t t = 0; t < act.rows(); ++t) {
        clean += mask(t, k);
        total += act(t, k) != 0;
      }
      if (total >= 1 && clean < static_cast<std::size_t>(min_num_frames)) {
        for (std::size_t t = 0; t < act.rows(); ++t) mask(t, k) = act(t, k) != 0;
        out.fallback_used(c, k) = 1;
      }
    }
    out.masks.push_back(std::move(mask));
  }
  return out;
}

EmbeddingSet::EmbeddingSet(std::size_t chunks, std::size_t speakers, std::size_t dim)
    : chunks_(chunks), speakers_(speakers), dim_(dim), data_(chunks * speakers * dim, 0.0), valid_(chunks * speakers, 0) {}

std::span<const double> EmbeddingSet::vector(std::size_t c, std::size_t s) const {
  return {data_.data() + (c * speakers_ + s) * dim_, dim_};
}

void EmbeddingSet::set(std::size_t c, std::size_t s, std::span<const double> v) {
  if (c >= chunks_ || s >= speakers_) throw ShapeError("embedding slot out of range");
  if (v.size() != dim_) {
    throw ShapeError("embedding has dimension " + std::to_string(v.size()) + ", expected " + std::to_string(dim_));
  }
  const bool finite = std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  const double norm = finite ? std::sqrt(kernels::dot(v, v)) : 0.0;
  double* dst = data_.data() + (c * speakers_ + s) * dim_;
  if (!(norm > 0.0)) {
    invalidate(c, s);
    return;
  }
  for (std::size_t i = 0; i < dim_; ++i) dst[i] = v[i] / norm;
  valid_[c * speakers_ + s] = 1;
}

void EmbeddingSet::invalidate(std::size_t c, std::size_t s) {
  double* dst = data_.data() + (c * speakers_ + s) * dim_;
  std::fill(dst, dst + dim_, 0.0);
  valid_[c * speakers_ + s] = 0;
}

std::size_t EmbeddingSet::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

SyntheticEmbedder::SyntheticEmbedder(GroundTruthScript script, PldaGenerator gen, int num_speakers, int max_overlap,
                                     FrameRate fr)
    : script_(std::move(script)), gen_(std::move(gen)), num_speakers_(num_speakers), max_overlap_(max_overlap), fr_(fr) {
  gen_.model.validate();
  const auto labels = script_.speakers();
  for (std::size_t i = 0; i < labels.size(); ++i) means_[labels[i]] = draw_mean(i);
}

std::vector<double> SyntheticEmbedder::draw_mean(std::uint64_t stream) const {
  auto rng = stream_rng(gen_.rng_seed, kMeanStream, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> mean(gen_.model.lda_dim());
  for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = std::sqrt(gen_.model.phi_across[j]) * normal(rng);
  return mean;
}

std::span<const double> SyntheticEmbedder::speaker_mean(const std::string& label) const {
  const auto it = means_.find(label);
  if (it == means_.end()) throw Error("unknown script speaker '" + label + "'");
  return it->second;
}

std::optional<std::vector<double>> SyntheticEmbedder::embed(const EmbedRequest& request) const {
  std::size_t clean = 0;
  for (std::uint8_t v : request.mask) clean += v != 0;
  if (clean == 0) return std::nullopt;

  const LocalSlots slots = assign_local_slots(script_, request.chunk_span.start_s,
                                              static_cast<std::int64_t>(request.mask.size()), num_speakers_,
                                              max_overlap_, fr_);
  std::vector<double> centre;
  if (request.slot < slots.slot_speaker.size()) {
    const auto m = speaker_mean(slots.slot_speaker[request.slot]);
    centre.assign(m.begin(), m.end());
  } else {
    // Activity the script does not explain (e.g. label noise) gets a speaker of its own.
    centre = draw_mean(kUnmappedStream ^ (request.chunk_index << 8) ^ request.slot);
  }

  auto rng = stream_rng(gen_.rng_seed, request.chunk_index, request.slot);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double pool = 1.0 / std::sqrt(static_cast<double>(clean));
  for (std::size_t j = 0; j < centre.size(); ++j) centre[j] += std::sqrt(gen_.model.phi_within[j]) * pool * normal(rng);
  return lift_to_embedding(centre, gen_.model);
}

std::optional<std::vector<double>> synthetic_embed(TimeSpan chunk_span, std::size_t chunk_index,
                                                   std::size_t local_speaker, std::span<const std::uint8_t> mask,
                                                   const SyntheticEmbedder& embedder) {
  return embedder.embed(EmbedRequest{chunk_index, local_speaker, chunk_span, {}, mask});
}

std::optional<std::vector<double>> ImportedEmbedder::embed(const EmbedRequest& request) const {
  if (request.chunk_index >= set_.chunks() || request.slot >= set_.speakers()) {
    throw ShapeError("imported embeddings do not cover chunk " + std::to_string(request.chunk_index) + ", slot " +
                     std::to_string(request.slot));
  }
  if (!set_.valid(request.chunk_index, request.slot)) return std::nullopt;
  const auto v = set_.vector(request.chunk_index, request.slot);
  return std::vector<double>(v.begin(), v.end());
}

EmbeddingSet extract_embeddings(const ChunkBatch& batch, std::span<const MultilabelActivity> seg,
                                const CleanMasks& masks, const Embedder& embedder) {
  if (seg.size() != batch.size() || masks.masks.size() != seg.size())
    throw ShapeError("embedding extraction: chunk counts of batch, activity and masks differ");
  const std::size_t speakers = seg.empty() ? 0 : seg.front().cols();
  EmbeddingSet out(seg.size(), speakers, embedder.dim());
  std::vector<std::uint8_t> column;
  for (std::size_t c = 0; c < seg.size(); ++c) {
    const auto& mask = masks.masks[c];
    column.resize(mask.rows());
    for (std::size_t s = 0; s < speakers; ++s) {
      bool any_activity = false;
      for (std::size_t t = 0; t < seg[c].rows(); ++t) any_activity |= seg[c](t, s) != 0;
      if (!any_activity) continue;
      for (std::size_t t = 0; t < mask.rows(); ++t) column[t] = mask(t, s);
      std::span<const float> wave;
      if (!batch.chunks.empty()) wave = batch.chunks.row(c);
      const auto v = embedder.embed(EmbedRequest{c, s, batch.chunk_span(c), wave, column});
      if (v) out.set(c, s, *v);
    }
  }
  return out;
}

void write_embeddings(std::ostream& os, const EmbeddingSet& set) {
  os << "diarize-embeddings 1\n";
  os << "chunks " << set.chunks() << " speakers " << set.speakers() << " dim " << set.dim() << '\n';
  for (std::size_t c = 0; c < set.chunks(); ++c) {
    for (std::size_t s = 0; s < set.speakers(); ++s) {
      os << c << ' ' << s;
      const auto v = set.vector(c, s);
      for (double x : v) {
        os << ' ';
        if (set.valid(c, s)) {
          detail::write_double(os, x);
        } else {
          os << "nan";
        }
      }
      os << '\n';
    }
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write embedding file '" + path.string() + "'");
  write_embeddings(os, set);
}

EmbeddingSet import_embeddings(std::istream& is, std::size_t expected_chunks, std::size_t expected_speakers,
                               std::size_t expected_dim, std::vector<std::string>* warnings) {
  detail::TokenReader rd(is, "embedding file");
  rd.expect("diarize-embeddings");
  if (rd.next_size("format version") != 1) rd.fail("unsupported format version");
  rd.expect("chunks");
  const std::size_t chunks = rd.next_size("chunk count");
  rd.expect("speakers");
  const std::size_t speakers = rd.next_size("speaker count");
  rd.expect("dim");
  const std::size_t dim = rd.next_size("dimension");

  const auto mismatch = [&](const char* what, std::size_t got, std::size_t want) {
    throw ShapeError("embedding file has " + std::to_string(got) + " " + what + ", expected " + std::to_string(want));
  };
  if (expected_chunks && chunks != expected_chunks) mismatch("chunks", chunks, expected_chunks);
  if (expected_speakers && speakers != expected_speakers) mismatch("speakers", speakers, expected_speakers);
  if (expected_dim && dim != expected_dim) mismatch("dimensions", dim, expected_dim);

  EmbeddingSet out(chunks, speakers, dim);
  std::vector<double> row(dim);
  std::size_t renormalised = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t s = 0; s < speakers; ++s) {
      if (rd.next_size("chunk index") != c || rd.next_size("speaker index") != s)
        rd.fail("records out of order at chunk " + std::to_string(c) + ", speaker " + std::to_string(s));
      bool has_nan = false;
      for (auto& x : row) {
        x = rd.next_double("embedding value");
        if (std::isnan(x)) has_nan = true;
        if (std::isinf(x)) {
          throw ParseError("embedding file: infinite value at chunk " + std::to_string(c) + ", speaker " +
                           std::to_string(s));
        }
      }
      if (has_nan) continue;
      const double norm = std::sqrt(kernels::dot(row, row));
      if (std::abs(norm - 1.0) > 1e-3) ++renormalised;
      out.set(c, s, row);
    }
  }
  if (!rd.at_end()) rd.fail("trailing data after the last record");
  if (renormalised > 0 && warnings != nullptr) {
    warnings->push_back("embedding file: normalised " + std::to_string(renormalised) + " vectors to unit length");
  }
  return out;
}

EmbeddingSet import_embeddings(const std::filesystem::path& path, std::size_t expected_chunks,
                               std::size_t expected_speakers, std::size_t expected_dim,
                               std::vector<std::string>* warnings) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open embedding file '" + path.string() + "'");
  return import_embeddings(is, expected_chunks, expected_speakers, expected_dim, warnings);
}

}  // namespace diarize
