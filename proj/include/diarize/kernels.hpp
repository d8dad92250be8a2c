#pragma once

// Numeric inner loops shared by aggregation, PLDA scoring and VB-HMM
// clustering. Each kernel has a portable scalar reference and optional
// vectorized variants; the variant is chosen once at runtime from the CPU
// feature set. Setting DIARIZE_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace diarize::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i w[i] * x[i] * y[i]
  double (*weighted_dot)(const double* w, const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();
/// Null when the variant was not compiled in for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Variants compiled in and supported by the running CPU, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table used by the library. Resolved once.
const KernelTable& active();

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline double weighted_dot(std::span<const double> w, std::span<const double> x, std::span<const double> y) {
  return active().weighted_dot(w.data(), x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

}  // namespace diarize::kernels
