#include <cstdlib>
#include <string>

#include "diarize/kernels.hpp"

namespace diarize::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool scalar_forced() {
  const char* env = std::getenv("DIARIZE_SIMD");
  return env != nullptr && std::string(env) == "scalar";
}

}  // namespace

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table(); t != nullptr && cpu_has_avx2_fma()) out.push_back(t);
  // Advanced SIMD is architecturally mandatory on AArch64.
  if (const KernelTable* t = neon_table(); t != nullptr) out.push_back(t);
  return out;
}

const KernelTable& active() {
  static const KernelTable& table = []() -> const KernelTable& {
    if (scalar_forced()) return scalar_table();
    return *available_tables().back();
  }();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace diarize::kernels
