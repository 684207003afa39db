#include <cstdlib>
#include <string>

#include "hho/kernels.hpp"

namespace hho::kernels {

  const KernelTable* avx2_table_unchecked();

  const KernelTable* avx2_table() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
  }

  const KernelTable& active() {
    static const KernelTable& table = [] () -> const KernelTable& {
      const char* env = std::getenv("HHO_SIMD");
      if (env && std::string(env) == "scalar") return scalar_table();
      if (const KernelTable* t = avx2_table()) return *t;
      return scalar_table();
    }();
    return table;
  }

} // namespace hho::kernels
