// Data-parallel inner loops of quadrature-based assembly.
//
// Every kernel has a scalar reference version and, on x86-64, an AVX2+FMA version. The active
// table is picked once at startup from the CPU features; HHO_SIMD=scalar forces the reference
// kernels. Point-indexed inputs are column-major (npts x n) arrays, i.e. the values of one
// function at all points are contiguous.

#ifndef HHO_KERNELS_HPP
#define HHO_KERNELS_HPP

#include <cstddef>

namespace hho::kernels {

  /// out(i,j) = sum_q c[q] a(q,i) b(q,j); out is nA x nB column-major.
  using CrossGramFn = void (*)(const double* a, std::size_t na, const double* b, std::size_t nb,
                               const double* c, std::size_t npts, double* out);

  /// out(i,j) = sum_q c[q] a(q,i) a(q,j); symmetric, both triangles written.
  using GramFn = void (*)(const double* a, std::size_t n, const double* c, std::size_t npts, double* out);

  /// out(i) = sum_q c[q] a(q,i).
  using MomentsFn = void (*)(const double* a, std::size_t n, const double* c, std::size_t npts, double* out);

  /// Prescribed-mean-curvature flux a(z) = z / sqrt(1+|z|^2) and its Jacobian
  /// a_z = (1+|z|^2)^{-3/2} [[1+z2^2, -z1 z2], [-z1 z2, 1+z1^2]] at npts gradients.
  /// Any of the Jacobian outputs may be null to skip them.
  using MeanCurvatureFn = void (*)(const double* z1, const double* z2, std::size_t npts,
                                   double* a1, double* a2, double* a11, double* a12, double* a22);

  struct KernelTable {
    const char* name;
    CrossGramFn cross_gram;
    GramFn gram;
    MomentsFn moments;
    MeanCurvatureFn mean_curvature;
  };

  const KernelTable& scalar_table();

  /// AVX2 table, or nullptr when not compiled in or not supported by this CPU.
  const KernelTable* avx2_table();

  /// Table used by the library.
  const KernelTable& active();

} // namespace hho::kernels

#endif
