// Reference kernels. Plain loops, no intrinsics; the vectorized variants are tested against these.

#include <cmath>

#include "hho/kernels.hpp"

namespace hho::kernels {

  namespace {

    void cross_gram(const double* a, std::size_t na, const double* b, std::size_t nb,
                    const double* c, std::size_t npts, double* out) {
      for (std::size_t j = 0; j < nb; ++j) {
        const double* bj = b + j * npts;
        for (std::size_t i = 0; i < na; ++i) {
          const double* ai = a + i * npts;
          double s = 0.;
          for (std::size_t q = 0; q < npts; ++q) s += c[q] * ai[q] * bj[q];
          out[j * na + i] = s;
        }
      }
    }

    void gram(const double* a, std::size_t n, const double* c, std::size_t npts, double* out) {
      for (std::size_t j = 0; j < n; ++j) {
        const double* aj = a + j * npts;
        for (std::size_t i = j; i < n; ++i) {
          const double* ai = a + i * npts;
          double s = 0.;
          for (std::size_t q = 0; q < npts; ++q) s += c[q] * ai[q] * aj[q];
          out[j * n + i] = s;
          out[i * n + j] = s;
        }
      }
    }

    void moments(const double* a, std::size_t n, const double* c, std::size_t npts, double* out) {
      for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a + i * npts;
        double s = 0.;
        for (std::size_t q = 0; q < npts; ++q) s += c[q] * ai[q];
        out[i] = s;
      }
    }

    void mean_curvature(const double* z1, const double* z2, std::size_t npts,
                        double* a1, double* a2, double* a11, double* a12, double* a22) {
      for (std::size_t q = 0; q < npts; ++q) {
        const double s = 1. + z1[q] * z1[q] + z2[q] * z2[q];
        const double inv = 1. / std::sqrt(s);
        a1[q] = z1[q] * inv;
        a2[q] = z2[q] * inv;
        if (a11) {
          const double r = inv * inv * inv;
          a11[q] = r * (1. + z2[q] * z2[q]);
          a12[q] = -r * z1[q] * z2[q];
          a22[q] = r * (1. + z1[q] * z1[q]);
        }
      }
    }

    const KernelTable table{"scalar", &cross_gram, &gram, &moments, &mean_curvature};

  } // namespace

  const KernelTable& scalar_table() { return table; }

} // namespace hho::kernels
