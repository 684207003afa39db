// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma and must only be
// entered after a runtime CPU check (see kernels_dispatch.cpp).

#include "hho/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <vector>

namespace hho::kernels {

  namespace {

    inline double hsum(__m256d v) {
      const __m128d lo = _mm256_castpd256_pd128(v);
      const __m128d hi = _mm256_extractf128_pd(v, 1);
      const __m128d s = _mm_add_pd(lo, hi);
      return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
    }

    inline double dot(const double* x, const double* y, std::size_t n) {
      __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
      std::size_t q = 0;
      for (; q + 8 <= n; q += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + q), _mm256_loadu_pd(y + q), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + q + 4), _mm256_loadu_pd(y + q + 4), acc1);
      }
      if (q + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + q), _mm256_loadu_pd(y + q), acc0);
        q += 4;
      }
      double s = hsum(_mm256_add_pd(acc0, acc1));
      for (; q < n; ++q) s += x[q] * y[q];
      return s;
    }

    inline void scale(const double* c, const double* x, std::size_t n, double* out) {
      std::size_t q = 0;
      for (; q + 4 <= n; q += 4) {
        _mm256_storeu_pd(out + q, _mm256_mul_pd(_mm256_loadu_pd(c + q), _mm256_loadu_pd(x + q)));
      }
      for (; q < n; ++q) out[q] = c[q] * x[q];
    }

    std::vector<double>& scratch(std::size_t n) {
      thread_local std::vector<double> buffer;
      if (buffer.size() < n) buffer.resize(n);
      return buffer;
    }

    void cross_gram(const double* a, std::size_t na, const double* b, std::size_t nb,
                    const double* c, std::size_t npts, double* out) {
      double* t = scratch(npts).data();
      for (std::size_t j = 0; j < nb; ++j) {
        scale(c, b + j * npts, npts, t);
        for (std::size_t i = 0; i < na; ++i) out[j * na + i] = dot(a + i * npts, t, npts);
      }
    }

    void gram(const double* a, std::size_t n, const double* c, std::size_t npts, double* out) {
      double* t = scratch(npts).data();
      for (std::size_t j = 0; j < n; ++j) {
        scale(c, a + j * npts, npts, t);
        for (std::size_t i = j; i < n; ++i) {
          const double s = dot(a + i * npts, t, npts);
          out[j * n + i] = s;
          out[i * n + j] = s;
        }
      }
    }

    void moments(const double* a, std::size_t n, const double* c, std::size_t npts, double* out) {
      for (std::size_t i = 0; i < n; ++i) out[i] = dot(a + i * npts, c, npts);
    }

    void mean_curvature(const double* z1, const double* z2, std::size_t npts,
                        double* a1, double* a2, double* a11, double* a12, double* a22) {
      const __m256d one = _mm256_set1_pd(1.);
      std::size_t q = 0;
      for (; q + 4 <= npts; q += 4) {
        const __m256d x = _mm256_loadu_pd(z1 + q);
        const __m256d y = _mm256_loadu_pd(z2 + q);
        const __m256d xx = _mm256_mul_pd(x, x);
        const __m256d yy = _mm256_mul_pd(y, y);
        const __m256d s = _mm256_add_pd(one, _mm256_add_pd(xx, yy));
        const __m256d inv = _mm256_div_pd(one, _mm256_sqrt_pd(s));
        _mm256_storeu_pd(a1 + q, _mm256_mul_pd(x, inv));
        _mm256_storeu_pd(a2 + q, _mm256_mul_pd(y, inv));
        if (a11) {
          const __m256d r = _mm256_mul_pd(_mm256_mul_pd(inv, inv), inv);
          _mm256_storeu_pd(a11 + q, _mm256_mul_pd(r, _mm256_add_pd(one, yy)));
          _mm256_storeu_pd(a12 + q, _mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), r), _mm256_mul_pd(x, y)));
          _mm256_storeu_pd(a22 + q, _mm256_mul_pd(r, _mm256_add_pd(one, xx)));
        }
      }
      for (; q < npts; ++q) {
        const double s = 1. + z1[q] * z1[q] + z2[q] * z2[q];
        const double inv = 1. / std::sqrt(s);
        a1[q] = z1[q] * inv;
        a2[q] = z2[q] * inv;
        if (a11) {
          const double r = inv * inv * inv;
          a11[q] = r * (1. + z2[q] * z2[q]);
          a12[q] = -r * (z1[q] * z2[q]);
          a22[q] = r * (1. + z1[q] * z1[q]);
        }
      }
    }

    const KernelTable table{"avx2", &cross_gram, &gram, &moments, &mean_curvature};

  } // namespace

  const KernelTable* avx2_table_unchecked() { return &table; }

} // namespace hho::kernels

#else

namespace hho::kernels {
  const KernelTable* avx2_table_unchecked() { return nullptr; }
}

#endif
