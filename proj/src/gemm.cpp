#include "sanet/gemm.hpp"

#include <algorithm>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace sanet::detail {
namespace {

// Register tile of the micro-kernel; NR doubles = 4 AVX-512 lanes.
constexpr int MR = 6;
constexpr int NR = 32;
// Cache blocking: packed B panel is KC*NC doubles, packed A panel MC*KC.
constexpr int KC = 256;
constexpr int NC = 512;
constexpr int MC = 132;

inline double elem(const double* p, int ld, bool trans, int row, int col) {
  return trans ? p[static_cast<long>(col) * ld + row]
               : p[static_cast<long>(row) * ld + col];
}

// Packs an mc x kc block of op(A) into MR-row panels, zero-padded:
// panel p holds out[k*MR + i] = op(A)[m0+p*MR+i][k0+k].
void pack_a(const double* a, int lda, bool trans, int m0, int k0, int mc,
            int kc, double* out) {
  for (int p = 0; p < mc; p += MR) {
    const int mr = std::min(MR, mc - p);
    for (int k = 0; k < kc; ++k) {
      for (int i = 0; i < mr; ++i)
        out[k * MR + i] = elem(a, lda, trans, m0 + p + i, k0 + k);
      for (int i = mr; i < MR; ++i) out[k * MR + i] = 0.0;
    }
    out += static_cast<long>(kc) * MR;
  }
}

// Packs a kc x nc block of op(B) into NR-column panels, zero-padded:
// panel q holds out[k*NR + j] = op(B)[k0+k][n0+q*NR+j].
void pack_b(const double* b, int ldb, bool trans, int k0, int n0, int kc,
            int nc, double* out) {
  for (int q = 0; q < nc; q += NR) {
    const int nr = std::min(NR, nc - q);
    if (!trans) {
      for (int k = 0; k < kc; ++k) {
        const double* src = b + static_cast<long>(k0 + k) * ldb + n0 + q;
        double* dst = out + static_cast<long>(k) * NR;
        for (int j = 0; j < nr; ++j) dst[j] = src[j];
        for (int j = nr; j < NR; ++j) dst[j] = 0.0;
      }
    } else {
      for (int k = 0; k < kc; ++k) {
        double* dst = out + static_cast<long>(k) * NR;
        for (int j = 0; j < nr; ++j)
          dst[j] = b[static_cast<long>(n0 + q + j) * ldb + (k0 + k)];
        for (int j = nr; j < NR; ++j) dst[j] = 0.0;
      }
    }
    out += static_cast<long>(kc) * NR;
  }
}

#if defined(__AVX512F__)

void kernel_full(int kc, const double* apan, const double* bpan, double* c,
                 int ldc, bool overwrite) {
  __m512d acc[MR][4];
  for (auto& row : acc)
    for (auto& v : row) v = _mm512_setzero_pd();
  for (int k = 0; k < kc; ++k) {
    const double* b = bpan + static_cast<long>(k) * NR;
    const __m512d b0 = _mm512_loadu_pd(b);
    const __m512d b1 = _mm512_loadu_pd(b + 8);
    const __m512d b2 = _mm512_loadu_pd(b + 16);
    const __m512d b3 = _mm512_loadu_pd(b + 24);
    const double* a = apan + static_cast<long>(k) * MR;
    for (int i = 0; i < MR; ++i) {
      const __m512d av = _mm512_set1_pd(a[i]);
      acc[i][0] = _mm512_fmadd_pd(av, b0, acc[i][0]);
      acc[i][1] = _mm512_fmadd_pd(av, b1, acc[i][1]);
      acc[i][2] = _mm512_fmadd_pd(av, b2, acc[i][2]);
      acc[i][3] = _mm512_fmadd_pd(av, b3, acc[i][3]);
    }
  }
  for (int i = 0; i < MR; ++i) {
    double* crow = c + static_cast<long>(i) * ldc;
    for (int j = 0; j < 4; ++j) {
      if (overwrite) {
        _mm512_storeu_pd(crow + 8 * j, acc[i][j]);
      } else {
        _mm512_storeu_pd(
            crow + 8 * j,
            _mm512_add_pd(_mm512_loadu_pd(crow + 8 * j), acc[i][j]));
      }
    }
  }
}

#else

void kernel_full(int kc, const double* apan, const double* bpan, double* c,
                 int ldc, bool overwrite) {
  double acc[MR][NR] = {};
  for (int k = 0; k < kc; ++k) {
    const double* b = bpan + static_cast<long>(k) * NR;
    const double* a = apan + static_cast<long>(k) * MR;
    for (int i = 0; i < MR; ++i) {
      const double av = a[i];
      for (int j = 0; j < NR; ++j) acc[i][j] += av * b[j];
    }
  }
  for (int i = 0; i < MR; ++i) {
    double* crow = c + static_cast<long>(i) * ldc;
    for (int j = 0; j < NR; ++j)
      crow[j] = overwrite ? acc[i][j] : crow[j] + acc[i][j];
  }
}

#endif

// Edge tile: same math through a stack buffer, storing only the valid
// mr x nr region.
void kernel_edge(int kc, int mr, int nr, const double* apan,
                 const double* bpan, double* c, int ldc, bool overwrite) {
  double acc[MR][NR] = {};
  for (int k = 0; k < kc; ++k) {
    const double* b = bpan + static_cast<long>(k) * NR;
    const double* a = apan + static_cast<long>(k) * MR;
    for (int i = 0; i < MR; ++i) {
      const double av = a[i];
      for (int j = 0; j < NR; ++j) acc[i][j] += av * b[j];
    }
  }
  for (int i = 0; i < mr; ++i) {
    double* crow = c + static_cast<long>(i) * ldc;
    for (int j = 0; j < nr; ++j)
      crow[j] = overwrite ? acc[i][j] : crow[j] + acc[i][j];
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          int lda, const double* b, int ldb, double* c, int ldc,
          bool accumulate) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    if (!accumulate) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) c[static_cast<long>(i) * ldc + j] = 0.0;
    }
    return;
  }

  thread_local std::vector<double> apack;
  thread_local std::vector<double> bpack;
  const int mc_panels = (MC + MR - 1) / MR;
  const int nc_panels = (NC + NR - 1) / NR;
  apack.resize(static_cast<size_t>(mc_panels) * MR * KC);
  bpack.resize(static_cast<size_t>(nc_panels) * NR * KC);

  for (int jc = 0; jc < n; jc += NC) {
    const int nc = std::min(NC, n - jc);
    for (int pc = 0; pc < k; pc += KC) {
      const int kc = std::min(KC, k - pc);
      pack_b(b, ldb, trans_b, pc, jc, kc, nc, bpack.data());
      const bool overwrite = (pc == 0) && !accumulate;
      for (int ic = 0; ic < m; ic += MC) {
        const int mc = std::min(MC, m - ic);
        pack_a(a, lda, trans_a, ic, pc, mc, kc, apack.data());
        for (int p = 0; p < mc; p += MR) {
          const int mr = std::min(MR, mc - p);
          const double* apan = apack.data() + static_cast<long>(p / MR) * kc * MR;
          for (int q = 0; q < nc; q += NR) {
            const int nr = std::min(NR, nc - q);
            const double* bpan =
                bpack.data() + static_cast<long>(q / NR) * kc * NR;
            double* ct = c + static_cast<long>(ic + p) * ldc + jc + q;
            if (mr == MR && nr == NR)
              kernel_full(kc, apan, bpan, ct, ldc, overwrite);
            else
              kernel_edge(kc, mr, nr, apan, bpan, ct, ldc, overwrite);
          }
        }
      }
    }
  }
}

}  // namespace sanet::detail
