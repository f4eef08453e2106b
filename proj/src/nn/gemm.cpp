#include "pilotstack/nn/gemm.hpp"

#include <algorithm>
#include <type_traits>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace pilot::nn {

namespace {

template <typename T>
struct Blocking;

#if defined(__AVX512F__)
template <>
struct Blocking<float> {
  static constexpr std::size_t mr = 12;
  static constexpr std::size_t nr = 32;
};
#else
template <>
struct Blocking<float> {
  static constexpr std::size_t mr = 8;
  static constexpr std::size_t nr = 16;
};
#endif

template <>
struct Blocking<double> {
  static constexpr std::size_t mr = 4;
  static constexpr std::size_t nr = 8;
};

constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 1024;

// Portable micro-kernel: tile (MR x NR) = sum_p a[p][i] * b[p][j].
template <typename T, std::size_t MR, std::size_t NR>
void kernel_generic(std::size_t kc, const T* __restrict a, const T* __restrict b, T* __restrict tile) {
  T acc[MR][NR] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    const T* bp = b + p * NR;
    const T* ap = a + p * MR;
    for (std::size_t i = 0; i < MR; ++i) {
      const T av = ap[i];
      for (std::size_t j = 0; j < NR; ++j) acc[i][j] += av * bp[j];
    }
  }
  for (std::size_t i = 0; i < MR; ++i)
    for (std::size_t j = 0; j < NR; ++j) tile[i * NR + j] = acc[i][j];
}

#if defined(__AVX512F__)
void kernel_avx512(std::size_t kc, const float* __restrict a, const float* __restrict b,
                   float* __restrict tile) {
  constexpr std::size_t MR = Blocking<float>::mr;
  constexpr std::size_t NR = Blocking<float>::nr;
  __m512 acc0[MR];
  __m512 acc1[MR];
  for (std::size_t i = 0; i < MR; ++i) {
    acc0[i] = _mm512_setzero_ps();
    acc1[i] = _mm512_setzero_ps();
  }
  for (std::size_t p = 0; p < kc; ++p) {
    const __m512 b0 = _mm512_loadu_ps(b + p * NR);
    const __m512 b1 = _mm512_loadu_ps(b + p * NR + 16);
    const float* ap = a + p * MR;
    for (std::size_t i = 0; i < MR; ++i) {
      const __m512 av = _mm512_set1_ps(ap[i]);
      acc0[i] = _mm512_fmadd_ps(av, b0, acc0[i]);
      acc1[i] = _mm512_fmadd_ps(av, b1, acc1[i]);
    }
  }
  for (std::size_t i = 0; i < MR; ++i) {
    _mm512_storeu_ps(tile + i * NR, acc0[i]);
    _mm512_storeu_ps(tile + i * NR + 16, acc1[i]);
  }
}
#endif

template <typename T>
void micro_kernel(std::size_t kc, const T* a, const T* b, T* tile) {
  constexpr std::size_t MR = Blocking<T>::mr;
  constexpr std::size_t NR = Blocking<T>::nr;
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    kernel_avx512(kc, a, b, tile);
    return;
  }
#endif
  kernel_generic<T, MR, NR>(kc, a, b, tile);
}

template <typename T>
std::vector<T>& scratch(int which) {
  thread_local std::vector<T> buffers[3];
  return buffers[which];
}

template <typename T>
void gemm_blocked(std::size_t m, std::size_t n, std::size_t k, MatrixRef<const T> a,
                  MatrixRef<const T> b, MatrixRef<T> c) {
  constexpr std::size_t MR = Blocking<T>::mr;
  constexpr std::size_t NR = Blocking<T>::nr;
  auto& pack_a = scratch<T>(0);
  auto& pack_b = scratch<T>(1);
  auto& tile_buf = scratch<T>(2);
  pack_a.resize(kKc * kMc);
  pack_b.resize(kKc * (kNc + NR));
  tile_buf.resize(MR * NR);
  T* tile = tile_buf.data();

  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    const std::size_t n_panels = (nc + NR - 1) / NR;
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      // Pack B: panel jb holds rows pc..pc+kc of columns jb*NR.., zero padded.
      for (std::size_t jb = 0; jb < n_panels; ++jb) {
        T* dst = pack_b.data() + jb * kc * NR;
        const std::size_t j0 = jc + jb * NR;
        const std::size_t cols = std::min(NR, n - j0);
        for (std::size_t p = 0; p < kc; ++p) {
          const T* src = &b(pc + p, j0);
          T* row = dst + p * NR;
          if (b.col_stride == 1) {
            std::copy(src, src + cols, row);
          } else {
            for (std::size_t j = 0; j < cols; ++j) row[j] = src[static_cast<std::ptrdiff_t>(j) * b.col_stride];
          }
          std::fill(row + cols, row + NR, T{0});
        }
      }
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        const std::size_t m_panels = (mc + MR - 1) / MR;
        for (std::size_t ib = 0; ib < m_panels; ++ib) {
          T* dst = pack_a.data() + ib * kc * MR;
          const std::size_t i0 = ic + ib * MR;
          const std::size_t rows = std::min(MR, m - i0);
          if (a.row_stride == 1) {
            for (std::size_t p = 0; p < kc; ++p) {
              const T* src = &a(i0, pc + p);
              T* col = dst + p * MR;
              std::copy(src, src + rows, col);
              std::fill(col + rows, col + MR, T{0});
            }
          } else {
            for (std::size_t i = 0; i < MR; ++i) {
              if (i < rows) {
                const T* src = &a(i0 + i, pc);
                for (std::size_t p = 0; p < kc; ++p) dst[p * MR + i] = src[static_cast<std::ptrdiff_t>(p) * a.col_stride];
              } else {
                for (std::size_t p = 0; p < kc; ++p) dst[p * MR + i] = T{0};
              }
            }
          }
        }
        for (std::size_t jb = 0; jb < n_panels; ++jb) {
          const std::size_t j0 = jc + jb * NR;
          const std::size_t cols = std::min(NR, n - j0);
          for (std::size_t ib = 0; ib < m_panels; ++ib) {
            const std::size_t i0 = ic + ib * MR;
            const std::size_t rows = std::min(MR, m - i0);
            micro_kernel<T>(kc, pack_a.data() + ib * kc * MR, pack_b.data() + jb * kc * NR, tile);
            if (c.col_stride == 1) {
              for (std::size_t i = 0; i < rows; ++i) {
                T* dst = &c(i0 + i, j0);
                const T* src = tile + i * NR;
                for (std::size_t j = 0; j < cols; ++j) dst[j] += src[j];
              }
            } else {
              for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < cols; ++j) c(i0 + i, j0 + j) += tile[i * NR + j];
            }
          }
        }
      }
    }
  }
}

std::size_t padded(std::size_t v, std::size_t block) { return (v + block - 1) / block * block; }

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, MatrixRef<const T> a, MatrixRef<const T> b,
          MatrixRef<T> c, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) c(i, j) = T{0};
  }
  if (m == 0 || n == 0 || k == 0) return;
  constexpr std::size_t MR = Blocking<T>::mr;
  constexpr std::size_t NR = Blocking<T>::nr;
  // C^T = B^T A^T performs the same per-element summation; pick whichever
  // orientation wastes fewer padded lanes.
  if (padded(n, MR) * padded(m, NR) < padded(m, MR) * padded(n, NR)) {
    gemm_blocked<T>(n, m, k, transposed(b), transposed(a), transposed(c));
  } else {
    gemm_blocked<T>(m, n, k, a, b, c);
  }
}

template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, MatrixRef<const T> a,
                    MatrixRef<const T> b, MatrixRef<T> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T sum = accumulate ? c(i, j) : T{0};
      for (std::size_t p = 0; p < k; ++p) sum += a(i, p) * b(p, j);
      c(i, j) = sum;
    }
  }
}

template void gemm<float>(std::size_t, std::size_t, std::size_t, MatrixRef<const float>,
                          MatrixRef<const float>, MatrixRef<float>, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t, MatrixRef<const double>,
                           MatrixRef<const double>, MatrixRef<double>, bool);
template void gemm_reference<float>(std::size_t, std::size_t, std::size_t, MatrixRef<const float>,
                                    MatrixRef<const float>, MatrixRef<float>, bool);
template void gemm_reference<double>(std::size_t, std::size_t, std::size_t, MatrixRef<const double>,
                                     MatrixRef<const double>, MatrixRef<double>, bool);

}  // namespace pilot::nn
