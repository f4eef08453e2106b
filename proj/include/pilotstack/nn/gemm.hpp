#pragma once

#include <cstddef>
#include <type_traits>

namespace pilot::nn {

/// Strided 2-D view; element (i, j) lives at data[i * row_stride + j * col_stride].
template <typename T>
struct MatrixRef {
  T* data = nullptr;
  std::ptrdiff_t row_stride = 0;
  std::ptrdiff_t col_stride = 1;

  MatrixRef() = default;
  MatrixRef(T* d, std::ptrdiff_t rs, std::ptrdiff_t cs) : data(d), row_stride(rs), col_stride(cs) {}
  template <typename U>
    requires std::is_convertible_v<U*, T*>
  MatrixRef(MatrixRef<U> other)  // NOLINT: implicit mutable -> const view
      : data(other.data), row_stride(other.row_stride), col_stride(other.col_stride) {}

  T& operator()(std::size_t i, std::size_t j) const {
    return data[static_cast<std::ptrdiff_t>(i) * row_stride + static_cast<std::ptrdiff_t>(j) * col_stride];
  }
};

template <typename T>
MatrixRef<T> row_major(T* data, std::size_t cols) {
  return {data, static_cast<std::ptrdiff_t>(cols), 1};
}

template <typename T>
MatrixRef<T> transposed(MatrixRef<T> m) {
  return {m.data, m.col_stride, m.row_stride};
}

/// C (m x n) = A (m x k) * B (k x n), or C += A * B when `accumulate`.
///
/// Packed, register-blocked kernel. The summation order over k is fixed and
/// independent of operand strides, so results are bitwise reproducible.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, MatrixRef<const T> a, MatrixRef<const T> b,
          MatrixRef<T> c, bool accumulate);

/// Textbook triple loop with T accumulation; reference for tests.
template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, MatrixRef<const T> a,
                    MatrixRef<const T> b, MatrixRef<T> c, bool accumulate);

}  // namespace pilot::nn
