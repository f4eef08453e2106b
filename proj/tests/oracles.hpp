#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance runner. Nothing here calls into the layer code it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "pilotstack/rng.hpp"

namespace oracle {

/// Direct four-deep loop convolution, HWC input, (kh, kw, c, f) kernel.
inline std::vector<double> conv2d(const std::vector<double>& in, std::size_t h, std::size_t w, std::size_t c,
                                  const std::vector<double>& kernel, std::size_t kh, std::size_t kw, std::size_t f,
                                  const std::vector<double>& bias, std::size_t stride) {
  const std::size_t oh = (h - kh) / stride + 1;
  const std::size_t ow = (w - kw) / stride + 1;
  std::vector<double> out(oh * ow * f, 0.0);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t o = 0; o < f; ++o) {
        double acc = bias[o];
        for (std::size_t i = 0; i < kh; ++i) {
          for (std::size_t j = 0; j < kw; ++j) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              acc += in[((y * stride + i) * w + (x * stride + j)) * c + ch] *
                     kernel[((i * kw + j) * c + ch) * f + o];
            }
          }
        }
        out[(y * ow + x) * f + o] = acc;
      }
    }
  }
  return out;
}

/// Central difference of a scalar function with respect to every coordinate of `x`.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& fn,
                                              std::vector<double> x, double eps) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = fn(x);
    x[i] = keep - eps;
    const double down = fn(x);
    x[i] = keep;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor).
inline double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

inline std::vector<double> random_vector(pilot::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Values bounded away from zero so that a +-eps probe never crosses a ReLU kink.
inline std::vector<double> random_away_from_zero(pilot::Rng& rng, std::size_t n, double gap) {
  std::vector<double> v(n);
  for (auto& x : v) {
    const double mag = rng.uniform(gap, 1.0);
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return v;
}

/// Learnable parameter count of the default network, layer by layer:
/// conv (kh * kw * c_in + 1) * f, dense (in + 1) * out.
inline std::size_t default_parameter_count() {
  struct Conv {
    std::size_t k, c_in, f;
  };
  const Conv convs[] = {{5, 3, 24}, {5, 24, 32}, {5, 32, 64}, {3, 64, 64}, {3, 64, 64}};
  std::size_t total = 0;
  for (const auto& cv : convs) total += (cv.k * cv.k * cv.c_in + 1) * cv.f;
  const std::size_t flat = 8 * 13 * 64;
  total += (flat + 1) * 100;
  total += (100 + 1) * 50;
  total += 2 * (50 + 1) * 1;
  return total;
}

}  // namespace oracle
