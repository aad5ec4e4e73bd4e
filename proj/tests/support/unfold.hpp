#pragma once

#include "dense_svd_oracle.hpp"
#include "vfxopt/tensor.hpp"

namespace oracle {

// (C*F) x (H*W): rows are (channel, frame), columns are pixels.
inline Matrix unfold_spatial(const vfxopt::LatentTensor &t) {
  const auto &s = t.shape();
  Matrix m(s.c * s.f, s.h * s.w);
  for (std::size_t i = 0; i < t.size(); ++i) {
    m.a[i] = t[i];
  }
  return m;
}

// (C*H*W) x F: rows are (channel, pixel), columns are frames.
inline Matrix unfold_temporal(const vfxopt::LatentTensor &t) {
  const auto &s = t.shape();
  const std::size_t plane = s.h * s.w;
  Matrix m(s.c * plane, s.f);
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t f = 0; f < s.f; ++f) {
      for (std::size_t p = 0; p < plane; ++p) {
        m(c * plane + p, f) = t[(c * s.f + f) * plane + p];
      }
    }
  }
  return m;
}

inline double frobenius_sq(const Matrix &m) {
  double acc = 0.0;
  for (double v : m.a) {
    acc += v * v;
  }
  return acc;
}

inline double frobenius_sq(const vfxopt::LatentTensor &t) {
  double acc = 0.0;
  for (float v : t.values()) {
    acc += static_cast<double>(v) * v;
  }
  return acc;
}

// ||a - b||_F / ||b||_F with a tensor laid out like `b`'s unfolding.
inline double relative_error(const Matrix &a, const Matrix &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.a.size(); ++i) {
    num += (a.a[i] - b.a[i]) * (a.a[i] - b.a[i]);
    den += b.a[i] * b.a[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

} // namespace oracle
