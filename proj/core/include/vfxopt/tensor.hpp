#pragma once

#include "vfxopt/error.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vfxopt {

/// Extents of a latent tensor, ordered channels x frames x height x width.
struct TensorShape {
  std::size_t c = 1;
  std::size_t f = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t numel() const noexcept { return c * f * h * w; }
  bool valid() const noexcept { return c >= 1 && f >= 1 && h >= 1 && w >= 1; }
  void validate() const;
  std::string to_string() const;

  friend bool operator==(const TensorShape &, const TensorShape &) = default;
};

/// Immutable, row-major (C, F, H, W) float tensor with finite elements.
///
/// Construction validates the element count against the shape and rejects
/// NaN/Inf with NonFiniteError. All numerics modules exchange latents through
/// this type.
class LatentTensor {
public:
  LatentTensor();
  LatentTensor(TensorShape shape, std::vector<float> values);

  static LatentTensor zeros(const TensorShape &shape);
  static LatentTensor filled(const TensorShape &shape, float value);

  const TensorShape &shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  const float *data() const noexcept { return values_.data(); }

  float operator[](std::size_t i) const noexcept { return values_[i]; }
  float at(std::size_t c, std::size_t f, std::size_t h, std::size_t w) const;
  std::size_t offset(std::size_t c, std::size_t f, std::size_t h,
                     std::size_t w) const noexcept {
    return ((c * shape_.f + f) * shape_.h + h) * shape_.w + w;
  }

  friend bool operator==(const LatentTensor &, const LatentTensor &) = default;

private:
  TensorShape shape_;
  std::vector<float> values_;
};

struct TensorStats {
  double mean = 0.0;
  double variance = 0.0; // population variance
  double frobenius_norm = 0.0;
};

TensorStats tensor_stats(const LatentTensor &t);

/// I.i.d. standard normal samples. Identical (shape, seed) pairs give
/// identical tensors within one build.
LatentTensor gaussian_noise(const TensorShape &shape, std::uint64_t seed);

double squared_distance(const LatentTensor &a, const LatentTensor &b);

/// ||actual - expected||_F / ||expected||_F, or the absolute distance when
/// expected is all zeros.
double relative_frobenius_error(const LatentTensor &actual,
                                const LatentTensor &expected);

} // namespace vfxopt
