#include "vfxopt/tensor.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace vfxopt {

const char *to_string(ErrorCategory category) noexcept {
  switch (category) {
  case ErrorCategory::usage:
    return "usage";
  case ErrorCategory::io:
    return "io";
  case ErrorCategory::format:
    return "format";
  case ErrorCategory::numerical:
    return "numerical";
  case ErrorCategory::validation:
    return "validation";
  case ErrorCategory::backend:
    return "backend";
  case ErrorCategory::internal:
    return "internal";
  }
  return "unknown";
}

void TensorShape::validate() const {
  if (!valid()) {
    throw Error(ErrorCategory::validation,
                "tensor shape " + to_string() + " has a zero extent");
  }
}

std::string TensorShape::to_string() const {
  std::ostringstream os;
  os << '(' << c << ", " << f << ", " << h << ", " << w << ')';
  return os.str();
}

LatentTensor::LatentTensor() : values_(1, 0.0f) {}

LatentTensor::LatentTensor(TensorShape shape, std::vector<float> values)
    : shape_(shape), values_(std::move(values)) {
  shape_.validate();
  if (values_.size() != shape_.numel()) {
    throw Error(ErrorCategory::validation,
                "tensor of shape " + shape_.to_string() + " needs " +
                    std::to_string(shape_.numel()) + " elements, got " +
                    std::to_string(values_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NonFiniteError("non-finite tensor element at flat index " +
                           std::to_string(i));
    }
  }
}

LatentTensor LatentTensor::zeros(const TensorShape &shape) {
  return filled(shape, 0.0f);
}

LatentTensor LatentTensor::filled(const TensorShape &shape, float value) {
  shape.validate();
  return LatentTensor(shape, std::vector<float>(shape.numel(), value));
}

float LatentTensor::at(std::size_t c, std::size_t f, std::size_t h,
                       std::size_t w) const {
  if (c >= shape_.c || f >= shape_.f || h >= shape_.h || w >= shape_.w) {
    throw Error(ErrorCategory::validation, "tensor index out of range");
  }
  return values_[offset(c, f, h, w)];
}

TensorStats tensor_stats(const LatentTensor &t) {
  const auto values = t.values();
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (float v : values) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
  }
  TensorStats stats;
  stats.mean = sum / n;
  double centered = 0.0;
  for (float v : values) {
    const double d = v - stats.mean;
    centered += d * d;
  }
  stats.variance = centered / n;
  stats.frobenius_norm = std::sqrt(sum_sq);
  return stats;
}

LatentTensor gaussian_noise(const TensorShape &shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> values(shape.numel());
  for (auto &v : values) {
    v = static_cast<float>(normal(engine));
  }
  return LatentTensor(shape, std::move(values));
}

double squared_distance(const LatentTensor &a, const LatentTensor &b) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCategory::validation,
                "shape mismatch: " + a.shape().to_string() + " vs " +
                    b.shape().to_string());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

double relative_frobenius_error(const LatentTensor &actual,
                                const LatentTensor &expected) {
  const double diff = std::sqrt(squared_distance(actual, expected));
  const double norm = tensor_stats(expected).frobenius_norm;
  return norm > 0.0 ? diff / norm : diff;
}

} // namespace vfxopt
