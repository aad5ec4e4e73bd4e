#include "vfxopt/noise_prior.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace vfxopt {

namespace {

void require_fraction(double value, const char *name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCategory::validation,
                std::string(name) + " must lie in [0, 1], got " +
                    std::to_string(value));
  }
}

class DegenerateShapeError : public Error {
public:
  explicit DegenerateShapeError(const std::string &message)
      : Error(ErrorCategory::validation, message) {}
};

struct Decomposition {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;
};

Decomposition decompose(const Eigen::MatrixXd &m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw SvdFailureError(static_cast<std::size_t>(m.rows()),
                          static_cast<std::size_t>(m.cols()));
  }
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

std::vector<double> to_vector(const Eigen::VectorXd &v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Sum of sigma_i * u_i * v_i^T over i in [first, last).
Eigen::MatrixXd reconstruct(const Decomposition &d, std::size_t first,
                            std::size_t last) {
  const auto rows = d.u.rows();
  const auto cols = d.v.rows();
  if (last <= first) {
    return Eigen::MatrixXd::Zero(rows, cols);
  }
  const auto begin = static_cast<Eigen::Index>(first);
  const auto count = static_cast<Eigen::Index>(last - first);
  return d.u.middleCols(begin, count) *
         d.sigma.segment(begin, count).asDiagonal() *
         d.v.middleCols(begin, count).transpose();
}

} // namespace

void ProjectionThresholds::validate() const {
  require_fraction(rho_s, "rho_s");
  require_fraction(rho_m, "rho_m");
}

BlendWeight::BlendWeight(double alpha) : alpha_(alpha) {
  require_fraction(alpha, "alpha");
}

SvdFailureError::SvdFailureError(std::size_t rows, std::size_t cols)
    : Error(ErrorCategory::numerical,
            "SVD did not converge for a " + std::to_string(rows) + "x" +
                std::to_string(cols) + " unfolding"),
      rows_(rows), cols_(cols) {}

std::size_t effective_rank(std::span<const double> singular_values) {
  for (std::size_t i = 0; i < singular_values.size(); ++i) {
    const double s = singular_values[i];
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCategory::validation,
                  "singular values must be finite and non-negative");
    }
    if (i > 0 && s > singular_values[i - 1]) {
      throw Error(ErrorCategory::validation,
                  "singular values must be sorted in descending order");
    }
  }
  if (singular_values.empty() || singular_values.front() <= 0.0) {
    throw DegenerateSpectrumError("spectrum has no non-zero singular value");
  }
  const double floor = kSingularValueFloor * singular_values.front();
  std::size_t rank = 0;
  while (rank < singular_values.size() && singular_values[rank] >= floor) {
    ++rank;
  }
  return rank;
}

namespace {

double leading_energy(std::span<const double> sv, std::size_t k) {
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += sv[i] * sv[i];
  }
  return acc;
}

} // namespace

std::size_t select_rank_removed(std::span<const double> singular_values,
                                double rho_s) {
  require_fraction(rho_s, "rho_s");
  const std::size_t rank = effective_rank(singular_values);
  const double target = rho_s * leading_energy(singular_values, rank);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < rank; ++k) {
    if (cumulative >= target) {
      return k;
    }
    cumulative += singular_values[k] * singular_values[k];
  }
  return rank;
}

std::size_t select_rank_retained(std::span<const double> singular_values,
                                 double rho_m) {
  require_fraction(rho_m, "rho_m");
  const std::size_t rank = effective_rank(singular_values);
  const double target = rho_m * leading_energy(singular_values, rank);
  double cumulative = 0.0;
  for (std::size_t k = 1; k <= rank; ++k) {
    cumulative += singular_values[k - 1] * singular_values[k - 1];
    if (cumulative >= target) {
      return k;
    }
  }
  return rank;
}

ProjectionResult project_spatial(const LatentTensor &noise, double rho_s) {
  require_fraction(rho_s, "rho_s");
  const auto &s = noise.shape();
  const auto rows = static_cast<Eigen::Index>(s.c * s.f);
  const auto cols = static_cast<Eigen::Index>(s.h * s.w);
  if (std::min(rows, cols) < 2) {
    throw DegenerateShapeError("spatial projection needs min(C*F, H*W) >= 2, shape " +
                               s.to_string());
  }
  using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::MatrixXd unfolded =
      Eigen::Map<const RowMajor>(noise.data(), rows, cols).cast<double>();
  const Decomposition d = decompose(unfolded);

  ProjectionResult result;
  result.singular_values = to_vector(d.sigma);
  result.rank = effective_rank(result.singular_values);
  result.components = select_rank_removed(result.singular_values, rho_s);

  const Eigen::MatrixXd kept = reconstruct(d, result.components, result.rank);
  std::vector<float> out(noise.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(r * cols + c)] = static_cast<float>(kept(r, c));
    }
  }
  result.tensor = LatentTensor(s, std::move(out));
  return result;
}

ProjectionResult project_temporal(const LatentTensor &noise, double rho_m) {
  require_fraction(rho_m, "rho_m");
  const auto &s = noise.shape();
  if (s.f < 2) {
    throw DegenerateShapeError("temporal projection needs at least 2 frames, shape " +
                               s.to_string());
  }
  const std::size_t plane = s.h * s.w;
  const auto rows = static_cast<Eigen::Index>(s.c * plane);
  const auto cols = static_cast<Eigen::Index>(s.f);

  // Row index (c*H + h)*W + w, column index f.
  Eigen::MatrixXd unfolded(rows, cols);
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t f = 0; f < s.f; ++f) {
      const float *src = noise.data() + (c * s.f + f) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        unfolded(static_cast<Eigen::Index>(c * plane + p),
                 static_cast<Eigen::Index>(f)) = src[p];
      }
    }
  }
  const Decomposition d = decompose(unfolded);

  ProjectionResult result;
  result.singular_values = to_vector(d.sigma);
  result.rank = effective_rank(result.singular_values);
  result.components = select_rank_retained(result.singular_values, rho_m);

  const Eigen::MatrixXd kept = reconstruct(d, 0, result.components);
  std::vector<float> out(noise.size());
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t f = 0; f < s.f; ++f) {
      float *dst = out.data() + (c * s.f + f) * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        dst[p] = static_cast<float>(kept(static_cast<Eigen::Index>(c * plane + p),
                                         static_cast<Eigen::Index>(f)));
      }
    }
  }
  result.tensor = LatentTensor(s, std::move(out));
  return result;
}

LatentTensor suppress_spatial(const LatentTensor &noise, double rho_s) {
  return project_spatial(noise, rho_s).tensor;
}

LatentTensor retain_temporal(const LatentTensor &noise, double rho_m) {
  return project_temporal(noise, rho_m).tensor;
}

LatentTensor enhance_noise(const LatentTensor &inverted,
                           const ProjectionThresholds &thresholds) {
  thresholds.validate();
  return retain_temporal(suppress_spatial(inverted, thresholds.rho_s),
                         thresholds.rho_m);
}

LatentTensor blend(const LatentTensor &temporal, const LatentTensor &fresh,
                   BlendWeight weight) {
  if (temporal.shape() != fresh.shape()) {
    throw Error(ErrorCategory::validation,
                "blend shape mismatch: " + temporal.shape().to_string() +
                    " vs " + fresh.shape().to_string());
  }
  const double a = std::sqrt(weight.alpha());
  const double b = std::sqrt(1.0 - weight.alpha());
  std::vector<float> out(temporal.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(a * temporal[i] + b * fresh[i]);
  }
  return LatentTensor(temporal.shape(), std::move(out));
}

} // namespace vfxopt
