#pragma once

#include "vfxopt/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace vfxopt {

/// Energy thresholds of the two-stage projection.
///
/// rho_s is the fraction of spectral energy, counted from the leading
/// singular value, that the spatial stage removes. rho_m is the fraction the
/// temporal stage keeps. Both lie in [0, 1].
struct ProjectionThresholds {
  double rho_s = 0.1;
  double rho_m = 0.9;

  void validate() const;
};

/// Weight of the motion prior in the variance-preserving blend.
class BlendWeight {
public:
  explicit BlendWeight(double alpha = 0.001);
  double alpha() const noexcept { return alpha_; }

private:
  double alpha_;
};

/// The spectrum is degenerate: no singular value above the noise floor.
class DegenerateSpectrumError : public Error {
public:
  explicit DegenerateSpectrumError(const std::string &message)
      : Error(ErrorCategory::numerical, message) {}
};

/// The SVD failed to converge or produced non-finite values.
class SvdFailureError : public Error {
public:
  SvdFailureError(std::size_t rows, std::size_t cols);
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

private:
  std::size_t rows_;
  std::size_t cols_;
};

/// Relative threshold below which singular values do not count toward rank.
inline constexpr double kSingularValueFloor = 1e-7;

/// Number of singular values >= kSingularValueFloor * sigma_max. Throws
/// DegenerateSpectrumError when that number is zero, and validation errors
/// for unsorted or negative input.
std::size_t effective_rank(std::span<const double> singular_values);

/// Smallest k >= 0 whose leading energy sum reaches rho_s of the total.
std::size_t select_rank_removed(std::span<const double> singular_values,
                                double rho_s);

/// Smallest k >= 1 whose leading energy sum reaches rho_m of the total.
std::size_t select_rank_retained(std::span<const double> singular_values,
                                 double rho_m);

struct ProjectionResult {
  LatentTensor tensor;
  std::vector<double> singular_values; // full spectrum, descending
  std::size_t rank = 0;                // count above the noise floor
  std::size_t components = 0;          // removed (spatial) or kept (temporal)
};

/// Unfold to (C*F) x (H*W), zero the leading components that carry rho_s of
/// the energy, and fold back.
ProjectionResult project_spatial(const LatentTensor &noise, double rho_s);

/// Unfold to (C*H*W) x F and keep the leading components that carry rho_m of
/// the energy.
ProjectionResult project_temporal(const LatentTensor &noise, double rho_m);

LatentTensor suppress_spatial(const LatentTensor &noise, double rho_s);
LatentTensor retain_temporal(const LatentTensor &noise, double rho_m);

/// retain_temporal(suppress_spatial(noise, rho_s), rho_m).
LatentTensor enhance_noise(const LatentTensor &inverted,
                           const ProjectionThresholds &thresholds);

/// sqrt(alpha) * temporal + sqrt(1 - alpha) * fresh, elementwise.
LatentTensor blend(const LatentTensor &temporal, const LatentTensor &fresh,
                   BlendWeight weight);

} // namespace vfxopt
