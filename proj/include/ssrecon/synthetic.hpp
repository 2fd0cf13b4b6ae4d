#pragma once

// Zero-mean Gaussian k-space priors with computable conditional means, plus
// a piecewise-constant phantom for qualitative runs.

#include <string>

#include "ssrecon/kspace.hpp"
#include "ssrecon/noise.hpp"
#include "ssrecon/rng.hpp"
#include "ssrecon/sampling.hpp"

namespace ssrecon {

struct PriorSpec {
  std::string preset = "banded";  // scalar | diagonal | banded | file
  double scale = 1.0;             // mean k-space variance, tr(cov) = q * scale
  double decay = 2.0;             // diagonal: variance ~ (1 + |f|)^-decay
  double support = 0.5;           // banded: fraction of pixels (per axis) inside the support
  double length = 1.5;            // banded: squared-exponential correlation length in pixels
  double nugget = 0.01;           // banded: white image-domain floor relative to scale
  std::string path;               // file: JSON complex matrix
};

class MeasurementModel {
 public:
  MeasurementModel() = default;
  /// Validates the covariance (Hermitian, PSD within 1e-10), the noise spec
  /// and both mask distributions and caches the covariance square root and
  /// the mask densities.
  MeasurementModel(ComplexMatrix prior_cov, NoiseSpec noise, MaskDistribution omega_dist, MaskDistribution lambda_dist);

  Index q() const { return prior_cov_.rows(); }
  GridShape shape() const { return omega_dist_.shape; }
  const ComplexMatrix& prior_cov() const { return prior_cov_; }
  /// S with S S^H = prior_cov.
  const ComplexMatrix& prior_sqrt() const { return prior_sqrt_; }
  const NoiseSpec& noise() const { return noise_; }
  const MaskDistribution& omega_dist() const { return omega_dist_; }
  const MaskDistribution& lambda_dist() const { return lambda_dist_; }
  const MaskDensity& omega_density() const { return omega_density_; }
  const MaskDensity& lambda_density() const { return lambda_density_; }
  const RealVector& p() const { return omega_density_.probs; }
  const RealVector& ptilde() const { return lambda_density_.probs; }

  /// Copy with different noise parameters.
  MeasurementModel with_noise(NoiseSpec noise) const;
  /// Copy with different mask distributions.
  MeasurementModel with_masks(MaskDistribution omega_dist, MaskDistribution lambda_dist) const;

 private:
  ComplexMatrix prior_cov_;
  ComplexMatrix prior_sqrt_;
  NoiseSpec noise_;
  MaskDistribution omega_dist_;
  MaskDistribution lambda_dist_;
  MaskDensity omega_density_;
  MaskDensity lambda_density_;
};

/// Prior covariance for a preset on the given grid.
ComplexMatrix build_prior_cov(const PriorSpec& spec, GridShape shape);

/// Y0 ~ CN(0, prior_cov).
ComplexVector gaussian_ground_truth(const MeasurementModel& model, Rng& rng);

/// DFT of a random piecewise-constant nonnegative 1D image with n_blocks
/// levels drawn uniformly from [0, 1).
ComplexVector phantom_ground_truth(Index q, Index n_blocks, Rng& rng);

void to_json(nlohmann::json& j, const PriorSpec& s);
void from_json(const nlohmann::json& j, PriorSpec& s);
void to_json(nlohmann::json& j, const MaskDistribution& d);
/// Reads {kind, q | shape, accel, n_center, degree}. Missing fields keep
/// their current values, except n_center which defaults to
/// default_center(cols) whenever the grid is given.
void from_json(const nlohmann::json& j, MaskDistribution& d);

}  // namespace ssrecon
