#pragma once

// Complex Gaussian measurement noise, whitening and the two further-corruption
// operators used to build self-supervised training inputs.

#include "ssrecon/kspace.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

struct NoiseSpec {
  double sigma_n = 0.06;  // std of each complex noise entry (total variance sigma_n^2)
  double alpha = 1.0;     // further noise has std alpha * sigma_n

  /// Throws ValidationError unless both fields are finite and sigma_n >= 0, alpha > 0.
  void validate() const;
};

/// v + n, n_j ~ CN(0, sigma^2) i.i.d. (sigma^2 / 2 per real channel).
ComplexVector add_complex_noise(const ComplexVector& v, double sigma, Rng& rng);
/// Noise draw alone.
ComplexVector complex_noise(Index q, double sigma, Rng& rng);

/// Diagonal covariance: divides entry j by sqrt(cov_diag[j]).
ComplexVector whiten(const ComplexVector& v, const RealVector& cov_diag);
/// Full covariance: L^{-1} v with cov = L L^H. Throws ValidationError if cov
/// is not Hermitian positive definite.
ComplexVector whiten(const ComplexVector& v, const ComplexMatrix& cov);

/// y + M_omega ntilde with ntilde ~ CN(0, alpha^2 sigma_n^2). Throws
/// ValidationError when y is nonzero off omega.
ComplexVector corrupt_noisier2full(const ComplexVector& y, const SamplingMask& omega, const NoiseSpec& spec, Rng& rng);
/// Same, with the further-noise draw supplied.
ComplexVector corrupt_noisier2full(const ComplexVector& y, const SamplingMask& omega, const ComplexVector& ntilde);

/// M_{lambda n omega}(y + ntilde).
ComplexVector corrupt_robust_ssdu(const ComplexVector& y, const SamplingMask& omega, const SamplingMask& lambda,
                                  const NoiseSpec& spec, Rng& rng);
ComplexVector corrupt_robust_ssdu(const ComplexVector& y, const SamplingMask& omega, const SamplingMask& lambda,
                                  const ComplexVector& ntilde);

void to_json(nlohmann::json& j, const NoiseSpec& s);
void from_json(const nlohmann::json& j, NoiseSpec& s);

}  // namespace ssrecon
