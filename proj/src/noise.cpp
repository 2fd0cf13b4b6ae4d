#include "ssrecon/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssrecon/errors.hpp"

namespace ssrecon {

void NoiseSpec::validate() const {
  if (!std::isfinite(sigma_n) || sigma_n < 0.0) throw ValidationError("noise.sigma_n: must be finite and >= 0");
  if (!std::isfinite(alpha) || !(alpha > 0.0)) throw ValidationError("noise.alpha: must be finite and > 0");
}

ComplexVector complex_noise(Index q, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ValidationError("complex_noise: sigma must be >= 0");
  ComplexVector n(q);
  for (Index j = 0; j < q; ++j) n[j] = rng.complex_normal(sigma);
  return n;
}

ComplexVector add_complex_noise(const ComplexVector& v, double sigma, Rng& rng) {
  if (sigma == 0.0) return v;
  return v + complex_noise(v.size(), sigma, rng);
}

ComplexVector whiten(const ComplexVector& v, const RealVector& cov_diag) {
  require_same_size(v.size(), cov_diag.size(), "whiten");
  ComplexVector out(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    if (!(cov_diag[j] > 0.0)) throw ValidationError("whiten: covariance entry " + std::to_string(j) + " not positive");
    out[j] = v[j] / std::sqrt(cov_diag[j]);
  }
  return out;
}

ComplexVector whiten(const ComplexVector& v, const ComplexMatrix& cov) {
  if (cov.rows() != cov.cols()) throw DimensionError("whiten: covariance must be square");
  require_same_size(v.size(), cov.rows(), "whiten");
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError("whiten: covariance is not Hermitian");
  }
  Eigen::LLT<ComplexMatrix> llt(cov);
  if (llt.info() != Eigen::Success) throw ValidationError("whiten: covariance is not positive definite");
  return llt.matrixL().solve(v);
}

namespace {

void require_supported(const ComplexVector& y, const SamplingMask& omega, const char* what) {
  require_same_size(y.size(), omega.size(), what);
  for (Index j = 0; j < y.size(); ++j) {
    if (!omega.contains(j) && y[j] != Complex(0.0, 0.0)) {
      throw ValidationError(std::string(what) + ": y is nonzero at index " + std::to_string(j) + " outside omega");
    }
  }
}

}  // namespace

ComplexVector corrupt_noisier2full(const ComplexVector& y, const SamplingMask& omega, const ComplexVector& ntilde) {
  require_supported(y, omega, "corrupt_noisier2full");
  require_same_size(y.size(), ntilde.size(), "corrupt_noisier2full");
  ComplexVector out = y;
  for (Index j = 0; j < y.size(); ++j) {
    if (omega.contains(j)) out[j] += ntilde[j];
  }
  return out;
}

ComplexVector corrupt_noisier2full(const ComplexVector& y, const SamplingMask& omega, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  return corrupt_noisier2full(y, omega, complex_noise(y.size(), spec.alpha * spec.sigma_n, rng));
}

ComplexVector corrupt_robust_ssdu(const ComplexVector& y, const SamplingMask& omega, const SamplingMask& lambda,
                                  const ComplexVector& ntilde) {
  require_supported(y, omega, "corrupt_robust_ssdu");
  require_same_size(y.size(), lambda.size(), "corrupt_robust_ssdu");
  require_same_size(y.size(), ntilde.size(), "corrupt_robust_ssdu");
  ComplexVector out = ComplexVector::Zero(y.size());
  for (Index j = 0; j < y.size(); ++j) {
    if (omega.contains(j) && lambda.contains(j)) out[j] = y[j] + ntilde[j];
  }
  return out;
}

ComplexVector corrupt_robust_ssdu(const ComplexVector& y, const SamplingMask& omega, const SamplingMask& lambda,
                                  const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  return corrupt_robust_ssdu(y, omega, lambda, complex_noise(y.size(), spec.alpha * spec.sigma_n, rng));
}

void to_json(nlohmann::json& j, const NoiseSpec& s) { j = nlohmann::json{{"sigma_n", s.sigma_n}, {"alpha", s.alpha}}; }

void from_json(const nlohmann::json& j, NoiseSpec& s) {
  if (j.contains("sigma_n")) s.sigma_n = j.at("sigma_n").get<double>();
  if (j.contains("alpha")) s.alpha = j.at("alpha").get<double>();
}

}  // namespace ssrecon
