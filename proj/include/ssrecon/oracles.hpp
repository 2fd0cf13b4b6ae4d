#pragma once

// Ground-truth verifiers: Gaussian conditional means, population-minimiser
// and correction checks for the affine family, Monte Carlo identity and
// gradient checks, and a brute-force discrete conditional mean.

#include <optional>
#include <string>
#include <vector>

#include "ssrecon/estimators.hpp"
#include "ssrecon/methods.hpp"
#include "ssrecon/montecarlo.hpp"
#include "ssrecon/synthetic.hpp"

namespace ssrecon {

enum class CondTarget { y0, y0_plus_n };
enum class Conditioning {
  on_Y,      // observation M_s (Y0 + N)
  on_Ytilde  // observation M_s (Y0 + N + Ntilde)
};

/// Coefficients C with E[target | obs] = C obs, obs the full-length vector
/// that is zero off s. Columns outside s are zero. Throws ValidationError
/// when the observed block covariance is singular.
ComplexMatrix gaussian_conditional_mean(const MeasurementModel& model, const Pattern& s, CondTarget target,
                                        Conditioning conditioning);
/// Cov(Y0 | obs).
ComplexMatrix gaussian_posterior_cov(const MeasurementModel& model, const Pattern& s, Conditioning conditioning);

struct OracleReport {
  std::string name;
  double estimate = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::optional<double> se;
  std::optional<bool> pass;  // empty: descriptive only
  nlohmann::json details = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const OracleReport& r);

/// Support patterns of the method input (Omega, or Lambda n Omega) with
/// their probabilities. Enumerated exhaustively when there are at most
/// max_units independent units (indices, or columns for the column kind),
/// otherwise sampled.
struct PatternSet {
  std::vector<Pattern> patterns;
  std::vector<double> probs;
  bool exhaustive = true;
};
PatternSet input_patterns(const MeasurementModel& model, bool on_omega, Index max_units = 12, Index samples = 256,
                          std::uint64_t seed = 0);

/// Max |fit - target| over coefficients and patterns, tolerance 1e-8.
/// noise2recon_ss is reported without a verdict.
OracleReport check_population_minimizer(Method method, const MeasurementModel& model);

/// For noisier2full / robust_ssdu (either weighting): the alpha-corrected
/// population fit against E[Y0 | Ytilde], tolerance 1e-8.
OracleReport check_correction_identity(Method method, const MeasurementModel& model);

/// Monte Carlo MSE of the corrected population fit on fresh draws against
/// sum_s P(s) tr Cov(Y0 | Ytilde_s); 2% relative tolerance. Needs an
/// exhaustive pattern set.
OracleReport check_corrected_mse(Method method, const MeasurementModel& model, const McOptions& mc, const Rng& rng);

/// Pooled statistic mean[(Ntilde - a^2 N) conj(Ytilde)] over sampled
/// indices against 0 within 3 standard errors (real and imaginary parts).
OracleReport check_conditional_noise_identity(const MeasurementModel& model, const McOptions& mc, const Rng& rng);

/// Monte Carlo means of the weighted surrogate gradient and of the oracle
/// gradient of ||Yhat - Y0||^2 at fixed theta; every entry within 3
/// combined standard errors. claim is noisier2full or robust_ssdu.
OracleReport check_gradient_equivalence(Method claim, const Estimator& params, const MeasurementModel& model,
                                        const McOptions& mc, const Rng& rng);

/// Discrete real model for exhaustive conditioning. The prior is a joint pmf
/// over atoms^q (index sum_j a_j |atoms|^j). N_j = h (B_j - K) with
/// B_j ~ Bin(2K, 1/2), so Var N_j = h^2 K / 2; Ntilde_j uses K_tilde
/// (alpha^2 = K_tilde / K).
struct DiscreteModel {
  Index q = 1;
  std::vector<double> atoms;
  std::vector<double> pmf;
  Index K = 2;
  Index K_tilde = 2;
  double h = 0.1;
  RealVector p;
  RealVector ptilde;

  void validate() const;
  double sigma2() const { return h * h * static_cast<double>(K) / 2.0; }
  double alpha2() const { return static_cast<double>(K_tilde) / static_cast<double>(K); }
};

enum class DiscreteObservation {
  y,                    // M_Omega (Y0 + N), pattern = Omega
  ytilde_noisier2full,  // M_Omega (Y0 + N + Ntilde), pattern = Omega
  ytilde_robust         // M_{Lambda n Omega}(Y0 + N + Ntilde), pattern = Lambda n Omega
};

/// E[target | pattern, observed values] by direct summation over every Y0
/// configuration, noise lattice point and mask pair. values is full length
/// (entries off the pattern are ignored).
ComplexVector brute_force_conditional(const DiscreteModel& model, DiscreteObservation kind, const Pattern& s,
                                      const RealVector& values, CondTarget target);

}  // namespace ssrecon
