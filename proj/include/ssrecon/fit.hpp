#pragma once

// Population-optimal affine-per-pattern maps under a Gaussian model.
//
// For a fixed input pattern s the method's input is X = B_s Z with
// Z = (Y0, N, Ntilde) ~ CN(0, blockdiag(Sigma0, s^2 I, a^2 s^2 I)). Row j of
// the expected weighted loss is E[w_j^2 |f_j(X) - T_j|^2], with the weight
// w_j and the target T_j = t_j Z depending on the unobserved mask state of j
// (membership in Omega and Lambda). Its minimiser is
//   a_j = tbar_j Sigma_Z B_s^H (B_s Sigma_Z B_s^H)^{-1},
//   tbar_j = E[w_j^2 t_j | s_j] / E[w_j^2 | s_j],
// and every row with E[w_j^2 | s_j] = 0 is left unconstrained.

#include <vector>

#include "ssrecon/estimators.hpp"
#include "ssrecon/methods.hpp"
#include "ssrecon/synthetic.hpp"

namespace ssrecon {

struct AffineFit {
  ComplexMatrix a;             // q x q, zero on columns outside the pattern
  ComplexVector b;             // zero under zero-mean priors
  std::vector<bool> unconstrained;  // rows the loss never sees
  bool regularized = false;    // a 1e-10 ridge was needed
};

/// Throws ValidationError for noise2recon_ss (its loss couples two
/// patterns, so there is no per-pattern normal equation) and when the
/// pattern has zero probability under the method's input distribution.
AffineFit closed_form_affine_fit(const MeasurementModel& model, Method method, const Pattern& input_pattern);

/// Does the method's network input live on Omega (false: on Lambda n Omega)?
bool input_on_omega(Method m);

/// Enrolls fits for every given pattern.
void enroll_fits(AffinePerPattern& est, const MeasurementModel& model, Method method,
                 const std::vector<Pattern>& patterns);

}  // namespace ssrecon
