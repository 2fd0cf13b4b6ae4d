#pragma once

// Alpha corrections and the per-method reconstruction entry point.

#include <string>

#include "ssrecon/estimators.hpp"
#include "ssrecon/methods.hpp"
#include "ssrecon/synthetic.hpp"

namespace ssrecon {

enum class ReconMode {
  practical,  // input y_s, correction on omega
  theory      // input further corrupted with fresh Lambda_s / ntilde_s
};

std::string to_string(ReconMode m);
ReconMode recon_mode_from_string(const std::string& s);

/// On omega ((1 + a^2) f - input) / a^2, elsewhere f.
ComplexVector correct_noisier2full(const ComplexVector& f_out, const ComplexVector& input_used,
                                   const SamplingMask& omega, double alpha);

/// Theory mode corrects on lambda n omega, practical mode on omega; f_out
/// passes through everywhere else.
ComplexVector correct_robust_ssdu(const ComplexVector& f_out, const ComplexVector& input_used,
                                  const SamplingMask& omega, const SamplingMask& lambda, double alpha,
                                  ReconMode mode);

struct ReconResult {
  ComplexVector estimate;
  bool pattern_fallback = false;
};

/// Per-method estimate at inference. Practical mode feeds y; theory mode
/// feeds the training-time corruption of y built from a fresh Lambda_s
/// (when the method uses one) and ntilde_s drawn from rng. Methods without
/// a correction return f unchanged.
ReconResult reconstruct(Method method, const Estimator& est, const ComplexVector& y, const SamplingMask& omega,
                        const MeasurementModel& model, double alpha, ReconMode mode, Rng& rng);

}  // namespace ssrecon
