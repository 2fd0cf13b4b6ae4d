#include "ssrecon/inference.hpp"

#include "ssrecon/errors.hpp"
#include "ssrecon/noise.hpp"
#include "ssrecon/sampling.hpp"

namespace ssrecon {

std::string to_string(ReconMode m) { return m == ReconMode::practical ? "practical" : "theory"; }

ReconMode recon_mode_from_string(const std::string& s) {
  if (s == "practical") return ReconMode::practical;
  if (s == "theory") return ReconMode::theory;
  throw ConfigError("mode: expected practical or theory, got '" + s + "'");
}

namespace {

ComplexVector correct_on(const ComplexVector& f_out, const ComplexVector& input_used, const SamplingMask& set,
                         double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("correction: alpha must be > 0");
  require_same_size(f_out.size(), input_used.size(), "correction");
  require_same_size(f_out.size(), set.size(), "correction");
  const double a2 = alpha * alpha;
  ComplexVector out = f_out;
  for (Index j = 0; j < out.size(); ++j) {
    if (set.contains(j)) out[j] = ((1.0 + a2) * f_out[j] - input_used[j]) / a2;
  }
  return out;
}

}  // namespace

ComplexVector correct_noisier2full(const ComplexVector& f_out, const ComplexVector& input_used,
                                   const SamplingMask& omega, double alpha) {
  return correct_on(f_out, input_used, omega, alpha);
}

ComplexVector correct_robust_ssdu(const ComplexVector& f_out, const ComplexVector& input_used,
                                  const SamplingMask& omega, const SamplingMask& lambda, double alpha,
                                  ReconMode mode) {
  if (mode == ReconMode::practical) return correct_on(f_out, input_used, omega, alpha);
  return correct_on(f_out, input_used, intersect(omega, lambda), alpha);
}

ReconResult reconstruct(Method method, const Estimator& est, const ComplexVector& y, const SamplingMask& omega,
                        const MeasurementModel& model, double alpha, ReconMode mode, Rng& rng) {
  require_same_size(y.size(), omega.size(), "reconstruct");
  ComplexVector input = y;
  SamplingMask mask = omega;
  SamplingMask lambda = SamplingMask::full(y.size());
  if (mode == ReconMode::theory) {
    if (!(alpha > 0.0)) throw ValidationError("reconstruct: theory mode needs alpha > 0");
    if (uses_lambda(method)) lambda = draw_mask(model.lambda_density(), rng);
    const ComplexVector ntilde = complex_noise(y.size(), alpha * model.noise().sigma_n, rng);
    if (is_robust_ssdu(method)) {
      input = corrupt_robust_ssdu(y, omega, lambda, ntilde);
      mask = intersect(omega, lambda);
    } else if (is_noisier2full(method)) {
      input = corrupt_noisier2full(y, omega, ntilde);
    }
  }
  const ForwardResult f = est.forward(input, mask);
  ReconResult out{f.output, f.pattern_fallback};
  if (is_noisier2full(method)) {
    out.estimate = correct_noisier2full(f.output, input, omega, alpha);
  } else if (is_robust_ssdu(method)) {
    out.estimate = correct_robust_ssdu(f.output, input, omega, lambda, alpha, mode);
  }
  return out;
}

}  // namespace ssrecon
