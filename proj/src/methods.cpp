#include "ssrecon/methods.hpp"

#include "ssrecon/errors.hpp"

namespace ssrecon {

std::string to_string(Method m) {
  switch (m) {
    case Method::fully_supervised: return "fully_supervised";
    case Method::supervised_wo_denoising: return "supervised_wo_denoising";
    case Method::noisier2full: return "noisier2full";
    case Method::noisier2full_unweighted: return "noisier2full_unweighted";
    case Method::standard_ssdu: return "standard_ssdu";
    case Method::noise2recon_ss: return "noise2recon_ss";
    case Method::robust_ssdu: return "robust_ssdu";
    case Method::robust_ssdu_unweighted: return "robust_ssdu_unweighted";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  for (Method m : kAllMethods) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("method: unknown method '" + s + "'");
}

bool needs_ground_truth(Method m) { return m == Method::fully_supervised; }

bool uses_lambda(Method m) {
  return m == Method::standard_ssdu || m == Method::noise2recon_ss || is_robust_ssdu(m);
}

bool uses_further_noise(Method m) { return is_noisier2full(m) || is_robust_ssdu(m) || m == Method::noise2recon_ss; }

bool has_correction(Method m) { return is_noisier2full(m) || is_robust_ssdu(m); }

bool is_noisier2full(Method m) { return m == Method::noisier2full || m == Method::noisier2full_unweighted; }

bool is_robust_ssdu(Method m) { return m == Method::robust_ssdu || m == Method::robust_ssdu_unweighted; }

bool is_weighted(Method m) { return m == Method::noisier2full || m == Method::robust_ssdu; }

}  // namespace ssrecon
