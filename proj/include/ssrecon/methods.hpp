#pragma once

// Training-method identifiers and the per-method structure shared by the
// loss zoo, the inference corrections and the oracles.

#include <array>
#include <string>

namespace ssrecon {

enum class Method {
  fully_supervised,
  supervised_wo_denoising,
  noisier2full,
  noisier2full_unweighted,
  standard_ssdu,
  noise2recon_ss,
  robust_ssdu,
  robust_ssdu_unweighted,
};

inline constexpr std::array<Method, 8> kAllMethods{
    Method::fully_supervised, Method::supervised_wo_denoising, Method::noisier2full,
    Method::noisier2full_unweighted, Method::standard_ssdu, Method::noise2recon_ss,
    Method::robust_ssdu, Method::robust_ssdu_unweighted,
};

std::string to_string(Method m);
/// Throws ConfigError on an unknown name.
Method method_from_string(const std::string& s);

/// Training needs the clean ground truth.
bool needs_ground_truth(Method m);
/// Training draws a second-level mask Lambda.
bool uses_lambda(Method m);
/// Training draws further noise ntilde.
bool uses_further_noise(Method m);
/// Inference applies the alpha correction.
bool has_correction(Method m);
/// Noisier2Full family (either weighting).
bool is_noisier2full(Method m);
/// Robust SSDU family (either weighting).
bool is_robust_ssdu(Method m);
/// Weighted variant of a Noisier2Full / Robust SSDU row.
bool is_weighted(Method m);

}  // namespace ssrecon
