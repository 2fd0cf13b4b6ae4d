#pragma once

// Variable-density mask distributions and the distribution-level
// quantities k_j (probability an index unseen in the input was also unseen
// in the data) and the SSDU compensation weight P.

#include <string>

#include "ssrecon/kspace.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

enum class MaskKind {
  column_polynomial,      // one Bernoulli draw per column, broadcast down rows
  bernoulli2d_polynomial  // independent Bernoulli draw per index
};

std::string to_string(MaskKind k);
MaskKind mask_kind_from_string(const std::string& s);

struct MaskDistribution {
  MaskKind kind = MaskKind::column_polynomial;
  GridShape shape{1, 32};
  double target_accel = 4.0;  // q / sum_j p_j
  /// Always-sampled low-frequency lines (column kind, 1D) or side of the
  /// square central block (2D Bernoulli).
  Index n_center = 2;
  double degree = 8.0;

  Index q() const { return shape.size(); }
  /// max(2, n / 16) for the sampled axis length n.
  static Index default_center(Index n);
};

/// Per-index inclusion probabilities plus, for the column kind, the
/// per-column probabilities that are actually drawn.
struct MaskDensity {
  MaskKind kind = MaskKind::column_polynomial;
  GridShape shape{1, 1};
  RealVector probs;       // length q
  RealVector line_probs;  // length cols (column kind only)

  Index q() const { return probs.size(); }
  double acceleration() const { return static_cast<double>(q()) / probs.sum(); }
};

/// probs_j = min(1, s (1 - d_j)^degree) off the centre block, 1 on it, with
/// d_j in [0, 1) the normalised distance from DC and s found by bisection so
/// that q / sum(probs) matches target_accel. Throws ConfigError when the
/// target is unattainable (target_accel >= n / n_center, which would leave
/// probability 0 off the centre) or < 1.
MaskDensity build_density(const MaskDistribution& dist);

/// Draws a mask; the column kind decides once per column.
SamplingMask draw_mask(const MaskDensity& density, Rng& rng);
/// Independent Bernoulli draw per index.
SamplingMask draw_mask(const RealVector& probs, Rng& rng);

/// k_j = (1 - p_j) / (1 - ptilde_j p_j); 0 where p_j = 1.
/// Throws ValidationError naming the index when p_j <= 0 or when
/// ptilde_j = 1 at an index with p_j < 1.
RealVector compute_k(const RealVector& p, const RealVector& ptilde);

/// P_jj = (1 - p_j ptilde_j) / (p_j (1 - ptilde_j)); 1 where p_j = ptilde_j = 1.
RealVector compute_P(const RealVector& p, const RealVector& ptilde);

/// Checks p_j > 0 for all j and ptilde_j < 1 wherever p_j < 1.
void validate_mask_conditions(const RealVector& p, const RealVector& ptilde);

}  // namespace ssrecon
