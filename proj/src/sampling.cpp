#include "ssrecon/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssrecon/errors.hpp"

namespace ssrecon {

std::string to_string(MaskKind k) {
  return k == MaskKind::column_polynomial ? "column_polynomial" : "bernoulli2d_polynomial";
}

MaskKind mask_kind_from_string(const std::string& s) {
  if (s == "column_polynomial") return MaskKind::column_polynomial;
  if (s == "bernoulli2d_polynomial") return MaskKind::bernoulli2d_polynomial;
  throw ConfigError("kind: unknown mask kind '" + s + "'");
}

Index MaskDistribution::default_center(Index n) { return std::max<Index>(2, n / 16); }

namespace {

// Indices of one axis ordered from DC outwards; ties go to the positive frequency.
std::vector<Index> centre_order(Index n) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [n](Index a, Index b) {
    const Index fa = signed_frequency(a, n), fb = signed_frequency(b, n);
    if (std::abs(fa) != std::abs(fb)) return std::abs(fa) < std::abs(fb);
    return fa > fb;
  });
  return order;
}

std::vector<std::uint8_t> centre_flags(Index n, Index n_center) {
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(n), 0);
  const auto order = centre_order(n);
  for (Index i = 0; i < std::min(n, n_center); ++i) flags[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  return flags;
}

double axis_distance(Index j, Index n) {
  return static_cast<double>(std::abs(signed_frequency(j, n))) / static_cast<double>(n / 2 + 1);
}

// Solves for the scale s so that sum(min(1, s * base)) (with forced ones) hits target_sum.
RealVector scale_density(const RealVector& base, const std::vector<std::uint8_t>& centre, double target_accel) {
  const Index n = base.size();
  RealVector probs(n);
  auto fill = [&](double s) {
    for (Index j = 0; j < n; ++j) probs[j] = centre[static_cast<std::size_t>(j)] ? 1.0 : std::min(1.0, s * base[j]);
    return probs.sum();
  };
  if (target_accel == 1.0) {
    probs.setOnes();
    return probs;
  }
  const double target_sum = static_cast<double>(n) / target_accel;
  double lo = 0.0;
  double hi = 1.0 / base.minCoeff();
  constexpr int kMaxIterations = 60;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sum = fill(mid);
    if (std::abs(sum - target_sum) <= 1e-12 * target_sum) break;
    (sum < target_sum ? lo : hi) = mid;
  }
  const double achieved = static_cast<double>(n) / fill(0.5 * (lo + hi));
  if (std::abs(achieved - target_accel) > 0.01 * target_accel) {
    throw ConfigError("accel: density bisection reached " + std::to_string(achieved) + " for target " +
                      std::to_string(target_accel));
  }
  return probs;
}

}  // namespace

MaskDensity build_density(const MaskDistribution& dist) {
  const GridShape shape = dist.shape;
  if (shape.rows < 1 || shape.cols < 1) throw ConfigError("q: grid must be non-empty");
  if (dist.n_center < 1) throw ConfigError("n_center: must be at least 1");
  if (!(dist.degree > 0.0)) throw ConfigError("degree: must be positive");

  const bool per_column = dist.kind == MaskKind::column_polynomial || shape.is_1d();
  const Index units = per_column ? shape.cols : shape.size();
  const Index centre_units = per_column ? std::min(dist.n_center, shape.cols)
                                        : std::min(dist.n_center, shape.rows) * std::min(dist.n_center, shape.cols);
  const double max_accel = static_cast<double>(units) / static_cast<double>(centre_units);
  // At max_accel every index outside the centre would get probability 0.
  const bool reachable = centre_units == units ? dist.target_accel <= 1.0 : dist.target_accel < max_accel;
  if (!(dist.target_accel >= 1.0) || !reachable) {
    throw ConfigError("accel: target " + std::to_string(dist.target_accel) + " unattainable, must lie in [1, " +
                      std::to_string(max_accel) + ")");
  }

  MaskDensity out;
  out.kind = dist.kind;
  out.shape = shape;
  if (per_column) {
    RealVector base(shape.cols);
    for (Index c = 0; c < shape.cols; ++c) base[c] = std::pow(1.0 - axis_distance(c, shape.cols), dist.degree);
    out.line_probs = scale_density(base, centre_flags(shape.cols, dist.n_center), dist.target_accel);
    out.probs.resize(shape.size());
    for (Index r = 0; r < shape.rows; ++r) out.probs.segment(r * shape.cols, shape.cols) = out.line_probs;
    if (dist.kind != MaskKind::column_polynomial) out.line_probs.resize(0);
    return out;
  }

  const auto row_centre = centre_flags(shape.rows, dist.n_center);
  const auto col_centre = centre_flags(shape.cols, dist.n_center);
  RealVector base(shape.size());
  std::vector<std::uint8_t> centre(static_cast<std::size_t>(shape.size()), 0);
  for (Index r = 0; r < shape.rows; ++r) {
    for (Index c = 0; c < shape.cols; ++c) {
      const double dr = axis_distance(r, shape.rows), dc = axis_distance(c, shape.cols);
      const double d = std::sqrt(0.5 * (dr * dr + dc * dc));
      base[r * shape.cols + c] = std::pow(1.0 - d, dist.degree);
      centre[static_cast<std::size_t>(r * shape.cols + c)] =
          row_centre[static_cast<std::size_t>(r)] & col_centre[static_cast<std::size_t>(c)];
    }
  }
  out.probs = scale_density(base, centre, dist.target_accel);
  return out;
}

SamplingMask draw_mask(const RealVector& probs, Rng& rng) {
  Pattern members(static_cast<std::size_t>(probs.size()));
  for (Index j = 0; j < probs.size(); ++j) members[static_cast<std::size_t>(j)] = rng.uniform() < probs[j] ? 1 : 0;
  return SamplingMask(std::move(members), probs);
}

SamplingMask draw_mask(const MaskDensity& density, Rng& rng) {
  if (density.kind != MaskKind::column_polynomial || density.shape.is_1d()) return draw_mask(density.probs, rng);
  const GridShape shape = density.shape;
  Pattern members(static_cast<std::size_t>(shape.size()));
  for (Index c = 0; c < shape.cols; ++c) {
    const std::uint8_t in = rng.uniform() < density.line_probs[c] ? 1 : 0;
    for (Index r = 0; r < shape.rows; ++r) members[static_cast<std::size_t>(r * shape.cols + c)] = in;
  }
  return SamplingMask(std::move(members), density.probs);
}

void validate_mask_conditions(const RealVector& p, const RealVector& ptilde) {
  require_same_size(p.size(), ptilde.size(), "mask conditions");
  for (Index j = 0; j < p.size(); ++j) {
    if (!(p[j] > 0.0) || p[j] > 1.0) {
      throw ValidationError("mask conditions: p_" + std::to_string(j) + " = " + std::to_string(p[j]) +
                            " must lie in (0, 1]");
    }
    if (ptilde[j] < 0.0 || ptilde[j] > 1.0) {
      throw ValidationError("mask conditions: ptilde_" + std::to_string(j) + " outside [0, 1]");
    }
    if (p[j] < 1.0 && ptilde[j] >= 1.0) {
      throw ValidationError("mask conditions: ptilde_" + std::to_string(j) + " = 1 at an index with p_" +
                            std::to_string(j) + " < 1");
    }
  }
}

RealVector compute_k(const RealVector& p, const RealVector& ptilde) {
  validate_mask_conditions(p, ptilde);
  RealVector k(p.size());
  for (Index j = 0; j < p.size(); ++j) k[j] = p[j] == 1.0 ? 0.0 : (1.0 - p[j]) / (1.0 - ptilde[j] * p[j]);
  return k;
}

RealVector compute_P(const RealVector& p, const RealVector& ptilde) {
  validate_mask_conditions(p, ptilde);
  RealVector weight(p.size());
  for (Index j = 0; j < p.size(); ++j) {
    if (p[j] == 1.0 && ptilde[j] == 1.0) {
      weight[j] = 1.0;  // j is always in lambda n omega; never weighted
      continue;
    }
    const double denom = p[j] * (1.0 - ptilde[j]);
    if (!(denom > 0.0)) throw ValidationError("compute_P: zero denominator at index " + std::to_string(j));
    weight[j] = (1.0 - p[j] * ptilde[j]) / denom;
  }
  return weight;
}

}  // namespace ssrecon
