#pragma once

// Parameterised estimators f_theta : (y_in, M_in) -> k-space estimate, each
// with an exact reverse-mode gradient over a flat real theta. Complex
// parameters are stored as separate real and imaginary blocks.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ssrecon/kspace.hpp"
#include "ssrecon/mlp.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

struct ForwardResult {
  ComplexVector output;
  /// Set when affine_per_pattern met an unenrolled pattern and used the
  /// nearest enrolled one instead.
  bool pattern_fallback = false;
};

class Estimator {
 public:
  explicit Estimator(Index q) : q_(q) {}
  virtual ~Estimator() = default;

  virtual std::string family() const = 0;
  Index q() const { return q_; }
  Index parameter_count() const { return theta_.size(); }
  RealVector& theta() { return theta_; }
  const RealVector& theta() const { return theta_; }

  virtual ForwardResult forward(const ComplexVector& y_in, const SamplingMask& m_in) const = 0;
  /// Gradient over theta of Re <cotangent, forward(y_in, m_in)>, where
  /// <a, b> = sum_j conj(a_j) b_j.
  virtual RealVector vjp(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const = 0;
  /// Makes the estimator ready for inputs with this mask (may grow theta).
  virtual void prepare(const SamplingMask& /*m_in*/) {}

  virtual nlohmann::json shapes() const = 0;
  virtual std::unique_ptr<Estimator> clone() const = 0;

 protected:
  void check_inputs(const ComplexVector& y_in, const SamplingMask& m_in) const;
  void check_inputs(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const;

  Index q_;
  RealVector theta_;
};

using EstimatorPtr = std::unique_ptr<Estimator>;

/// One affine map A_s y + b_s per support pattern s of M_in. Each pattern
/// owns 2q^2 + 2q parameters laid out [Re A (row-major), Im A, Re b, Im b].
/// Patterns are enrolled lazily by prepare() with A = 0, b = 0.
class AffinePerPattern final : public Estimator {
 public:
  explicit AffinePerPattern(Index q);

  std::string family() const override { return "affine_per_pattern"; }
  ForwardResult forward(const ComplexVector& y_in, const SamplingMask& m_in) const override;
  RealVector vjp(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const override;
  void prepare(const SamplingMask& m_in) override;
  nlohmann::json shapes() const override;
  std::unique_ptr<Estimator> clone() const override { return std::make_unique<AffinePerPattern>(*this); }

  Index block_size() const { return 2 * q_ * q_ + 2 * q_; }
  Index pattern_count() const { return static_cast<Index>(patterns_.size()); }
  const std::vector<Pattern>& patterns() const { return patterns_; }
  bool enrolled(const Pattern& s) const { return slots_.count(s) != 0; }
  /// Enrolls (or overwrites) pattern s with the given map.
  void enroll(const Pattern& s, const ComplexMatrix& a, const ComplexVector& b);
  ComplexMatrix matrix(const Pattern& s) const;
  ComplexVector offset(const Pattern& s) const;

 private:
  /// Slot of s, or of the nearest enrolled pattern (Hamming distance, ties
  /// to the earliest enrolled); fallback reports the substitution.
  Index resolve(const Pattern& s, bool* fallback) const;

  std::vector<Pattern> patterns_;
  std::map<Pattern, Index> slots_;
};

/// Fully-connected network on [Re y; Im y; M_in] with softplus hidden
/// layers; output [Re f; Im f] (plus y_in when residual).
class TinyNet final : public Estimator {
 public:
  TinyNet(Index q, std::vector<Index> hidden, bool residual, Rng& rng);
  /// Uninitialised parameters (for loading checkpoints).
  TinyNet(Index q, std::vector<Index> hidden, bool residual);

  std::string family() const override { return "tiny_net"; }
  ForwardResult forward(const ComplexVector& y_in, const SamplingMask& m_in) const override;
  RealVector vjp(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const override;
  nlohmann::json shapes() const override;
  std::unique_ptr<Estimator> clone() const override { return std::make_unique<TinyNet>(*this); }

 private:
  std::vector<Index> hidden_;
  bool residual_;
  Mlp net_;
};

/// K cascades of s_{k+1} = s_k - eta_k M (s_k - y) + M G^D_k(s_k) + (1 - M) G^R_k(s_k)
/// from s_0 = y, with G^D_k, G^R_k networks on [Re s; Im s; M]. Theta holds
/// per cascade [eta_k, G^D_k, G^R_k].
class ToyCascade final : public Estimator {
 public:
  ToyCascade(Index q, Index cascades, std::vector<Index> hidden, Rng& rng, double eta0 = 0.5);
  ToyCascade(Index q, Index cascades, std::vector<Index> hidden);

  std::string family() const override { return "toy_cascade"; }
  ForwardResult forward(const ComplexVector& y_in, const SamplingMask& m_in) const override;
  RealVector vjp(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const override;
  nlohmann::json shapes() const override;
  std::unique_ptr<Estimator> clone() const override { return std::make_unique<ToyCascade>(*this); }

  Index cascades() const { return cascades_; }
  Index cascade_size() const { return 1 + 2 * net_.parameter_count(); }
  double& eta(Index k) { return theta_[k * cascade_size()]; }
  /// Zeroes every G^D and G^R parameter.
  void zero_refinements();

 private:
  Index cascades_;
  std::vector<Index> hidden_;
  Mlp net_;
};

struct EstimatorConfig {
  std::string family = "affine_per_pattern";
  std::vector<Index> hidden;  // empty: family default
  bool residual = false;      // tiny_net
  Index cascades = 2;         // toy_cascade
};

void to_json(nlohmann::json& j, const EstimatorConfig& c);
void from_json(const nlohmann::json& j, EstimatorConfig& c);

/// tiny_net default hidden = {4q, 4q}; toy_cascade default hidden = {2q}.
EstimatorPtr make_estimator(const EstimatorConfig& config, Index q, Rng& rng);

/// {family, shapes, theta}.
nlohmann::json checkpoint_to_json(const Estimator& est);
EstimatorPtr checkpoint_from_json(const nlohmann::json& j);

struct RankReport {
  Index rank = 0;
  Index rows = 0;  // 2q
  Index params = 0;
  double smallest_retained = 0.0;
  double tolerance = 0.0;
  bool full_rank = false;
  RealVector singular_values;
};

/// Numerical rank of the 2q x P Jacobian of [Re f; Im f] over theta, built
/// row by row from vjp with cotangents e_j and i e_j. Tolerance
/// sigma_max * max(2q, P) * machine epsilon. Requires P >= 2q.
RankReport jacobian_rank_check(const Estimator& est, const ComplexVector& y_in, const SamplingMask& m_in);

/// Stacks forward outputs as [Re f; Im f].
RealVector stack_real(const ComplexVector& v);
ComplexVector unstack_real(const RealVector& v);

}  // namespace ssrecon
