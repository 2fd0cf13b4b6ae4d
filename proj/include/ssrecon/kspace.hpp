#pragma once

// Complex k-space vectors, diagonal sampling masks and the unitary DFT.
//
// Indices are 0-based throughout. A 2D grid of rows x cols is flattened
// row-major (index = r * cols + c). The DFT keeps the unshifted layout, so
// the DC term sits at index 0 and "low frequency" means small |signed
// frequency|, see signed_frequency().

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace ssrecon {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

/// Support pattern of a mask: one byte (0/1) per index.
using Pattern = std::vector<std::uint8_t>;

struct GridShape {
  Index rows = 1;
  Index cols = 1;
  Index size() const { return rows * cols; }
  bool is_1d() const { return rows == 1; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// A subset of {0..q-1} together with the inclusion probability of every
/// index under the distribution the mask was drawn from.
class SamplingMask {
 public:
  SamplingMask() = default;
  SamplingMask(Pattern members, RealVector probs);

  static SamplingMask full(Index q);
  static SamplingMask empty(Index q);
  static SamplingMask from_indices(Index q, std::span<const Index> indices, RealVector probs);

  Index size() const { return static_cast<Index>(members_.size()); }
  bool contains(Index j) const { return members_[static_cast<std::size_t>(j)] != 0; }
  Index count() const;
  std::vector<Index> indices() const;
  const Pattern& pattern() const { return members_; }
  const RealVector& probs() const { return probs_; }
  /// 0/1 diagonal of M.
  RealVector diagonal() const;

  friend bool operator==(const SamplingMask& a, const SamplingMask& b) {
    return a.members_ == b.members_ && a.probs_ == b.probs_;
  }

 private:
  Pattern members_;
  RealVector probs_;
};

/// output[j] = v[j] if j in mask, else 0.
ComplexVector apply_mask(const SamplingMask& mask, const ComplexVector& v);

/// Derived masks of two independent draws. Probabilities assume omega and
/// lambda independent: P[j in intersect] = p_j * ptilde_j and so on.
struct MaskAlgebra {
  SamplingMask intersect;             // lambda n omega
  SamplingMask omega_minus_lambda;    // omega \ lambda
  SamplingMask complement_intersect;  // (lambda n omega)^c
  SamplingMask complement_omega;      // omega^c
};
MaskAlgebra mask_algebra(const SamplingMask& omega, const SamplingMask& lambda);

SamplingMask intersect(const SamplingMask& a, const SamplingMask& b);

/// Signed frequency of index j in an unshifted DFT of length n:
/// j for j <= n/2, j - n otherwise.
Index signed_frequency(Index j, Index n);

/// Unitary DFT, X_k = n^{-1/2} sum_j x_j exp(-2 pi i jk/n). Direct O(n^2).
ComplexVector dft_unitary(const ComplexVector& v, bool inverse = false);
/// Separable unitary 2D DFT over a row-major rows x cols grid.
ComplexVector dft2_unitary(const ComplexVector& v, GridShape shape, bool inverse = false);
/// Dense unitary DFT matrix for a grid (1D when shape.rows == 1).
ComplexMatrix dft_matrix(GridShape shape);

/// Modulus of the inverse unitary DFT (single-coil root-sum-of-squares).
RealVector magnitude_image(const ComplexVector& k, GridShape shape);
RealVector magnitude_image(const ComplexVector& k);

bool all_finite(const ComplexVector& v);
void require_same_size(Index a, Index b, const char* what);

// JSON: ComplexVector is an array of [re, im] pairs; SamplingMask is
// {"indices": [...], "probs": [...]}.
nlohmann::json complex_vector_to_json(const ComplexVector& v);
ComplexVector complex_vector_from_json(const nlohmann::json& j);
nlohmann::json complex_matrix_to_json(const ComplexMatrix& m);
ComplexMatrix complex_matrix_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const SamplingMask& m);
void from_json(const nlohmann::json& j, SamplingMask& m);

}  // namespace ssrecon
