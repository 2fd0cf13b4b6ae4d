#include "ssrecon/kspace.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ssrecon/errors.hpp"

namespace ssrecon {

void require_same_size(Index a, Index b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
  }
}

SamplingMask::SamplingMask(Pattern members, RealVector probs)
    : members_(std::move(members)), probs_(std::move(probs)) {
  require_same_size(static_cast<Index>(members_.size()), probs_.size(), "SamplingMask");
  for (Index j = 0; j < probs_.size(); ++j) {
    const double p = probs_[j];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("SamplingMask: probability at index " + std::to_string(j) +
                            " outside [0, 1]");
    }
  }
  for (auto& m : members_) m = m ? 1 : 0;
}

SamplingMask SamplingMask::full(Index q) {
  return SamplingMask(Pattern(static_cast<std::size_t>(q), 1), RealVector::Ones(q));
}

SamplingMask SamplingMask::empty(Index q) {
  return SamplingMask(Pattern(static_cast<std::size_t>(q), 0), RealVector::Zero(q));
}

SamplingMask SamplingMask::from_indices(Index q, std::span<const Index> indices, RealVector probs) {
  Pattern members(static_cast<std::size_t>(q), 0);
  for (Index j : indices) {
    if (j < 0 || j >= q) throw DimensionError("SamplingMask: index " + std::to_string(j) + " out of range");
    members[static_cast<std::size_t>(j)] = 1;
  }
  return SamplingMask(std::move(members), std::move(probs));
}

Index SamplingMask::count() const {
  Index n = 0;
  for (auto m : members_) n += m;
  return n;
}

std::vector<Index> SamplingMask::indices() const {
  std::vector<Index> out;
  for (std::size_t j = 0; j < members_.size(); ++j) {
    if (members_[j]) out.push_back(static_cast<Index>(j));
  }
  return out;
}

RealVector SamplingMask::diagonal() const {
  RealVector d(size());
  for (Index j = 0; j < size(); ++j) d[j] = contains(j) ? 1.0 : 0.0;
  return d;
}

ComplexVector apply_mask(const SamplingMask& mask, const ComplexVector& v) {
  require_same_size(mask.size(), v.size(), "apply_mask");
  ComplexVector out(v.size());
  for (Index j = 0; j < v.size(); ++j) out[j] = mask.contains(j) ? v[j] : Complex(0.0, 0.0);
  return out;
}

SamplingMask intersect(const SamplingMask& a, const SamplingMask& b) {
  require_same_size(a.size(), b.size(), "intersect");
  Pattern members(static_cast<std::size_t>(a.size()));
  for (std::size_t j = 0; j < members.size(); ++j) members[j] = a.pattern()[j] & b.pattern()[j];
  return SamplingMask(std::move(members), a.probs().cwiseProduct(b.probs()));
}

MaskAlgebra mask_algebra(const SamplingMask& omega, const SamplingMask& lambda) {
  require_same_size(omega.size(), lambda.size(), "mask_algebra");
  const auto q = static_cast<std::size_t>(omega.size());
  const RealVector& p = omega.probs();
  const RealVector& pt = lambda.probs();

  Pattern inter(q), minus(q), comp_inter(q), comp_omega(q);
  for (std::size_t j = 0; j < q; ++j) {
    const auto o = omega.pattern()[j];
    const auto l = lambda.pattern()[j];
    inter[j] = o & l;
    minus[j] = o & (1 - l);
    comp_inter[j] = 1 - (o & l);
    comp_omega[j] = 1 - o;
  }
  const RealVector ones = RealVector::Ones(p.size());
  const RealVector p_inter = p.cwiseProduct(pt);
  return MaskAlgebra{
      SamplingMask(std::move(inter), p_inter),
      SamplingMask(std::move(minus), p.cwiseProduct(ones - pt)),
      SamplingMask(std::move(comp_inter), ones - p_inter),
      SamplingMask(std::move(comp_omega), ones - p),
  };
}

Index signed_frequency(Index j, Index n) { return j <= n / 2 ? j : j - n; }

namespace {

// Row-major rows x cols, transform along each row (length cols) in place.
void dft_rows(ComplexVector& v, Index rows, Index cols, bool inverse) {
  const double sign = inverse ? 1.0 : -1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<Complex> twiddle(static_cast<std::size_t>(cols));
  for (Index k = 0; k < cols; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cols);
    twiddle[static_cast<std::size_t>(k)] = Complex(std::cos(angle), std::sin(angle));
  }
  std::vector<Complex> row(static_cast<std::size_t>(cols));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) row[static_cast<std::size_t>(c)] = v[r * cols + c];
    for (Index k = 0; k < cols; ++k) {
      Complex acc(0.0, 0.0);
      for (Index j = 0; j < cols; ++j) acc += row[static_cast<std::size_t>(j)] * twiddle[static_cast<std::size_t>((j * k) % cols)];
      v[r * cols + k] = acc * scale;
    }
  }
}

ComplexVector transpose_grid(const ComplexVector& v, Index rows, Index cols) {
  ComplexVector out(v.size());
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) out[c * rows + r] = v[r * cols + c];
  return out;
}

}  // namespace

ComplexVector dft_unitary(const ComplexVector& v, bool inverse) {
  if (v.size() < 1) throw DimensionError("dft_unitary: empty vector");
  ComplexVector out = v;
  dft_rows(out, 1, v.size(), inverse);
  return out;
}

ComplexVector dft2_unitary(const ComplexVector& v, GridShape shape, bool inverse) {
  require_same_size(shape.size(), v.size(), "dft2_unitary");
  if (v.size() < 1) throw DimensionError("dft2_unitary: empty vector");
  ComplexVector out = v;
  dft_rows(out, shape.rows, shape.cols, inverse);
  if (shape.rows > 1) {
    ComplexVector t = transpose_grid(out, shape.rows, shape.cols);
    dft_rows(t, shape.cols, shape.rows, inverse);
    out = transpose_grid(t, shape.cols, shape.rows);
  }
  return out;
}

ComplexMatrix dft_matrix(GridShape shape) {
  const Index n = shape.size();
  ComplexMatrix f(n, n);
  ComplexVector e = ComplexVector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e.setZero();
    e[j] = 1.0;
    f.col(j) = dft2_unitary(e, shape);
  }
  return f;
}

RealVector magnitude_image(const ComplexVector& k, GridShape shape) {
  return dft2_unitary(k, shape, true).cwiseAbs();
}

RealVector magnitude_image(const ComplexVector& k) { return magnitude_image(k, GridShape{1, k.size()}); }

bool all_finite(const ComplexVector& v) {
  for (Index j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j].real()) || !std::isfinite(v[j].imag())) return false;
  }
  return true;
}

nlohmann::json complex_vector_to_json(const ComplexVector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index j = 0; j < v.size(); ++j) out.push_back({v[j].real(), v[j].imag()});
  return out;
}

ComplexVector complex_vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("ComplexVector: expected an array of [re, im] pairs");
  ComplexVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& pair = j[i];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ValidationError("ComplexVector: entry " + std::to_string(i) + " is not a [re, im] pair");
    }
    v[static_cast<Index>(i)] = Complex(pair[0].get<double>(), pair[1].get<double>());
  }
  return v;
}

nlohmann::json complex_matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(complex_vector_to_json(m.row(r).transpose()));
  return out;
}

ComplexMatrix complex_matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("ComplexMatrix: expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  ComplexMatrix m;
  for (Index r = 0; r < rows; ++r) {
    ComplexVector row = complex_vector_from_json(j[static_cast<std::size_t>(r)]);
    if (r == 0) m.resize(rows, row.size());
    if (row.size() != m.cols()) throw DimensionError("ComplexMatrix: ragged rows");
    m.row(r) = row.transpose();
  }
  return m;
}

void to_json(nlohmann::json& j, const SamplingMask& m) {
  j = nlohmann::json{{"indices", m.indices()}, {"probs", std::vector<double>(m.probs().begin(), m.probs().end())}};
}

void from_json(const nlohmann::json& j, SamplingMask& m) {
  const auto probs = j.at("probs").get<std::vector<double>>();
  const auto indices = j.at("indices").get<std::vector<Index>>();
  RealVector p = Eigen::Map<const RealVector>(probs.data(), static_cast<Index>(probs.size()));
  m = SamplingMask::from_indices(p.size(), indices, p);
}

}  // namespace ssrecon
