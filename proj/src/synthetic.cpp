#include "ssrecon/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ssrecon/errors.hpp"

namespace ssrecon {

MeasurementModel::MeasurementModel(ComplexMatrix prior_cov, NoiseSpec noise, MaskDistribution omega_dist,
                                   MaskDistribution lambda_dist)
    : prior_cov_(std::move(prior_cov)),
      noise_(noise),
      omega_dist_(omega_dist),
      lambda_dist_(lambda_dist) {
  if (prior_cov_.rows() != prior_cov_.cols() || prior_cov_.rows() < 1) {
    throw DimensionError("prior_cov: must be a non-empty square matrix");
  }
  require_same_size(prior_cov_.rows(), omega_dist_.q(), "prior_cov vs omega grid");
  require_same_size(prior_cov_.rows(), lambda_dist_.q(), "prior_cov vs lambda grid");
  noise_.validate();

  const double scale = std::max(1.0, prior_cov_.cwiseAbs().maxCoeff());
  if ((prior_cov_ - prior_cov_.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ValidationError("prior_cov: not Hermitian");
  }
  const ComplexMatrix hermitian = 0.5 * (prior_cov_ + prior_cov_.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(hermitian);
  if (eig.info() != Eigen::Success) throw ValidationError("prior_cov: eigendecomposition failed");
  RealVector values = eig.eigenvalues();
  if (values.minCoeff() < -1e-10 * scale) {
    throw ValidationError("prior_cov: not positive semidefinite (eigenvalue " + std::to_string(values.minCoeff()) + ")");
  }
  values = values.cwiseMax(0.0).cwiseSqrt();
  prior_sqrt_ = eig.eigenvectors() * values.asDiagonal();

  omega_density_ = build_density(omega_dist_);
  lambda_density_ = build_density(lambda_dist_);
}

MeasurementModel MeasurementModel::with_noise(NoiseSpec noise) const {
  MeasurementModel out = *this;
  noise.validate();
  out.noise_ = noise;
  return out;
}

MeasurementModel MeasurementModel::with_masks(MaskDistribution omega_dist, MaskDistribution lambda_dist) const {
  return MeasurementModel(prior_cov_, noise_, omega_dist, lambda_dist);
}

namespace {

// Squared-exponential kernel restricted to a centred support of one axis.
Eigen::MatrixXd support_kernel(Index n, double support, double length) {
  const Index m = std::clamp<Index>(static_cast<Index>(std::lround(support * static_cast<double>(n))), 1, n);
  const Index start = (n - m) / 2;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Index a = start; a < start + m; ++a) {
    for (Index b = start; b < start + m; ++b) {
      const double d = static_cast<double>(a - b);
      k(a, b) = std::exp(-0.5 * d * d / (length * length));
    }
  }
  return k;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

ComplexMatrix build_prior_cov(const PriorSpec& spec, GridShape shape) {
  const Index q = shape.size();
  if (q < 1) throw ConfigError("model.q: must be >= 1");
  if (!(spec.scale >= 0.0)) throw ConfigError("model.prior.scale: must be >= 0");
  if (spec.preset == "scalar") return ComplexMatrix::Identity(q, q) * spec.scale;
  if (spec.preset == "diagonal") {
    RealVector v(q);
    for (Index r = 0; r < shape.rows; ++r) {
      for (Index c = 0; c < shape.cols; ++c) {
        const double fr = static_cast<double>(signed_frequency(r, shape.rows));
        const double fc = static_cast<double>(signed_frequency(c, shape.cols));
        v[r * shape.cols + c] = spec.scale * std::pow(1.0 + std::hypot(fr, fc), -spec.decay);
      }
    }
    return v.cast<Complex>().asDiagonal();
  }
  if (spec.preset == "banded") {
    if (!(spec.support > 0.0 && spec.support <= 1.0)) throw ConfigError("model.prior.support: must lie in (0, 1]");
    if (!(spec.length > 0.0)) throw ConfigError("model.prior.length: must be > 0");
    if (!(spec.nugget >= 0.0)) throw ConfigError("model.prior.nugget: must be >= 0");
    Eigen::MatrixXd image = support_kernel(shape.cols, spec.support, spec.length);
    if (shape.rows > 1) image = kron(support_kernel(shape.rows, spec.support, spec.length), image);
    image += spec.nugget * Eigen::MatrixXd::Identity(q, q);
    const ComplexMatrix f = dft_matrix(shape);
    ComplexMatrix cov = f * image.cast<Complex>() * f.adjoint();
    cov = 0.5 * (cov + cov.adjoint()).eval();
    const double trace = cov.trace().real();
    if (trace > 0.0) cov *= static_cast<double>(q) * spec.scale / trace;
    return cov;
  }
  if (spec.preset == "file") {
    std::ifstream in(spec.path);
    if (!in) throw ConfigError("model.prior.path: cannot open '" + spec.path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("model.prior.path: " + std::string(e.what()));
    }
    ComplexMatrix cov = complex_matrix_from_json(j.is_object() ? j.at("cov") : j);
    if (cov.rows() != q || cov.cols() != q) throw ConfigError("model.prior.path: covariance is not q x q");
    return cov;
  }
  throw ConfigError("model.prior.preset: unknown preset '" + spec.preset + "'");
}

ComplexVector gaussian_ground_truth(const MeasurementModel& model, Rng& rng) {
  ComplexVector z(model.q());
  for (Index j = 0; j < z.size(); ++j) z[j] = rng.complex_normal(1.0);
  return model.prior_sqrt() * z;
}

ComplexVector phantom_ground_truth(Index q, Index n_blocks, Rng& rng) {
  if (n_blocks < 1 || n_blocks > q) throw ConfigError("phantom: need 1 <= n_blocks <= q");
  std::vector<Index> cuts(static_cast<std::size_t>(q - 1));
  for (Index i = 0; i < q - 1; ++i) cuts[static_cast<std::size_t>(i)] = i + 1;
  for (Index i = 0; i < n_blocks - 1; ++i) {
    const auto pick = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(q - 1 - i)));
    std::swap(cuts[static_cast<std::size_t>(i)], cuts[static_cast<std::size_t>(pick)]);
  }
  cuts.resize(static_cast<std::size_t>(n_blocks - 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(q);
  ComplexVector image(q);
  Index start = 0;
  for (Index end : cuts) {
    const double level = rng.uniform();
    for (Index j = start; j < end; ++j) image[j] = level;
    start = end;
  }
  return dft_unitary(image);
}

void to_json(nlohmann::json& j, const PriorSpec& s) {
  j = nlohmann::json{{"preset", s.preset}, {"scale", s.scale},   {"decay", s.decay},
                     {"support", s.support}, {"length", s.length}, {"nugget", s.nugget}};
  if (!s.path.empty()) j["path"] = s.path;
}

void from_json(const nlohmann::json& j, PriorSpec& s) {
  if (j.is_string()) {
    s.preset = j.get<std::string>();
    return;
  }
  if (j.contains("preset")) s.preset = j.at("preset").get<std::string>();
  if (j.contains("scale")) s.scale = j.at("scale").get<double>();
  if (j.contains("decay")) s.decay = j.at("decay").get<double>();
  if (j.contains("support")) s.support = j.at("support").get<double>();
  if (j.contains("length")) s.length = j.at("length").get<double>();
  if (j.contains("nugget")) s.nugget = j.at("nugget").get<double>();
  if (j.contains("path")) s.path = j.at("path").get<std::string>();
}

void to_json(nlohmann::json& j, const MaskDistribution& d) {
  j = nlohmann::json{{"kind", to_string(d.kind)},
                     {"shape", {d.shape.rows, d.shape.cols}},
                     {"accel", d.target_accel},
                     {"n_center", d.n_center},
                     {"degree", d.degree}};
}

void from_json(const nlohmann::json& j, MaskDistribution& d) {
  if (j.contains("kind")) d.kind = mask_kind_from_string(j.at("kind").get<std::string>());
  bool grid_given = false;
  if (j.contains("q")) {
    d.shape = GridShape{1, j.at("q").get<Index>()};
    grid_given = true;
  }
  if (j.contains("shape")) {
    const auto s = j.at("shape").get<std::vector<Index>>();
    if (s.size() != 2) throw ConfigError("shape: expected [rows, cols]");
    d.shape = GridShape{s[0], s[1]};
    grid_given = true;
  }
  if (grid_given) d.n_center = MaskDistribution::default_center(d.shape.cols);
  if (j.contains("accel")) d.target_accel = j.at("accel").get<double>();
  if (j.contains("n_center")) d.n_center = j.at("n_center").get<Index>();
  if (j.contains("degree")) d.degree = j.at("degree").get<double>();
}

}  // namespace ssrecon
