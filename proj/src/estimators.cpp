#include "ssrecon/estimators.hpp"

#include <algorithm>
#include <limits>

#include "ssrecon/errors.hpp"

namespace ssrecon {

RealVector stack_real(const ComplexVector& v) {
  RealVector out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

ComplexVector unstack_real(const RealVector& v) {
  const Index q = v.size() / 2;
  ComplexVector out(q);
  for (Index j = 0; j < q; ++j) out[j] = Complex(v[j], v[q + j]);
  return out;
}

void Estimator::check_inputs(const ComplexVector& y_in, const SamplingMask& m_in) const {
  require_same_size(y_in.size(), q_, "estimator input");
  require_same_size(m_in.size(), q_, "estimator mask");
}

void Estimator::check_inputs(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const {
  check_inputs(y_in, m_in);
  require_same_size(cotangent.size(), q_, "estimator cotangent");
}

namespace {

// [Re y; Im y; mask] network input.
RealVector network_input(const ComplexVector& v, const SamplingMask& m) {
  const Index q = v.size();
  RealVector x(3 * q);
  x.head(q) = v.real();
  x.segment(q, q) = v.imag();
  x.tail(q) = m.diagonal();
  return x;
}

}  // namespace

// ---- affine_per_pattern ----

AffinePerPattern::AffinePerPattern(Index q) : Estimator(q) {
  if (q < 1) throw ConfigError("affine_per_pattern: q must be >= 1");
  theta_.resize(0);
}

void AffinePerPattern::prepare(const SamplingMask& m_in) {
  require_same_size(m_in.size(), q_, "estimator mask");
  if (enrolled(m_in.pattern())) return;
  const Index slot = pattern_count();
  patterns_.push_back(m_in.pattern());
  slots_.emplace(m_in.pattern(), slot);
  theta_.conservativeResize(theta_.size() + block_size());
  theta_.tail(block_size()).setZero();
}

void AffinePerPattern::enroll(const Pattern& s, const ComplexMatrix& a, const ComplexVector& b) {
  require_same_size(static_cast<Index>(s.size()), q_, "affine enroll pattern");
  if (a.rows() != q_ || a.cols() != q_) throw DimensionError("affine enroll: A must be q x q");
  require_same_size(b.size(), q_, "affine enroll offset");
  if (!enrolled(s)) prepare(SamplingMask(s, RealVector::Ones(q_)));
  const Index base = slots_.at(s) * block_size();
  const Index qq = q_ * q_;
  for (Index r = 0; r < q_; ++r) {
    for (Index c = 0; c < q_; ++c) {
      theta_[base + r * q_ + c] = a(r, c).real();
      theta_[base + qq + r * q_ + c] = a(r, c).imag();
    }
  }
  theta_.segment(base + 2 * qq, q_) = b.real();
  theta_.segment(base + 2 * qq + q_, q_) = b.imag();
}

Index AffinePerPattern::resolve(const Pattern& s, bool* fallback) const {
  if (patterns_.empty()) throw ValidationError("affine_per_pattern: no patterns enrolled");
  if (const auto it = slots_.find(s); it != slots_.end()) {
    *fallback = false;
    return it->second;
  }
  *fallback = true;
  Index best = 0;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  for (std::size_t k = 0; k < patterns_.size(); ++k) {
    std::size_t d = 0;
    for (std::size_t j = 0; j < s.size(); ++j) d += patterns_[k][j] != s[j];
    if (d < best_distance) {
      best_distance = d;
      best = static_cast<Index>(k);
    }
  }
  return best;
}

ComplexMatrix AffinePerPattern::matrix(const Pattern& s) const {
  bool fallback = false;
  const Index base = resolve(s, &fallback) * block_size();
  const Index qq = q_ * q_;
  ComplexMatrix a(q_, q_);
  for (Index r = 0; r < q_; ++r)
    for (Index c = 0; c < q_; ++c) a(r, c) = Complex(theta_[base + r * q_ + c], theta_[base + qq + r * q_ + c]);
  return a;
}

ComplexVector AffinePerPattern::offset(const Pattern& s) const {
  bool fallback = false;
  const Index base = resolve(s, &fallback) * block_size() + 2 * q_ * q_;
  ComplexVector b(q_);
  for (Index j = 0; j < q_; ++j) b[j] = Complex(theta_[base + j], theta_[base + q_ + j]);
  return b;
}

ForwardResult AffinePerPattern::forward(const ComplexVector& y_in, const SamplingMask& m_in) const {
  check_inputs(y_in, m_in);
  ForwardResult out;
  const Index base = resolve(m_in.pattern(), &out.pattern_fallback) * block_size();
  const Index qq = q_ * q_;
  out.output.resize(q_);
  for (Index r = 0; r < q_; ++r) {
    Complex acc(theta_[base + 2 * qq + r], theta_[base + 2 * qq + q_ + r]);
    for (Index c = 0; c < q_; ++c) acc += Complex(theta_[base + r * q_ + c], theta_[base + qq + r * q_ + c]) * y_in[c];
    out.output[r] = acc;
  }
  return out;
}

RealVector AffinePerPattern::vjp(const ComplexVector& y_in, const SamplingMask& m_in,
                                 const ComplexVector& cotangent) const {
  check_inputs(y_in, m_in, cotangent);
  bool fallback = false;
  const Index base = resolve(m_in.pattern(), &fallback) * block_size();
  const Index qq = q_ * q_;
  RealVector g = RealVector::Zero(theta_.size());
  for (Index r = 0; r < q_; ++r) {
    const Complex cr = std::conj(cotangent[r]);
    for (Index c = 0; c < q_; ++c) {
      const Complex t = cr * y_in[c];
      g[base + r * q_ + c] = t.real();
      g[base + qq + r * q_ + c] = -t.imag();
    }
    g[base + 2 * qq + r] = cotangent[r].real();
    g[base + 2 * qq + q_ + r] = cotangent[r].imag();
  }
  return g;
}

nlohmann::json AffinePerPattern::shapes() const {
  nlohmann::json pats = nlohmann::json::array();
  for (const auto& s : patterns_) {
    std::vector<Index> idx;
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[j]) idx.push_back(static_cast<Index>(j));
    pats.push_back(idx);
  }
  return nlohmann::json{{"q", q_}, {"patterns", pats}};
}

// ---- tiny_net ----

namespace {

std::vector<Index> with_io(Index in, const std::vector<Index>& hidden, Index out) {
  std::vector<Index> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

TinyNet::TinyNet(Index q, std::vector<Index> hidden, bool residual)
    : Estimator(q), hidden_(std::move(hidden)), residual_(residual), net_(with_io(3 * q, hidden_, 2 * q)) {
  theta_ = RealVector::Zero(net_.parameter_count());
}

TinyNet::TinyNet(Index q, std::vector<Index> hidden, bool residual, Rng& rng) : TinyNet(q, std::move(hidden), residual) {
  net_.init(std::span<double>(theta_.data(), static_cast<std::size_t>(theta_.size())), rng);
}

ForwardResult TinyNet::forward(const ComplexVector& y_in, const SamplingMask& m_in) const {
  check_inputs(y_in, m_in);
  const std::span<const double> th(theta_.data(), static_cast<std::size_t>(theta_.size()));
  ForwardResult out;
  out.output = unstack_real(net_.forward(th, network_input(y_in, m_in)));
  if (residual_) out.output += y_in;
  return out;
}

RealVector TinyNet::vjp(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const {
  check_inputs(y_in, m_in, cotangent);
  const std::span<const double> th(theta_.data(), static_cast<std::size_t>(theta_.size()));
  Mlp::Cache cache;
  net_.forward(th, network_input(y_in, m_in), &cache);
  RealVector g = RealVector::Zero(theta_.size());
  net_.backward(th, cache, stack_real(cotangent), std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
  return g;
}

nlohmann::json TinyNet::shapes() const {
  return nlohmann::json{{"q", q_}, {"hidden", hidden_}, {"residual", residual_}};
}

// ---- toy_cascade ----

ToyCascade::ToyCascade(Index q, Index cascades, std::vector<Index> hidden)
    : Estimator(q), cascades_(cascades), hidden_(std::move(hidden)), net_(with_io(3 * q, hidden_, 2 * q)) {
  if (cascades_ < 1) throw ConfigError("toy_cascade: cascades must be >= 1");
  theta_ = RealVector::Zero(cascades_ * cascade_size());
}

ToyCascade::ToyCascade(Index q, Index cascades, std::vector<Index> hidden, Rng& rng, double eta0)
    : ToyCascade(q, cascades, std::move(hidden)) {
  const Index n = net_.parameter_count();
  for (Index k = 0; k < cascades_; ++k) {
    const Index base = k * cascade_size();
    theta_[base] = eta0;
    net_.init(std::span<double>(theta_.data() + base + 1, static_cast<std::size_t>(n)), rng, 0.0);
    net_.init(std::span<double>(theta_.data() + base + 1 + n, static_cast<std::size_t>(n)), rng, 0.0);
  }
}

void ToyCascade::zero_refinements() {
  const Index n = net_.parameter_count();
  for (Index k = 0; k < cascades_; ++k) theta_.segment(k * cascade_size() + 1, 2 * n).setZero();
}

ForwardResult ToyCascade::forward(const ComplexVector& y_in, const SamplingMask& m_in) const {
  check_inputs(y_in, m_in);
  const Index n = net_.parameter_count();
  const RealVector m = m_in.diagonal();
  ComplexVector s = y_in;
  for (Index k = 0; k < cascades_; ++k) {
    const Index base = k * cascade_size();
    const double eta = theta_[base];
    const RealVector x = network_input(s, m_in);
    const ComplexVector gd =
        unstack_real(net_.forward(std::span<const double>(theta_.data() + base + 1, static_cast<std::size_t>(n)), x));
    const ComplexVector gr = unstack_real(
        net_.forward(std::span<const double>(theta_.data() + base + 1 + n, static_cast<std::size_t>(n)), x));
    ComplexVector next(q_);
    for (Index j = 0; j < q_; ++j) {
      next[j] = s[j] - eta * m[j] * (s[j] - y_in[j]) + m[j] * gd[j] + (1.0 - m[j]) * gr[j];
    }
    s = std::move(next);
  }
  return ForwardResult{s, false};
}

RealVector ToyCascade::vjp(const ComplexVector& y_in, const SamplingMask& m_in, const ComplexVector& cotangent) const {
  check_inputs(y_in, m_in, cotangent);
  const Index n = net_.parameter_count();
  const RealVector m = m_in.diagonal();
  const RealVector one_minus_m = RealVector::Ones(q_) - m;

  std::vector<ComplexVector> states{y_in};
  std::vector<Mlp::Cache> cache_d(static_cast<std::size_t>(cascades_)), cache_r(static_cast<std::size_t>(cascades_));
  for (Index k = 0; k < cascades_; ++k) {
    const Index base = k * cascade_size();
    const double eta = theta_[base];
    const ComplexVector& s = states.back();
    const RealVector x = network_input(s, m_in);
    const ComplexVector gd = unstack_real(net_.forward(
        std::span<const double>(theta_.data() + base + 1, static_cast<std::size_t>(n)), x, &cache_d[k]));
    const ComplexVector gr = unstack_real(net_.forward(
        std::span<const double>(theta_.data() + base + 1 + n, static_cast<std::size_t>(n)), x, &cache_r[k]));
    ComplexVector next(q_);
    for (Index j = 0; j < q_; ++j) {
      next[j] = s[j] - eta * m[j] * (s[j] - y_in[j]) + m[j] * gd[j] + (1.0 - m[j]) * gr[j];
    }
    states.push_back(std::move(next));
  }

  RealVector grad = RealVector::Zero(theta_.size());
  ComplexVector g = cotangent;
  for (Index k = cascades_; k-- > 0;) {
    const Index base = k * cascade_size();
    const double eta = theta_[base];
    const ComplexVector& s = states[static_cast<std::size_t>(k)];
    const ComplexVector residual = m.cast<Complex>().cwiseProduct(s - y_in);
    grad[base] = -(g.conjugate().cwiseProduct(residual)).sum().real();

    const ComplexVector g_d = m.cast<Complex>().cwiseProduct(g);
    const ComplexVector g_r = one_minus_m.cast<Complex>().cwiseProduct(g);
    const RealVector dx_d = net_.backward(std::span<const double>(theta_.data() + base + 1, static_cast<std::size_t>(n)),
                                          cache_d[k], stack_real(g_d),
                                          std::span<double>(grad.data() + base + 1, static_cast<std::size_t>(n)));
    const RealVector dx_r = net_.backward(
        std::span<const double>(theta_.data() + base + 1 + n, static_cast<std::size_t>(n)), cache_r[k],
        stack_real(g_r), std::span<double>(grad.data() + base + 1 + n, static_cast<std::size_t>(n)));
    const RealVector dx = dx_d + dx_r;
    ComplexVector prev = g - eta * g_d;
    for (Index j = 0; j < q_; ++j) prev[j] += Complex(dx[j], dx[q_ + j]);
    g = std::move(prev);
  }
  return grad;
}

nlohmann::json ToyCascade::shapes() const {
  return nlohmann::json{{"q", q_}, {"cascades", cascades_}, {"hidden", hidden_}};
}

// ---- factory and checkpoints ----

void to_json(nlohmann::json& j, const EstimatorConfig& c) {
  j = nlohmann::json{{"family", c.family}, {"hidden", c.hidden}, {"residual", c.residual}, {"cascades", c.cascades}};
}

void from_json(const nlohmann::json& j, EstimatorConfig& c) {
  if (j.is_string()) {
    c.family = j.get<std::string>();
    return;
  }
  if (j.contains("family")) c.family = j.at("family").get<std::string>();
  if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<Index>>();
  if (j.contains("residual")) c.residual = j.at("residual").get<bool>();
  if (j.contains("cascades")) c.cascades = j.at("cascades").get<Index>();
}

EstimatorPtr make_estimator(const EstimatorConfig& config, Index q, Rng& rng) {
  if (config.family == "affine_per_pattern") return std::make_unique<AffinePerPattern>(q);
  if (config.family == "tiny_net") {
    auto hidden = config.hidden.empty() ? std::vector<Index>{4 * q, 4 * q} : config.hidden;
    return std::make_unique<TinyNet>(q, hidden, config.residual, rng);
  }
  if (config.family == "toy_cascade") {
    auto hidden = config.hidden.empty() ? std::vector<Index>{2 * q} : config.hidden;
    return std::make_unique<ToyCascade>(q, config.cascades, hidden, rng);
  }
  throw ConfigError("estimator.family: unknown family '" + config.family + "'");
}

nlohmann::json checkpoint_to_json(const Estimator& est) {
  return nlohmann::json{{"family", est.family()},
                        {"shapes", est.shapes()},
                        {"theta", std::vector<double>(est.theta().begin(), est.theta().end())}};
}

EstimatorPtr checkpoint_from_json(const nlohmann::json& j) {
  const auto family = j.at("family").get<std::string>();
  const auto& shapes = j.at("shapes");
  const auto theta = j.at("theta").get<std::vector<double>>();
  const auto q = shapes.at("q").get<Index>();
  EstimatorPtr est;
  if (family == "affine_per_pattern") {
    auto affine = std::make_unique<AffinePerPattern>(q);
    for (const auto& idx : shapes.at("patterns")) {
      const auto indices = idx.get<std::vector<Index>>();
      affine->prepare(SamplingMask::from_indices(q, indices, RealVector::Ones(q)));
    }
    est = std::move(affine);
  } else if (family == "tiny_net") {
    est = std::make_unique<TinyNet>(q, shapes.at("hidden").get<std::vector<Index>>(), shapes.at("residual").get<bool>());
  } else if (family == "toy_cascade") {
    est = std::make_unique<ToyCascade>(q, shapes.at("cascades").get<Index>(),
                                       shapes.at("hidden").get<std::vector<Index>>());
  } else {
    throw ValidationError("checkpoint.family: unknown family '" + family + "'");
  }
  if (static_cast<Index>(theta.size()) != est->parameter_count()) {
    throw ValidationError("checkpoint.theta: expected " + std::to_string(est->parameter_count()) + " values, got " +
                          std::to_string(theta.size()));
  }
  est->theta() = Eigen::Map<const RealVector>(theta.data(), static_cast<Index>(theta.size()));
  return est;
}

RankReport jacobian_rank_check(const Estimator& est, const ComplexVector& y_in, const SamplingMask& m_in) {
  const Index q = est.q();
  const Index p = est.parameter_count();
  if (p < 2 * q) throw ValidationError("jacobian_rank_check: need at least 2q parameters");
  Eigen::MatrixXd jac(2 * q, p);
  ComplexVector e = ComplexVector::Zero(q);
  for (Index j = 0; j < q; ++j) {
    e.setZero();
    e[j] = 1.0;
    jac.row(j) = est.vjp(y_in, m_in, e).transpose();
    e[j] = Complex(0.0, 1.0);
    jac.row(q + j) = est.vjp(y_in, m_in, e).transpose();
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(jac);
  RankReport report;
  report.rows = 2 * q;
  report.params = p;
  report.singular_values = svd.singularValues();
  const double smax = report.singular_values.size() ? report.singular_values[0] : 0.0;
  report.tolerance = smax * static_cast<double>(std::max(2 * q, p)) * std::numeric_limits<double>::epsilon();
  for (Index i = 0; i < report.singular_values.size(); ++i) {
    if (report.singular_values[i] > report.tolerance) {
      ++report.rank;
      report.smallest_retained = report.singular_values[i];
    }
  }
  report.full_rank = report.rank == 2 * q;
  return report;
}

}  // namespace ssrecon
