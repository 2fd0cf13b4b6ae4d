#include "ssrecon/mlp.hpp"

#include <cmath>

#include "ssrecon/errors.hpp"

namespace ssrecon {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Mlp::Mlp(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("mlp: need at least input and output sizes");
  for (Index n : sizes_) {
    if (n < 1) throw ConfigError("mlp: layer sizes must be >= 1");
  }
}

Index Mlp::parameter_count() const {
  Index n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) n += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  return n;
}

void Mlp::init(std::span<double> theta, Rng& rng, double last_gain) const {
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const Index n_in = sizes_[l], n_out = sizes_[l + 1];
    const double bound = (l + 2 == sizes_.size() ? last_gain : 1.0) / std::sqrt(static_cast<double>(n_in));
    for (Index i = 0; i < n_out * n_in; ++i) theta[offset++] = bound * (2.0 * rng.uniform() - 1.0);
    for (Index i = 0; i < n_out; ++i) theta[offset++] = 0.0;
  }
}

RealVector Mlp::forward(std::span<const double> theta, const RealVector& x, Cache* cache) const {
  require_same_size(x.size(), input_size(), "mlp input");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  RealVector h = x;
  std::size_t offset = 0;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const Index n_in = sizes_[l], n_out = sizes_[l + 1];
    Eigen::Map<const RowMajor> w(theta.data() + offset, n_out, n_in);
    offset += static_cast<std::size_t>(n_out * n_in);
    Eigen::Map<const RealVector> b(theta.data() + offset, n_out);
    offset += static_cast<std::size_t>(n_out);
    RealVector z = w * h + b;
    if (cache) {
      cache->inputs.push_back(h);
      cache->pre.push_back(z);
    }
    if (l + 1 < layers) {
      for (Index i = 0; i < n_out; ++i) z[i] = softplus(z[i]);
    }
    h = std::move(z);
  }
  return h;
}

RealVector Mlp::backward(std::span<const double> theta, const Cache& cache, const RealVector& g_out,
                         std::span<double> g_theta) const {
  require_same_size(g_out.size(), output_size(), "mlp cotangent");
  const std::size_t layers = sizes_.size() - 1;
  std::vector<std::size_t> offsets(layers);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = offset;
    offset += static_cast<std::size_t>(sizes_[l + 1] * sizes_[l] + sizes_[l + 1]);
  }
  RealVector g = g_out;
  for (std::size_t l = layers; l-- > 0;) {
    const Index n_in = sizes_[l], n_out = sizes_[l + 1];
    if (l + 1 < layers) {
      for (Index i = 0; i < n_out; ++i) g[i] *= sigmoid(cache.pre[l][i]);
    }
    Eigen::Map<const RowMajor> w(theta.data() + offsets[l], n_out, n_in);
    Eigen::Map<RowMajor> gw(g_theta.data() + offsets[l], n_out, n_in);
    Eigen::Map<RealVector> gb(g_theta.data() + offsets[l] + static_cast<std::size_t>(n_out * n_in), n_out);
    gw.noalias() += g * cache.inputs[l].transpose();
    gb += g;
    g = w.transpose() * g;
  }
  return g;
}

}  // namespace ssrecon
