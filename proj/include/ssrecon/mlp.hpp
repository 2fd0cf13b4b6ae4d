#pragma once

// Real fully-connected network with softplus hidden layers and a linear
// output layer, evaluated on a borrowed parameter span so several networks
// can share one flat theta.
//
// Layout per layer: W (n_out x n_in, row-major) followed by b (n_out).

#include <span>
#include <vector>

#include "ssrecon/kspace.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

/// log(1 + e^x) without overflow.
double softplus(double x);
/// d softplus / dx = 1 / (1 + e^-x).
double sigmoid(double x);

class Mlp {
 public:
  struct Cache {
    std::vector<RealVector> inputs;  // input of each layer
    std::vector<RealVector> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  explicit Mlp(std::vector<Index> sizes);

  const std::vector<Index>& sizes() const { return sizes_; }
  Index input_size() const { return sizes_.front(); }
  Index output_size() const { return sizes_.back(); }
  Index parameter_count() const;

  /// Weights uniform in +-1/sqrt(fan_in), the last layer's scaled by
  /// last_gain; biases zero.
  void init(std::span<double> theta, Rng& rng, double last_gain = 1.0) const;

  RealVector forward(std::span<const double> theta, const RealVector& x, Cache* cache = nullptr) const;
  /// Accumulates d<g_out, out>/d theta into g_theta and returns d/dx.
  RealVector backward(std::span<const double> theta, const Cache& cache, const RealVector& g_out,
                      std::span<double> g_theta) const;

 private:
  std::vector<Index> sizes_;
};

}  // namespace ssrecon
