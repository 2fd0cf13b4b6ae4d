#pragma once

// Loss zoo with exact gradients, the diagonal loss weightings, Adam and the
// epoch loop with per-epoch regeneration of Lambda and the further noise.

#include <functional>
#include <optional>
#include <vector>

#include "ssrecon/estimators.hpp"
#include "ssrecon/methods.hpp"
#include "ssrecon/synthetic.hpp"

namespace ssrecon {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  RealVector m;
  RealVector v;
  std::int64_t t = 0;
};

struct TrainSpec {
  Method method = Method::fully_supervised;
  Index epochs = 300;
  Index batch_size = 1;
  AdamConfig adam;
  double lambda_n2r = 1.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless lr > 0, epochs >= 1, batch_size >= 1,
  /// lambda_n2r >= 0 and alpha > 0.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainSpec& s);
void from_json(const nlohmann::json& j, TrainSpec& s);

struct TrainItem {
  std::optional<ComplexVector> y0;      // clean ground truth
  std::optional<ComplexVector> y_full;  // y0 + n, fully sampled
  ComplexVector y;                      // M_omega (y0 + n)
  SamplingMask omega;
};

/// The per-epoch random quantities of one item.
struct EpochDraw {
  SamplingMask lambda;
  ComplexVector ntilde;  // std alpha * sigma_n
};

EpochDraw draw_epoch(const MeasurementModel& model, double alpha, Index q, Rng& rng);

struct LossGrad {
  double loss = 0.0;
  RealVector grad;
};

/// W_omega = ((1 + a^2) / a^2) M_omega + M_omega^c.
RealVector weight_noisier2full(const SamplingMask& omega, double alpha);
/// W_{omega,lambda} = ((1 + a^2) / a^2) M_{lambda n omega} + P^{1/2} M_{omega \ lambda}; zero off omega.
RealVector weight_robust_ssdu(const SamplingMask& omega, const SamplingMask& lambda, double alpha,
                              const RealVector& P);

/// Network inputs a method feeds to f for training (the second entry is
/// only used by noise2recon_ss).
struct MethodInputs {
  ComplexVector input;
  SamplingMask mask;
  std::optional<ComplexVector> input2;
  std::optional<SamplingMask> mask2;
};
MethodInputs training_inputs(Method method, const TrainItem& item, const EpochDraw& draw);

/// Per-item loss of the method and its gradient over theta. The estimator
/// must already be prepared for the input masks.
LossGrad loss_and_grad(const TrainSpec& spec, const Estimator& est, const TrainItem& item, const EpochDraw& draw);

/// theta -= lr * mhat / (sqrt(vhat) + eps). Grows the state with zeros when
/// theta has grown.
void adam_step(const AdamConfig& config, AdamState& state, RealVector& theta, const RealVector& grad);

struct HistoryRow {
  Index epoch = 0;
  double loss_mean = 0.0;
  double val_nmse = 0.0;  // NaN without a validator
};

struct TrainResult {
  EstimatorPtr estimator;
  std::vector<HistoryRow> history;
};

using Validator = std::function<double(const Estimator&)>;

/// Epoch e shuffles the items with substream ("shuffle", e) and draws the
/// item t quantities from substream ("draw", e, t) of rng. Per-item
/// gradients of a batch may be evaluated concurrently and are summed in
/// item order.
TrainResult train(const TrainSpec& spec, EstimatorPtr init, const std::vector<TrainItem>& data,
                  const MeasurementModel& model, const Rng& rng, const Validator& validate = {});

/// "epoch,loss,val_nmse" CSV.
std::string history_csv(const std::vector<HistoryRow>& history);

}  // namespace ssrecon
