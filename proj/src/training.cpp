#include "ssrecon/training.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "ssrecon/errors.hpp"
#include "ssrecon/noise.hpp"
#include "ssrecon/sampling.hpp"

namespace ssrecon {

void TrainSpec::validate() const {
  if (!(adam.lr > 0.0)) throw ConfigError("train.lr: must be > 0");
  if (epochs < 1) throw ConfigError("train.epochs: must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (!(lambda_n2r >= 0.0)) throw ConfigError("train.lambda_n2r: must be >= 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("train.alpha: must be finite and > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("train.beta1: must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("train.beta2: must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("train.eps: must be > 0");
}

void to_json(nlohmann::json& j, const TrainSpec& s) {
  j = nlohmann::json{{"method", to_string(s.method)}, {"epochs", s.epochs},        {"batch_size", s.batch_size},
                     {"lr", s.adam.lr},               {"beta1", s.adam.beta1},     {"beta2", s.adam.beta2},
                     {"eps", s.adam.eps},             {"lambda_n2r", s.lambda_n2r}, {"alpha", s.alpha},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, TrainSpec& s) {
  if (j.contains("method")) s.method = method_from_string(j.at("method").get<std::string>());
  if (j.contains("epochs")) s.epochs = j.at("epochs").get<Index>();
  if (j.contains("batch_size")) s.batch_size = j.at("batch_size").get<Index>();
  if (j.contains("lr")) s.adam.lr = j.at("lr").get<double>();
  if (j.contains("beta1")) s.adam.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) s.adam.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) s.adam.eps = j.at("eps").get<double>();
  if (j.contains("lambda_n2r")) s.lambda_n2r = j.at("lambda_n2r").get<double>();
  if (j.contains("alpha")) s.alpha = j.at("alpha").get<double>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
}

EpochDraw draw_epoch(const MeasurementModel& model, double alpha, Index q, Rng& rng) {
  EpochDraw d;
  d.lambda = draw_mask(model.lambda_density(), rng);
  d.ntilde = complex_noise(q, alpha * model.noise().sigma_n, rng);
  return d;
}

RealVector weight_noisier2full(const SamplingMask& omega, double alpha) {
  if (!(alpha > 0.0)) throw ValidationError("weight_noisier2full: alpha must be > 0");
  const double w = (1.0 + alpha * alpha) / (alpha * alpha);
  RealVector out(omega.size());
  for (Index j = 0; j < omega.size(); ++j) out[j] = omega.contains(j) ? w : 1.0;
  return out;
}

RealVector weight_robust_ssdu(const SamplingMask& omega, const SamplingMask& lambda, double alpha,
                              const RealVector& P) {
  if (!(alpha > 0.0)) throw ValidationError("weight_robust_ssdu: alpha must be > 0");
  require_same_size(omega.size(), lambda.size(), "weight_robust_ssdu");
  require_same_size(omega.size(), P.size(), "weight_robust_ssdu");
  const double w = (1.0 + alpha * alpha) / (alpha * alpha);
  RealVector out = RealVector::Zero(omega.size());
  for (Index j = 0; j < omega.size(); ++j) {
    if (!omega.contains(j)) continue;
    if (lambda.contains(j)) {
      out[j] = w;
    } else {
      if (!(P[j] > 0.0) || !std::isfinite(P[j])) {
        throw ValidationError("weight_robust_ssdu: invalid P at index " + std::to_string(j));
      }
      out[j] = std::sqrt(P[j]);
    }
  }
  return out;
}

namespace {

const ComplexVector& require_field(const std::optional<ComplexVector>& v, Method m, const char* name) {
  if (!v) throw ConfigError("train: method " + to_string(m) + " needs " + name + " in every item");
  return *v;
}

// Adds |w (f - t)|^2 to loss and returns the cotangent 2 w^2 (f - t).
ComplexVector weighted_residual(const ComplexVector& f, const ComplexVector& t, const RealVector* w, double* loss) {
  ComplexVector cot(f.size());
  for (Index j = 0; j < f.size(); ++j) {
    const double wj = w ? (*w)[j] : 1.0;
    const Complex r = f[j] - t[j];
    *loss += wj * wj * std::norm(r);
    cot[j] = 2.0 * wj * wj * r;
  }
  return cot;
}

}  // namespace

MethodInputs training_inputs(Method method, const TrainItem& item, const EpochDraw& draw) {
  switch (method) {
    case Method::fully_supervised:
    case Method::supervised_wo_denoising:
      return MethodInputs{item.y, item.omega, std::nullopt, std::nullopt};
    case Method::noisier2full:
    case Method::noisier2full_unweighted:
      return MethodInputs{corrupt_noisier2full(item.y, item.omega, draw.ntilde), item.omega, std::nullopt,
                          std::nullopt};
    case Method::standard_ssdu: {
      const SamplingMask li = intersect(item.omega, draw.lambda);
      return MethodInputs{apply_mask(li, item.y), li, std::nullopt, std::nullopt};
    }
    case Method::noise2recon_ss: {
      const SamplingMask li = intersect(item.omega, draw.lambda);
      return MethodInputs{apply_mask(li, item.y), li, corrupt_noisier2full(item.y, item.omega, draw.ntilde),
                          item.omega};
    }
    case Method::robust_ssdu:
    case Method::robust_ssdu_unweighted: {
      const SamplingMask li = intersect(item.omega, draw.lambda);
      return MethodInputs{corrupt_robust_ssdu(item.y, item.omega, draw.lambda, draw.ntilde), li, std::nullopt,
                          std::nullopt};
    }
  }
  throw ConfigError("train: unsupported method");
}

LossGrad loss_and_grad(const TrainSpec& spec, const Estimator& est, const TrainItem& item, const EpochDraw& draw) {
  const Method m = spec.method;
  const MethodInputs in = training_inputs(m, item, draw);
  const ComplexVector f = est.forward(in.input, in.mask).output;
  LossGrad out;
  ComplexVector cot;
  switch (m) {
    case Method::fully_supervised:
      cot = weighted_residual(f, require_field(item.y0, m, "y0"), nullptr, &out.loss);
      break;
    case Method::supervised_wo_denoising:
      cot = weighted_residual(f, require_field(item.y_full, m, "y_full"), nullptr, &out.loss);
      break;
    case Method::noisier2full: {
      const RealVector w = weight_noisier2full(item.omega, spec.alpha);
      cot = weighted_residual(f, require_field(item.y_full, m, "y_full"), &w, &out.loss);
      break;
    }
    case Method::noisier2full_unweighted:
      cot = weighted_residual(f, require_field(item.y_full, m, "y_full"), nullptr, &out.loss);
      break;
    case Method::standard_ssdu: {
      const RealVector w = mask_algebra(item.omega, draw.lambda).omega_minus_lambda.diagonal();
      cot = weighted_residual(f, item.y, &w, &out.loss);
      break;
    }
    case Method::robust_ssdu: {
      const RealVector P = compute_P(item.omega.probs(), draw.lambda.probs());
      const RealVector w = weight_robust_ssdu(item.omega, draw.lambda, spec.alpha, P);
      cot = weighted_residual(f, item.y, &w, &out.loss);
      break;
    }
    case Method::robust_ssdu_unweighted: {
      const RealVector w = item.omega.diagonal();
      cot = weighted_residual(f, item.y, &w, &out.loss);
      break;
    }
    case Method::noise2recon_ss: {
      const RealVector w = mask_algebra(item.omega, draw.lambda).omega_minus_lambda.diagonal();
      cot = weighted_residual(f, item.y, &w, &out.loss);
      const ComplexVector fa = est.forward(*in.input2, *in.mask2).output;
      double consistency = 0.0;
      const ComplexVector cot_a = weighted_residual(fa, f, nullptr, &consistency);
      out.loss += spec.lambda_n2r * consistency;
      cot -= spec.lambda_n2r * cot_a;
      out.grad = est.vjp(in.input, in.mask, cot) + est.vjp(*in.input2, *in.mask2, spec.lambda_n2r * cot_a);
      return out;
    }
  }
  out.grad = est.vjp(in.input, in.mask, cot);
  return out;
}

void adam_step(const AdamConfig& config, AdamState& state, RealVector& theta, const RealVector& grad) {
  require_same_size(theta.size(), grad.size(), "adam_step");
  if (state.m.size() < theta.size()) {
    const Index old = state.m.size();
    state.m.conservativeResize(theta.size());
    state.v.conservativeResize(theta.size());
    state.m.tail(theta.size() - old).setZero();
    state.v.tail(theta.size() - old).setZero();
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (Index i = 0; i < theta.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
  }
}

TrainResult train(const TrainSpec& spec, EstimatorPtr init, const std::vector<TrainItem>& data,
                  const MeasurementModel& model, const Rng& rng, const Validator& validate) {
  spec.validate();
  if (data.empty()) throw ConfigError("train: dataset is empty");
  if (!init) throw ConfigError("train: no estimator");
  TrainResult result;
  result.estimator = std::move(init);
  Estimator& est = *result.estimator;
  AdamState state;
  const auto n = static_cast<Index>(data.size());
  std::vector<Index> order(static_cast<std::size_t>(n));

  for (Index epoch = 0; epoch < spec.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    Rng shuffle = rng.substream("shuffle", static_cast<std::uint64_t>(epoch));
    for (Index i = n - 1; i > 0; --i) {
      const auto k = static_cast<Index>(shuffle.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(k)]);
    }

    double loss_sum = 0.0;
    for (Index start = 0; start < n; start += spec.batch_size) {
      const Index count = std::min(spec.batch_size, n - start);
      std::vector<EpochDraw> draws(static_cast<std::size_t>(count));
      for (Index b = 0; b < count; ++b) {
        const Index t = order[static_cast<std::size_t>(start + b)];
        const TrainItem& item = data[static_cast<std::size_t>(t)];
        Rng item_rng = rng.substream("draw", static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(t));
        draws[static_cast<std::size_t>(b)] = draw_epoch(model, spec.alpha, item.y.size(), item_rng);
        const MethodInputs in = training_inputs(spec.method, item, draws[static_cast<std::size_t>(b)]);
        est.prepare(in.mask);
        if (in.mask2) est.prepare(*in.mask2);
      }

      std::vector<LossGrad> parts(static_cast<std::size_t>(count));
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(static) if (count > 1)
      for (Index b = 0; b < count; ++b) {
        const Index t = order[static_cast<std::size_t>(start + b)];
        try {
          parts[static_cast<std::size_t>(b)] =
              loss_and_grad(spec, est, data[static_cast<std::size_t>(t)], draws[static_cast<std::size_t>(b)]);
        } catch (...) {
          errors[static_cast<std::size_t>(b)] = std::current_exception();
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      RealVector grad = RealVector::Zero(est.parameter_count());
      for (const auto& part : parts) {
        grad += part.grad;
        loss_sum += part.loss;
      }
      adam_step(spec.adam, state, est.theta(), grad);
    }

    HistoryRow row;
    row.epoch = epoch + 1;
    row.loss_mean = loss_sum / static_cast<double>(n);
    row.val_nmse = validate ? validate(est) : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(row);
  }
  return result;
}

std::string history_csv(const std::vector<HistoryRow>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss,val_nmse\n";
  for (const auto& r : history) out << r.epoch << ',' << r.loss_mean << ',' << r.val_nmse << '\n';
  return out.str();
}

}  // namespace ssrecon
