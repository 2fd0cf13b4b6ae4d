#include "ssrecon/oracles.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "ssrecon/errors.hpp"
#include "ssrecon/fit.hpp"
#include "ssrecon/inference.hpp"
#include "ssrecon/noise.hpp"
#include "ssrecon/sampling.hpp"
#include "ssrecon/training.hpp"

namespace ssrecon {

namespace {

std::vector<Index> support(const Pattern& s) {
  std::vector<Index> out;
  for (std::size_t j = 0; j < s.size(); ++j)
    if (s[j]) out.push_back(static_cast<Index>(j));
  return out;
}

double observation_noise(const MeasurementModel& model, Conditioning c) {
  const double s2 = model.noise().sigma_n * model.noise().sigma_n;
  return c == Conditioning::on_Y ? s2 : (1.0 + model.noise().alpha * model.noise().alpha) * s2;
}

// Observed block covariance and its LLT; throws when singular.
Eigen::LLT<ComplexMatrix> observed_factor(const MeasurementModel& model, const std::vector<Index>& obs, double v) {
  const auto m = static_cast<Index>(obs.size());
  ComplexMatrix s22(m, m);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b) s22(a, b) = model.prior_cov()(obs[static_cast<std::size_t>(a)], obs[static_cast<std::size_t>(b)]);
  s22.diagonal().array() += v;
  Eigen::LLT<ComplexMatrix> llt(s22);
  const double scale = std::max(1.0, s22.cwiseAbs().maxCoeff());
  if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().real().minCoeff() <= 1e-7 * std::sqrt(scale)) {
    throw ValidationError("gaussian_conditional_mean: observed covariance is singular");
  }
  return llt;
}

}  // namespace

ComplexMatrix gaussian_conditional_mean(const MeasurementModel& model, const Pattern& s, CondTarget target,
                                        Conditioning conditioning) {
  const Index q = model.q();
  require_same_size(static_cast<Index>(s.size()), q, "gaussian_conditional_mean");
  const auto obs = support(s);
  ComplexMatrix coef = ComplexMatrix::Zero(q, q);
  if (obs.empty()) return coef;
  const auto m = static_cast<Index>(obs.size());
  const auto llt = observed_factor(model, obs, observation_noise(model, conditioning));
  const double s2 = model.noise().sigma_n * model.noise().sigma_n;
  ComplexMatrix s12(q, m);
  for (Index r = 0; r < q; ++r) {
    for (Index c = 0; c < m; ++c) {
      const Index k = obs[static_cast<std::size_t>(c)];
      s12(r, c) = model.prior_cov()(r, k) + (target == CondTarget::y0_plus_n && r == k ? s2 : 0.0);
    }
  }
  const ComplexMatrix gain = llt.solve(s12.adjoint()).adjoint();
  for (Index c = 0; c < m; ++c) coef.col(obs[static_cast<std::size_t>(c)]) = gain.col(c);
  return coef;
}

ComplexMatrix gaussian_posterior_cov(const MeasurementModel& model, const Pattern& s, Conditioning conditioning) {
  const Index q = model.q();
  const auto obs = support(s);
  if (obs.empty()) return model.prior_cov();
  const auto m = static_cast<Index>(obs.size());
  const auto llt = observed_factor(model, obs, observation_noise(model, conditioning));
  ComplexMatrix s12(q, m);
  for (Index c = 0; c < m; ++c) s12.col(c) = model.prior_cov().col(obs[static_cast<std::size_t>(c)]);
  return model.prior_cov() - s12 * llt.solve(s12.adjoint());
}

void to_json(nlohmann::json& j, const OracleReport& r) {
  auto num = [](double x) -> nlohmann::json { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"name", r.name},
                     {"estimate", num(r.estimate)},
                     {"reference", num(r.reference)},
                     {"tolerance", num(r.tolerance)},
                     {"se", r.se ? num(*r.se) : nlohmann::json(nullptr)},
                     {"pass", r.pass ? nlohmann::json(*r.pass) : nlohmann::json(nullptr)},
                     {"details", r.details}};
}

PatternSet input_patterns(const MeasurementModel& model, bool on_omega, Index max_units, Index samples,
                          std::uint64_t seed) {
  const MaskDensity& od = model.omega_density();
  const MaskDensity& ld = model.lambda_density();
  const GridShape shape = model.shape();
  const bool per_column = od.kind == MaskKind::column_polynomial && !shape.is_1d();
  if (per_column && ld.kind != MaskKind::column_polynomial) {
    throw ConfigError("input_patterns: omega and lambda must share the mask kind");
  }
  RealVector unit_p = per_column ? od.line_probs : od.probs;
  if (!on_omega) unit_p = unit_p.cwiseProduct(per_column ? ld.line_probs : ld.probs);
  const Index units = unit_p.size();

  auto expand = [&](const std::vector<std::uint8_t>& u) {
    if (!per_column) return Pattern(u);
    Pattern s(static_cast<std::size_t>(shape.size()));
    for (Index r = 0; r < shape.rows; ++r)
      for (Index c = 0; c < shape.cols; ++c) s[static_cast<std::size_t>(r * shape.cols + c)] = u[static_cast<std::size_t>(c)];
    return s;
  };

  PatternSet out;
  if (units <= max_units) {
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << units); ++bits) {
      std::vector<std::uint8_t> u(static_cast<std::size_t>(units));
      double prob = 1.0;
      for (Index k = 0; k < units; ++k) {
        u[static_cast<std::size_t>(k)] = (bits >> k) & 1U;
        prob *= u[static_cast<std::size_t>(k)] ? unit_p[k] : 1.0 - unit_p[k];
      }
      if (prob > 0.0) {
        out.patterns.push_back(expand(u));
        out.probs.push_back(prob);
      }
    }
    return out;
  }
  out.exhaustive = false;
  Rng rng = Rng(seed).substream("patterns");
  std::map<Pattern, Index> counts;
  for (Index i = 0; i < samples; ++i) {
    std::vector<std::uint8_t> u(static_cast<std::size_t>(units));
    for (Index k = 0; k < units; ++k) u[static_cast<std::size_t>(k)] = rng.uniform() < unit_p[k] ? 1 : 0;
    ++counts[expand(u)];
  }
  for (const auto& [s, n] : counts) {
    out.patterns.push_back(s);
    out.probs.push_back(static_cast<double>(n) / static_cast<double>(samples));
  }
  return out;
}

namespace {

// The method's proven target for row j of the fit at pattern s, or nothing
// when the method says nothing about that row.
std::optional<Eigen::RowVectorXcd> proven_row(Method method, const Pattern& s, Index j, const ComplexMatrix& on_y_y0,
                                              const ComplexMatrix& on_yt_y0n) {
  const bool in = s[static_cast<std::size_t>(j)] != 0;
  switch (method) {
    case Method::fully_supervised: return on_y_y0.row(j);
    case Method::supervised_wo_denoising: {
      if (!in) return on_y_y0.row(j);
      Eigen::RowVectorXcd e = Eigen::RowVectorXcd::Zero(on_y_y0.cols());
      e(j) = 1.0;
      return e;
    }
    case Method::standard_ssdu:
      if (in) return std::nullopt;
      return on_y_y0.row(j);
    case Method::noisier2full:
    case Method::noisier2full_unweighted:
    case Method::robust_ssdu:
    case Method::robust_ssdu_unweighted: return on_yt_y0n.row(j);
    case Method::noise2recon_ss: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

OracleReport check_population_minimizer(Method method, const MeasurementModel& model) {
  OracleReport r;
  r.name = "population_minimizer/" + to_string(method);
  r.tolerance = 1e-8;
  validate_mask_conditions(model.p(), model.ptilde());
  if (method == Method::noise2recon_ss) {
    r.estimate = std::numeric_limits<double>::quiet_NaN();
    r.reference = std::numeric_limits<double>::quiet_NaN();
    r.details["note"] = "no proven population target; reported descriptively";
    return r;
  }
  const PatternSet set = input_patterns(model, input_on_omega(method));
  double worst = 0.0;
  Index unconstrained = 0, rows_checked = 0, regularized = 0;
  bool flags_match = true;
  for (const auto& s : set.patterns) {
    const AffineFit fit = closed_form_affine_fit(model, method, s);
    regularized += fit.regularized;
    const ComplexMatrix on_y = gaussian_conditional_mean(model, s, CondTarget::y0, Conditioning::on_Y);
    const ComplexMatrix on_yt = gaussian_conditional_mean(model, s, CondTarget::y0_plus_n, Conditioning::on_Ytilde);
    for (Index j = 0; j < model.q(); ++j) {
      const auto target = proven_row(method, s, j, on_y, on_yt);
      if (!target) {
        ++unconstrained;
        if (method == Method::standard_ssdu && !fit.unconstrained[static_cast<std::size_t>(j)]) flags_match = false;
        continue;
      }
      ++rows_checked;
      worst = std::max(worst, (fit.a.row(j) - *target).cwiseAbs().maxCoeff());
    }
  }
  r.estimate = worst;
  r.reference = 0.0;
  r.pass = worst <= r.tolerance && flags_match;
  r.details = {{"patterns", set.patterns.size()},
               {"exhaustive", set.exhaustive},
               {"rows_checked", rows_checked},
               {"rows_unconstrained", unconstrained},
               {"regularized_fits", regularized}};
  return r;
}

OracleReport check_correction_identity(Method method, const MeasurementModel& model) {
  if (!has_correction(method)) throw ConfigError("check_correction_identity: method has no correction");
  OracleReport r;
  r.name = "correction_identity/" + to_string(method);
  r.tolerance = 1e-8;
  validate_mask_conditions(model.p(), model.ptilde());
  const double alpha = model.noise().alpha;
  const PatternSet set = input_patterns(model, input_on_omega(method));
  double worst_corrected = 0.0, worst_other = 0.0;
  for (const auto& s : set.patterns) {
    const AffineFit fit = closed_form_affine_fit(model, method, s);
    const ComplexMatrix post = gaussian_conditional_mean(model, s, CondTarget::y0, Conditioning::on_Ytilde);
    const SamplingMask set_mask(s, RealVector::Ones(model.q()));
    // Correcting the map column by column: f = A e_k, input = e_k.
    ComplexMatrix corrected(model.q(), model.q());
    for (Index k = 0; k < model.q(); ++k) {
      ComplexVector e = ComplexVector::Zero(model.q());
      e[k] = 1.0;
      corrected.col(k) = correct_noisier2full(fit.a.col(k), e, set_mask, alpha);
    }
    for (Index j = 0; j < model.q(); ++j) {
      double& worst = s[static_cast<std::size_t>(j)] ? worst_corrected : worst_other;
      worst = std::max(worst, (corrected.row(j) - post.row(j)).cwiseAbs().maxCoeff());
    }
  }
  r.estimate = worst_corrected;
  r.pass = worst_corrected <= r.tolerance;
  r.details = {{"patterns", set.patterns.size()},
               {"max_dev_corrected_set", worst_corrected},
               {"max_dev_pass_through", worst_other}};
  return r;
}

OracleReport check_corrected_mse(Method method, const MeasurementModel& model, const McOptions& mc, const Rng& rng) {
  if (!has_correction(method)) throw ConfigError("check_corrected_mse: method has no correction");
  OracleReport r;
  r.name = "corrected_mse/" + to_string(method);
  r.tolerance = 0.02;
  validate_mask_conditions(model.p(), model.ptilde());
  const bool robust = is_robust_ssdu(method);
  const PatternSet set = input_patterns(model, !robust);
  if (!set.exhaustive) throw ConfigError("check_corrected_mse: needs an enumerable pattern set");

  AffinePerPattern est(model.q());
  enroll_fits(est, model, method, set.patterns);
  double analytic = 0.0;
  for (std::size_t k = 0; k < set.patterns.size(); ++k) {
    analytic += set.probs[k] * gaussian_posterior_cov(model, set.patterns[k], Conditioning::on_Ytilde).trace().real();
  }

  const double alpha = model.noise().alpha;
  const double sigma = model.noise().sigma_n;
  const Moments mom = mc_reduce(mc, rng, 1, [&](Rng& g, RealVector& out) {
    const ComplexVector y0 = gaussian_ground_truth(model, g);
    const ComplexVector n = complex_noise(model.q(), sigma, g);
    const SamplingMask omega = draw_mask(model.omega_density(), g);
    const SamplingMask lambda = robust ? draw_mask(model.lambda_density(), g) : SamplingMask::full(model.q());
    const ComplexVector nt = complex_noise(model.q(), alpha * sigma, g);
    const ComplexVector y = apply_mask(omega, y0 + n);
    ComplexVector est_out;
    if (robust) {
      const ComplexVector yt = corrupt_robust_ssdu(y, omega, lambda, nt);
      const SamplingMask s = intersect(omega, lambda);
      est_out = correct_robust_ssdu(est.forward(yt, s).output, yt, omega, lambda, alpha, ReconMode::theory);
    } else {
      const ComplexVector yt = corrupt_noisier2full(y, omega, nt);
      est_out = correct_noisier2full(est.forward(yt, omega).output, yt, omega, alpha);
    }
    out[0] = (est_out - y0).squaredNorm();
  });
  r.estimate = mom.mean[0];
  r.reference = analytic;
  r.se = mom.se()[0];
  const double rel = std::abs(r.estimate - analytic) / analytic;
  r.pass = rel <= r.tolerance;
  r.details = {{"relative_error", rel}, {"samples", mom.n}, {"patterns", set.patterns.size()}};
  return r;
}

OracleReport check_conditional_noise_identity(const MeasurementModel& model, const McOptions& mc, const Rng& rng) {
  if (mc.samples < 10000) throw ConfigError("check_conditional_noise_identity: needs at least 1e4 samples");
  OracleReport r;
  const double alpha = model.noise().alpha, a2 = alpha * alpha;
  const double sigma = model.noise().sigma_n;
  r.name = "conditional_noise_identity/alpha=" + std::to_string(alpha);
  r.tolerance = 3.0;
  const Index q = model.q();
  // Per sample: [Re D, Im D, Re(N Yt*), Re(Nt Yt*), |Yt|^2] pooled over sampled indices.
  const Moments mom = mc_reduce(mc, rng, 5, [&](Rng& g, RealVector& out) {
    const ComplexVector y0 = gaussian_ground_truth(model, g);
    const ComplexVector n = complex_noise(q, sigma, g);
    const SamplingMask omega = draw_mask(model.omega_density(), g);
    const ComplexVector nt = complex_noise(q, alpha * sigma, g);
    out.setZero();
    for (Index j = 0; j < q; ++j) {
      if (!omega.contains(j)) continue;
      const Complex yt = y0[j] + n[j] + nt[j];
      const Complex d = (nt[j] - a2 * n[j]) * std::conj(yt);
      out[0] += d.real();
      out[1] += d.imag();
      out[2] += (n[j] * std::conj(yt)).real();
      out[3] += (nt[j] * std::conj(yt)).real();
      out[4] += std::norm(yt);
    }
  });
  const RealVector se = mom.se();
  auto standardized = [](double x, double s) {
    if (s > 0.0) return std::abs(x) / s;
    return x == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  r.estimate = std::max(standardized(mom.mean[0], se[0]), standardized(mom.mean[1], se[1]));
  r.reference = 0.0;
  r.se = se[0];
  r.pass = r.estimate <= r.tolerance;
  const double slope_n = mom.mean[4] > 0.0 ? mom.mean[2] / mom.mean[4] : 0.0;
  const double slope_nt = mom.mean[4] > 0.0 ? mom.mean[3] / mom.mean[4] : 0.0;
  double num = 0.0, den = 0.0;
  for (Index j = 0; j < q; ++j) {
    num += model.p()[j] * sigma * sigma;
    den += model.p()[j] * (model.prior_cov()(j, j).real() + (1.0 + a2) * sigma * sigma);
  }
  const double analytic_n = den > 0.0 ? num / den : 0.0;
  r.details = {{"statistic_re", mom.mean[0]},
               {"statistic_im", mom.mean[1]},
               {"slope_n", slope_n},
               {"slope_ntilde", slope_nt},
               {"slope_ratio", slope_n != 0.0 ? slope_nt / slope_n : std::numeric_limits<double>::quiet_NaN()},
               {"alpha2", a2},
               {"analytic_slope_n", analytic_n},
               {"analytic_slope_ntilde", a2 * analytic_n},
               {"samples", mom.n}};
  if (!std::isfinite(r.details["slope_ratio"].get<double>())) r.details["slope_ratio"] = nullptr;
  return r;
}

OracleReport check_gradient_equivalence(Method claim, const Estimator& params, const MeasurementModel& model,
                                        const McOptions& mc, const Rng& rng) {
  if (claim != Method::noisier2full && claim != Method::robust_ssdu) {
    throw ConfigError("check_gradient_equivalence: claim must be noisier2full or robust_ssdu");
  }
  if (mc.samples < 10000) throw ConfigError("check_gradient_equivalence: needs at least 1e4 samples");
  validate_mask_conditions(model.p(), model.ptilde());
  OracleReport r;
  r.name = "gradient_equivalence/" + to_string(claim);
  r.tolerance = 3.0;
  const Index q = model.q();
  const Index P = params.parameter_count();
  const double alpha = model.noise().alpha, sigma = model.noise().sigma_n;
  const double c = (1.0 + alpha * alpha) / (alpha * alpha);
  TrainSpec spec;
  spec.method = claim;
  spec.alpha = alpha;
  const bool robust = claim == Method::robust_ssdu;

  const Moments mom = mc_reduce(mc, rng, 3 * P, [&](Rng& g, RealVector& out) {
    TrainItem item;
    item.y0 = gaussian_ground_truth(model, g);
    const ComplexVector n = complex_noise(q, sigma, g);
    item.y_full = *item.y0 + n;
    item.omega = draw_mask(model.omega_density(), g);
    item.y = apply_mask(item.omega, *item.y_full);
    EpochDraw draw;
    draw.lambda = robust ? draw_mask(model.lambda_density(), g) : SamplingMask::full(q);
    draw.ntilde = complex_noise(q, alpha * sigma, g);

    const RealVector ga = loss_and_grad(spec, params, item, draw).grad;

    const MethodInputs in = training_inputs(claim, item, draw);
    const ComplexVector f = params.forward(in.input, in.mask).output;
    const ComplexVector yhat =
        robust ? correct_robust_ssdu(f, in.input, item.omega, draw.lambda, alpha, ReconMode::theory)
               : correct_noisier2full(f, in.input, item.omega, alpha);
    const SamplingMask& corrected = in.mask;
    ComplexVector cot(q);
    for (Index j = 0; j < q; ++j) {
      const double d = corrected.contains(j) ? c : 1.0;
      cot[j] = 2.0 * d * (yhat[j] - (*item.y0)[j]);
    }
    const RealVector gb = params.vjp(in.input, in.mask, cot);
    out.head(P) = ga;
    out.segment(P, P) = gb;
    out.tail(P) = ga - gb;
  });

  const RealVector se = mom.se();
  double worst = 0.0, worst_paired = 0.0, worst_se = 0.0;
  Index worst_index = -1;
  for (Index i = 0; i < P; ++i) {
    const double diff = mom.mean[i] - mom.mean[P + i];
    const double combined = std::hypot(se[i], se[P + i]);
    double z = 0.0;
    if (combined > 0.0) {
      z = std::abs(diff) / combined;
    } else if (diff != 0.0) {
      z = std::numeric_limits<double>::infinity();
    }
    if (z > worst) {
      worst = z;
      worst_index = i;
      worst_se = combined;
    }
    const double sp = se[2 * P + i];
    if (sp > 0.0) worst_paired = std::max(worst_paired, std::abs(mom.mean[2 * P + i]) / sp);
  }
  r.estimate = worst;
  r.reference = 0.0;
  r.se = worst_se;
  r.pass = worst <= r.tolerance;
  r.details = {{"max_standardized_discrepancy", worst},
               {"max_paired_standardized_discrepancy", worst_paired},
               {"worst_entry", worst_index},
               {"parameters", P},
               {"mean_abs_surrogate", mom.mean.head(P).cwiseAbs().mean()},
               {"mean_abs_oracle", mom.mean.segment(P, P).cwiseAbs().mean()},
               {"samples", mom.n}};
  return r;
}

// ---- brute force ----

void DiscreteModel::validate() const {
  if (q < 1 || q > 4) throw ConfigError("discrete model: q must lie in [1, 4]");
  if (atoms.empty() || atoms.size() > 4) throw ConfigError("discrete model: alphabet must have 1 to 4 atoms");
  std::size_t configs = 1;
  for (Index j = 0; j < q; ++j) configs *= atoms.size();
  if (pmf.size() != configs) throw ConfigError("discrete model: pmf must have |atoms|^q entries");
  double total = 0.0;
  for (double w : pmf) {
    if (!(w >= 0.0)) throw ConfigError("discrete model: pmf entries must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("discrete model: pmf must sum to 1");
  if (K < 0 || K_tilde < 0 || !(h > 0.0)) throw ConfigError("discrete model: need K, K_tilde >= 0 and h > 0");
  require_same_size(p.size(), q, "discrete model p");
  require_same_size(ptilde.size(), q, "discrete model ptilde");
}

namespace {

double binom_half(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
                  std::lgamma(static_cast<double>(n - k + 1)) - static_cast<double>(n) * std::log(2.0));
}

// P[h (B - K) = x] for B ~ Bin(2K, 1/2).
double lattice_pmf(double x, Index K, double h) {
  const double b = x / h + static_cast<double>(K);
  const double rb = std::round(b);
  if (std::abs(b - rb) > 1e-9) return 0.0;
  return binom_half(2 * K, static_cast<Index>(rb));
}

}  // namespace

ComplexVector brute_force_conditional(const DiscreteModel& model, DiscreteObservation kind, const Pattern& s,
                                      const RealVector& values, CondTarget target) {
  model.validate();
  const Index q = model.q;
  require_same_size(static_cast<Index>(s.size()), q, "brute_force_conditional pattern");
  require_same_size(values.size(), q, "brute_force_conditional values");
  const bool further = kind != DiscreteObservation::y;

  // Probability of the observed pattern, summed over every (Omega, Lambda) pair.
  double mask_prob = 0.0;
  for (std::uint32_t ob = 0; ob < (1U << q); ++ob) {
    for (std::uint32_t lb = 0; lb < (1U << q); ++lb) {
      double pr = 1.0;
      bool match = true;
      for (Index j = 0; j < q; ++j) {
        const bool o = (ob >> j) & 1U, l = (lb >> j) & 1U;
        pr *= (o ? model.p[j] : 1.0 - model.p[j]) * (l ? model.ptilde[j] : 1.0 - model.ptilde[j]);
        const bool in = kind == DiscreteObservation::ytilde_robust ? (o && l) : o;
        match = match && in == (s[static_cast<std::size_t>(j)] != 0);
      }
      if (match) mask_prob += pr;
    }
  }
  if (!(mask_prob > 0.0)) throw ValidationError("brute_force_conditional: observed pattern has probability 0");

  const auto A = static_cast<Index>(model.atoms.size());
  double total = 0.0;
  RealVector acc = RealVector::Zero(q);
  for (std::size_t cfg = 0; cfg < model.pmf.size(); ++cfg) {
    if (model.pmf[cfg] == 0.0) continue;
    std::vector<double> y0(static_cast<std::size_t>(q));
    std::size_t rem = cfg;
    for (Index j = 0; j < q; ++j) {
      y0[static_cast<std::size_t>(j)] = model.atoms[rem % static_cast<std::size_t>(A)];
      rem /= static_cast<std::size_t>(A);
    }
    double like = model.pmf[cfg] * mask_prob;
    RealVector expect_n = RealVector::Zero(q);
    for (Index j = 0; j < q && like > 0.0; ++j) {
      if (!s[static_cast<std::size_t>(j)]) continue;
      const double resid = values[j] - y0[static_cast<std::size_t>(j)];
      double lj = 0.0, nj = 0.0;
      for (Index b = 0; b <= 2 * model.K; ++b) {
        const double n = model.h * static_cast<double>(b - model.K);
        const double pn = binom_half(2 * model.K, b);
        const double pt = further ? lattice_pmf(resid - n, model.K_tilde, model.h) : (std::abs(resid - n) < 1e-9 ? 1.0 : 0.0);
        lj += pn * pt;
        nj += pn * pt * n;
      }
      like *= lj;
      if (lj > 0.0) expect_n[j] = nj / lj;
    }
    if (!(like > 0.0)) continue;
    total += like;
    for (Index j = 0; j < q; ++j) {
      acc[j] += like * (y0[static_cast<std::size_t>(j)] + (target == CondTarget::y0_plus_n ? expect_n[j] : 0.0));
    }
  }
  if (!(total > 0.0)) throw ValidationError("brute_force_conditional: observation has probability 0");
  return (acc / total).cast<Complex>();
}

}  // namespace ssrecon
