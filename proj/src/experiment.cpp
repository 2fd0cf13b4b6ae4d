#include "ssrecon/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "ssrecon/errors.hpp"
#include "ssrecon/fit.hpp"
#include "ssrecon/metrics.hpp"
#include "ssrecon/noise.hpp"
#include "ssrecon/sampling.hpp"

namespace ssrecon {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(path + "." + key + ": unknown field");
  }
}

template <class T>
void read(const json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

std::vector<Method> read_methods(const json& j, const std::string& path) {
  std::vector<Method> out;
  if (!j.is_array()) throw ConfigError(path + ": expected an array of method names");
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a method name");
    try {
      out.push_back(method_from_string(j[i].get<std::string>()));
    } catch (const ConfigError& e) {
      throw ConfigError(path + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

// Builds the density once so unattainable accelerations fail at parse time.
void check_density(MaskDistribution d, double accel, const std::string& prefix) {
  d.target_accel = accel;
  try {
    build_density(d);
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  }
}

void read_mask(const json& j, const std::string& path, MaskDistribution& d) {
  check_keys(j, {"kind", "accel", "n_center", "degree"}, path);
  std::string kind = to_string(d.kind);
  read(j, "kind", path, kind);
  try {
    d.kind = mask_kind_from_string(kind);
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + e.what());
  }
  read(j, "accel", path, d.target_accel);
  read(j, "n_center", path, d.n_center);
  read(j, "degree", path, d.degree);
}

double default_alpha(Method m, MaskKind kind) {
  switch (m) {
    case Method::noisier2full: return 1.0;
    case Method::noisier2full_unweighted: return 1.25;
    case Method::robust_ssdu: return kind == MaskKind::bernoulli2d_polynomial ? 0.5 : 0.75;
    case Method::robust_ssdu_unweighted: return 0.5;
    case Method::noise2recon_ss: return 1.0;
    default: return 1.0;
  }
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8g", x);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  check_keys(j, {"model", "estimator", "train", "data", "methods", "alpha", "grid", "sweep", "verify", "seed", "mode",
                 "timing", "parallel"},
             "config");
  read(j, "seed", "config", c.seed);
  read(j, "timing", "config", c.timing);
  read(j, "parallel", "config", c.parallel);
  if (j.contains("mode")) {
    std::string mode;
    read(j, "mode", "config", mode);
    try {
      c.mode = recon_mode_from_string(mode);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.") + e.what());
    }
  }

  // model
  GridShape shape{1, 16};
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"prior", "q", "shape", "omega", "lambda", "noise"}, "config.model");
    if (m.contains("prior")) {
      const json& p = m.at("prior");
      if (p.is_string()) {
        c.prior.preset = p.get<std::string>();
      } else {
        check_keys(p, {"preset", "scale", "decay", "support", "length", "nugget", "path"}, "config.model.prior");
        read(p, "preset", "config.model.prior", c.prior.preset);
        read(p, "scale", "config.model.prior", c.prior.scale);
        read(p, "decay", "config.model.prior", c.prior.decay);
        read(p, "support", "config.model.prior", c.prior.support);
        read(p, "length", "config.model.prior", c.prior.length);
        read(p, "nugget", "config.model.prior", c.prior.nugget);
        read(p, "path", "config.model.prior", c.prior.path);
      }
    }
    if (m.contains("q")) {
      Index q = 0;
      read(m, "q", "config.model", q);
      shape = GridShape{1, q};
    }
    if (m.contains("shape")) {
      std::vector<Index> s;
      read(m, "shape", "config.model", s);
      if (s.size() != 2) throw ConfigError("config.model.shape: expected [rows, cols]");
      shape = GridShape{s[0], s[1]};
    }
    if (shape.rows < 1 || shape.cols < 1) throw ConfigError("config.model.q: must be >= 1");
    c.omega.shape = shape;
    c.omega.n_center = MaskDistribution::default_center(shape.cols);
    if (m.contains("omega")) read_mask(m.at("omega"), "config.model.omega", c.omega);
    c.lambda = c.omega;
    c.lambda.target_accel = c.omega.kind == MaskKind::bernoulli2d_polynomial ? 1.5 : 2.0;
    if (m.contains("lambda")) {
      read_mask(m.at("lambda"), "config.model.lambda", c.lambda);
    }
    if (m.contains("noise")) {
      check_keys(m.at("noise"), {"sigma_n", "alpha"}, "config.model.noise");
      read(m.at("noise"), "sigma_n", "config.model.noise", c.noise.sigma_n);
      read(m.at("noise"), "alpha", "config.model.noise", c.noise.alpha);
    }
  } else {
    c.omega.shape = shape;
    c.omega.n_center = MaskDistribution::default_center(shape.cols);
    c.lambda = c.omega;
    c.lambda.target_accel = 2.0;
  }
  if (c.lambda.kind != c.omega.kind) throw ConfigError("config.model.lambda.kind: must match omega.kind");
  try {
    c.noise.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config.model.") + e.what());
  }

  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    if (e.is_string()) {
      c.estimator.family = e.get<std::string>();
    } else {
      check_keys(e, {"family", "hidden", "residual", "cascades"}, "config.estimator");
      read(e, "family", "config.estimator", c.estimator.family);
      read(e, "hidden", "config.estimator", c.estimator.hidden);
      read(e, "residual", "config.estimator", c.estimator.residual);
      read(e, "cascades", "config.estimator", c.estimator.cascades);
    }
  }
  if (c.estimator.family != "affine_per_pattern" && c.estimator.family != "tiny_net" &&
      c.estimator.family != "toy_cascade") {
    throw ConfigError("config.estimator.family: unknown family '" + c.estimator.family + "'");
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, {"method", "epochs", "batch_size", "lr", "beta1", "beta2", "eps", "lambda_n2r", "seed"},
               "config.train");
    if (t.contains("method")) {
      std::string name;
      read(t, "method", "config.train", name);
      try {
        c.train.method = method_from_string(name);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("config.train.") + e.what());
      }
    }
    read(t, "epochs", "config.train", c.train.epochs);
    read(t, "batch_size", "config.train", c.train.batch_size);
    read(t, "lr", "config.train", c.train.adam.lr);
    read(t, "beta1", "config.train", c.train.adam.beta1);
    read(t, "beta2", "config.train", c.train.adam.beta2);
    read(t, "eps", "config.train", c.train.adam.eps);
    read(t, "lambda_n2r", "config.train", c.train.lambda_n2r);
    read(t, "seed", "config.train", c.train.seed);
  }
  try {
    c.train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config.") + e.what());
  }

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, {"n_train", "n_test", "n_val", "ground_truth", "n_blocks"}, "config.data");
    read(d, "n_train", "config.data", c.data.n_train);
    read(d, "n_test", "config.data", c.data.n_test);
    read(d, "n_val", "config.data", c.data.n_val);
    read(d, "ground_truth", "config.data", c.data.ground_truth);
    read(d, "n_blocks", "config.data", c.data.n_blocks);
  }
  if (c.data.n_train < 1) throw ConfigError("config.data.n_train: must be >= 1");
  if (c.data.n_test < 1) throw ConfigError("config.data.n_test: must be >= 1");
  if (c.data.n_val < 0) throw ConfigError("config.data.n_val: must be >= 0");
  if (c.data.ground_truth != "gaussian" && c.data.ground_truth != "phantom") {
    throw ConfigError("config.data.ground_truth: expected gaussian or phantom");
  }
  if (c.data.ground_truth == "phantom" && !shape.is_1d()) {
    throw ConfigError("config.data.ground_truth: phantom ground truth is 1D only");
  }

  c.methods = j.contains("methods") ? read_methods(j.at("methods"), "config.methods")
                                    : std::vector<Method>(kAllMethods.begin(), kAllMethods.end());

  for (Method m : kAllMethods) c.alpha[m] = default_alpha(m, c.omega.kind);
  if (j.contains("alpha")) {
    const json& a = j.at("alpha");
    if (a.is_number()) {
      for (auto& [m, v] : c.alpha) v = a.get<double>();
    } else if (a.is_object()) {
      for (const auto& [key, value] : a.items()) {
        Method m{};
        try {
          m = method_from_string(key);
        } catch (const ConfigError&) {
          throw ConfigError("config.alpha." + key + ": unknown method");
        }
        if (!value.is_number()) throw ConfigError("config.alpha." + key + ": expected a number");
        c.alpha[m] = value.get<double>();
      }
    } else {
      throw ConfigError("config.alpha: expected a number or an object of per-method values");
    }
    for (const auto& [m, v] : c.alpha) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("config.alpha." + to_string(m) + ": must be > 0");
    }
  }

  c.grid.sigma_n = {c.noise.sigma_n};
  c.grid.r_omega = {c.omega.target_accel};
  c.grid.r_lambda = {c.lambda.target_accel};
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"sigma_n", "R_omega", "R_lambda"}, "config.grid");
    read(g, "sigma_n", "config.grid", c.grid.sigma_n);
    read(g, "R_omega", "config.grid", c.grid.r_omega);
    read(g, "R_lambda", "config.grid", c.grid.r_lambda);
  }
  if (c.grid.sigma_n.empty() || c.grid.r_omega.empty() || c.grid.r_lambda.empty()) {
    throw ConfigError("config.grid: every axis needs at least one value");
  }
  for (double s : c.grid.sigma_n) {
    if (!(s >= 0.0)) throw ConfigError("config.grid.sigma_n: values must be >= 0");
  }
  check_density(c.omega, c.omega.target_accel, "config.model.omega.");
  check_density(c.lambda, c.lambda.target_accel, "config.model.lambda.");
  for (double r : c.grid.r_omega) check_density(c.omega, r, "config.grid.R_omega: ");
  for (double r : c.grid.r_lambda) check_density(c.lambda, r, "config.grid.R_lambda: ");

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"alphas", "methods", "benchmark"}, "config.sweep");
    read(s, "alphas", "config.sweep", c.sweep.alphas);
    if (s.contains("methods")) c.sweep.methods = read_methods(s.at("methods"), "config.sweep.methods");
    if (s.contains("benchmark")) {
      std::string name;
      read(s, "benchmark", "config.sweep", name);
      c.sweep.benchmark = method_from_string(name);
    }
    for (double a : c.sweep.alphas) {
      if (!(a > 0.0)) throw ConfigError("config.sweep.alphas: values must be > 0");
    }
  }

  if (j.contains("verify")) {
    const json& v = j.at("verify");
    check_keys(v, {"gradient_samples", "slope_samples", "mse_samples", "n_theta", "slope_alphas", "identity_pairs",
                   "shards"},
               "config.verify");
    read(v, "gradient_samples", "config.verify", c.verify.gradient_samples);
    read(v, "slope_samples", "config.verify", c.verify.slope_samples);
    read(v, "mse_samples", "config.verify", c.verify.mse_samples);
    read(v, "n_theta", "config.verify", c.verify.n_theta);
    read(v, "slope_alphas", "config.verify", c.verify.slope_alphas);
    read(v, "identity_pairs", "config.verify", c.verify.identity_pairs);
    read(v, "shards", "config.verify", c.verify.shards);
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json alpha = json::object();
  for (const auto& [m, v] : c.alpha) alpha[to_string(m)] = v;
  auto names = [](const std::vector<Method>& ms) {
    json out = json::array();
    for (Method m : ms) out.push_back(to_string(m));
    return out;
  };
  auto mask = [](const MaskDistribution& d) {
    return json{{"kind", to_string(d.kind)}, {"accel", d.target_accel}, {"n_center", d.n_center}, {"degree", d.degree}};
  };
  json prior;
  to_json(prior, c.prior);
  json estimator;
  to_json(estimator, c.estimator);
  return json{
      {"model",
       {{"prior", prior},
        {"shape", {c.omega.shape.rows, c.omega.shape.cols}},
        {"omega", mask(c.omega)},
        {"lambda", mask(c.lambda)},
        {"noise", {{"sigma_n", c.noise.sigma_n}, {"alpha", c.noise.alpha}}}}},
      {"estimator", estimator},
      {"train",
       {{"method", to_string(c.train.method)},
        {"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"lr", c.train.adam.lr},
        {"beta1", c.train.adam.beta1},
        {"beta2", c.train.adam.beta2},
        {"eps", c.train.adam.eps},
        {"lambda_n2r", c.train.lambda_n2r},
        {"seed", c.train.seed}}},
      {"data",
       {{"n_train", c.data.n_train},
        {"n_test", c.data.n_test},
        {"n_val", c.data.n_val},
        {"ground_truth", c.data.ground_truth},
        {"n_blocks", c.data.n_blocks}}},
      {"methods", names(c.methods)},
      {"alpha", alpha},
      {"grid", {{"sigma_n", c.grid.sigma_n}, {"R_omega", c.grid.r_omega}, {"R_lambda", c.grid.r_lambda}}},
      {"sweep", {{"alphas", c.sweep.alphas}, {"methods", names(c.sweep.methods)}, {"benchmark", to_string(c.sweep.benchmark)}}},
      {"verify",
       {{"gradient_samples", c.verify.gradient_samples},
        {"slope_samples", c.verify.slope_samples},
        {"mse_samples", c.verify.mse_samples},
        {"n_theta", c.verify.n_theta},
        {"slope_alphas", c.verify.slope_alphas},
        {"identity_pairs", c.verify.identity_pairs},
        {"shards", c.verify.shards}}},
      {"seed", c.seed},
      {"mode", to_string(c.mode)},
      {"timing", c.timing},
      {"parallel", c.parallel}};
}

double method_alpha(const ExperimentConfig& c, Method m) { return c.alpha.at(m); }

MeasurementModel cell_model(const ExperimentConfig& c, double sigma_n, double r_omega, double r_lambda, double alpha) {
  MaskDistribution omega = c.omega, lambda = c.lambda;
  omega.target_accel = r_omega;
  lambda.target_accel = r_lambda;
  NoiseSpec noise{sigma_n, alpha};
  try {
    return MeasurementModel(build_prior_cov(c.prior, omega.shape), noise, omega, lambda);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config.model.") + e.what());
  }
}

Dataset make_dataset(const ExperimentConfig& c, const MeasurementModel& model, const std::string& tag, Index count) {
  Dataset d;
  d.items.resize(static_cast<std::size_t>(count));
  const Rng root(c.seed);
  const Index q = model.q();
  for (Index t = 0; t < count; ++t) {
    const Rng item = root.substream(tag, static_cast<std::uint64_t>(t));
    Rng gt = item.substream("y0"), nz = item.substream("noise"), om = item.substream("omega");
    TrainItem& it = d.items[static_cast<std::size_t>(t)];
    it.y0 = c.data.ground_truth == "phantom" ? phantom_ground_truth(q, c.data.n_blocks, gt)
                                             : gaussian_ground_truth(model, gt);
    it.y_full = *it.y0 + model.noise().sigma_n * complex_noise(q, 1.0, nz);
    it.omega = draw_mask(model.omega_density(), om);
    it.y = apply_mask(it.omega, *it.y_full);
  }
  return d;
}

namespace {

Evaluation summarize(const std::vector<double>& nm, const std::vector<double>& ss, Index fallbacks, bool finite) {
  Evaluation e;
  const MeanSe a = mean_se(nm), b = mean_se(ss);
  e.nmse_mean = a.mean;
  e.nmse_se = a.se;
  e.ssim_mean = b.mean;
  e.ssim_se = b.se;
  e.fallbacks = fallbacks;
  e.finite = finite;
  return e;
}

double item_ssim(const ComplexVector& est, const ComplexVector& y0, GridShape shape) {
  const RealVector ref = magnitude_image(y0, shape);
  return ssim(magnitude_image(est, shape), ref, shape, ref.maxCoeff());
}

}  // namespace

Evaluation evaluate(Method method, const Estimator& est, const MeasurementModel& model, const Dataset& test,
                    double alpha, ReconMode mode, const Rng& rng) {
  const auto n = static_cast<Index>(test.items.size());
  std::vector<double> nm(static_cast<std::size_t>(n)), ss(static_cast<std::size_t>(n));
  std::vector<int> fb(static_cast<std::size_t>(n)), fin(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    const TrainItem& it = test.items[static_cast<std::size_t>(t)];
    Rng g = rng.substream("theory", static_cast<std::uint64_t>(t));
    const ReconResult r = reconstruct(method, est, it.y, it.omega, model, alpha, mode, g);
    nm[static_cast<std::size_t>(t)] = nmse(r.estimate, *it.y0);
    ss[static_cast<std::size_t>(t)] = item_ssim(r.estimate, *it.y0, model.shape());
    fb[static_cast<std::size_t>(t)] = r.pattern_fallback;
    fin[static_cast<std::size_t>(t)] = all_finite(r.estimate);
  }
  Index fallbacks = 0;
  bool finite = true;
  for (Index t = 0; t < n; ++t) {
    fallbacks += fb[static_cast<std::size_t>(t)];
    finite = finite && fin[static_cast<std::size_t>(t)];
  }
  return summarize(nm, ss, fallbacks, finite);
}

Evaluation evaluate_input(const MeasurementModel& model, const Dataset& test) {
  std::vector<double> nm, ss;
  for (const auto& it : test.items) {
    nm.push_back(nmse(it.y, *it.y0));
    ss.push_back(item_ssim(it.y, *it.y0, model.shape()));
  }
  return summarize(nm, ss, 0, true);
}

TrainedCell train_cell(const ExperimentConfig& c, Method method, double sigma_n, double r_omega, double r_lambda,
                       double alpha) {
  MeasurementModel model = cell_model(c, sigma_n, r_omega, r_lambda, alpha);
  const Dataset train_set = make_dataset(c, model, "train", c.data.n_train);
  Dataset test = make_dataset(c, model, "test", c.data.n_test);
  const Dataset val = c.data.n_val > 0 ? make_dataset(c, model, "val", c.data.n_val) : Dataset{};

  Rng init = Rng(c.seed).substream("init");
  EstimatorPtr est = make_estimator(c.estimator, model.q(), init);
  TrainSpec spec = c.train;
  spec.method = method;
  spec.alpha = alpha;
  const Rng train_rng = Rng(c.seed).substream("train", spec.seed);
  const Rng infer_rng = Rng(c.seed).substream("inference");
  Validator validator;
  if (!val.items.empty()) {
    validator = [&](const Estimator& e) {
      return evaluate(method, e, model, val, alpha, ReconMode::practical, infer_rng).nmse_mean;
    };
  }
  TrainResult tr = train(spec, std::move(est), train_set.items, model, train_rng, validator);
  return TrainedCell{std::move(tr.estimator), std::move(tr.history), std::move(model), std::move(test)};
}

namespace {

struct Job {
  std::optional<Method> method;  // empty: the noisy sub-sampled input row
  double sigma_n, r_omega, r_lambda, alpha;
};

std::vector<CellResult> run_jobs(const ExperimentConfig& c, const std::vector<Job>& jobs) {
  for (const Job& job : jobs) {
    if (!job.method || !uses_lambda(*job.method)) continue;
    const MeasurementModel model = cell_model(c, job.sigma_n, job.r_omega, job.r_lambda, 1.0);
    validate_mask_conditions(model.p(), model.ptilde());
  }
  std::vector<CellResult> out(jobs.size());
  std::vector<std::string> errors(jobs.size());
  const Rng infer_rng = Rng(c.seed).substream("inference");
  auto run = [&](std::size_t k) {
    const Job& job = jobs[k];
    CellResult& r = out[k];
    r.sigma_n = job.sigma_n;
    r.r_omega = job.r_omega;
    r.r_lambda = job.r_lambda;
    const auto start = std::chrono::steady_clock::now();
    try {
      if (!job.method) {
        r.method = "noisy_subsampled";
        r.alpha = kNaN;
        const MeasurementModel model = cell_model(c, job.sigma_n, job.r_omega, job.r_lambda, 1.0);
        r.eval = evaluate_input(model, make_dataset(c, model, "test", c.data.n_test));
      } else {
        const Method m = *job.method;
        r.method = to_string(m);
        r.alpha = uses_further_noise(m) ? job.alpha : kNaN;
        TrainedCell cell = train_cell(c, m, job.sigma_n, job.r_omega, job.r_lambda, job.alpha);
        r.eval = evaluate(m, *cell.estimator, cell.model, cell.test, job.alpha, c.mode, infer_rng);
        r.history = std::move(cell.history);
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    r.seconds = c.timing ? dt.count() : 0.0;
  };
  const auto n = static_cast<std::int64_t>(jobs.size());
  if (c.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t k = 0; k < n; ++k) run(static_cast<std::size_t>(k));
  } else {
    for (std::int64_t k = 0; k < n; ++k) run(static_cast<std::size_t>(k));
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw ConfigError(e);
  }
  return out;
}

}  // namespace

std::vector<CellResult> run_compare(const ExperimentConfig& c) {
  std::vector<Job> jobs;
  for (double s : c.grid.sigma_n) {
    for (double ro : c.grid.r_omega) {
      for (double rl : c.grid.r_lambda) {
        jobs.push_back(Job{std::nullopt, s, ro, rl, kNaN});
        for (Method m : c.methods) jobs.push_back(Job{m, s, ro, rl, method_alpha(c, m)});
      }
    }
  }
  return run_jobs(c, jobs);
}

std::vector<CellResult> run_alpha_sweep(const ExperimentConfig& c) {
  const double s = c.grid.sigma_n.front(), ro = c.grid.r_omega.front(), rl = c.grid.r_lambda.front();
  std::vector<Job> jobs{Job{c.sweep.benchmark, s, ro, rl, 1.0}};
  for (double a : c.sweep.alphas) {
    for (Method m : c.sweep.methods) jobs.push_back(Job{m, s, ro, rl, a});
  }
  auto rows = run_jobs(c, jobs);
  rows.front().alpha = kNaN;
  return rows;
}

std::string output_header(const ExperimentConfig& c) {
  return std::string("# ssrecon ") + kVersion + "\n# config: " + config_to_json(c).dump() + "\n";
}

std::string results_csv(const ExperimentConfig& c, const std::vector<CellResult>& rows) {
  std::ostringstream out;
  out << output_header(c);
  out << "method,sigma_n,R_omega,R_lambda,alpha,nmse_mean,nmse_se,ssim_mean,ssim_se,seconds\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_number(r.sigma_n) << ',' << format_number(r.r_omega) << ','
        << format_number(r.r_lambda) << ',' << format_number(r.alpha) << ',' << format_number(r.eval.nmse_mean) << ','
        << format_number(r.eval.nmse_se) << ',' << format_number(r.eval.ssim_mean) << ','
        << format_number(r.eval.ssim_se) << ',' << format_number(r.seconds) << '\n';
  }
  return out.str();
}

namespace {

OracleReport identity_report(const ExperimentConfig& c, const MeasurementModel& model) {
  OracleReport r;
  r.name = "P_times_one_minus_k";
  r.tolerance = 1e-12;
  Rng g = Rng(c.seed).substream("verify/identity");
  const Index n = c.verify.identity_pairs;
  RealVector p(n), pt(n);
  for (Index i = 0; i < n; ++i) {
    p[i] = 0.01 + 0.99 * g.uniform();
    pt[i] = 0.99 * g.uniform();
  }
  double worst = 0.0;
  auto scan = [&](const RealVector& a, const RealVector& b) {
    const RealVector k = compute_k(a, b), P = compute_P(a, b);
    for (Index i = 0; i < a.size(); ++i) {
      if (a[i] * (1.0 - b[i]) > 0.0) worst = std::max(worst, std::abs(P[i] * (1.0 - k[i]) - 1.0));
    }
  };
  scan(p, pt);
  scan(model.p(), model.ptilde());
  r.estimate = worst;
  r.pass = worst <= r.tolerance;
  r.details = {{"random_pairs", n}, {"model_indices", model.q()}};
  return r;
}

// Correction identity on a discrete non-Gaussian model with lattice noise,
// by exhaustive summation.
OracleReport discrete_correction_report() {
  OracleReport r;
  r.name = "discrete_correction_identity";
  r.tolerance = 1e-12;
  double worst = 0.0;
  for (Index k_tilde : {1, 2, 4}) {
    DiscreteModel dm;
    dm.q = 2;
    dm.atoms = {0.0, 1.0};
    dm.pmf = {0.4, 0.1, 0.2, 0.3};
    dm.K = 2;
    dm.K_tilde = k_tilde;
    dm.h = 0.25;
    dm.p = RealVector::Constant(2, 0.7);
    dm.ptilde = RealVector::Constant(2, 0.5);
    const double a2 = dm.alpha2();
    const RealVector values = (RealVector(2) << 0.25, 1.5).finished();
    const std::pair<DiscreteObservation, Pattern> cases[] = {{DiscreteObservation::ytilde_noisier2full, {1, 1}},
                                                            {DiscreteObservation::ytilde_robust, {1, 0}}};
    for (const auto& [kind, s] : cases) {
      const ComplexVector a = brute_force_conditional(dm, kind, s, values, CondTarget::y0_plus_n);
      const ComplexVector b = brute_force_conditional(dm, kind, s, values, CondTarget::y0);
      for (Index j = 0; j < 2; ++j) {
        const Complex corrected = s[static_cast<std::size_t>(j)] ? ((1.0 + a2) * a[j] - values[j]) / a2 : a[j];
        worst = std::max(worst, std::abs(corrected - b[j]));
      }
    }
  }
  r.estimate = worst;
  r.pass = worst <= r.tolerance;
  r.details = {{"alpha2", {0.5, 1.0, 2.0}}};
  return r;
}

}  // namespace

VerifyResult run_verify(const ExperimentConfig& c) {
  const MeasurementModel model = cell_model(c, c.noise.sigma_n, c.omega.target_accel, c.lambda.target_accel, c.noise.alpha);
  validate_mask_conditions(model.p(), model.ptilde());

  VerifyResult out;
  out.reports.push_back(identity_report(c, model));
  out.reports.push_back(discrete_correction_report());
  for (Method m : kAllMethods) out.reports.push_back(check_population_minimizer(m, model));
  for (Method m : {Method::noisier2full, Method::noisier2full_unweighted, Method::robust_ssdu,
                   Method::robust_ssdu_unweighted}) {
    out.reports.push_back(check_correction_identity(m, model));
  }
  McOptions mc;
  mc.shards = c.verify.shards;
  mc.parallel = c.parallel;
  const Rng root = Rng(c.seed).substream("verify");
  if (input_patterns(model, false).exhaustive && input_patterns(model, true).exhaustive) {
    mc.samples = c.verify.mse_samples;
    out.reports.push_back(check_corrected_mse(Method::noisier2full, model, mc, root.substream("mse", 0)));
    out.reports.push_back(check_corrected_mse(Method::robust_ssdu, model, mc, root.substream("mse", 1)));
  }
  mc.samples = c.verify.slope_samples;
  for (std::size_t i = 0; i < c.verify.slope_alphas.size(); ++i) {
    const MeasurementModel m = model.with_noise(NoiseSpec{c.noise.sigma_n, c.verify.slope_alphas[i]});
    out.reports.push_back(check_conditional_noise_identity(m, mc, root.substream("slope", i)));
  }

  mc.samples = c.verify.gradient_samples;
  AffinePerPattern affine(model.q());
  for (bool on_omega : {true, false}) {
    for (const auto& s : input_patterns(model, on_omega).patterns) {
      affine.prepare(SamplingMask(s, RealVector::Ones(model.q())));
    }
  }
  for (Index t = 0; t < c.verify.n_theta; ++t) {
    Rng g = root.substream("theta", static_cast<std::uint64_t>(t));
    for (Index i = 0; i < affine.parameter_count(); ++i) affine.theta()[i] = 0.5 * g.normal();
    for (Method claim : {Method::noisier2full, Method::robust_ssdu}) {
      OracleReport r = check_gradient_equivalence(claim, affine, model, mc,
                                                  root.substream("gradient", static_cast<std::uint64_t>(t)));
      r.name += "/theta" + std::to_string(t);
      out.reports.push_back(std::move(r));
    }
  }
  for (const auto& r : out.reports) {
    if (r.pass && !*r.pass) out.all_passed = false;
  }
  return out;
}

json verify_json(const ExperimentConfig& c, const VerifyResult& r) {
  json reports = json::array();
  for (const auto& rep : r.reports) {
    json j;
    to_json(j, rep);
    reports.push_back(j);
  }
  return json{{"version", kVersion}, {"config", config_to_json(c)}, {"all_passed", r.all_passed}, {"reports", reports}};
}

}  // namespace ssrecon
