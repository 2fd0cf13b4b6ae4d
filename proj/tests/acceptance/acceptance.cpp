// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any fails.
//
//   acceptance [--configs DIR] [--only AC-k]

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "ssrecon/errors.hpp"
#include "ssrecon/experiment.hpp"
#include "ssrecon/fit.hpp"
#include "ssrecon/metrics.hpp"
#include "ssrecon/oracles.hpp"
#include "test_support.hpp"

using namespace ssrecon;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string configs_dir = "configs";

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Banded Gaussian preset on q = 8.
MeasurementModel banded8() { return test::make_model("banded", 8, 0.3, 1.0, 2.0, 1.6, 2, 1.0); }

// Scalar prior on q = 4 with a degree-1 density.
MeasurementModel scalar4(double sigma_n, double alpha) {
  return test::make_model("scalar", 4, sigma_n, alpha, 2.0, 1.6, 1, 1.0);
}

ExperimentConfig load_config(const std::string& name) {
  std::ifstream in(configs_dir + "/" + name);
  if (!in) throw ConfigError("cannot open " + configs_dir + "/" + name);
  return parse_config(nlohmann::json::parse(in));
}

Outcome ac1() {
  const MeasurementModel m = banded8();
  Outcome o{true, ""};
  for (Method method : {Method::robust_ssdu_unweighted, Method::robust_ssdu}) {
    const OracleReport r = check_population_minimizer(method, m);
    const bool ok = r.pass.value_or(false) && r.details["exhaustive"].get<bool>();
    o.pass = o.pass && ok;
    o.detail += to_string(method) + " max|fit - E[Y0+N|Yt]| = " + fmt("%.3g", r.estimate) + " over " +
                std::to_string(r.details["patterns"].get<std::size_t>()) + " patterns; ";
  }
  return o;
}

Outcome ac2() {
  const MeasurementModel m = banded8();
  Outcome o{true, ""};
  for (Method method : {Method::noisier2full, Method::noisier2full_unweighted, Method::robust_ssdu,
                        Method::robust_ssdu_unweighted}) {
    const OracleReport r = check_correction_identity(method, m);
    o.pass = o.pass && r.pass.value_or(false);
    o.detail += to_string(method) + " coef dev " + fmt("%.2g", r.estimate) + "; ";
  }
  const McOptions mc{100000, 64, true};
  for (Method method : {Method::noisier2full, Method::robust_ssdu}) {
    const OracleReport r = check_corrected_mse(method, m, mc, Rng(21).substream(to_string(method)));
    o.pass = o.pass && r.pass.value_or(false);
    o.detail += to_string(method) + " MSE " + fmt("%.5g", r.estimate) + " vs " + fmt("%.5g", r.reference) +
                " (rel " + fmt("%.3g", r.details["relative_error"].get<double>()) + "); ";
  }
  return o;
}

Outcome ac3() {
  const MeasurementModel m = banded8();
  const OracleReport r = check_population_minimizer(Method::supervised_wo_denoising, m);
  // Direct look at the sampled rows of every pattern.
  double worst_identity = 0.0;
  for (const auto& s : input_patterns(m, true).patterns) {
    const AffineFit fit = closed_form_affine_fit(m, Method::supervised_wo_denoising, s);
    for (Index j = 0; j < m.q(); ++j) {
      if (!s[static_cast<std::size_t>(j)]) continue;
      Eigen::RowVectorXcd e = Eigen::RowVectorXcd::Zero(m.q());
      e(j) = 1.0;
      worst_identity = std::max(worst_identity, (fit.a.row(j) - e).cwiseAbs().maxCoeff());
    }
  }
  const bool pass = r.pass.value_or(false) && worst_identity <= 1e-8;
  return {pass, "max dev from identity on omega " + fmt("%.3g", worst_identity) + ", max dev overall " +
                    fmt("%.3g", r.estimate)};
}

Outcome ac4() {
  const MeasurementModel m = scalar4(0.5, 1.0);
  Outcome o{true, ""};
  Rng theta_rng(41);
  double worst = 0.0;
  for (Index t = 0; t < 5; ++t) {
    AffinePerPattern est(m.q());
    for (const auto& s : input_patterns(m, true).patterns) est.prepare(SamplingMask(s, m.p()));
    for (const auto& s : input_patterns(m, false).patterns) est.prepare(SamplingMask(s, m.p()));
    for (Index i = 0; i < est.parameter_count(); ++i) est.theta()[i] = 0.5 * theta_rng.normal();
    for (Method claim : {Method::noisier2full, Method::robust_ssdu}) {
      const OracleReport r = check_gradient_equivalence(claim, est, m, McOptions{100000, 64, true},
                                                        Rng(42).substream(to_string(claim), static_cast<std::uint64_t>(t)));
      o.pass = o.pass && r.pass.value_or(false);
      worst = std::max(worst, r.estimate);
      o.detail += to_string(claim) + "/theta" + std::to_string(t) + " z=" + fmt("%.2f", r.estimate) + "; ";
    }
  }
  o.detail = "max standardized discrepancy " + fmt("%.2f", worst) + " (limit 3): " + o.detail;
  return o;
}

Outcome ac5() {
  Rng rng(51);
  RealVector p(100), pt(100);
  for (Index j = 0; j < 100; ++j) {
    p[j] = 0.01 + 0.99 * rng.uniform();
    pt[j] = 0.99 * rng.uniform();
  }
  const RealVector k = compute_k(p, pt), P = compute_P(p, pt);
  const double worst = (P.cwiseProduct(RealVector::Ones(100) - k) - RealVector::Ones(100)).cwiseAbs().maxCoeff();
  Outcome o{worst <= 1e-12, "max |P(1-k) - 1| = " + fmt("%.2g", worst) + "; "};
  for (double alpha : {0.5, 1.0}) {
    const OracleReport r = check_conditional_noise_identity(scalar4(1.0, alpha), McOptions{1000000, 64, true},
                                                            Rng(52).substream("alpha", alpha == 1.0 ? 1 : 0));
    o.pass = o.pass && r.pass.value_or(false);
    o.detail += "alpha " + fmt("%.2g", alpha) + ": slope ratio " +
                fmt("%.4f", r.details["slope_ratio"].get<double>()) + " vs " + fmt("%.4f", alpha * alpha) +
                " (z " + fmt("%.2f", r.estimate) + "); ";
  }
  return o;
}

Outcome ac6() {
  const ExperimentConfig c = load_config("banded_q8.json");
  Outcome o{true, ""};
  const double s = c.noise.sigma_n, ro = c.omega.target_accel, rl = c.lambda.target_accel;
  for (Method method : {Method::noisier2full, Method::robust_ssdu}) {
    const double alpha = method_alpha(c, method);
    const TrainedCell cell = train_cell(c, method, s, ro, rl, alpha);
    const Rng rng = Rng(c.seed).substream("inference");
    const Evaluation prac = evaluate(method, *cell.estimator, cell.model, cell.test, alpha, ReconMode::practical, rng);
    const Evaluation theo = evaluate(method, *cell.estimator, cell.model, cell.test, alpha, ReconMode::theory, rng);
    o.pass = o.pass && prac.finite && theo.finite;
    o.detail += to_string(method) + " NMSE practical " + fmt("%.4f", prac.nmse_mean) + ", theory " +
                fmt("%.4f", theo.nmse_mean) + ", gap " + fmt("%+.4f", theo.nmse_mean - prac.nmse_mean) + "; ";
  }
  o.detail += "(gap is reported, not thresholded)";
  return o;
}

Outcome ac7() {
  const ExperimentConfig c = load_config("compare_q32.json");
  const auto rows = run_compare(c);
  auto find = [&](const std::string& method, double sigma) {
    for (const auto& r : rows)
      if (r.method == method && r.sigma_n == sigma) return r.eval.nmse_mean;
    throw ConfigError("missing row " + method);
  };
  Outcome o{true, ""};
  const double hi = c.grid.sigma_n.back();
  const double gain = 1.0 - find("robust_ssdu", hi) / find("standard_ssdu", hi);
  o.pass = gain >= 0.20;
  o.detail = "sigma " + fmt("%.2g", hi) + ": robust " + fmt("%.4f", find("robust_ssdu", hi)) + " vs ssdu " +
             fmt("%.4f", find("standard_ssdu", hi)) + " (gain " + fmt("%.1f", 100.0 * gain) + "%, need >= 20%); ";
  for (double sigma : c.grid.sigma_n) {
    const double gap = find("noisier2full", sigma) / find("fully_supervised", sigma) - 1.0;
    o.pass = o.pass && gap <= 0.10;
    o.detail += "sigma " + fmt("%.2g", sigma) + ": n2f " + fmt("%.4f", find("noisier2full", sigma)) + " vs fs " +
                fmt("%.4f", find("fully_supervised", sigma)) + " (gap " + fmt("%.1f", 100.0 * gap) +
                "%, need <= 10%); ";
  }
  return o;
}

Outcome ac8() {
  Outcome o{true, ""};
  // Mask frequencies.
  const MaskDensity d = build_density(test::column_dist(32, 4.0, 4, 8.0));
  Rng rng(81);
  RealVector freq = RealVector::Zero(32);
  for (int t = 0; t < 100000; ++t) freq += draw_mask(d, rng).diagonal();
  const double fdev = (freq / 100000.0 - d.probs).cwiseAbs().maxCoeff();
  o.pass = fdev <= 0.01;
  o.detail += "mask freq dev " + fmt("%.4f", fdev) + "; ";

  // vjp against finite differences.
  const Index q = 6;
  Pattern s(static_cast<std::size_t>(q), 0);
  s[0] = s[1] = s[4] = 1;
  const SamplingMask m(s, RealVector::Constant(q, 0.5));
  const ComplexVector y = apply_mask(m, test::random_complex(q, rng));
  const ComplexVector cot = test::random_complex(q, rng);
  AffinePerPattern affine(q);
  affine.prepare(m);
  for (Index i = 0; i < affine.parameter_count(); ++i) affine.theta()[i] = rng.normal();
  TinyNet net(q, {12, 12}, true, rng);
  ToyCascade cascade(q, 2, {12}, rng);
  for (Index i = 0; i < cascade.parameter_count(); ++i) cascade.theta()[i] = 0.3 * rng.normal();
  double vjp_err = 0.0;
  for (Estimator* e : std::vector<Estimator*>{&affine, &net, &cascade}) vjp_err = std::max(vjp_err, test::vjp_fd_error(*e, y, m, cot));
  o.pass = o.pass && vjp_err < 1e-6;
  o.detail += "vjp rel err " + fmt("%.2g", vjp_err) + "; ";

  // Metric trivial cases.
  const ComplexVector ref = test::random_complex(q, rng);
  const RealVector img = magnitude_image(ref);
  const bool metrics = nmse(ref, ref) == 0.0 && nmse(ComplexVector::Zero(q), ref) == 1.0 && ssim(img, img) == 1.0;
  o.pass = o.pass && metrics;
  o.detail += std::string("nmse/ssim trivial ") + (metrics ? "exact" : "WRONG") + "; ";

  // Repeated seeded runs.
  const ExperimentConfig c = load_config("compare_small.json");
  const std::string a = results_csv(c, run_compare(c)), b = results_csv(c, run_compare(c));
  const std::string sa = results_csv(c, run_alpha_sweep(c)), sb = results_csv(c, run_alpha_sweep(c));
  const bool same = a == b && sa == sb;
  o.pass = o.pass && same;
  o.detail += std::string("repeated CSVs ") + (same ? "byte-identical" : "DIFFER");
  return o;
}

Outcome ac9() {
  const Index q = 8;
  const MeasurementModel m = test::make_model("banded", q, 0.3, 0.8, 1.0, 1.6, 2, 1.0);
  Rng rng(91);
  Index draws = 0, equal = 0;
  for (int t = 0; t < 1000; ++t) {
    TrainItem robust;
    robust.y0 = gaussian_ground_truth(m, rng);
    robust.y_full = *robust.y0 + complex_noise(q, m.noise().sigma_n, rng);
    robust.omega = draw_mask(m.omega_density(), rng);
    robust.y = apply_mask(robust.omega, *robust.y_full);
    const EpochDraw draw = draw_epoch(m, 0.8, q, rng);
    TrainItem n2f = robust;
    n2f.omega = draw.lambda;
    n2f.y = apply_mask(draw.lambda, *robust.y_full);
    TinyNet est(q, {8}, true, rng);
    TrainSpec rs, ns;
    rs.method = Method::robust_ssdu;
    ns.method = Method::noisier2full;
    rs.alpha = ns.alpha = 0.8;
    const LossGrad a = loss_and_grad(rs, est, robust, draw);
    const LossGrad b = loss_and_grad(ns, est, n2f, EpochDraw{SamplingMask::full(q), draw.ntilde});
    ++draws;
    if (robust.omega.count() == q && a.loss == b.loss && a.grad == b.grad) ++equal;
  }
  return {equal == draws, std::to_string(equal) + "/" + std::to_string(draws) + " draws with identical loss and gradient"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--configs" && i + 1 < argc) {
      configs_dir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--configs DIR] [--only AC-k]\n");
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC-1", ac1}, {"AC-2", ac2}, {"AC-3", ac3}, {"AC-4", ac4}, {"AC-5", ac5},
      {"AC-6", ac6}, {"AC-7", ac7}, {"AC-8", ac8}, {"AC-9", ac9},
  };
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && only != id) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %s [%.1fs] %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
