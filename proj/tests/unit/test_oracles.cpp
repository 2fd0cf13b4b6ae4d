#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ssrecon/errors.hpp"
#include "ssrecon/fit.hpp"
#include "ssrecon/inference.hpp"
#include "ssrecon/oracles.hpp"
#include "test_support.hpp"

using namespace ssrecon;

namespace {

// Unit prior and unit noise on q indices with the given further-noise level.
MeasurementModel unit_model(Index q, double sigma_n, double alpha) {
  return test::make_model("scalar", q, sigma_n, alpha, 1.5, 1.3);
}

DiscreteModel two_atom_model() {
  DiscreteModel m;
  m.q = 2;
  m.atoms = {0.0, 1.0};
  m.pmf = {0.4, 0.1, 0.2, 0.3};
  m.K = 1;
  m.K_tilde = 1;
  m.h = 0.5;
  m.p = RealVector::Constant(2, 0.7);
  m.ptilde = RealVector::Constant(2, 0.6);
  return m;
}

}  // namespace

TEST_CASE("noiseless sampled index has coefficient one") {
  const MeasurementModel m = unit_model(3, 0.0, 1.0);
  const ComplexMatrix c = gaussian_conditional_mean(m, Pattern{1, 0, 1}, CondTarget::y0, Conditioning::on_Y);
  CHECK(std::abs(c(0, 0) - 1.0) < 1e-14);
  CHECK(std::abs(c(2, 2) - 1.0) < 1e-14);
}

TEST_CASE("scalar Gaussian coefficient on the further-noisy observation is 2/3") {
  const MeasurementModel m = unit_model(2, 1.0, 1.0);
  const ComplexMatrix c = gaussian_conditional_mean(m, Pattern{1, 0}, CondTarget::y0_plus_n, Conditioning::on_Ytilde);
  CHECK(std::abs(c(0, 0) - 2.0 / 3.0) < 1e-14);
  const ComplexMatrix d = gaussian_conditional_mean(m, Pattern{1, 0}, CondTarget::y0, Conditioning::on_Ytilde);
  CHECK(std::abs(d(0, 0) - 1.0 / 3.0) < 1e-14);
}

TEST_CASE("diagonal prior leaves unsampled rows at zero") {
  const MeasurementModel m = test::make_model("diagonal", 4, 0.3, 1.0, 2.0, 1.6);
  const ComplexMatrix c = gaussian_conditional_mean(m, Pattern{1, 1, 0, 0}, CondTarget::y0, Conditioning::on_Y);
  CHECK(c.row(2).isZero(0.0));
  CHECK(c.row(3).isZero(0.0));
}

TEST_CASE("singular observed covariance is a validation error") {
  PriorSpec prior;
  prior.preset = "scalar";
  prior.scale = 0.0;
  const MeasurementModel m(build_prior_cov(prior, GridShape{1, 2}), NoiseSpec{0.0, 1.0}, test::column_dist(2, 1.6, 1, 1.0),
                           test::column_dist(2, 1.3, 1, 1.0));
  CHECK_THROWS_AS(gaussian_conditional_mean(m, Pattern{1, 0}, CondTarget::y0, Conditioning::on_Y), ValidationError);
}

TEST_CASE("posterior mean of Y0 is the alpha-corrected posterior mean of Y0 + N") {
  for (const char* preset : {"scalar", "diagonal", "banded"}) {
    const MeasurementModel m = test::make_model(preset, 4, 0.7, 0.6, 2.0, 1.6);
    const double a2 = 0.36;
    for (const Pattern& s : {Pattern{1, 0, 1, 1}, Pattern{1, 1, 1, 1}, Pattern{0, 1, 0, 0}}) {
      const ComplexMatrix y0 = gaussian_conditional_mean(m, s, CondTarget::y0, Conditioning::on_Ytilde);
      const ComplexMatrix y0n = gaussian_conditional_mean(m, s, CondTarget::y0_plus_n, Conditioning::on_Ytilde);
      for (Index j = 0; j < 4; ++j) {
        if (!s[static_cast<std::size_t>(j)]) continue;
        Eigen::RowVectorXcd e = Eigen::RowVectorXcd::Zero(4);
        e(j) = 1.0;
        const Eigen::RowVectorXcd corrected = ((1.0 + a2) * y0n.row(j) - e) / a2;
        CHECK((corrected - y0.row(j)).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("closed-form fits on scalar examples") {
  const MeasurementModel noiseless = test::make_model("scalar", 3, 0.0, 1.0, 1.0, 1.6);
  const AffineFit id = closed_form_affine_fit(noiseless, Method::fully_supervised, Pattern{1, 1, 1});
  CHECK((id.a - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  const MeasurementModel m = unit_model(2, 1.0, 1.0);
  const AffineFit rob = closed_form_affine_fit(m, Method::robust_ssdu, Pattern{1, 0});
  CHECK(std::abs(rob.a(0, 0) - 2.0 / 3.0) < 1e-12);
  const AffineFit rob_u = closed_form_affine_fit(m, Method::robust_ssdu_unweighted, Pattern{1, 0});
  CHECK(std::abs(rob_u.a(0, 0) - 2.0 / 3.0) < 1e-12);
  const AffineFit swd = closed_form_affine_fit(m, Method::supervised_wo_denoising, Pattern{1, 0});
  CHECK(std::abs(swd.a(0, 0) - 1.0) < 1e-12);
  CHECK_THROWS_AS(closed_form_affine_fit(m, Method::noise2recon_ss, Pattern{1, 0}), ValidationError);
}

TEST_CASE("population minimisers match their targets") {
  for (const char* preset : {"scalar", "banded"}) {
    CAPTURE(preset);
    const MeasurementModel m = test::make_model(preset, 4, 0.5, 0.8, 2.0, 1.6);
    for (Method method : kAllMethods) {
      CAPTURE(to_string(method));
      const OracleReport r = check_population_minimizer(method, m);
      if (method == Method::noise2recon_ss) {
        CHECK_FALSE(r.pass.has_value());
      } else {
        REQUIRE(r.pass.has_value());
        CHECK(*r.pass);
      }
    }
  }
}

TEST_CASE("standard SSDU marks lambda n omega rows unconstrained") {
  const MeasurementModel m = unit_model(3, 0.5, 1.0);
  const AffineFit fit = closed_form_affine_fit(m, Method::standard_ssdu, Pattern{1, 0, 1});
  CHECK(fit.unconstrained[0]);
  CHECK_FALSE(fit.unconstrained[1]);
  CHECK(fit.unconstrained[2]);
}

TEST_CASE("input pattern probabilities sum to one") {
  const MeasurementModel m = test::make_model("scalar", 5, 0.5, 1.0, 2.0, 1.6);
  for (bool on_omega : {true, false}) {
    const PatternSet set = input_patterns(m, on_omega);
    CHECK(set.exhaustive);
    double total = 0.0;
    for (double p : set.probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  const PatternSet sampled = input_patterns(m, true, 3, 500, 1);
  CHECK_FALSE(sampled.exhaustive);
}

TEST_CASE("conditional noise identity") {
  const McOptions mc{200000, 16, true};
  for (double alpha : {0.5, 1.0}) {
    const MeasurementModel m = unit_model(3, 1.0, alpha);
    const OracleReport r = check_conditional_noise_identity(m, mc, Rng(5));
    REQUIRE(r.pass.has_value());
    CHECK(*r.pass);
    CHECK(r.details["slope_ratio"].get<double>() == doctest::Approx(alpha * alpha).epsilon(0.05));
  }
  const OracleReport zero = check_conditional_noise_identity(unit_model(3, 0.0, 1.0), mc, Rng(6));
  CHECK(zero.details["slope_n"].get<double>() == 0.0);
  CHECK(zero.details["slope_ntilde"].get<double>() == 0.0);
  CHECK_THROWS_AS(check_conditional_noise_identity(unit_model(3, 1.0, 1.0), McOptions{100, 4, true}, Rng(1)),
                  ConfigError);
}

TEST_CASE("gradient equivalence at a random linear map") {
  const MeasurementModel m = unit_model(2, 0.5, 1.0);
  for (Method claim : {Method::noisier2full, Method::robust_ssdu}) {
    AffinePerPattern est(2);
    for (const auto& s : input_patterns(m, input_on_omega(claim)).patterns) est.prepare(SamplingMask(s, m.p()));
    Rng rng(7);
    for (Index i = 0; i < est.parameter_count(); ++i) est.theta()[i] = 0.5 * rng.normal();
    const OracleReport r = check_gradient_equivalence(claim, est, m, McOptions{100000, 32, true}, Rng(8));
    REQUIRE(r.pass.has_value());
    CHECK(*r.pass);
  }
}

TEST_CASE("gradients vanish at the population optimum") {
  const MeasurementModel m = unit_model(2, 0.5, 1.0);
  AffinePerPattern est(2);
  enroll_fits(est, m, Method::noisier2full, input_patterns(m, true).patterns);
  const OracleReport r = check_gradient_equivalence(Method::noisier2full, est, m, McOptions{100000, 32, true}, Rng(9));
  CHECK(*r.pass);
  const double mean_abs = r.details["mean_abs_surrogate"].get<double>();
  CHECK(mean_abs < 0.02);
}

TEST_CASE("brute force with a single atom returns the atom") {
  DiscreteModel m = two_atom_model();
  m.atoms = {0.75};
  m.pmf = {1.0};
  RealVector v(2);
  v << 0.25, 1.25;
  const ComplexVector e = brute_force_conditional(m, DiscreteObservation::y, Pattern{1, 1}, v, CondTarget::y0);
  CHECK(std::abs(e[0] - 0.75) < 1e-14);
  CHECK(std::abs(e[1] - 0.75) < 1e-14);
}

TEST_CASE("brute force without noise returns the observation") {
  DiscreteModel m = two_atom_model();
  m.atoms = {-1.0, 1.0};
  m.K = 0;
  RealVector v(2);
  v << 1.0, -1.0;
  const ComplexVector e = brute_force_conditional(m, DiscreteObservation::y, Pattern{1, 1}, v, CondTarget::y0);
  CHECK(std::abs(e[0] - 1.0) < 1e-14);
  CHECK(std::abs(e[1] + 1.0) < 1e-14);
}

TEST_CASE("brute force agrees with rejection sampling") {
  const DiscreteModel m = two_atom_model();
  const Pattern s{1, 1};
  RealVector v(2);
  v << 0.5, 1.0;
  const ComplexVector exact = brute_force_conditional(m, DiscreteObservation::ytilde_noisier2full, s, v, CondTarget::y0_plus_n);

  Rng rng(10);
  auto lattice = [&](Index k) {
    Index b = 0;
    for (Index i = 0; i < 2 * k; ++i) b += rng.uniform() < 0.5 ? 1 : 0;
    return m.h * static_cast<double>(b - k);
  };
  double n_acc = 0.0;
  RealVector sum = RealVector::Zero(2), sum2 = RealVector::Zero(2);
  for (int t = 0; t < 10000000; ++t) {
    double u = rng.uniform();
    std::size_t cfg = 0;
    while (cfg + 1 < m.pmf.size() && u >= m.pmf[cfg]) u -= m.pmf[cfg++];
    double target[2];
    bool ok = true;
    for (Index j = 0; j < 2; ++j) {
      const double y0 = m.atoms[(cfg >> j) & 1U];
      const double n = lattice(m.K), nt = lattice(m.K_tilde);
      const bool in = rng.uniform() < m.p[j];
      ok = ok && in && std::abs(y0 + n + nt - v[j]) < 1e-9;
      target[j] = y0 + n;
    }
    if (!ok) continue;
    n_acc += 1.0;
    for (Index j = 0; j < 2; ++j) {
      sum[j] += target[j];
      sum2[j] += target[j] * target[j];
    }
  }
  REQUIRE(n_acc > 1000.0);
  for (Index j = 0; j < 2; ++j) {
    const double mean = sum[j] / n_acc;
    const double se = std::sqrt((sum2[j] / n_acc - mean * mean) / n_acc);
    CHECK(std::abs(mean - exact[j].real()) <= 3.0 * se);
  }
}

TEST_CASE("discrete model validation") {
  DiscreteModel m = two_atom_model();
  m.atoms = {0, 1, 2, 3, 4};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = two_atom_model();
  m.pmf = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
