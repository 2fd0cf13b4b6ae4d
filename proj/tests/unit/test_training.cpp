#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ssrecon/errors.hpp"
#include "ssrecon/training.hpp"
#include "test_support.hpp"

using namespace ssrecon;

namespace {

TrainItem make_item(const MeasurementModel& model, Rng& rng) {
  TrainItem item;
  item.y0 = gaussian_ground_truth(model, rng);
  item.y_full = *item.y0 + complex_noise(model.q(), model.noise().sigma_n, rng);
  item.omega = draw_mask(model.omega_density(), rng);
  item.y = apply_mask(item.omega, *item.y_full);
  return item;
}

// Returns the all-ones vector as its "gradient" so optimizer steps can be counted.
class UnitGradient final : public Estimator {
 public:
  explicit UnitGradient(Index q) : Estimator(q) { theta_ = RealVector::Zero(1); }
  std::string family() const override { return "unit_gradient"; }
  ForwardResult forward(const ComplexVector& y, const SamplingMask&) const override { return ForwardResult{y, false}; }
  RealVector vjp(const ComplexVector&, const SamplingMask&, const ComplexVector&) const override {
    return RealVector::Ones(1);
  }
  nlohmann::json shapes() const override { return nlohmann::json::object(); }
  std::unique_ptr<Estimator> clone() const override { return std::make_unique<UnitGradient>(*this); }
};

void set_constant(AffinePerPattern& est, const Pattern& s, const ComplexVector& c) {
  est.enroll(s, ComplexMatrix::Zero(est.q(), est.q()), c);
}

}  // namespace

TEST_CASE("noisier2full weights") {
  const std::vector<Index> idx{0, 2};
  const SamplingMask omega = SamplingMask::from_indices(4, idx, RealVector::Constant(4, 0.5));
  const RealVector w = weight_noisier2full(omega, 1.0);
  CHECK(w[0] == 2.0);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == 2.0);
  CHECK(w[3] == 1.0);
  const RealVector limit = weight_noisier2full(omega, 1e3);
  CHECK(std::abs(limit[0] - 1.0) <= 1e-6);
  CHECK(weight_noisier2full(SamplingMask::full(3), 1.0).isApproxToConstant(2.0));
  CHECK_THROWS_AS(weight_noisier2full(omega, 0.0), ValidationError);
}

TEST_CASE("robust weights on a two-index example") {
  const Index q = 2;
  const std::vector<Index> all{0, 1}, first{0};
  const SamplingMask omega = SamplingMask::from_indices(q, all, RealVector::Ones(q));
  const SamplingMask lambda = SamplingMask::from_indices(q, first, RealVector::Constant(q, 0.5));
  const RealVector P = compute_P(omega.probs(), lambda.probs());
  CHECK(P[1] == doctest::Approx(1.0));
  const RealVector w = weight_robust_ssdu(omega, lambda, 1.0, P);
  CHECK(w[0] == doctest::Approx(2.0));
  CHECK(w[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(weight_robust_ssdu(omega, lambda, 0.0, P), ValidationError);
}

TEST_CASE("robust weights approach p^-1/2 as ptilde vanishes") {
  RealVector p(3);
  p << 1.0, 0.5, 0.2;
  const std::vector<Index> all{0, 1, 2}, none{};
  const SamplingMask omega = SamplingMask::from_indices(3, all, p);
  const SamplingMask lambda = SamplingMask::from_indices(3, none, RealVector::Constant(3, 1e-12));
  const RealVector w = weight_robust_ssdu(omega, lambda, 1.0, compute_P(p, lambda.probs()));
  for (Index j = 0; j < 3; ++j) CHECK(w[j] == doctest::Approx(1.0 / std::sqrt(p[j])).epsilon(1e-9));
}

TEST_CASE("robust weights reduce to the noisier2full pattern when lambda covers omega") {
  const std::vector<Index> oi{1, 3};
  const SamplingMask omega = SamplingMask::from_indices(4, oi, RealVector::Constant(4, 0.5));
  const SamplingMask lambda = SamplingMask(Pattern(4, 1), RealVector::Constant(4, 0.5));
  const RealVector w = weight_robust_ssdu(omega, lambda, 0.5, compute_P(omega.probs(), lambda.probs()));
  const RealVector n2f = weight_noisier2full(omega, 0.5);
  for (Index j : oi) CHECK(w[j] == n2f[j]);
  CHECK(w[0] == 0.0);
  CHECK(w[2] == 0.0);
}

TEST_CASE("robust loss on the two-index example") {
  const Index q = 2;
  const std::vector<Index> all{0, 1}, first{0};
  TrainItem item;
  item.omega = SamplingMask::from_indices(q, all, RealVector::Ones(q));
  item.y = ComplexVector(q);
  item.y << Complex(1.0, 0.5), Complex(-0.25, 2.0);
  EpochDraw draw{SamplingMask::from_indices(q, first, RealVector::Constant(q, 0.5)), ComplexVector(q)};
  draw.ntilde << Complex(0.1, -0.2), Complex(0.3, 0.3);
  AffinePerPattern est(q);
  Rng rng(1);
  ComplexMatrix a(q, q);
  a << Complex(0.3, 0.1), 0.0, Complex(-0.7, 0.2), 0.0;
  const ComplexVector b = test::random_complex(q, rng);
  est.enroll(Pattern{1, 0}, a, b);
  TrainSpec spec;
  spec.method = Method::robust_ssdu;
  spec.alpha = 1.0;
  const ComplexVector input = corrupt_robust_ssdu(item.y, item.omega, draw.lambda, draw.ntilde);
  const ComplexVector f = a * input + b;
  const double expected = std::norm(2.0 * (f[0] - item.y[0])) + std::norm(f[1] - item.y[1]);
  CHECK(loss_and_grad(spec, est, item, draw).loss == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("standard SSDU loss vanishes when f reproduces y") {
  const MeasurementModel model = test::make_model("scalar", 6, 0.3, 1.0, 2.0, 1.6);
  Rng rng(2);
  const TrainItem item = make_item(model, rng);
  const EpochDraw draw = draw_epoch(model, 1.0, 6, rng);
  AffinePerPattern est(6);
  set_constant(est, intersect(item.omega, draw.lambda).pattern(), item.y);
  TrainSpec spec;
  spec.method = Method::standard_ssdu;
  const LossGrad lg = loss_and_grad(spec, est, item, draw);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grad.isZero(0.0));
}

TEST_CASE("noise2recon with a constant estimator has zero consistency") {
  const MeasurementModel model = test::make_model("scalar", 6, 0.3, 1.0, 2.0, 1.6);
  Rng rng(3);
  const TrainItem item = make_item(model, rng);
  const EpochDraw draw = draw_epoch(model, 1.0, 6, rng);
  const ComplexVector c = test::random_complex(6, rng);
  AffinePerPattern est(6);
  set_constant(est, intersect(item.omega, draw.lambda).pattern(), c);
  set_constant(est, item.omega.pattern(), c);
  TrainSpec spec;
  spec.method = Method::noise2recon_ss;
  spec.lambda_n2r = 1.0;
  const SamplingMask held = mask_algebra(item.omega, draw.lambda).omega_minus_lambda;
  const double expected = apply_mask(held, c - item.y).squaredNorm();
  CHECK(loss_and_grad(spec, est, item, draw).loss == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("loss gradients match finite differences for every method") {
  const Index q = 5;
  const MeasurementModel model = test::make_model("banded", q, 0.3, 0.8, 2.0, 1.6);
  Rng rng(4);
  const TrainItem item = make_item(model, rng);
  const EpochDraw draw = draw_epoch(model, 0.8, q, rng);
  for (Method m : kAllMethods) {
    CAPTURE(to_string(m));
    TrainSpec spec;
    spec.method = m;
    spec.alpha = 0.8;
    spec.lambda_n2r = 0.7;
    TinyNet est(q, {6}, true, rng);
    const LossGrad lg = loss_and_grad(spec, est, item, draw);
    CHECK(lg.loss >= 0.0);
    CHECK(std::isfinite(lg.loss));
    const double h = 1e-6;
    double worst = 0.0;
    for (Index i = 0; i < est.parameter_count(); ++i) {
      const double keep = est.theta()[i];
      est.theta()[i] = keep + h;
      const double up = loss_and_grad(spec, est, item, draw).loss;
      est.theta()[i] = keep - h;
      const double down = loss_and_grad(spec, est, item, draw).loss;
      est.theta()[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(lg.grad[i] - fd) / std::max(1.0, std::abs(fd)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("supervised methods need the ground truth") {
  const MeasurementModel model = test::make_model("scalar", 4, 0.3, 1.0, 2.0, 1.6);
  Rng rng(5);
  TrainItem item = make_item(model, rng);
  item.y0.reset();
  item.y_full.reset();
  const EpochDraw draw = draw_epoch(model, 1.0, 4, rng);
  TinyNet est(4, {4}, false, rng);
  for (Method m : {Method::fully_supervised, Method::supervised_wo_denoising, Method::noisier2full}) {
    TrainSpec spec;
    spec.method = m;
    CHECK_THROWS_AS(loss_and_grad(spec, est, item, draw), ConfigError);
  }
  TrainSpec ssdu;
  ssdu.method = Method::standard_ssdu;
  CHECK_NOTHROW(loss_and_grad(ssdu, est, item, draw));
}

TEST_CASE("robust SSDU with full omega equals noisier2full on lambda, per draw") {
  const Index q = 6;
  const MeasurementModel model = test::make_model("banded", q, 0.4, 0.7, 1.0, 1.6);
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    TrainItem robust = make_item(model, rng);
    CHECK(robust.omega.count() == q);
    const EpochDraw draw = draw_epoch(model, 0.7, q, rng);
    TrainItem n2f = robust;
    n2f.omega = draw.lambda;
    n2f.y = apply_mask(draw.lambda, *robust.y_full);
    const EpochDraw n2f_draw{SamplingMask::full(q), draw.ntilde};
    TinyNet est(q, {5}, false, rng);
    TrainSpec rs, ns;
    rs.method = Method::robust_ssdu;
    ns.method = Method::noisier2full;
    rs.alpha = ns.alpha = 0.7;
    const LossGrad a = loss_and_grad(rs, est, robust, draw);
    const LossGrad b = loss_and_grad(ns, est, n2f, n2f_draw);
    CHECK(a.loss == b.loss);
    CHECK(a.grad == b.grad);
  }
}

TEST_CASE("Adam with a zero gradient leaves parameters unchanged") {
  AdamConfig cfg;
  AdamState state;
  RealVector theta(3);
  theta << 1.0, -2.0, 0.5;
  const RealVector before = theta;
  adam_step(cfg, state, theta, RealVector::Zero(3));
  CHECK(theta == before);
}

TEST_CASE("first Adam step moves each entry by about lr") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  AdamState state;
  RealVector theta = RealVector::Zero(3);
  RealVector g(3);
  g << 3.0, -0.2, 1e-3;
  adam_step(cfg, state, theta, g);
  for (Index i = 0; i < 3; ++i) {
    const double expected = -cfg.lr * g[i] / (std::abs(g[i]) + cfg.eps);
    CHECK(theta[i] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(state.t == 1);
}

TEST_CASE("Adam is deterministic and grows its state with theta") {
  AdamConfig cfg;
  AdamState a, b;
  RealVector ta = RealVector::Ones(2), tb = RealVector::Ones(2);
  for (int i = 0; i < 5; ++i) {
    RealVector g(2);
    g << 0.1 * i, -0.3;
    adam_step(cfg, a, ta, g);
    adam_step(cfg, b, tb, g);
  }
  CHECK(ta == tb);
  CHECK(a.m == b.m);
  ta.conservativeResize(4);
  ta.tail(2).setZero();
  adam_step(cfg, a, ta, RealVector::Ones(4));
  CHECK(a.m.size() == 4);
}

TEST_CASE("train spec validation") {
  TrainSpec s;
  s.epochs = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = TrainSpec{};
  s.adam.lr = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = TrainSpec{};
  s.lambda_n2r = -1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("one epoch performs one optimizer step per batch") {
  const MeasurementModel model = test::make_model("scalar", 4, 0.3, 1.0, 2.0, 1.6);
  Rng rng(7);
  std::vector<TrainItem> data;
  for (int t = 0; t < 8; ++t) data.push_back(make_item(model, rng));
  // Batches of equal size keep every summed gradient equal, so each Adam step moves theta by lr.
  for (Index batch : {1, 2, 4, 8}) {
    TrainSpec spec;
    spec.epochs = 1;
    spec.batch_size = batch;
    spec.adam.lr = 0.5;
    const TrainResult r = train(spec, std::make_unique<UnitGradient>(4), data, model, Rng(1));
    const double steps = static_cast<double>(8 / batch);
    CHECK(r.estimator->theta()[0] == doctest::Approx(-0.5 * steps).epsilon(1e-6));
    CHECK(r.history.size() == 1);
  }
  CHECK_THROWS_AS(train(TrainSpec{}, std::make_unique<UnitGradient>(4), {}, model, Rng(1)), ConfigError);
}

TEST_CASE("noiseless fully supervised affine fit converges to the identity") {
  const Index q = 3;
  const MeasurementModel model = test::make_model("scalar", q, 0.0, 1.0, 1.0, 1.6);
  Rng rng(8);
  std::vector<TrainItem> data;
  for (int t = 0; t < 32; ++t) data.push_back(make_item(model, rng));
  TrainSpec spec;
  spec.method = Method::fully_supervised;
  spec.epochs = 400;
  spec.batch_size = 32;
  spec.adam.lr = 0.01;
  const TrainResult r = train(spec, std::make_unique<AffinePerPattern>(q), data, model, Rng(2));
  const auto& est = dynamic_cast<const AffinePerPattern&>(*r.estimator);
  const Pattern full(static_cast<std::size_t>(q), 1);
  CHECK((est.matrix(full) - ComplexMatrix::Identity(q, q)).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(est.offset(full).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("fixed seeds give bit-identical histories") {
  const MeasurementModel model = test::make_model("banded", 6, 0.3, 1.0, 2.0, 1.6);
  Rng rng(9);
  std::vector<TrainItem> data;
  for (int t = 0; t < 20; ++t) data.push_back(make_item(model, rng));
  TrainSpec spec;
  spec.method = Method::robust_ssdu;
  spec.epochs = 3;
  spec.batch_size = 4;
  auto run = [&]() {
    Rng init(3);
    return train(spec, std::make_unique<TinyNet>(6, std::vector<Index>{8}, true, init), data, model, Rng(4),
                 [](const Estimator&) { return 0.5; });
  };
  const TrainResult a = run(), b = run();
  CHECK(history_csv(a.history) == history_csv(b.history));
  CHECK(a.estimator->theta() == b.estimator->theta());
  CHECK(history_csv(a.history).rfind("epoch,loss,val_nmse\n", 0) == 0);
  CHECK(a.history.back().val_nmse == 0.5);
}
