#include "ssrecon/fit.hpp"

#include "ssrecon/errors.hpp"

namespace ssrecon {

bool input_on_omega(Method m) {
  return !(m == Method::standard_ssdu || is_robust_ssdu(m) || m == Method::noise2recon_ss);
}

namespace {

enum class Target { none, y0, y0_plus_n };

struct State {
  double prob;    // P(state | s_j)
  double weight;  // w_j^2
  Target target;
};

// Mask states of index j given its input membership s_j.
std::vector<State> states(Method method, bool s_j, double p, double pt, double alpha, double P) {
  const double c = (1.0 + alpha * alpha) / (alpha * alpha);
  switch (method) {
    case Method::fully_supervised: return {{1.0, 1.0, Target::y0}};
    case Method::supervised_wo_denoising:
    case Method::noisier2full_unweighted: return {{1.0, 1.0, Target::y0_plus_n}};
    case Method::noisier2full: return {{1.0, s_j ? c * c : 1.0, Target::y0_plus_n}};
    default: break;
  }
  const bool weighted = method == Method::robust_ssdu;
  const bool robust = is_robust_ssdu(method);
  if (s_j) {
    // o = l = 1.
    if (!robust) return {{1.0, 0.0, Target::none}};
    return {{1.0, weighted ? c * c : 1.0, Target::y0_plus_n}};
  }
  const double denom = 1.0 - p * pt;
  if (!(denom > 0.0)) return {};
  const double p10 = p * (1.0 - pt) / denom;  // in omega, not in lambda
  const double weight10 = robust && weighted ? P : 1.0;
  return {{p10, weight10, Target::y0_plus_n}, {1.0 - p10, 0.0, Target::none}};
}

}  // namespace

AffineFit closed_form_affine_fit(const MeasurementModel& model, Method method, const Pattern& input_pattern) {
  if (method == Method::noise2recon_ss) {
    throw ValidationError("closed_form_affine_fit: noise2recon_ss has no per-pattern closed form");
  }
  const Index q = model.q();
  require_same_size(static_cast<Index>(input_pattern.size()), q, "closed_form_affine_fit");
  const double sigma2 = model.noise().sigma_n * model.noise().sigma_n;
  const double alpha = model.noise().alpha;
  const RealVector& p = model.p();
  const RealVector& pt = model.ptilde();
  const bool further = uses_further_noise(method);

  // Pattern feasibility under the input distribution.
  for (Index j = 0; j < q; ++j) {
    const double incl = input_on_omega(method) ? p[j] : p[j] * pt[j];
    const bool in = input_pattern[static_cast<std::size_t>(j)] != 0;
    if ((in && incl <= 0.0) || (!in && incl >= 1.0)) {
      throw ValidationError("closed_form_affine_fit: pattern has zero probability at index " + std::to_string(j));
    }
  }

  std::vector<Index> obs;
  for (Index j = 0; j < q; ++j)
    if (input_pattern[static_cast<std::size_t>(j)]) obs.push_back(j);
  const auto m = static_cast<Index>(obs.size());

  // Sigma_Z over (Y0, N, Ntilde).
  ComplexMatrix sz = ComplexMatrix::Zero(3 * q, 3 * q);
  sz.topLeftCorner(q, q) = model.prior_cov();
  sz.block(q, q, q, q).diagonal().setConstant(sigma2);
  sz.bottomRightCorner(q, q).diagonal().setConstant(further ? alpha * alpha * sigma2 : 0.0);

  // B_s: observed rows select Y0 + N (+ Ntilde).
  ComplexMatrix b = ComplexMatrix::Zero(m, 3 * q);
  for (Index r = 0; r < m; ++r) {
    b(r, obs[static_cast<std::size_t>(r)]) = 1.0;
    b(r, q + obs[static_cast<std::size_t>(r)]) = 1.0;
    if (further) b(r, 2 * q + obs[static_cast<std::size_t>(r)]) = 1.0;
  }

  AffineFit fit;
  fit.a = ComplexMatrix::Zero(q, q);
  fit.b = ComplexVector::Zero(q);
  fit.unconstrained.assign(static_cast<std::size_t>(q), false);
  if (m == 0) {
    // Only the offset can be fitted, and it is zero under a zero-mean prior.
    for (Index j = 0; j < q; ++j) {
      const auto st = states(method, false, p[j], pt[j], alpha, 1.0);
      double ew = 0.0;
      for (const auto& s : st) ew += s.prob * s.weight;
      fit.unconstrained[static_cast<std::size_t>(j)] = !(ew > 0.0);
    }
    return fit;
  }

  ComplexMatrix cxx = b * sz * b.adjoint();
  const ComplexMatrix cross = sz * b.adjoint();  // 3q x m
  Eigen::LDLT<ComplexMatrix> solver(cxx);
  const double scale = std::max(1.0, cxx.cwiseAbs().maxCoeff());
  const RealVector ldl_diag = solver.vectorD().real();
  if (solver.info() != Eigen::Success || ldl_diag.minCoeff() <= 1e-12 * scale) {
    cxx += 1e-10 * scale * ComplexMatrix::Identity(m, m);
    solver.compute(cxx);
    fit.regularized = true;
  }
  // gain = cross * cxx^{-1}, so row j of A is tbar_j * gain.
  const ComplexMatrix gain = solver.solve(cross.adjoint()).adjoint();  // 3q x m

  const RealVector P_weight = [&] {
    RealVector w = RealVector::Ones(q);
    if (method == Method::robust_ssdu) {
      for (Index j = 0; j < q; ++j) {
        const double d = p[j] * (1.0 - pt[j]);
        if (d > 0.0) w[j] = (1.0 - p[j] * pt[j]) / d;
      }
    }
    return w;
  }();

  for (Index j = 0; j < q; ++j) {
    const bool s_j = input_pattern[static_cast<std::size_t>(j)] != 0;
    const auto st = states(method, s_j, p[j], pt[j], alpha, P_weight[j]);
    double ew = 0.0;
    Eigen::RowVectorXcd tbar = Eigen::RowVectorXcd::Zero(3 * q);
    for (const auto& s : st) {
      if (s.target == Target::none || s.weight == 0.0) continue;
      const double w = s.prob * s.weight;
      ew += w;
      tbar(j) += w;
      if (s.target == Target::y0_plus_n) tbar(q + j) += w;
    }
    if (!(ew > 0.0)) {
      fit.unconstrained[static_cast<std::size_t>(j)] = true;
      continue;
    }
    tbar /= ew;
    const Eigen::RowVectorXcd row = tbar * gain;  // 1 x m
    for (Index r = 0; r < m; ++r) fit.a(j, obs[static_cast<std::size_t>(r)]) = row(r);
  }
  return fit;
}

void enroll_fits(AffinePerPattern& est, const MeasurementModel& model, Method method,
                 const std::vector<Pattern>& patterns) {
  for (const auto& s : patterns) {
    const AffineFit fit = closed_form_affine_fit(model, method, s);
    est.enroll(s, fit.a, fit.b);
  }
}

}  // namespace ssrecon
