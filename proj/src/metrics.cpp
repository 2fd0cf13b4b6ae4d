#include "ssrecon/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ssrecon/errors.hpp"

namespace ssrecon {

double nmse(const ComplexVector& estimate, const ComplexVector& reference) {
  require_same_size(estimate.size(), reference.size(), "nmse");
  const double denom = reference.squaredNorm();
  if (!(denom > 0.0)) throw ValidationError("nmse: reference has zero energy");
  return (estimate - reference).squaredNorm() / denom;
}

double ssim(const RealVector& a, const RealVector& b, GridShape shape, std::optional<double> data_range,
            const SsimParams& params) {
  require_same_size(a.size(), b.size(), "ssim");
  require_same_size(a.size(), shape.size(), "ssim shape");
  if (a.size() == 0) throw DimensionError("ssim: empty images");
  const double range = data_range ? *data_range : std::max(a.maxCoeff(), b.maxCoeff());
  const double c1 = (params.k1 * range) * (params.k1 * range);
  const double c2 = (params.k2 * range) * (params.k2 * range);
  const Index wr = shape.is_1d() ? 1 : std::min(params.window, shape.rows);
  const Index wc = std::min(params.window, shape.cols);
  const double n = static_cast<double>(wr * wc);
  // Unbiased local covariances, as in the usual reference implementation.
  const double cov_norm = n > 1.0 ? n / (n - 1.0) : 1.0;

  double total = 0.0;
  Index count = 0;
  for (Index r0 = 0; r0 + wr <= shape.rows; ++r0) {
    for (Index c0 = 0; c0 + wc <= shape.cols; ++c0) {
      double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (Index r = r0; r < r0 + wr; ++r) {
        for (Index c = c0; c < c0 + wc; ++c) {
          const double x = a[r * shape.cols + c], y = b[r * shape.cols + c];
          sa += x;
          sb += y;
          saa += x * x;
          sbb += y * y;
          sab += x * y;
        }
      }
      const double ma = sa / n, mb = sb / n;
      const double va = cov_norm * (saa / n - ma * ma);
      const double vb = cov_norm * (sbb / n - mb * mb);
      const double vab = cov_norm * (sab / n - ma * mb);
      const double num = (2.0 * ma * mb + c1) * (2.0 * vab + c2);
      const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      total += den > 0.0 ? num / den : 1.0;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double ssim(const RealVector& a, const RealVector& b, std::optional<double> data_range) {
  return ssim(a, b, GridShape{1, a.size()}, data_range);
}

MeanSe mean_se(const std::vector<double>& values) {
  MeanSe out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  return out;
}

}  // namespace ssrecon
