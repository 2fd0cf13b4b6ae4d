#pragma once

// k-space NMSE and mean SSIM of magnitude images.

#include <optional>

#include "ssrecon/kspace.hpp"

namespace ssrecon {

/// ||estimate - reference||^2 / ||reference||^2. Throws ValidationError for
/// a zero reference.
double nmse(const ComplexVector& estimate, const ComplexVector& reference);

struct SsimParams {
  Index window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean SSIM over all valid window positions (uniform window x window in
/// 2D, length window in 1D; shrunk to the image extent when smaller).
/// data_range defaults to the larger maximum of the two images.
double ssim(const RealVector& a, const RealVector& b, GridShape shape, std::optional<double> data_range = std::nullopt,
            const SsimParams& params = {});
double ssim(const RealVector& a, const RealVector& b, std::optional<double> data_range = std::nullopt);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
/// Sample mean and its standard error (0 for fewer than two values).
MeanSe mean_se(const std::vector<double>& values);

}  // namespace ssrecon
