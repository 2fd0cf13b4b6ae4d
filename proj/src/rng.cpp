#include "ssrecon/rng.hpp"

#include <cmath>
#include <numbers>

namespace ssrecon {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> Rng::complex_normal(double sigma) {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-std::log(u1)) * sigma;  // sqrt(-2 ln u) * sigma / sqrt(2)
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

Rng Rng::substream(std::string_view name, std::uint64_t index) const {
  const std::uint64_t tag = splitmix64(fnv1a(name) + index * 0xD1B54A32D192ED03ULL);
  return Rng(splitmix64(key_ ^ tag) ^ 0x632BE59BD9B4E019ULL);
}

Rng Rng::substream(std::string_view name, std::uint64_t i, std::uint64_t j) const {
  return substream(name, i).substream("#", j);
}

}  // namespace ssrecon
