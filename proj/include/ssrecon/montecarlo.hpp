#pragma once

// Sharded Monte Carlo moment estimation. Samples are split into a fixed
// number of shards; shard k draws from substream ("shard", k) of the base
// stream and accumulates with Welford's update; shard results merge in
// shard order. The result therefore depends only on (rng, samples, shards),
// not on the thread count, and the parallel and serial paths agree bit for
// bit.

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

#include "ssrecon/kspace.hpp"
#include "ssrecon/rng.hpp"

namespace ssrecon {

struct Moments {
  std::int64_t n = 0;
  RealVector mean;
  RealVector m2;  // sum of squared deviations

  explicit Moments(Index dim = 0) : mean(RealVector::Zero(dim)), m2(RealVector::Zero(dim)) {}

  void add(const RealVector& x) {
    ++n;
    const RealVector delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
    const RealVector delta = o.mean - mean;
    mean += delta * (nb / nt);
    m2 += o.m2 + delta.cwiseProduct(delta) * (na * nb / nt);
    n += o.n;
  }

  RealVector variance() const {
    return n > 1 ? RealVector(m2 / static_cast<double>(n - 1)) : RealVector(RealVector::Zero(mean.size()));
  }
  /// Standard error of the mean.
  RealVector se() const {
    return n > 0 ? RealVector((variance() / static_cast<double>(n)).cwiseSqrt()) : RealVector(RealVector::Zero(mean.size()));
  }
};

struct McOptions {
  std::int64_t samples = 100000;
  Index shards = 64;
  bool parallel = true;
};

/// sample(rng, out) writes one draw of a dim-length statistic into out.
template <class Sample>
Moments mc_reduce(const McOptions& opt, const Rng& rng, Index dim, Sample&& sample) {
  const Index shards = std::max<Index>(1, opt.shards);
  std::vector<Moments> parts(static_cast<std::size_t>(shards), Moments(dim));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(shards));
  auto run_shard = [&](Index k) {
    try {
      const std::int64_t lo = opt.samples * k / shards;
      const std::int64_t hi = opt.samples * (k + 1) / shards;
      Rng shard_rng = rng.substream("shard", static_cast<std::uint64_t>(k));
      RealVector x(dim);
      Moments& acc = parts[static_cast<std::size_t>(k)];
      for (std::int64_t i = lo; i < hi; ++i) {
        sample(shard_rng, x);
        acc.add(x);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  };
  if (opt.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (Index k = 0; k < shards; ++k) run_shard(k);
  } else {
    for (Index k = 0; k < shards; ++k) run_shard(k);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Moments total(dim);
  for (const auto& part : parts) total.merge(part);
  return total;
}

}  // namespace ssrecon
