#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "pndkit/error.hpp"

namespace pndkit {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Engine for one (seed, stream) pair. Streams are independent and the same
/// pair always yields the same sequence, so parallel work can be keyed by
/// stream id instead of sharing an engine.
inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)), static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                    static_cast<std::uint32_t>(splitmix64(stream ^ 0xd1b54a32d192ed03ULL)),
                    static_cast<std::uint32_t>(splitmix64(stream ^ 0xd1b54a32d192ed03ULL) >> 32)};
  return std::mt19937_64(seq);
}

/// Multinomial draw by the conditional binomial chain; cost is linear in the
/// number of categories regardless of n.
template <class Engine>
Eigen::VectorXd multinomial(const Eigen::VectorXd& probs, double n, Engine& eng) {
  require(n >= 0.0 && n <= 9e18 && std::floor(n) == n, "multinomial: n must be a nonnegative integer");
  require((probs.array() >= 0.0).all() && probs.allFinite(), "multinomial: probabilities must be nonnegative");
  const double total = probs.sum();
  require(std::abs(total - 1.0) <= 1e-9, "multinomial: probabilities must sum to 1");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(probs.size());
  auto remaining = static_cast<long long>(n);
  double mass = total;
  for (Eigen::Index k = 0; k < probs.size() && remaining > 0; ++k) {
    if (k == probs.size() - 1) {
      out(k) = static_cast<double>(remaining);
      break;
    }
    const double p = mass > 0.0 ? std::clamp(probs(k) / mass, 0.0, 1.0) : 0.0;
    long long draw = 0;
    if (p >= 1.0) {
      draw = remaining;
    } else if (p > 0.0) {
      std::binomial_distribution<long long> bin(remaining, p);
      draw = bin(eng);
    }
    out(k) = static_cast<double>(draw);
    remaining -= draw;
    mass -= probs(k);
  }
  return out;
}

}  // namespace pndkit
