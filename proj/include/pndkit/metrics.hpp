#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pndkit/detection.hpp"
#include "pndkit/error.hpp"
#include "pndkit/estimator.hpp"
#include "pndkit/parallel.hpp"
#include "pndkit/pnd.hpp"
#include "pndkit/rng.hpp"

namespace pndkit {

struct MetricConfig {
  /// Guard against log of zero cells.
  double alpha = 1e-15;
};

/// Root mean squared log10 ratio over all cells, sqrt(mean (log10((P+a)/(O+a)))^2).
inline double rmsle(const Eigen::MatrixXd& p, const Eigen::MatrixXd& o, MetricConfig cfg = {}) {
  require(p.rows() == o.rows() && p.cols() == o.cols(), "rmsle: shape mismatch");
  require(cfg.alpha > 0.0, "rmsle: alpha must be positive");
  const Eigen::ArrayXXd r = ((p.array() + cfg.alpha) / (o.array() + cfg.alpha)).log10();
  return std::sqrt(r.square().mean());
}

inline double rmsle(const PndMatrix& p, const PndMatrix& o, MetricConfig cfg = {}) {
  return rmsle(p.matrix(), o.matrix(), cfg);
}

/// Classical fidelity sum sqrt(P O).
inline double fidelity(const PndMatrix& p, const PndMatrix& o) {
  require_normalized(p, "fidelity");
  require_normalized(o, "fidelity");
  require(p.n_max() == o.n_max(), "fidelity: shape mismatch");
  return std::min(1.0, (p.matrix().array() * o.matrix().array()).sqrt().sum());
}

/// Multinomial redraws of `sample_size` trials from the empirical outcome
/// frequencies f / n_m of one record.
inline std::vector<CountRecord> bootstrap(const CountRecord& rec, int n_boot, double sample_size, std::uint64_t seed,
                                          std::uint64_t stream_offset = 0) {
  require(sample_size > 0.0, "bootstrap: sample size must be positive");
  require(n_boot >= 0, "bootstrap: n_boot must be nonnegative");
  require(rec.f.sum() > 0.0, "bootstrap: record has no counts");
  const Eigen::VectorXd probs = rec.flat() / rec.flat().sum();
  std::vector<CountRecord> out;
  out.reserve(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) {
    auto eng = make_engine(seed, stream_offset + static_cast<std::uint64_t>(b));
    const Eigen::VectorXd draw = multinomial(probs, std::round(sample_size), eng);
    CountRecord r;
    r.nu = rec.nu;
    r.n_m = std::round(sample_size);
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 4; ++c) r.f(a, c) = draw(4 * a + c);
    out.push_back(r);
  }
  return out;
}

/// Bootstrap datasets: sample b redraws every record of the dataset.
inline std::vector<std::vector<CountRecord>> bootstrap(std::span<const CountRecord> records, int n_boot,
                                                       double sample_size, std::uint64_t seed) {
  require(!records.empty(), "bootstrap: no records");
  std::vector<std::vector<CountRecord>> out(static_cast<std::size_t>(std::max(n_boot, 0)));
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto draws = bootstrap(records[r], n_boot, sample_size, seed, r * 0x100000000ULL);
    for (std::size_t b = 0; b < draws.size(); ++b) out[b].push_back(draws[b]);
  }
  return out;
}

using Characteristics = std::vector<std::pair<std::string, double>>;
using Pipeline = std::function<Characteristics(const std::vector<CountRecord>&)>;

struct SummaryRow {
  std::string characteristic;
  double sample_size = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  int n_fail = 0;
};

/// Linear-interpolation quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Runs the pipeline on every bootstrap dataset and summarizes each
/// characteristic. A thrown pipeline counts as a failure for every
/// characteristic; a non-finite value counts against that characteristic.
inline std::vector<SummaryRow> bootstrap_stats(const std::vector<std::vector<CountRecord>>& samples,
                                               const Pipeline& pipeline, double sample_size, unsigned threads = 0) {
  struct Outcome {
    std::optional<Characteristics> values;
    std::string error;
  };
  const auto outcomes = parallel_map<Outcome>(
      samples.size(),
      [&](std::size_t k) {
        try {
          return Outcome{pipeline(samples[k]), {}};
        } catch (const std::exception& e) {
          return Outcome{std::nullopt, e.what()};
        }
      },
      threads);

  std::vector<std::string> names;
  std::string first_error;
  for (const auto& o : outcomes) {
    if (o.values && names.empty()) {
      for (const auto& [name, v] : *o.values) names.push_back(name);
    }
    if (!o.values && first_error.empty()) first_error = o.error;
  }
  if (names.empty()) {
    throw std::runtime_error("bootstrap_stats: all " + std::to_string(samples.size()) +
                             " samples failed; first error: " + first_error);
  }

  std::vector<SummaryRow> rows;
  for (const auto& name : names) {
    std::vector<double> vals;
    int fails = 0;
    for (const auto& o : outcomes) {
      if (!o.values) {
        ++fails;
        continue;
      }
      auto it = std::find_if(o.values->begin(), o.values->end(), [&](const auto& kv) { return kv.first == name; });
      if (it == o.values->end() || !std::isfinite(it->second)) {
        ++fails;
        continue;
      }
      vals.push_back(it->second);
    }
    SummaryRow row;
    row.characteristic = name;
    row.sample_size = sample_size;
    row.n_fail = fails;
    const double n = static_cast<double>(vals.size());
    if (vals.empty()) {
      row.mean = row.std = row.q05 = row.q50 = row.q95 = std::numeric_limits<double>::quiet_NaN();
    } else {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= n;
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      row.mean = mean;
      row.std = vals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      std::sort(vals.begin(), vals.end());
      row.q05 = quantile_sorted(vals, 0.05);
      row.q50 = quantile_sorted(vals, 0.50);
      row.q95 = quantile_sorted(vals, 0.95);
    }
    rows.push_back(row);
  }
  return rows;
}

/// Characteristics of a PND; undefined ones are reported as NaN.
inline Characteristics characteristic_list(const PndMatrix& p) {
  auto guarded = [&](auto&& f) {
    try {
      return static_cast<double>(f());
    } catch (const UndefinedCharacteristic&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double eta_s = nan, eta_i = nan;
  try {
    const auto eta = heralding_bounds(p);
    eta_s = eta.eta_s;
    eta_i = eta.eta_i;
  } catch (const UndefinedCharacteristic&) {
  }
  return {
      {"p_g", pair_gen_prob(p)},
      {"eta_H_s", eta_s},
      {"eta_H_i", eta_i},
      {"g2_s", guarded([&] { return g2_marginal(marginal(p, Mode::signal)); })},
      {"g2_i", guarded([&] { return g2_marginal(marginal(p, Mode::idler)); })},
      {"gh2_s", guarded([&] { return gh2(p, Mode::signal); })},
      {"gh2_i", guarded([&] { return gh2(p, Mode::idler); })},
  };
}

/// Standard bootstrap pipeline: ML reconstruction, then RMSLE against
/// `reference` followed by the characteristic list.
inline Pipeline estimate_pipeline(BipartiteSetup setup, EstimateOptions options, PndMatrix reference) {
  return [setup = std::move(setup), options, reference = std::move(reference)](const std::vector<CountRecord>& recs) {
    const EstimateResult est = ml_estimate(recs, setup, options);
    if (!est.converged) throw std::runtime_error("estimate did not converge");
    const PndMatrix p = est.pnd();
    Characteristics out{{"rmsle", rmsle(reference, p)}};
    for (auto& kv : characteristic_list(p)) out.push_back(std::move(kv));
    return out;
  };
}

}  // namespace pndkit
