#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pndkit/detection.hpp"
#include "pndkit/error.hpp"
#include "pndkit/estimator.hpp"
#include "pndkit/metrics.hpp"
#include "pndkit/parallel.hpp"
#include "pndkit/pnd.hpp"
#include "pndkit/rng.hpp"

namespace pndkit {

/// Multinomial counts for one setting; total is exactly n_m.
template <class Engine>
CountRecord sample_counts(const Eigen::Matrix4d& w, double n_m, Engine& eng, int nu = 0) {
  Eigen::VectorXd probs(16);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) probs(4 * a + b) = w(a, b);
  const Eigen::VectorXd draw = multinomial(probs, n_m, eng);
  CountRecord r;
  r.nu = nu;
  r.n_m = n_m;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) r.f(a, b) = draw(4 * a + b);
  return r;
}

inline CountRecord sample_counts(const Eigen::Matrix4d& w, double n_m, std::uint64_t seed, std::uint64_t stream = 0,
                                 int nu = 0) {
  auto eng = make_engine(seed, stream);
  return sample_counts(w, n_m, eng, nu);
}

/// Random pair-source PND: first-order cells p_g r, second-order cells p_g^2 r,
/// r ~ U[0.5, 1.5] drawn per cell, vacuum by normalization.
template <class Engine>
PndMatrix random_pps_pnd(double p_g, Engine& eng) {
  require(p_g > 0.0 && p_g <= 0.1, "random_pps_pnd: p_g must lie in (0, 0.1]");
  std::uniform_real_distribution<double> r(0.5, 1.5);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      const int order = std::max(j, k);
      if (order == 1) p(j, k) = p_g * r(eng);
      if (order == 2) p(j, k) = p_g * p_g * r(eng);
    }
  p(0, 0) = 1.0 - p.sum();
  require(p(0, 0) >= 0.0, "random_pps_pnd: p_g too large to normalize");
  return PndMatrix(std::move(p));
}

inline PndMatrix random_pps_pnd(double p_g, std::uint64_t seed) {
  auto eng = make_engine(seed);
  return random_pps_pnd(p_g, eng);
}

/// Normalized (1, p_g, p_g^2 g2 / 2) with g2 ~ U[1, 2].
template <class Engine>
ProbVector random_single_pnd(double p_g, Engine& eng) {
  require(p_g > 0.0 && p_g <= 0.5, "random_single_pnd: p_g must lie in (0, 0.5]");
  std::uniform_real_distribution<double> g2(1.0, 2.0);
  ProbVector v(3);
  v << 1.0, p_g, p_g * p_g * g2(eng) / 2.0;
  return v / v.sum();
}

inline ProbVector random_single_pnd(double p_g, std::uint64_t seed) {
  auto eng = make_engine(seed);
  return random_single_pnd(p_g, eng);
}

enum class SweepLayout { one_d, two_d, two_by_two_d };
enum class SweepMethod { ml, eml };

inline const char* to_string(SweepLayout l) {
  switch (l) {
    case SweepLayout::one_d: return "1d";
    case SweepLayout::two_d: return "2d";
    case SweepLayout::two_by_two_d: return "2x2d";
  }
  return "?";
}

struct SweepSpec {
  std::vector<double> p_g{1e-3};
  std::vector<double> n_m{1e8};
  std::vector<double> eta{0.5};
  std::vector<double> d{0.0};
  /// Lowest attenuator transmittance; 1 means no attenuators.
  std::vector<double> gamma{1.0};
  int reps = 100;
  SweepLayout layout = SweepLayout::two_by_two_d;
  SweepMethod method = SweepMethod::ml;
  int attenuator_levels = 10;
  bool expected_counts = false;
  double T = 0.5;
  std::uint64_t seed = 1;
  EstimateOptions estimate;
  unsigned threads = 0;

  void validate() const {
    require(!p_g.empty() && !n_m.empty() && !eta.empty() && !d.empty() && !gamma.empty(), "sweep grids must be nonempty");
    require(reps >= 1, "sweep reps must be positive");
    require(attenuator_levels >= 2, "sweep needs at least two attenuator levels");
    for (double v : n_m) require(v >= 1.0, "sweep n_m must be at least 1");
    for (double v : gamma) require(v > 0.0 && v <= 1.0, "sweep gamma must lie in (0, 1]");
  }

  std::size_t cells() const { return p_g.size() * n_m.size() * eta.size() * d.size() * gamma.size(); }
};

struct SweepCell {
  std::size_t id = 0;
  double p_g = 0.0;
  double n_m = 0.0;
  double eta = 0.0;
  double d = 0.0;
  double gamma = 1.0;
};

struct SweepRow {
  SweepCell cell;
  int rep = 0;
  double rmsle = std::numeric_limits<double>::quiet_NaN();
  /// p_g, eta_H_s, eta_H_i, g2_s, g2_i, gh2_s, gh2_i; NaN when undefined or not applicable.
  std::array<double, 7> hat;
  bool converged = false;

  SweepRow() { hat.fill(std::numeric_limits<double>::quiet_NaN()); }
};

inline SweepCell sweep_cell(const SweepSpec& spec, std::size_t id) {
  std::size_t r = id;
  SweepCell c;
  c.id = id;
  c.gamma = spec.gamma[r % spec.gamma.size()];
  r /= spec.gamma.size();
  c.d = spec.d[r % spec.d.size()];
  r /= spec.d.size();
  c.eta = spec.eta[r % spec.eta.size()];
  r /= spec.eta.size();
  c.n_m = spec.n_m[r % spec.n_m.size()];
  r /= spec.n_m.size();
  c.p_g = spec.p_g[r];
  return c;
}

/// Attenuator levels gamma, ..., 1 evenly spaced; a single level when gamma = 1.
inline std::vector<double> attenuator_design(double gamma, int levels) {
  if (gamma >= 1.0) return {1.0};
  std::vector<double> g(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k) g[static_cast<std::size_t>(k)] = gamma + (1.0 - gamma) * k / (levels - 1);
  return g;
}

/// Attenuator pairs {gamma, 1} x {gamma, 1}; a single pair when gamma = 1.
inline std::vector<std::array<double, 2>> bipartite_attenuator_design(double gamma) {
  if (gamma >= 1.0) return {{1.0, 1.0}};
  return {{gamma, gamma}, {gamma, 1.0}, {1.0, gamma}, {1.0, 1.0}};
}

namespace detail {

template <class Engine>
Eigen::VectorXd draw_or_expect(const Eigen::VectorXd& w, double n_m, bool expected, Engine& eng) {
  if (expected) return n_m * w;
  return multinomial(w / w.sum(), n_m, eng);
}

inline EstimateResult run_estimator(SweepMethod m, const LikelihoodModel& model, const Dataset& data,
                                    const EstimateOptions& opt) {
  return m == SweepMethod::ml ? ml_estimate(model, data, opt) : eml_estimate(model, data, opt);
}

inline SweepRow sweep_task(const SweepSpec& spec, std::size_t cell_id, int rep) {
  SweepRow row;
  row.cell = sweep_cell(spec, cell_id);
  row.rep = rep;
  const std::uint64_t stream = static_cast<std::uint64_t>(cell_id) * static_cast<std::uint64_t>(spec.reps) +
                               static_cast<std::uint64_t>(rep);
  auto eng = make_engine(spec.seed, stream);
  EstimateOptions opt = spec.estimate;
  opt.seed = splitmix64(spec.seed ^ splitmix64(stream));
  const auto& c = row.cell;
  try {
    if (spec.layout == SweepLayout::two_by_two_d) {
      const PndMatrix truth = random_pps_pnd(c.p_g, eng);
      BipartiteSetup setup;
      setup.s = {spec.T, c.eta, c.eta, c.d, c.d, 1.0};
      setup.i = setup.s;
      setup.gammas = bipartite_attenuator_design(c.gamma);
      const LikelihoodModel model = make_model(setup);
      const Eigen::VectorXd cells = pnd_to_cells(truth);
      Dataset data;
      for (const auto& s : model.settings) data.push_back(draw_or_expect(s.response * cells, c.n_m, spec.expected_counts, eng));
      const EstimateResult est = run_estimator(spec.method, model, data, opt);
      row.converged = est.converged;
      const PndMatrix p = est.pnd();
      row.rmsle = rmsle(truth, p);
      const auto list = characteristic_list(p);
      for (std::size_t k = 0; k < row.hat.size(); ++k) row.hat[k] = list[k].second;
    } else {
      const ProbVector truth = random_single_pnd(c.p_g, eng);
      SinglePartiteSetup setup;
      setup.layout = spec.layout == SweepLayout::one_d ? SingleLayout::one_detector : SingleLayout::two_detectors;
      setup.det = setup.layout == SingleLayout::one_detector ? DetectorPair::single(c.eta, c.d)
                                                             : DetectorPair{spec.T, c.eta, c.eta, c.d, c.d, 1.0};
      setup.gammas = attenuator_design(c.gamma, spec.attenuator_levels);
      const LikelihoodModel model = make_model(setup);
      Dataset data;
      for (const auto& s : model.settings) data.push_back(draw_or_expect(s.response * truth, c.n_m, spec.expected_counts, eng));
      const EstimateResult est = run_estimator(spec.method, model, data, opt);
      row.converged = est.converged;
      row.rmsle = rmsle(Eigen::MatrixXd(truth), Eigen::MatrixXd(est.p));
      row.hat[0] = est.p(1);
      try {
        row.hat[3] = g2_marginal(est.p);
      } catch (const UndefinedCharacteristic&) {
      }
    }
  } catch (const std::exception&) {
    row.converged = false;
  }
  return row;
}

}  // namespace detail

/// All (cell, repetition) tasks in cell-major order. Every task draws from its
/// own stream, so the table is identical for any thread count.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t reps = static_cast<std::size_t>(spec.reps);
  return parallel_map<SweepRow>(
      spec.cells() * reps, [&](std::size_t k) { return detail::sweep_task(spec, k / reps, static_cast<int>(k % reps)); },
      spec.threads);
}

}  // namespace pndkit
