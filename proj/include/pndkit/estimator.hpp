#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "pndkit/detection.hpp"
#include "pndkit/error.hpp"
#include "pndkit/pnd.hpp"
#include "pndkit/rng.hpp"

namespace pndkit {

/// One measurement setting of a linear outcome model: outcome probabilities
/// are response * p, where p lists the unknown photon-number cells.
struct OutcomeSetting {
  Eigen::MatrixXd response;
  /// Outcomes kept by the extended-likelihood baseline (no mode with every detector clicking).
  std::vector<Eigen::Index> eml_outcomes;
};

/// Known measurement model for every setting nu, sharing the same unknown cells.
struct LikelihoodModel {
  std::vector<OutcomeSetting> settings;

  Eigen::Index cells() const { return settings.empty() ? 0 : settings.front().response.cols(); }

  void validate() const {
    require(!settings.empty(), "likelihood model has no settings");
    for (const auto& s : settings) {
      require(s.response.cols() == cells(), "settings disagree on the number of cells");
      require(s.response.allFinite() && (s.response.array() >= 0.0).all(), "response must be nonnegative");
    }
  }
};

/// Counts for each setting of a LikelihoodModel, same order.
using Dataset = std::vector<Eigen::VectorXd>;

/// Detection chain for a two-mode source with beam splitters in both arms.
/// Setting nu uses attenuators gammas[nu] = (gamma_s, gamma_i).
struct BipartiteSetup {
  DetectorPair s;
  DetectorPair i;
  std::vector<std::array<double, 2>> gammas{{1.0, 1.0}};
  int n_max = 2;

  void validate() const {
    s.validate();
    i.validate();
    require(!gammas.empty(), "bipartite setup needs at least one attenuator setting");
    for (const auto& g : gammas) {
      require(g[0] >= 0.0 && g[0] <= 1.0 && g[1] >= 0.0 && g[1] <= 1.0, "attenuator transmittance outside [0, 1]");
    }
  }

  std::pair<DetectorPair, DetectorPair> detectors(int nu) const {
    const auto& g = gammas.at(static_cast<std::size_t>(nu));
    return {s.attenuated(g[0] * s.gamma), i.attenuated(g[1] * i.gamma)};
  }
};

/// Single-mode measurement with one detector or a beam splitter and two.
enum class SingleLayout { one_detector, two_detectors };

struct SinglePartiteSetup {
  DetectorPair det;
  SingleLayout layout = SingleLayout::two_detectors;
  std::vector<double> gammas{1.0};
  int n_max = 2;

  Eigen::Index outcomes() const { return layout == SingleLayout::one_detector ? 2 : 4; }
};

/// Flattened response: row 4a+b (signal outcome a, idler outcome b), column (n_max+1)j+k.
inline Eigen::MatrixXd bipartite_response(const DetectorPair& det_s, const DetectorPair& det_i, int n_max = 2) {
  const Eigen::MatrixXd ws = mode_response(det_s, n_max);
  const Eigen::MatrixXd wi = mode_response(det_i, n_max);
  const int n = n_max + 1;
  Eigen::MatrixXd a(16, n * n);
  for (int oa = 0; oa < 4; ++oa)
    for (int ob = 0; ob < 4; ++ob)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) a(4 * oa + ob, n * j + k) = ws(oa, j) * wi(ob, k);
  return a;
}

inline LikelihoodModel make_model(const BipartiteSetup& setup) {
  setup.validate();
  std::vector<Eigen::Index> eml;
  for (int oa = 0; oa < 4; ++oa)
    for (int ob = 0; ob < 4; ++ob)
      if (oa != kBoth && ob != kBoth) eml.push_back(4 * oa + ob);
  LikelihoodModel model;
  for (std::size_t nu = 0; nu < setup.gammas.size(); ++nu) {
    const auto [ds, di] = setup.detectors(static_cast<int>(nu));
    model.settings.push_back({bipartite_response(ds, di, setup.n_max), eml});
  }
  return model;
}

inline Eigen::MatrixXd single_response(const DetectorPair& det, SingleLayout layout, int n_max = 2) {
  const Eigen::MatrixXd w = mode_response(det, n_max);
  if (layout == SingleLayout::two_detectors) return w;
  Eigen::MatrixXd out(2, w.cols());
  out.row(0) = w.row(kNone) + w.row(kROnly);
  out.row(1) = w.row(kTOnly) + w.row(kBoth);
  return out;
}

inline LikelihoodModel make_model(const SinglePartiteSetup& setup) {
  require(!setup.gammas.empty(), "single-partite setup needs at least one attenuator setting");
  if (setup.layout == SingleLayout::one_detector) {
    require(setup.det.T == 1.0 && setup.det.eta_r == 0.0 && setup.det.d_r == 0.0,
            "one-detector layout needs T = 1, eta_r = 0, d_r = 0");
  }
  LikelihoodModel model;
  const Eigen::Index all_click = setup.outcomes() - 1;
  std::vector<Eigen::Index> eml;
  for (Eigen::Index o = 0; o < all_click; ++o) eml.push_back(o);
  for (double g : setup.gammas) {
    require(g >= 0.0 && g <= 1.0, "attenuator transmittance outside [0, 1]");
    model.settings.push_back({single_response(setup.det.attenuated(g * setup.det.gamma), setup.layout, setup.n_max), eml});
  }
  return model;
}

/// Pools records by setting id (rows of the same nu add up) and flattens them.
inline Dataset pool_records(std::span<const CountRecord> records, std::size_t n_settings) {
  Dataset data(n_settings, Eigen::VectorXd::Zero(16));
  for (const auto& r : records) {
    if (r.nu < 0 || static_cast<std::size_t>(r.nu) >= n_settings) {
      throw ModelMismatch("count record refers to setting " + std::to_string(r.nu) + " but the model has " +
                          std::to_string(n_settings));
    }
    data[static_cast<std::size_t>(r.nu)] += r.flat();
  }
  return data;
}

inline Eigen::VectorXd pnd_to_cells(const PndMatrix& p) {
  const int n = p.n_max() + 1;
  Eigen::VectorXd v(n * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) v(n * j + k) = p(j, k);
  return v;
}

inline PndMatrix cells_to_pnd(const Eigen::VectorXd& v) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  require(n * n == v.size(), "cell vector length is not a square");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) m(j, k) = v(n * j + k);
  return PndMatrix(m / m.sum());
}

namespace detail {

inline void check_data(const LikelihoodModel& model, const Dataset& data) {
  model.validate();
  if (data.size() != model.settings.size()) {
    throw ModelMismatch("dataset has " + std::to_string(data.size()) + " settings, model has " +
                        std::to_string(model.settings.size()));
  }
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    if (data[nu].size() != model.settings[nu].response.rows()) {
      throw ModelMismatch("setting " + std::to_string(nu) + ": expected " +
                          std::to_string(model.settings[nu].response.rows()) + " outcomes, got " +
                          std::to_string(data[nu].size()));
    }
    require(data[nu].allFinite() && (data[nu].array() >= 0.0).all(), "counts must be finite and nonnegative");
  }
}

struct Evaluation {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

enum class Objective { ml, eml };

/// Value, gradient and Hessian in the cell probabilities. Returns -inf when a
/// positive count meets a zero model probability.
inline Evaluation evaluate(Objective obj, const LikelihoodModel& model, const Dataset& data, const Eigen::VectorXd& p,
                           bool derivatives = true) {
  const Eigen::Index c = p.size();
  Evaluation ev;
  if (derivatives) {
    ev.grad = Eigen::VectorXd::Zero(c);
    ev.hess = Eigen::MatrixXd::Zero(c, c);
  }
  const double neg_inf = -std::numeric_limits<double>::infinity();

  if (obj == Objective::ml) {
    for (std::size_t nu = 0; nu < data.size(); ++nu) {
      const auto& a = model.settings[nu].response;
      const Eigen::VectorXd w = a * p;
      const auto& f = data[nu];
      for (Eigen::Index o = 0; o < f.size(); ++o) {
        if (f(o) <= 0.0) continue;
        if (w(o) <= 0.0) {
          ev.value = neg_inf;
          return ev;
        }
        ev.value += f(o) * std::log(w(o));
        if (derivatives) {
          ev.grad.noalias() += (f(o) / w(o)) * a.row(o).transpose();
          ev.hess.noalias() -= (f(o) / (w(o) * w(o))) * a.row(o).transpose() * a.row(o);
        }
      }
    }
    return ev;
  }

  // Extended likelihood: each kept outcome is renormalized over settings.
  const auto& outcomes = model.settings.front().eml_outcomes;
  for (Eigen::Index o : outcomes) {
    double total_f = 0.0;
    double s = 0.0;
    Eigen::RowVectorXd row_sum = Eigen::RowVectorXd::Zero(c);
    for (std::size_t nu = 0; nu < data.size(); ++nu) {
      const auto row = model.settings[nu].response.row(o);
      const double w = row.dot(p);
      const double f = data[nu](o);
      s += w;
      row_sum += row;
      total_f += f;
      if (f <= 0.0) continue;
      if (w <= 0.0) {
        ev.value = neg_inf;
        return ev;
      }
      ev.value += f * std::log(w);
      if (derivatives) {
        ev.grad.noalias() += (f / w) * row.transpose();
        ev.hess.noalias() -= (f / (w * w)) * row.transpose() * row;
      }
    }
    if (total_f <= 0.0) continue;
    ev.value -= total_f * std::log(s);
    if (derivatives) {
      ev.grad.noalias() -= (total_f / s) * row_sum.transpose();
      ev.hess.noalias() += (total_f / (s * s)) * row_sum.transpose() * row_sum;
    }
  }
  return ev;
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double m = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

/// Maps p-space derivatives to the free coordinates z_1..z_{C-1} of
/// p = softmax(z) with z_0 = 0.
inline void to_free_coordinates(const Eigen::VectorXd& p, const Evaluation& ev, Eigen::VectorXd& gz,
                                Eigen::MatrixXd& hz) {
  const Eigen::Index c = p.size();
  const double gbar = p.dot(ev.grad);
  Eigen::MatrixXd jac = -p * p.transpose();
  jac.diagonal() += p;
  const Eigen::VectorXd full_g = jac.transpose() * ev.grad;
  Eigen::MatrixXd full_h = jac.transpose() * ev.hess * jac;
  for (Eigen::Index a = 0; a < c; ++a) {
    full_h(a, a) += p(a) * (ev.grad(a) - gbar);
    for (Eigen::Index b = 0; b < c; ++b) full_h(a, b) -= p(a) * p(b) * (ev.grad(a) + ev.grad(b) - 2.0 * gbar);
  }
  gz = full_g.tail(c - 1);
  hz = full_h.bottomRightCorner(c - 1, c - 1);
}

}  // namespace detail

/// Total log-likelihood sum_nu sum_o f log W with 0 log 0 = 0.
inline double log_likelihood(const Eigen::VectorXd& cells, const LikelihoodModel& model, const Dataset& data) {
  detail::check_data(model, data);
  require(cells.size() == model.cells(), "log_likelihood: cell count does not match the model");
  const double v = detail::evaluate(detail::Objective::ml, model, data, cells, false).value;
  if (std::isinf(v)) throw InfeasibleData("log_likelihood: counts observed on an outcome of zero probability");
  return v;
}

inline double log_likelihood(const PndMatrix& p, std::span<const CountRecord> records, const BipartiteSetup& setup) {
  const auto model = make_model(setup);
  return log_likelihood(pnd_to_cells(p), model, pool_records(records, setup.gammas.size()));
}

struct EstimateOptions {
  int max_iter = 10000;
  int restarts = 4;
  std::uint64_t seed = 1;
  double rel_tol = 1e-12;
  double step_tol = 1e-10;
  double max_step = 10.0;
  double floor = 1e-15;
};

struct StartResult {
  Eigen::VectorXd p;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct EstimateResult {
  Eigen::VectorXd p;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<StartResult> starts;

  PndMatrix pnd() const { return cells_to_pnd(p); }
};

/// Weighted least-squares inversion of the linear outcome model, floored and
/// renormalized; used as the first starting point.
inline Eigen::VectorXd linear_inversion(const LikelihoodModel& model, const Dataset& data, bool eml_only,
                                        double floor = 1e-15) {
  const Eigen::Index c = model.cells();
  std::vector<std::pair<Eigen::RowVectorXd, double>> rows;
  for (std::size_t nu = 0; nu < data.size(); ++nu) {
    const auto& a = model.settings[nu].response;
    const auto& f = data[nu];
    const double n = f.sum();
    if (n <= 0.0) continue;
    auto add = [&](Eigen::Index o) {
      const double fh = f(o) / n;
      const double w = std::sqrt(1.0 / std::max(fh, 1.0 / n));
      rows.emplace_back(w * a.row(o), w * fh);
    };
    if (eml_only) {
      for (Eigen::Index o : model.settings[nu].eml_outcomes) add(o);
    } else {
      for (Eigen::Index o = 0; o < f.size(); ++o) add(o);
    }
  }
  Eigen::MatrixXd lhs(static_cast<Eigen::Index>(rows.size()) + 1, c);
  Eigen::VectorXd rhs(lhs.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    lhs.row(static_cast<Eigen::Index>(r)) = rows[r].first;
    rhs(static_cast<Eigen::Index>(r)) = rows[r].second;
  }
  const double norm_weight = 1e6;
  lhs.row(lhs.rows() - 1).setConstant(norm_weight);
  rhs(rhs.size() - 1) = norm_weight;
  Eigen::VectorXd p = lhs.colPivHouseholderQr().solve(rhs);
  if (!p.allFinite()) p = Eigen::VectorXd::Constant(c, 1.0 / static_cast<double>(c));
  p = p.cwiseMax(floor);
  return p / p.sum();
}

namespace detail {

inline StartResult ascend(Objective obj, const LikelihoodModel& model, const Dataset& data, Eigen::VectorXd z,
                          const EstimateOptions& opt) {
  const Eigen::Index free = z.size() - 1;
  StartResult res;
  Eigen::VectorXd p = softmax(z);
  Evaluation ev = evaluate(obj, model, data, p);
  if (!std::isfinite(ev.value)) {
    res.p = p;
    res.loglik = ev.value;
    return res;
  }
  double lambda = 0.0;
  Eigen::VectorXd gz;
  Eigen::MatrixXd hz;
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.iterations = it;
    to_free_coordinates(p, ev, gz, hz);
    const Eigen::MatrixXd neg_h = -hz;
    const Eigen::VectorXd scale = neg_h.diagonal().cwiseAbs().cwiseMax(1e-300);
    const double value_scale = std::max(1.0, std::abs(ev.value));

    // Newton decrement with the undamped curvature, when it is usable.
    Eigen::LDLT<Eigen::MatrixXd> plain(neg_h);
    if (plain.info() == Eigen::Success && plain.isPositive()) {
      const Eigen::VectorXd nstep = plain.solve(gz);
      const double decrement = gz.dot(nstep);
      if (nstep.allFinite() && decrement >= 0.0 && decrement < 2.0 * opt.rel_tol * value_scale) {
        res.converged = true;
        break;
      }
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      Eigen::MatrixXd m = neg_h;
      m.diagonal() += lambda * scale;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
      Eigen::VectorXd step;
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(gz);
      if (step.size() != free || !step.allFinite() || gz.dot(step) <= 0.0) {
        lambda = std::max(1e-6, lambda * 10.0);
        continue;
      }
      const double big = step.cwiseAbs().maxCoeff();
      if (big > opt.max_step) step *= opt.max_step / big;
      Eigen::VectorXd z_new = z;
      z_new.tail(free) += step;
      const Eigen::VectorXd p_new = softmax(z_new);
      Evaluation ev_new = evaluate(obj, model, data, p_new);
      if (std::isfinite(ev_new.value) && ev_new.value >= ev.value) {
        const double change = (ev_new.value - ev.value) / value_scale;
        const double step_size = step.cwiseAbs().maxCoeff();
        z = z_new;
        p = p_new;
        ev = std::move(ev_new);
        lambda = lambda > 1e-6 ? lambda / 10.0 : 0.0;
        accepted = true;
        if (change < opt.rel_tol && step_size < opt.step_tol) res.converged = true;
        break;
      }
      lambda = std::max(1e-6, lambda * 10.0);
    }
    if (res.converged) break;
    if (!accepted) {
      // No ascent direction improves within rounding: stationary if the gradient is negligible.
      const double g_scale = std::sqrt(gz.dot(gz.cwiseQuotient(scale)));
      res.converged = g_scale * g_scale < 1e-8 * value_scale;
      break;
    }
  }
  res.p = p;
  res.loglik = ev.value;
  return res;
}

inline EstimateResult estimate(Objective obj, const LikelihoodModel& model, const Dataset& data,
                               const EstimateOptions& opt) {
  check_data(model, data);
  const Eigen::Index c = model.cells();
  require(c >= 2, "estimator needs at least two cells");
  double total = 0.0;
  for (const auto& f : data) total += f.sum();
  require(total > 0.0, "estimator: no counts");

  const Eigen::VectorXd p0 = linear_inversion(model, data, obj == Objective::eml, opt.floor);
  const Eigen::VectorXd z0 = (p0.array() / p0(0)).log().matrix();

  EstimateResult out;
  for (int s = 0; s <= opt.restarts; ++s) {
    Eigen::VectorXd z = z0;
    if (s > 0) {
      auto eng = make_engine(opt.seed, static_cast<std::uint64_t>(s));
      std::normal_distribution<double> jitter(0.0, 1.0);
      for (Eigen::Index k = 1; k < c; ++k) z(k) += jitter(eng);
    }
    StartResult r = ascend(obj, model, data, z, opt);
    const bool better = std::isfinite(r.loglik) &&
                        (!std::isfinite(out.loglik) || r.loglik > out.loglik || (r.converged && !out.converged &&
                                                                                  r.loglik >= out.loglik - 1e-9));
    if (better || out.p.size() == 0) {
      out.p = r.p;
      out.loglik = r.loglik;
      out.iterations = r.iterations;
      out.converged = r.converged;
    }
    out.starts.push_back(std::move(r));
  }
  if (!std::isfinite(out.loglik)) {
    throw InfeasibleData("estimator: counts observed on outcomes the model forbids");
  }
  return out;
}

}  // namespace detail

/// Full-information maximum likelihood over every outcome of every setting.
inline EstimateResult ml_estimate(const LikelihoodModel& model, const Dataset& data, const EstimateOptions& opt = {}) {
  return detail::estimate(detail::Objective::ml, model, data, opt);
}

/// Extended-likelihood baseline: drops outcomes where every detector of a mode
/// clicks and renormalizes each kept outcome over the attenuator settings.
inline EstimateResult eml_estimate(const LikelihoodModel& model, const Dataset& data, const EstimateOptions& opt = {}) {
  require(model.settings.size() >= 2, "extended likelihood needs at least two attenuator settings");
  return detail::estimate(detail::Objective::eml, model, data, opt);
}

inline EstimateResult ml_estimate(std::span<const CountRecord> records, const BipartiteSetup& setup,
                                  const EstimateOptions& opt = {}) {
  return ml_estimate(make_model(setup), pool_records(records, setup.gammas.size()), opt);
}

inline EstimateResult eml_estimate(std::span<const CountRecord> records, const BipartiteSetup& setup,
                                   const EstimateOptions& opt = {}) {
  return eml_estimate(make_model(setup), pool_records(records, setup.gammas.size()), opt);
}

inline CharacteristicSet characterize(const EstimateResult& result) {
  require(result.converged, "characterize: estimate did not converge");
  return characterize(result.pnd());
}

// Count-based estimators. Rates are per trial (counts divided by n_m).

/// C_tr / (S_t S_r) for one mode from its four outcome frequencies.
inline double count_based_g2(const Eigen::Vector4d& f, double n_m) {
  require(n_m > 0.0, "count_based_g2: n_m must be positive");
  const double s_t = (f(kTOnly) + f(kBoth)) / n_m;
  const double s_r = (f(kROnly) + f(kBoth)) / n_m;
  const double c = f(kBoth) / n_m;
  if (s_t <= 0.0 || s_r <= 0.0) throw UndefinedCharacteristic("count_based_g2: zero singles");
  return c / (s_t * s_r);
}

inline double count_based_g2(const CountRecord& rec, Mode mode) {
  return count_based_g2(mode_marginal(rec.f, mode), rec.n_m);
}

/// C_tri S_i / (C_ti C_ri): heralded mode split by its beam splitter, heralding
/// mode reduced to "any of its detectors clicked".
inline double count_based_gh2(const CountRecord& rec, Mode heralded) {
  const Eigen::Matrix4d f = heralded == Mode::signal ? rec.f : Eigen::Matrix4d(rec.f.transpose());
  const double n = rec.n_m;
  require(n > 0.0, "count_based_gh2: n_m must be positive");
  double c_tri = 0.0, c_ti = 0.0, c_ri = 0.0, s_i = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 1; b < 4; ++b) {
      s_i += f(a, b);
      if (t_clicked(a)) c_ti += f(a, b);
      if (r_clicked(a)) c_ri += f(a, b);
      if (a == kBoth) c_tri += f(a, b);
    }
  if (c_ti <= 0.0 || c_ri <= 0.0) throw UndefinedCharacteristic("count_based_gh2: zero heralded coincidences");
  return (c_tri / n) * (s_i / n) / ((c_ti / n) * (c_ri / n));
}

struct CountBasedPgEta {
  double p_g = 0.0;
  double eta_H_s = 0.0;
  double eta_H_i = 0.0;
};

/// Efficiency-weighted coincidences between every signal/idler detector pair,
/// p_g = sum C_jk / (eta_j eta_k); eta_H,s = p_g / sum_k S_k / eta_k over the idler detectors.
/// etas = {eta_1 (s, t), eta_2 (s, r), eta_3 (i, t), eta_4 (i, r)}.
inline CountBasedPgEta count_based_pg_eta(const CountRecord& rec, const std::array<double, 4>& etas) {
  const double n = rec.n_m;
  require(n > 0.0, "count_based_pg_eta: n_m must be positive");
  for (double e : etas) require(e > 0.0 && e <= 1.0, "count_based_pg_eta: efficiencies must lie in (0, 1]");
  auto clicks = [](int detector, int outcome) { return detector == 0 ? t_clicked(outcome) : r_clicked(outcome); };
  double pg = 0.0;
  std::array<double, 4> singles{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double v = rec.f(a, b) / n;
      for (int js = 0; js < 2; ++js) {
        if (clicks(js, a)) singles[static_cast<std::size_t>(js)] += v;
        for (int ki = 0; ki < 2; ++ki)
          if (clicks(js, a) && clicks(ki, b)) pg += v / (etas[static_cast<std::size_t>(js)] * etas[static_cast<std::size_t>(2 + ki)]);
      }
      for (int ki = 0; ki < 2; ++ki)
        if (clicks(ki, b)) singles[static_cast<std::size_t>(2 + ki)] += v;
    }
  const double idler = singles[2] / etas[2] + singles[3] / etas[3];
  const double signal = singles[0] / etas[0] + singles[1] / etas[1];
  if (pg <= 0.0 || idler <= 0.0 || signal <= 0.0) throw UndefinedCharacteristic("count_based_pg_eta: no coincidences");
  return {pg, pg / idler, pg / signal};
}

}  // namespace pndkit
