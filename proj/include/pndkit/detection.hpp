#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "pndkit/error.hpp"
#include "pndkit/pnd.hpp"

namespace pndkit {

/// Click outcome of one mode measured behind a beam splitter with detectors at
/// the transmitted (t) and reflected (r) ports. Order matches the rows of the
/// conversion matrix: no click, r only, t only, both.
enum Outcome : int { kNone = 0, kROnly = 1, kTOnly = 2, kBoth = 3 };

inline bool t_clicked(int outcome) { return outcome == kTOnly || outcome == kBoth; }
inline bool r_clicked(int outcome) { return outcome == kROnly || outcome == kBoth; }

/// Beam splitter, two on/off detectors and an optional attenuator in front.
struct DetectorPair {
  double T = 0.5;
  double eta_t = 1.0;
  double eta_r = 1.0;
  double d_t = 0.0;
  double d_r = 0.0;
  double gamma = 1.0;

  double R() const { return 1.0 - T; }

  void validate() const {
    auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    require(unit(T), "beam-splitter transmittance must lie in [0, 1]");
    require(unit(eta_t) && unit(eta_r), "detector efficiency must lie in [0, 1]");
    require(unit(d_t) && unit(d_r) && d_t < 1.0 && d_r < 1.0, "noise probability must lie in [0, 1)");
    require(unit(gamma), "attenuator transmittance must lie in [0, 1]");
  }

  /// One detector, no beam splitter: everything goes to the t port.
  static DetectorPair single(double eta, double d = 0.0, double gamma = 1.0) {
    return {1.0, eta, 0.0, d, 0.0, gamma};
  }

  DetectorPair attenuated(double g) const {
    DetectorPair out = *this;
    out.gamma = g;
    return out;
  }
};

/// 4 x (n_max+1) map from photon number to click outcome. Each of the n photons
/// independently reaches t and clicks (T eta_t), reaches r and clicks (R eta_r),
/// or is lost (a = T(1-eta_t) + R(1-eta_r)).
inline Eigen::MatrixXd conversion_matrix(double T, double eta_t, double eta_r, int n_max = 2) {
  require(T >= 0.0 && T <= 1.0 && eta_t >= 0.0 && eta_t <= 1.0 && eta_r >= 0.0 && eta_r <= 1.0,
          "conversion_matrix: parameters must lie in [0, 1]");
  const double R = 1.0 - T;
  const double a = T * (1.0 - eta_t) + R * (1.0 - eta_r);
  Eigen::MatrixXd m(4, n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double none = std::pow(a, n);
    const double r_only = std::pow(a + R * eta_r, n) - none;
    const double t_only = std::pow(a + T * eta_t, n) - none;
    m(kNone, n) = none;
    m(kROnly, n) = r_only;
    m(kTOnly, n) = t_only;
    m(kBoth, n) = std::max(0.0, 1.0 - none - r_only - t_only);
  }
  return m;
}

/// Independent noise clicks with probabilities d_t, d_r. Lower triangular, columns sum to 1.
inline Eigen::Matrix4d noise_matrix(double d_t, double d_r) {
  require(d_t >= 0.0 && d_t < 1.0 && d_r >= 0.0 && d_r < 1.0, "noise_matrix: noise probabilities must lie in [0, 1)");
  Eigen::Matrix4d n = Eigen::Matrix4d::Zero();
  n(0, 0) = (1.0 - d_t) * (1.0 - d_r);
  n(1, 0) = (1.0 - d_t) * d_r;
  n(2, 0) = d_t * (1.0 - d_r);
  n(3, 0) = d_t * d_r;
  n(1, 1) = 1.0 - d_t;
  n(3, 1) = d_t;
  n(2, 2) = 1.0 - d_r;
  n(3, 2) = d_r;
  n(3, 3) = 1.0;
  return n;
}

/// N M(T, gamma eta_t, gamma eta_r): photon number -> observed outcome for one mode.
inline Eigen::MatrixXd mode_response(const DetectorPair& det, int n_max = 2) {
  det.validate();
  return noise_matrix(det.d_t, det.d_r) *
         conversion_matrix(det.T, det.gamma * det.eta_t, det.gamma * det.eta_r, n_max);
}

inline Eigen::Vector4d single_mode_probs(const ProbVector& pv, const DetectorPair& det) {
  require(pv.size() >= 1, "single_mode_probs: empty distribution");
  require(std::abs(pv.sum() - 1.0) <= PndMatrix::kSumTolerance, "single_mode_probs: distribution is not normalized");
  return mode_response(det, static_cast<int>(pv.size()) - 1) * pv;
}

/// 4 x 4 outcome probabilities, row = signal outcome, column = idler outcome.
inline Eigen::Matrix4d bipartite_probs(const PndMatrix& p, const DetectorPair& det_s, const DetectorPair& det_i) {
  require_normalized(p, "bipartite_probs");
  const int n = p.n_max();
  return mode_response(det_s, n) * p.matrix() * mode_response(det_i, n).transpose();
}

/// Observed (or expected) outcome frequencies for one measurement setting.
/// Counts are stored as reals so that noise-corrected and expected records
/// share the type with sampled ones.
struct CountRecord {
  int nu = 0;
  double n_m = 0.0;
  Eigen::Matrix4d f = Eigen::Matrix4d::Zero();
  bool noise_corrected = false;
  bool clamped = false;

  double total() const { return f.sum(); }

  void validate(double rel_tol = 1e-9) const {
    require(std::isfinite(n_m) && n_m > 0.0, "count record: n_m must be positive");
    require(f.allFinite() && (f.array() >= 0.0).all(), "count record: counts must be finite and nonnegative");
    if (!noise_corrected) {
      require(std::abs(f.sum() - n_m) <= rel_tol * n_m + 0.5,
              "count record: counts sum to " + std::to_string(f.sum()) + " but n_m = " + std::to_string(n_m));
    }
  }

  /// Row-major flattening, index = 4 * signal_outcome + idler_outcome.
  Eigen::VectorXd flat() const {
    Eigen::VectorXd v(16);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) v(4 * a + b) = f(a, b);
    return v;
  }
};

inline CountRecord expected_record(const Eigen::Matrix4d& w, double n_m, int nu = 0) {
  CountRecord r;
  r.nu = nu;
  r.n_m = n_m;
  r.f = n_m * w;
  return r;
}

/// Removes independent noise clicks: N_s^-1 f N_i^-T, negatives set to zero.
inline CountRecord noise_correct(const CountRecord& rec, const DetectorPair& det_s, const DetectorPair& det_i) {
  const Eigen::Matrix4d ns = noise_matrix(det_s.d_t, det_s.d_r);
  const Eigen::Matrix4d ni = noise_matrix(det_i.d_t, det_i.d_r);
  CountRecord out = rec;
  out.f = ns.triangularView<Eigen::Lower>().solve(rec.f);
  out.f = ni.triangularView<Eigen::Lower>().solve(out.f.transpose()).transpose();
  out.noise_corrected = true;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (out.f(a, b) < 0.0) {
        out.f(a, b) = 0.0;
        out.clamped = true;
      }
  return out;
}

/// Single-mode counterpart of noise_correct for a 4-vector of counts.
inline Eigen::Vector4d noise_correct(const Eigen::Vector4d& f, const DetectorPair& det) {
  Eigen::Vector4d out = noise_matrix(det.d_t, det.d_r).triangularView<Eigen::Lower>().solve(f);
  return out.cwiseMax(0.0);
}

/// Outcome probabilities of one mode, obtained by summing over the partner.
inline Eigen::Vector4d mode_marginal(const Eigen::Matrix4d& w, Mode mode) {
  return mode == Mode::signal ? Eigen::Vector4d(w.rowwise().sum()) : Eigen::Vector4d(w.colwise().sum().transpose());
}

}  // namespace pndkit
