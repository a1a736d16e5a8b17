#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "pndkit/error.hpp"

namespace pndkit {

/// Photon-number probabilities of a single mode, index = photon number.
using ProbVector = Eigen::VectorXd;

enum class Mode { signal, idler };

inline const char* to_string(Mode m) { return m == Mode::signal ? "s" : "i"; }

/// Truncated joint photon-number distribution P(j signal, k idler), 0 <= j,k <= n_max.
///
/// Rows index the signal photon number and columns the idler photon number.
/// A matrix is either normalized (entries sum to 1 within 1e-10) or explicitly
/// flagged as subnormalized, which is how partial pieces such as a single
/// pair-order contribution or a truncated thermal tail are carried around.
class PndMatrix {
 public:
  static constexpr double kSumTolerance = 1e-10;

  PndMatrix() : PndMatrix(vacuum(2)) {}

  explicit PndMatrix(Eigen::MatrixXd p, bool subnormalized = false)
      : p_(std::move(p)), subnormalized_(subnormalized) {
    require(p_.rows() >= 1 && p_.rows() == p_.cols(), "PND matrix must be square and nonempty");
    for (Eigen::Index j = 0; j < p_.rows(); ++j) {
      for (Eigen::Index k = 0; k < p_.cols(); ++k) {
        double& v = p_(j, k);
        require(std::isfinite(v), "PND entry is not finite");
        // roundoff from complement computations
        if (v < 0.0 && v > -1e-14) v = 0.0;
        require(v >= 0.0, "PND entry is negative");
      }
    }
    const double s = p_.sum();
    if (subnormalized_) {
      require(s <= 1.0 + kSumTolerance, "subnormalized PND sums above 1");
    } else {
      require(std::abs(s - 1.0) <= kSumTolerance,
              "PND does not sum to 1 (sum = " + std::to_string(s) + ")");
    }
  }

  static PndMatrix vacuum(int n_max = 2) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    p(0, 0) = 1.0;
    return PndMatrix(std::move(p));
  }

  int n_max() const { return static_cast<int>(p_.rows()) - 1; }
  double operator()(Eigen::Index j, Eigen::Index k) const { return p_(j, k); }
  const Eigen::MatrixXd& matrix() const { return p_; }
  double total() const { return p_.sum(); }
  bool subnormalized() const { return subnormalized_; }
  bool normalized() const { return !subnormalized_; }

 private:
  Eigen::MatrixXd p_;
  bool subnormalized_ = false;
};

inline void require_normalized(const PndMatrix& p, const char* op) {
  require(p.normalized(), std::string(op) + " requires a normalized PND");
}

/// Thermal diagonal (1 - mu) mu^j up to n_max. The missing tail mu^(n_max+1)
/// leaves the result subnormalized whenever mu > 0.
inline PndMatrix tmsv_pnd(double mu, int n_max = 2) {
  require(mu >= 0.0 && mu < 1.0, "tmsv_pnd: mu must lie in [0, 1)");
  require(n_max >= 0, "tmsv_pnd: n_max must be nonnegative");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  for (int j = 0; j <= n_max; ++j) p(j, j) = (1.0 - mu) * std::pow(mu, j);
  return PndMatrix(std::move(p), mu > 0.0);
}

/// Transmittance of a lossy channel (optical loss, attenuator, or a detector
/// efficiency modelled as a beam splitter).
struct LossChannel {
  double T = 1.0;

  explicit LossChannel(double t) : T(t) { require(T >= 0.0 && T <= 1.0, "transmittance must lie in [0, 1]"); }
};

inline double binomial_coefficient(int m, int n) {
  if (n < 0 || n > m) return 0.0;
  double c = 1.0;
  for (int r = 1; r <= n; ++r) c = c * (m - n + r) / r;
  return c;
}

/// Upper-triangular binomial loss map, L(n, m) = C(m, n) T^n (1-T)^(m-n) for m >= n.
/// Column m is the output distribution of an m-photon input, so columns sum to 1.
inline Eigen::MatrixXd loss_matrix(LossChannel channel, int n_max = 2) {
  require(n_max >= 0, "loss_matrix: n_max must be nonnegative");
  const double t = channel.T;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  for (int m = 0; m <= n_max; ++m) {
    for (int n = 0; n <= m; ++n) {
      l(n, m) = binomial_coefficient(m, n) * std::pow(t, n) * std::pow(1.0 - t, m - n);
    }
  }
  return l;
}

inline ProbVector apply_loss(const ProbVector& pv, double t) {
  return loss_matrix(LossChannel(t), static_cast<int>(pv.size()) - 1) * pv;
}

/// Q = L_s(T_s) P L_i(T_i)^T. Normalization (or the subnormalized total) is preserved.
inline PndMatrix apply_loss_bipartite(const PndMatrix& p, double t_s, double t_i) {
  const int n = p.n_max();
  Eigen::MatrixXd q = loss_matrix(LossChannel(t_s), n) * p.matrix() *
                      loss_matrix(LossChannel(t_i), n).transpose();
  return PndMatrix(std::move(q), p.subnormalized());
}

/// Row sums (signal) or column sums (idler).
inline ProbVector marginal(const PndMatrix& p, Mode mode) {
  return mode == Mode::signal ? ProbVector(p.matrix().rowwise().sum())
                              : ProbVector(p.matrix().colwise().sum().transpose());
}

/// Pair generation probability, defined as P_11.
inline double pair_gen_prob(const PndMatrix& p) {
  require(p.n_max() >= 1, "pair_gen_prob: need n_max >= 1");
  return p(1, 1);
}

struct HeraldingBounds {
  double eta_s = 0.0;
  double eta_i = 0.0;
};

/// Loss-free upper bounds of the Klyshko heralding efficiencies:
/// eta_H,s = P(both present) / P(idler present), eta_H,i symmetric.
inline HeraldingBounds heralding_bounds(const PndMatrix& p) {
  require_normalized(p, "heralding_bounds");
  const auto& m = p.matrix();
  const Eigen::Index n = m.rows();
  const double both = m.bottomRightCorner(n - 1, n - 1).sum();
  const double idler_only = m.row(0).tail(n - 1).sum();
  const double signal_only = m.col(0).tail(n - 1).sum();
  if (both + idler_only <= 0.0 || both + signal_only <= 0.0) {
    throw UndefinedCharacteristic("heralding_bounds: no photons in one of the modes");
  }
  return {both / (both + idler_only), both / (both + signal_only)};
}

enum class G2Form { full, truncated };

/// Time-integrated g2 of a single-mode photon-number distribution.
/// `full`: sum n(n-1)P_n / (sum n P_n)^2. `truncated`: 2 P_2 / P_1^2.
inline double g2_marginal(const ProbVector& pv, G2Form form = G2Form::full) {
  require(pv.size() >= 3, "g2_marginal: need photon numbers up to 2");
  if (form == G2Form::truncated) {
    if (pv(1) <= 0.0) throw UndefinedCharacteristic("g2_marginal: P_1 is zero");
    return 2.0 * pv(2) / (pv(1) * pv(1));
  }
  double mean = 0.0;
  double fact2 = 0.0;
  for (Eigen::Index n = 1; n < pv.size(); ++n) {
    const double nn = static_cast<double>(n);
    mean += nn * pv(n);
    fact2 += nn * (nn - 1.0) * pv(n);
  }
  if (mean <= 0.0) throw UndefinedCharacteristic("g2_marginal: zero mean photon number");
  return fact2 / (mean * mean);
}

/// Heralded g2 of the `heralded` mode, conditioned on photons in the partner mode,
/// in its leading-order form 2 (P_21 + P_22)(P_01 + P_11) / P_11^2 (indices
/// transposed for a heralded idler).
inline double gh2(const PndMatrix& p, Mode heralded) {
  require_normalized(p, "gh2");
  require(p.n_max() >= 2, "gh2: need n_max >= 2");
  auto at = [&](int herald_count, int partner_count) {
    return heralded == Mode::signal ? p(herald_count, partner_count) : p(partner_count, herald_count);
  };
  const double p11 = at(1, 1);
  if (p11 <= 0.0) throw UndefinedCharacteristic("gh2: P_11 is zero");
  return 2.0 * (at(2, 1) + at(2, 2)) * (at(0, 1) + at(1, 1)) / (p11 * p11);
}

/// Heralded g2 from the complete conditional distribution,
/// 2 P(n=2, partner>=1) P(partner>=1) / P(n=1, partner>=1)^2.
inline double gh2_conditional(const PndMatrix& p, Mode heralded) {
  require_normalized(p, "gh2_conditional");
  const Eigen::MatrixXd m = heralded == Mode::signal ? p.matrix() : Eigen::MatrixXd(p.matrix().transpose());
  const Eigen::Index n = m.rows();
  require(n >= 3, "gh2_conditional: need n_max >= 2");
  const double one = m.row(1).tail(n - 1).sum();
  const double two = m.row(2).tail(n - 1).sum();
  const double partner = m.rightCols(n - 1).sum();
  if (one <= 0.0) throw UndefinedCharacteristic("gh2_conditional: no heralded single photons");
  return 2.0 * two * partner / (one * one);
}

/// Source characteristics derived from one PND.
struct CharacteristicSet {
  double p_g = 0.0;
  double eta_H_s = 0.0;
  double eta_H_i = 0.0;
  double g2_s = 0.0;
  double g2_i = 0.0;
  double gh2_s = 0.0;
  double gh2_i = 0.0;
};

inline CharacteristicSet characterize(const PndMatrix& p) {
  require_normalized(p, "characterize");
  CharacteristicSet c;
  c.p_g = pair_gen_prob(p);
  const auto eta = heralding_bounds(p);
  c.eta_H_s = eta.eta_s;
  c.eta_H_i = eta.eta_i;
  c.g2_s = g2_marginal(marginal(p, Mode::signal));
  c.g2_i = g2_marginal(marginal(p, Mode::idler));
  c.gh2_s = gh2(p, Mode::signal);
  c.gh2_i = gh2(p, Mode::idler);
  return c;
}

}  // namespace pndkit
