#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pndkit/detection.hpp"

using namespace pndkit;

namespace {

oracle::Arm arm_of(const DetectorPair& d) {
  return {d.T, d.gamma * d.eta_t, d.gamma * d.eta_r, d.d_t, d.d_r};
}

PndMatrix random_pnd(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd p(3, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) p(j, k) = u(rng) * std::pow(0.05, std::max(j, k));
  p(0, 0) = 0.0;
  p(0, 0) = 1.0 - p.sum();
  return PndMatrix(p);
}

}  // namespace

TEST(Conversion, TwoPhotonColumnClosedForm) {
  const double T = 0.4, R = 0.6, et = 0.7, er = 0.55;
  const auto m = conversion_matrix(T, et, er, 2);
  const double a = T * (1 - et) + R * (1 - er);
  EXPECT_NEAR(m(kNone, 2), a * a, 1e-15);
  EXPECT_NEAR(m(kROnly, 2), R * R * er * er + 2 * R * er * a, 1e-15);
  EXPECT_NEAR(m(kTOnly, 2), T * T * et * et + 2 * T * et * a, 1e-15);
  EXPECT_NEAR(m(kBoth, 2), 2 * T * R * et * er, 1e-15);
  EXPECT_NEAR(m(kNone, 0), 1.0, 0);
  EXPECT_NEAR(m(kTOnly, 1), T * et, 1e-15);
  EXPECT_NEAR(m(kROnly, 1), R * er, 1e-15);
  EXPECT_NEAR(m(kBoth, 1), 0.0, 1e-15);
}

TEST(Conversion, MatchesPhotonEnumeration) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const DetectorPair d{u(rng), u(rng), u(rng), 0.1 * u(rng), 0.1 * u(rng), u(rng)};
    const auto w = mode_response(d, 5);
    for (int n = 0; n <= 5; ++n) {
      const auto ref = oracle::arm_outcomes(arm_of(d), n);
      for (int o = 0; o < 4; ++o) EXPECT_NEAR(w(o, n), ref[static_cast<std::size_t>(o)], 1e-13);
    }
    for (int n = 0; n <= 5; ++n) EXPECT_NEAR(w.col(n).sum(), 1.0, 1e-13);
  }
}

TEST(Noise, LowerTriangularColumnStochastic) {
  const auto n = noise_matrix(1e-3, 2e-3);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(n.col(c).sum(), 1.0, 1e-15);
  EXPECT_TRUE(n.isLowerTriangular());
  EXPECT_EQ(n(2, 1), 0.0);
  EXPECT_THROW(noise_matrix(1.0, 0.0), InvalidInput);
}

TEST(Bipartite, MatchesEnumerationAndSumsToOne) {
  std::mt19937_64 rng(8);
  const DetectorPair s{0.4952, 0.562, 0.575, 1.01e-7, 2.11e-7, 1.0};
  const DetectorPair i{0.4846, 0.567, 0.548, 0.94e-7, 1.00e-7, 0.3};
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_pnd(rng);
    const auto w = bipartite_probs(p, s, i);
    EXPECT_NEAR(w.sum(), 1.0, 1e-14);
    const auto ref = oracle::bipartite_outcomes(p.matrix(), arm_of(s), arm_of(i));
    EXPECT_LT((w - ref).cwiseAbs().maxCoeff(), 1e-15);
    // Rows follow the signal.
    EXPECT_NEAR(mode_marginal(w, Mode::signal)(kNone), single_mode_probs(marginal(p, Mode::signal), s)(kNone), 1e-15);
    EXPECT_NEAR(mode_marginal(w, Mode::idler)(kBoth), single_mode_probs(marginal(p, Mode::idler), i)(kBoth), 1e-15);
  }
}

TEST(Bipartite, VacuumOnlyNoise) {
  const DetectorPair s{0.5, 0.5, 0.5, 1e-3, 2e-3};
  const auto w = bipartite_probs(PndMatrix::vacuum(), s, s);
  EXPECT_NEAR(w(kNone, kNone), std::pow((1 - 1e-3) * (1 - 2e-3), 2), 1e-15);
  EXPECT_NEAR(w(kTOnly, kNone), 1e-3 * (1 - 2e-3) * (1 - 1e-3) * (1 - 2e-3), 1e-15);
}

TEST(Detectors, Validation) {
  EXPECT_THROW((DetectorPair{1.2}).validate(), InvalidInput);
  EXPECT_THROW((DetectorPair{0.5, 0.5, 0.5, 1.0, 0.0}).validate(), InvalidInput);
  EXPECT_THROW((DetectorPair{0.5, 0.5, 0.5, 0.0, 0.0, -0.1}).validate(), InvalidInput);
  const auto one = DetectorPair::single(0.6, 1e-4);
  EXPECT_EQ(one.T, 1.0);
  const auto m = mode_response(one, 2);
  EXPECT_NEAR(m.row(kROnly).sum() + m.row(kBoth).sum(), 0.0, 1e-15);
}

TEST(NoiseCorrection, InvertsNoiseExactly) {
  std::mt19937_64 rng(9);
  const DetectorPair s{0.5, 0.6, 0.6, 1e-3, 3e-3};
  const DetectorPair i{0.5, 0.55, 0.6, 2e-3, 1e-3};
  const auto p = random_pnd(rng);
  const DetectorPair s0{s.T, s.eta_t, s.eta_r};
  const DetectorPair i0{i.T, i.eta_t, i.eta_r};
  const auto noisy = expected_record(bipartite_probs(p, s, i), 1e8);
  const auto clean = expected_record(bipartite_probs(p, s0, i0), 1e8);
  const auto corr = noise_correct(noisy, s, i);
  EXPECT_TRUE(corr.noise_corrected);
  EXPECT_FALSE(corr.clamped);
  EXPECT_LT((corr.f - clean.f).cwiseAbs().maxCoeff(), 1e-5);
  const Eigen::Vector4d single = noise_correct(Eigen::Vector4d(mode_marginal(noisy.f, Mode::signal)), s);
  EXPECT_LT((single - mode_marginal(clean.f, Mode::signal)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(NoiseCorrection, ClampsNegatives) {
  CountRecord r;
  r.n_m = 100;
  r.f(0, 0) = 100;
  const DetectorPair s{0.5, 0.5, 0.5, 0.1, 0.1};
  // Too few noise-only clicks for the given noise level.
  const auto c = noise_correct(r, s, s);
  EXPECT_TRUE(c.clamped);
  EXPECT_GE(c.f.minCoeff(), 0.0);
}

TEST(CountRecord, Validation) {
  CountRecord r;
  r.n_m = 10;
  r.f(0, 0) = 9;
  EXPECT_THROW(r.validate(), InvalidInput);
  r.f(3, 3) = 1;
  EXPECT_NO_THROW(r.validate());
  r.f(1, 1) = -1;
  r.f(0, 0) = 10;
  EXPECT_THROW(r.validate(), InvalidInput);
  const auto flat = expected_record(Eigen::Matrix4d::Identity() / 4, 8).flat();
  EXPECT_EQ(flat(0), 2.0);
  EXPECT_EQ(flat(5), 2.0);
  EXPECT_EQ(flat(1), 0.0);
}
