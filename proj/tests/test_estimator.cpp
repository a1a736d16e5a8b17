#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pndkit/estimator.hpp"
#include "pndkit/metrics.hpp"
#include "pndkit/simulator.hpp"

using namespace pndkit;

namespace {

PndMatrix test_pnd() {
  Eigen::MatrixXd p(3, 3);
  p << 0, 3e-3, 2e-5, 4e-3, 1.2e-2, 3e-5, 1e-5, 4e-5, 8e-5;
  p(0, 0) = 1 - p.sum();
  return PndMatrix(p);
}

BipartiteSetup noisy_setup() {
  BipartiteSetup s;
  s.s = {0.4952, 0.562, 0.575, 1e-4, 2e-4};
  s.i = {0.4846, 0.567, 0.548, 1.5e-4, 1e-4};
  return s;
}

std::vector<Eigen::MatrixXd> responses(const LikelihoodModel& m) {
  std::vector<Eigen::MatrixXd> r;
  for (const auto& s : m.settings) r.push_back(s.response);
  return r;
}

}  // namespace

TEST(Model, ResponseMatchesBipartiteProbs) {
  const auto setup = noisy_setup();
  const auto model = make_model(setup);
  ASSERT_EQ(model.settings.size(), 1u);
  const Eigen::VectorXd w = model.settings[0].response * pnd_to_cells(test_pnd());
  const Eigen::Matrix4d ref = bipartite_probs(test_pnd(), setup.s, setup.i);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_NEAR(w(4 * a + b), ref(a, b), 1e-15);
  EXPECT_EQ(model.settings[0].eml_outcomes.size(), 9u);
  EXPECT_LT((cells_to_pnd(pnd_to_cells(test_pnd())).matrix() - test_pnd().matrix()).cwiseAbs().maxCoeff(), 1e-16);
}

/// Central difference refined by one Richardson step, error O(h^4).
template <class F>
auto derivative(F&& f, const Eigen::VectorXd& x, Eigen::Index k, double h) {
  using Result = decltype(f(x));
  auto central = [&](double step) -> Result {
    Eigen::VectorXd up = x, dn = x;
    up(k) += step;
    dn(k) -= step;
    return (f(up) - f(dn)) / (2 * step);
  };
  const Result fine = central(h / 2);
  const Result coarse = central(h);
  return Result((4.0 * fine - coarse) / 3.0);
}

TEST(Likelihood, DerivativesMatchFiniteDifferences) {
  auto setup = noisy_setup();
  setup.gammas = {{0.3, 0.3}, {0.3, 1.0}, {1.0, 0.3}, {1.0, 1.0}};
  const auto model = make_model(setup);
  const Eigen::VectorXd cells = pnd_to_cells(test_pnd());
  Dataset data;
  auto eng = make_engine(3);
  for (const auto& s : model.settings) data.push_back(multinomial(s.response * cells, 1e6, eng));
  for (auto obj : {detail::Objective::ml, detail::Objective::eml}) {
    const auto ev = detail::evaluate(obj, model, data, cells);
    auto value = [&](const Eigen::VectorXd& p) { return detail::evaluate(obj, model, data, p, false).value; };
    auto grad = [&](const Eigen::VectorXd& p) { return Eigen::VectorXd(detail::evaluate(obj, model, data, p).grad); };
    // Tolerances are relative to the largest entry: the objective is large and
    // finite differences lose digits to cancellation.
    const double gmax = ev.grad.cwiseAbs().maxCoeff();
    const double hmax = ev.hess.cwiseAbs().maxCoeff();
    for (Eigen::Index c = 0; c < cells.size(); ++c) {
      EXPECT_NEAR(ev.grad(c), derivative(value, cells, c, 1e-6), 1e-5 * gmax) << c;
      const Eigen::VectorXd hcol = derivative(grad, cells, c, 1e-7);
      EXPECT_LT((ev.hess.col(c) - hcol).cwiseAbs().maxCoeff(), 1e-5 * hmax) << c;
    }

    // Free coordinates of the softmax parametrization.
    const Eigen::VectorXd z = (cells.array() / cells(0)).log().matrix();
    Eigen::VectorXd gz;
    Eigen::MatrixXd hz;
    detail::to_free_coordinates(cells, ev, gz, hz);
    auto value_z = [&](const Eigen::VectorXd& zz) { return value(detail::softmax(zz)); };
    auto grad_z = [&](const Eigen::VectorXd& zz) {
      const Eigen::VectorXd pp = detail::softmax(zz);
      Eigen::VectorXd g;
      Eigen::MatrixXd unused;
      detail::to_free_coordinates(pp, detail::evaluate(obj, model, data, pp), g, unused);
      return g;
    };
    const double gscale = gz.cwiseAbs().maxCoeff();
    for (Eigen::Index a = 1; a < z.size(); ++a) {
      EXPECT_NEAR(gz(a - 1), derivative(value_z, z, a, 1e-3), 1e-5 * gscale) << a;
      const Eigen::VectorXd hcol = derivative(grad_z, z, a, 1e-3);
      EXPECT_LT((hz.col(a - 1) - hcol).cwiseAbs().maxCoeff(), 1e-5 * hz.cwiseAbs().maxCoeff()) << a;
    }
  }
}

TEST(Likelihood, LogLikelihoodAndErrors) {
  const auto setup = noisy_setup();
  const auto rec = expected_record(bipartite_probs(test_pnd(), setup.s, setup.i), 1e6);
  const std::vector<CountRecord> recs{rec};
  const double ll = log_likelihood(test_pnd(), recs, setup);
  double ref = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if (rec.f(a, b) > 0) ref += rec.f(a, b) * std::log(rec.f(a, b) / 1e6);
  EXPECT_NEAR(ll, ref, 1e-9 * std::abs(ref));

  // Counts on an outcome the model forbids.
  BipartiteSetup ideal;
  ideal.s = {0.5, 0.5, 0.5};
  ideal.i = ideal.s;
  CountRecord bad;
  bad.n_m = 10;
  bad.f(0, 0) = 9;
  bad.f(3, 0) = 1;
  const std::vector<CountRecord> bads{bad};
  EXPECT_THROW(log_likelihood(PndMatrix::vacuum(2), bads, ideal), InfeasibleData);

  CountRecord wrong = rec;
  wrong.nu = 2;
  const std::vector<CountRecord> wrongs{wrong};
  EXPECT_THROW(ml_estimate(wrongs, setup), ModelMismatch);
  const auto model = make_model(setup);
  EXPECT_THROW(ml_estimate(model, Dataset{}), ModelMismatch);
  EXPECT_THROW(ml_estimate(model, Dataset{Eigen::VectorXd::Ones(4)}), ModelMismatch);
  EXPECT_THROW(eml_estimate(model, Dataset{rec.flat()}), InvalidInput);
}

TEST(MlEstimate, ExactCountsRecoverTruth) {
  const auto setup = noisy_setup();
  const auto rec = expected_record(bipartite_probs(test_pnd(), setup.s, setup.i), 1e9);
  const std::vector<CountRecord> recs{rec};
  const auto est = ml_estimate(recs, setup);
  EXPECT_TRUE(est.converged);
  EXPECT_LT(rmsle(test_pnd(), est.pnd()), 1e-6);
  EXPECT_EQ(est.starts.size(), 5u);
}

TEST(MlEstimate, AgreesWithExpectationMaximization) {
  auto setup = noisy_setup();
  setup.gammas = {{1.0, 1.0}, {0.4, 1.0}};
  const auto model = make_model(setup);
  const Eigen::VectorXd cells = pnd_to_cells(test_pnd());
  Dataset data;
  auto eng = make_engine(17);
  for (const auto& s : model.settings) data.push_back(multinomial(s.response * cells, 1e7, eng));
  const auto est = ml_estimate(model, data);
  ASSERT_TRUE(est.converged);
  const Eigen::VectorXd em = oracle::em_estimate(responses(model), data, 200000);
  const double ll_em = log_likelihood(em, model, data);
  EXPECT_GE(est.loglik, ll_em - 1e-6);
  EXPECT_LT(est.loglik - ll_em, 1e-2);
  for (Eigen::Index c = 0; c < cells.size(); ++c) {
    if (em(c) > 1e-6) EXPECT_NEAR(est.p(c), em(c), 2e-2 * em(c)) << "cell " << c;
  }
}

TEST(MlEstimate, InvariantToRecordSplittingAndOrder) {
  auto setup = noisy_setup();
  setup.gammas = {{1.0, 1.0}, {0.5, 0.5}};
  std::vector<CountRecord> whole;
  for (int nu = 0; nu < 2; ++nu) {
    const auto [ds, di] = setup.detectors(nu);
    whole.push_back(sample_counts(bipartite_probs(test_pnd(), ds, di), 2e6, 5, static_cast<std::uint64_t>(nu), nu));
  }
  std::vector<CountRecord> parts;
  for (int nu = 1; nu >= 0; --nu) {
    CountRecord a = whole[static_cast<std::size_t>(nu)];
    CountRecord b = a;
    a.f = (a.f / 3).array().floor().matrix();
    b.f -= a.f;
    a.n_m = a.f.sum();
    b.n_m = b.f.sum();
    parts.push_back(b);
    parts.push_back(a);
  }
  const auto e1 = ml_estimate(whole, setup);
  const auto e2 = ml_estimate(parts, setup);
  EXPECT_LT((e1.p - e2.p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MlEstimate, Deterministic) {
  const auto setup = noisy_setup();
  const std::vector<CountRecord> recs{sample_counts(bipartite_probs(test_pnd(), setup.s, setup.i), 1e6, 11)};
  EXPECT_EQ(ml_estimate(recs, setup).p, ml_estimate(recs, setup).p);
}

TEST(EmlEstimate, ExactCountsRecoverTruth) {
  auto setup = noisy_setup();
  setup.s.d_t = setup.s.d_r = setup.i.d_t = setup.i.d_r = 0.0;
  setup.gammas = {{0.1, 0.1}, {0.1, 1.0}, {1.0, 0.1}, {1.0, 1.0}};
  std::vector<CountRecord> recs;
  for (int nu = 0; nu < 4; ++nu) {
    const auto [ds, di] = setup.detectors(nu);
    recs.push_back(expected_record(bipartite_probs(test_pnd(), ds, di), 1e9, nu));
  }
  const auto est = eml_estimate(recs, setup);
  EXPECT_TRUE(est.converged);
  EXPECT_LT(rmsle(test_pnd(), est.pnd()), 1e-4);
}

TEST(SinglePartite, AttenuatorLadderRecoversTruth) {
  ProbVector truth(3);
  truth << 0, 1e-2, 8e-5;
  truth(0) = 1 - truth.sum();
  for (auto layout : {SingleLayout::one_detector, SingleLayout::two_detectors}) {
    SinglePartiteSetup setup;
    setup.layout = layout;
    setup.det = layout == SingleLayout::one_detector ? DetectorPair::single(0.5) : DetectorPair{0.5, 0.5, 0.5};
    setup.gammas = attenuator_design(0.1, 10);
    const auto model = make_model(setup);
    Dataset data;
    for (const auto& s : model.settings) data.push_back(1e9 * s.response * truth);
    const auto est = ml_estimate(model, data);
    EXPECT_TRUE(est.converged);
    EXPECT_LT(rmsle(Eigen::MatrixXd(truth), Eigen::MatrixXd(est.p)), 1e-5);
  }
  SinglePartiteSetup bad;
  bad.layout = SingleLayout::one_detector;
  bad.det = DetectorPair{0.5, 0.5, 0.5};
  EXPECT_THROW(make_model(bad), InvalidInput);
}

TEST(CountBased, G2FromCounts) {
  Eigen::Vector4d f;
  f << 0, 100, 200, 10;
  f(0) = 1e6 - f.sum();
  EXPECT_NEAR(count_based_g2(f, 1e6), (10 / 1e6) / ((210 / 1e6) * (110 / 1e6)), 1e-12);
  f(1) = f(3) = 0;
  EXPECT_THROW(count_based_g2(f, 1e6), UndefinedCharacteristic);
}

TEST(CountBased, HeraldedG2FromCounts) {
  CountRecord r;
  r.n_m = 1e6;
  // Signal split by its beam splitter, idler clicks herald.
  r.f(kBoth, kTOnly) = 2;
  r.f(kTOnly, kTOnly) = 40;
  r.f(kROnly, kROnly) = 30;
  r.f(kNone, kBoth) = 100;
  r.f(kTOnly, kNone) = 500;
  r.f(0, 0) = 1e6 - r.f.sum();
  const double c_tri = 2, c_ti = 42, c_ri = 32, s_i = 172;
  EXPECT_NEAR(count_based_gh2(r, Mode::signal), (c_tri / 1e6) * (s_i / 1e6) / ((c_ti / 1e6) * (c_ri / 1e6)), 1e-12);
  CountRecord t = r;
  t.f.transposeInPlace();
  EXPECT_NEAR(count_based_gh2(t, Mode::idler), count_based_gh2(r, Mode::signal), 1e-12);
}

TEST(CountBased, PairProbabilityAndHeralding) {
  const double p = 1e-2, loss = 0.7;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m(1, 1) = p;
  m(0, 0) = 1 - p;
  const auto lossy = apply_loss_bipartite(PndMatrix(m), loss, 1.0);
  const DetectorPair s{0.5, 0.6, 0.7};
  const DetectorPair i{0.5, 0.55, 0.65};
  const auto rec = expected_record(bipartite_probs(lossy, s, i), 1e8);
  const auto c = count_based_pg_eta(rec, {0.6, 0.7, 0.55, 0.65});
  EXPECT_NEAR(c.p_g, p * loss, 1e-12);
  EXPECT_NEAR(c.eta_H_s, loss, 1e-12);
  EXPECT_NEAR(c.eta_H_i, 1.0, 1e-12);
}
