#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pndkit/io.hpp"
#include "pndkit/metrics.hpp"
#include "pndkit/simulator.hpp"

using namespace pndkit;

TEST(Rmsle, ClosedForms) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(3, 3, 1e-3);
  Eigen::MatrixXd b = a * 10.0;
  EXPECT_NEAR(rmsle(a, a), 0.0, 0.0);
  EXPECT_NEAR(rmsle(b, a, {1e-300}), 1.0, 1e-12);
  b(0, 0) = a(0, 0);
  EXPECT_NEAR(rmsle(b, a, {1e-300}), std::sqrt(8.0 / 9.0), 1e-12);
  // Zero cells on both sides contribute nothing.
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_EQ(rmsle(z, z), 0.0);
  EXPECT_THROW(rmsle(a, Eigen::MatrixXd::Zero(2, 2)), InvalidInput);
}

TEST(Fidelity, Bounds) {
  const auto p = random_pps_pnd(1e-2, 3);
  const auto q = random_pps_pnd(1e-2, 4);
  EXPECT_NEAR(fidelity(p, p), 1.0, 1e-12);
  EXPECT_LT(fidelity(p, q), 1.0);
  EXPECT_GT(fidelity(p, q), 0.99);
}

TEST(Bootstrap, RedrawsAtRequestedSize) {
  const auto rec = sample_counts(bipartite_probs(random_pps_pnd(1e-2, 1), DetectorPair{0.5, 0.6, 0.6},
                                                 DetectorPair{0.5, 0.6, 0.6}),
                                 1e7, 2);
  const auto draws = bootstrap(rec, 50, 1e5, 9);
  ASSERT_EQ(draws.size(), 50u);
  Eigen::Matrix4d mean = Eigen::Matrix4d::Zero();
  for (const auto& d : draws) {
    EXPECT_EQ(d.f.sum(), 1e5);
    EXPECT_EQ(d.n_m, 1e5);
    mean += d.f / 50.0;
  }
  EXPECT_NEAR(mean(0, 0) / 1e5, rec.f(0, 0) / rec.n_m, 1e-3);
  EXPECT_EQ(bootstrap(rec, 3, 1e5, 9)[2].f, draws[2].f);
  const std::vector<CountRecord> two{rec, rec};
  const auto sets = bootstrap(two, 4, 1e4, 1);
  ASSERT_EQ(sets.size(), 4u);
  ASSERT_EQ(sets[0].size(), 2u);
  EXPECT_NE(sets[0][0].f, sets[0][1].f);
}

TEST(Bootstrap, QuantilesAndFailures) {
  EXPECT_DOUBLE_EQ(quantile_sorted({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile_sorted({1, 2}, 0.25), 1.25);
  std::vector<std::vector<CountRecord>> samples(10, std::vector<CountRecord>(1));
  for (std::size_t k = 0; k < samples.size(); ++k) samples[k][0].n_m = static_cast<double>(k);
  const Pipeline pipe = [](const std::vector<CountRecord>& r) -> Characteristics {
    if (r[0].n_m == 3) throw std::runtime_error("no");
    return {{"x", r[0].n_m}, {"y", r[0].n_m == 5 ? std::nan("") : 1.0}};
  };
  const auto rows = bootstrap_stats(samples, pipe, 10, 2);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].characteristic, "x");
  EXPECT_EQ(rows[0].n_fail, 1);
  EXPECT_EQ(rows[1].n_fail, 2);
  EXPECT_DOUBLE_EQ(rows[0].mean, (45.0 - 3.0) / 9.0);
  EXPECT_DOUBLE_EQ(rows[0].q50, 5.0);
  EXPECT_DOUBLE_EQ(rows[1].std, 0.0);
  const Pipeline broken = [](const std::vector<CountRecord>&) -> Characteristics { throw std::runtime_error("x"); };
  EXPECT_THROW(bootstrap_stats(samples, broken, 10), std::runtime_error);
}

TEST(Bootstrap, SpreadShrinksWithSampleSize) {
  BipartiteSetup setup;
  setup.s = {0.5, 0.6, 0.6, 1e-6, 1e-6};
  setup.i = setup.s;
  const auto truth = random_pps_pnd(2e-2, 5);
  const std::vector<CountRecord> recs{expected_record(bipartite_probs(truth, setup.s, setup.i), 1e9)};
  EstimateOptions opt;
  opt.restarts = 0;
  const auto pipe = estimate_pipeline(setup, opt, truth);
  const auto small = bootstrap_stats(bootstrap(recs, 30, 1e6, 3), pipe, 1e6);
  const auto large = bootstrap_stats(bootstrap(recs, 30, 1e8, 3), pipe, 1e8);
  ASSERT_EQ(small[1].characteristic, "p_g");
  EXPECT_EQ(small[1].n_fail, 0);
  // Standard deviation scales as n^-1/2: a factor 10 over two decades.
  const double ratio = small[1].std / large[1].std;
  EXPECT_GT(ratio, 6.0);
  EXPECT_LT(ratio, 16.0);
  EXPECT_NEAR(large[1].mean, truth(1, 1), 5 * large[1].std);
}

TEST(Characteristics, ListOrderAndUndefined) {
  const auto list = characteristic_list(PndMatrix::vacuum(2));
  ASSERT_EQ(list.size(), 7u);
  EXPECT_EQ(list[0].first, "p_g");
  EXPECT_EQ(list[0].second, 0.0);
  EXPECT_TRUE(std::isnan(list[1].second));
  EXPECT_TRUE(std::isnan(list[6].second));
}

TEST(Io, PndRoundTripIsExact) {
  const auto p = random_pps_pnd(1e-2, 8);
  std::stringstream s;
  write_pnd_csv(s, p);
  const auto q = read_pnd_csv(s);
  EXPECT_EQ(p.matrix(), q.matrix());
}

TEST(Io, CountsRoundTripAndValidation) {
  std::vector<CountRecord> recs{sample_counts(Eigen::Matrix4d::Constant(1.0 / 16), 1000, 1, 0, 0),
                                sample_counts(Eigen::Matrix4d::Constant(1.0 / 16), 500, 1, 1, 1),
                                sample_counts(Eigen::Matrix4d::Constant(1.0 / 16), 700, 1, 2, 1)};
  std::stringstream s;
  write_counts_csv(s, recs);
  const auto log = read_counts_csv(s);
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_EQ(log.records[1].n_m, 1200);
  EXPECT_EQ(log.records[1].f, recs[1].f + recs[2].f);
  EXPECT_EQ(log.rows_per_setting.at(1), 2);

  std::istringstream bad_sum("nu,n_m,f11,f12,f13,f14,f21,f22,f23,f24,f31,f32,f33,f34,f41,f42,f43,f44\n"
                             "0,10,1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n");
  EXPECT_THROW(read_counts_csv(bad_sum), InvalidInput);
  std::istringstream bad_header("nu,n_m,f11\n0,1,1\n");
  EXPECT_THROW(read_counts_csv(bad_header), InvalidInput);
  std::istringstream negative("nu,n_m,f11,f12,f13,f14,f21,f22,f23,f24,f31,f32,f33,f34,f41,f42,f43,f44\n"
                              "0,1,2,-1,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n");
  EXPECT_THROW(read_counts_csv(negative), InvalidInput);
}
