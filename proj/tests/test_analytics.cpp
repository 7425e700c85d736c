#include <gtest/gtest.h>

#include <cmath>

#include "ivla/analytics.hpp"
#include "ivla/error.hpp"

using namespace ivla;

namespace {

const IterativeModel kModels[] = {IterativeModel::linear(), IterativeModel::exponential(),
                                  IterativeModel::skip(2), IterativeModel::skip(4)};

double scalar_result(Workload w, IterativeModel m, Strategy s, std::size_t k,
                     double a, double b = 0, double t0 = 0) {
  IterativeView v(w, m, s, k, Matrix{{a}}, Matrix{{b}}, Matrix{{t0}});
  CostLedger l;
  v.initialize(l);
  return v.result()(0, 0);
}

}  // namespace

TEST(Model, Validation) {
  EXPECT_NO_THROW(validate_model(IterativeModel::linear(), 7));
  EXPECT_THROW(validate_model(IterativeModel::linear(), 0), ConfigError);
  EXPECT_THROW(validate_model(IterativeModel::exponential(), 6), ConfigError);
  EXPECT_THROW(validate_model(IterativeModel::skip(3), 9), ConfigError);
  EXPECT_THROW(validate_model(IterativeModel::skip(4), 6), ConfigError);
  EXPECT_THROW(validate_model(IterativeModel::skip(8), 4), ConfigError);
  EXPECT_EQ(IterativeModel::skip(4).name(), "skip4");
}

TEST(Model, Schedules) {
  EXPECT_EQ(schedule(IterativeModel::linear(), 4), (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(schedule(IterativeModel::exponential(), 16),
            (std::vector<std::size_t>{1, 2, 4, 8, 16}));
  EXPECT_EQ(schedule(IterativeModel::skip(4), 16),
            (std::vector<std::size_t>{1, 2, 4, 8, 12, 16}));
}

TEST(Iterative, ScalarCases) {
  for (const auto& m : kModels)
    for (Strategy s : {Strategy::Reevaluation, Strategy::Incremental}) {
      EXPECT_DOUBLE_EQ(scalar_result(Workload::Powers, m, s, 4, 2.0), 16.0);
      EXPECT_DOUBLE_EQ(scalar_result(Workload::Sums, m, s, 4, 2.0), 15.0);
      EXPECT_DOUBLE_EQ(scalar_result(Workload::General, m, s, 8, 0.5, 0.5), 0.99609375);
    }
  EXPECT_DOUBLE_EQ(scalar_result(Workload::General, IterativeModel::exponential(),
                                 Strategy::Hybrid, 8, 0.5, 0.5), 0.99609375);
  EXPECT_DOUBLE_EQ(scalar_result(Workload::Powers, IterativeModel::linear(),
                                 Strategy::Incremental, 1, 3.0), 3.0);
  EXPECT_DOUBLE_EQ(scalar_result(Workload::Sums, IterativeModel::linear(),
                                 Strategy::Incremental, 1, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(scalar_result(Workload::General, IterativeModel::linear(),
                                 Strategy::Incremental, 1, 3.0, 1.0, 2.0), 7.0);
}

TEST(Iterative, HybridOnlyForGeneralForm) {
  EXPECT_THROW(IterativeView(Workload::Powers, IterativeModel::linear(), Strategy::Hybrid,
                             2, Matrix::identity(2)),
               ConfigError);
}

TEST(Iterative, UpdatesMatchReference) {
  Rng rng(1);
  const std::size_t n = 12, p = 3, k = 8;
  Matrix a = scale_to_spectral_radius(random_matrix(n, n, rng), 0.9);
  Matrix b = random_matrix(n, p, rng), t0 = random_matrix(n, p, rng);
  auto ups = random_updates(n, n, 2, 4, rng, 0.05);
  for (Workload w : {Workload::Powers, Workload::Sums, Workload::General})
    for (const auto& m : kModels)
      for (Strategy s : {Strategy::Reevaluation, Strategy::Incremental, Strategy::Hybrid}) {
        if (s == Strategy::Hybrid && w != Workload::General) continue;
        IterativeView v(w, m, s, k, a, b, t0);
        CostLedger l;
        v.initialize(l);
        Matrix cur = a;
        for (const auto& up : ups) {
          v.apply(up.u, up.v, l);
          mat_mul_nt_accumulate(cur, up.u, up.v, l);
          EXPECT_LT(relative_error(v.result(), reference_view(w, cur, k, b, t0)), 1e-9)
              << to_string(w) << " " << m.name() << " " << to_string(s);
        }
        EXPECT_EQ(v.a(), cur);
      }
}

TEST(Iterative, ShapeMismatchRejected) {
  IterativeView v(Workload::Powers, IterativeModel::linear(), Strategy::Incremental, 2,
                  Matrix::identity(3));
  CostLedger l;
  v.initialize(l);
  EXPECT_THROW(v.apply(Matrix(2, 1), Matrix(3, 1), l), DataError);
}

TEST(Predict, ClosedForms) {
  EXPECT_EQ(powers_incremental_linear_cost(100, 4), 191800u);
  for (std::uint64_t n : {32, 64})
    for (std::uint64_t k : {4, 8, 16}) {
      auto lin = predict_cost(Workload::Powers, IterativeModel::linear(),
                              Strategy::Incremental, n, 0, k);
      EXPECT_TRUE(lin.closed_form);
      EXPECT_EQ(lin.counts.total(), powers_incremental_linear_cost(n, k));
      auto exp = predict_cost(Workload::Powers, IterativeModel::exponential(),
                              Strategy::Incremental, n, 0, k);
      EXPECT_EQ(exp.counts.total(), powers_incremental_exponential_cost(n, k));
    }
}

TEST(Predict, MatchesLedgerForEveryCell) {
  Rng rng(2);
  const std::size_t n = 10, p = 4, k = 8;
  Matrix a = scale_to_spectral_radius(random_matrix(n, n, rng), 0.9);
  Matrix b = random_matrix(n, p, rng), t0 = random_matrix(n, p, rng);
  auto up = random_updates(n, n, 1, 1, rng, 0.1)[0];
  for (Workload w : {Workload::Powers, Workload::Sums, Workload::General})
    for (const auto& m : kModels)
      for (Strategy s : {Strategy::Reevaluation, Strategy::Incremental, Strategy::Hybrid}) {
        if (s == Strategy::Hybrid && w != Workload::General) continue;
        IterativeView v(w, m, s, k, a, b, t0);
        CostLedger l;
        v.initialize(l);
        l.reset();
        v.apply(up.u, up.v, l);
        auto pred = predict_cost(w, m, s, n, p, k);
        EXPECT_EQ(l.totals(), pred.counts) << to_string(w) << " " << m.name() << " "
                                           << to_string(s);
        EXPECT_EQ(v.stored_views(), pred.stored_views);
      }
}

TEST(Predict, SpaceLaw) {
  auto views = [](IterativeModel m, Strategy s, std::size_t k) {
    return predict_cost(Workload::Powers, m, s, 8, 0, k).stored_views;
  };
  for (std::size_t k : {4, 8, 16, 32}) {
    const auto lg = static_cast<std::size_t>(std::log2(k));
    EXPECT_EQ(views(IterativeModel::linear(), Strategy::Incremental, k), k);
    EXPECT_EQ(views(IterativeModel::exponential(), Strategy::Incremental, k), lg + 1);
    EXPECT_EQ(views(IterativeModel::skip(4), Strategy::Incremental, k), 2 + k / 4);
    EXPECT_EQ(views(IterativeModel::linear(), Strategy::Reevaluation, k), 1u);
    EXPECT_EQ(views(IterativeModel::exponential(), Strategy::Reevaluation, k), 1u);
  }
}

TEST(Predict, BigOStrings) {
  auto p = predict_cost(Workload::Powers, IterativeModel::exponential(),
                        Strategy::Reevaluation, 8, 0, 8);
  EXPECT_FALSE(p.big_o.empty());
  EXPECT_THROW(predict_cost(Workload::Powers, IterativeModel::linear(), Strategy::Hybrid,
                            8, 0, 8),
               ConfigError);
}

TEST(Ols, IncrementalMatchesReevaluation) {
  Rng rng(3);
  Matrix x = random_matrix(60, 8, rng), y = random_matrix(60, 2, rng);
  OlsView inc(Strategy::Incremental, x, y), re(Strategy::Reevaluation, x, y);
  CostLedger li, lr;
  inc.initialize(li);
  re.initialize(lr);
  for (int i = 0; i < 10; ++i) {
    auto up = row_update(60, 8, rng.below(60), rng, 0.2, "X");
    li.reset();
    lr.reset();
    inc.apply(up.u, up.v, li);
    re.apply(up.u, up.v, lr);
    EXPECT_LT(relative_error(inc.beta(), re.beta()), 1e-9);
    EXPECT_EQ(inc.x(), re.x());
  }
}

TEST(Ols, GradientDescentIsTheGeneralForm) {
  // beta_{i} = (I - eta X'X) beta_{i-1} + eta X'y converges to the OLS solution.
  Rng rng(4);
  Matrix x = random_matrix(40, 5, rng), y = random_matrix(40, 1, rng);
  CostLedger l;
  Matrix xtx = mat_mul_tn(x, x, l);
  const double eta = 1.0 / (2 * frobenius_norm(xtx));
  Matrix a = mat_sub(Matrix::identity(5), mat_scale(eta, xtx, l), l);
  Matrix b = mat_scale(eta, mat_mul_tn(x, y, l), l);
  IterativeView gd(Workload::General, IterativeModel::exponential(), Strategy::Incremental,
                   1024, a, b, Matrix(5, 1));
  gd.initialize(l);
  OlsView ols(Strategy::Reevaluation, x, y);
  ols.initialize(l);
  EXPECT_LT(max_abs_diff(gd.result(), ols.beta()), 1e-6);
}

TEST(Zipf, SteepLawHitsFirstRow) {
  ZipfBatchStream s(128, 128, 64, 50.0, 1);
  auto up = s.next();
  EXPECT_EQ(up.rank(), 1u);
  EXPECT_EQ(up.u(0, 0), 1.0);
}

TEST(Zipf, UniformBatchesBehaveLikeCouponCollector) {
  // Expected distinct rows for 64 draws from 128: 128 (1 - (127/128)^64) ~ 50.5.
  ZipfBatchStream s(128, 128, 64, 0.0, 2);
  double mean = 0;
  for (int i = 0; i < 50; ++i) {
    auto up = s.next();
    EXPECT_LE(up.rank(), 64u);
    mean += up.rank();
  }
  mean /= 50;
  EXPECT_NEAR(mean, 128 * (1 - std::pow(127.0 / 128, 64)), 2.0);
}

TEST(Zipf, RankNeverExceedsRows) {
  ZipfBatchStream s(8, 5, 100, 0.0, 3);
  auto up = s.next();
  EXPECT_LE(up.rank(), 8u);
  EXPECT_EQ(up.u.rows(), 8u);
  EXPECT_EQ(up.v.rows(), 5u);
}

TEST(Zipf, Deterministic) {
  ZipfBatchStream a(32, 32, 16, 1.0, 9), b(32, 32, 16, 1.0, 9);
  for (int i = 0; i < 3; ++i) {
    auto x = a.next(), y = b.next();
    EXPECT_EQ(x.u, y.u);
    EXPECT_EQ(x.v, y.v);
  }
}
