#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "psmrr/lmm.hpp"
#include "support.hpp"

using namespace psmrr;
using oracle::random_intercept_design;
using testing_support::kind_of;

namespace {

Design intercept_design(std::vector<double> y, std::vector<std::string> groups) {
  Design d;
  d.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
  d.groups = std::move(groups);
  d.columns = {"intercept"};
  return d;
}

void expect_matches_oracle(const Design& d) {
  const auto fit = fit_mixed(d);
  const auto grid = oracle::grid_search_ml(d);
  EXPECT_NEAR(fit.loglik, grid.loglik, 1e-6);
  EXPECT_GE(fit.loglik, grid.loglik - 1e-9);
  const auto close = [](double ours, double ref, double cell) {
    return std::abs(ours - ref) <= 0.02 * std::abs(ref) || std::abs(ours - ref) <= cell;
  };
  EXPECT_TRUE(close(fit.v1, grid.v1, grid.cell_v1)) << fit.v1 << " vs " << grid.v1;
  EXPECT_TRUE(close(fit.v2, grid.v2, grid.cell_v2)) << fit.v2 << " vs " << grid.v2;
  // The reported log-likelihood is the dense likelihood at the reported optimum.
  const auto dense = oracle::dense_loglik(d, fit.v1, fit.v2);
  EXPECT_NEAR(fit.loglik, dense.loglik, 1e-8 * std::max(1.0, std::abs(dense.loglik)));
  EXPECT_LT((fit.beta - dense.beta).norm(), 1e-8);
}

Design permuted(const Design& d, std::uint32_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d.y.size()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 gen(seed);
  std::shuffle(order.begin(), order.end(), gen);
  Design p = d;
  for (std::size_t i = 0; i < order.size(); ++i) {
    p.y(static_cast<Eigen::Index>(i)) = d.y(order[i]);
    p.x.row(static_cast<Eigen::Index>(i)) = d.x.row(order[i]);
    p.groups[i] = d.groups[static_cast<std::size_t>(order[i])];
  }
  return p;
}

}  // namespace

TEST(FitMixed, OracleBalancedTwoGroups) { expect_matches_oracle(random_intercept_design(1, {8, 8}, 1.0, 0.5)); }

TEST(FitMixed, OracleUnbalancedThreeGroups) { expect_matches_oracle(random_intercept_design(2, {6, 15, 7}, 4.0, 1.0)); }

TEST(FitMixed, OracleZeroBetweenGroupVariance) {
  const auto d = random_intercept_design(3, {7, 9, 12}, 0.0, 2.0);
  expect_matches_oracle(d);
  const auto fit = fit_mixed(d);
  EXPECT_LT(fit.v1, 0.05 * fit.v2);
}

TEST(FitMixed, OracleInterceptOnlyFiveGroups) {
  expect_matches_oracle(random_intercept_design(4, {3, 5, 4, 6, 2}, 2.0, 0.3, false));
}

TEST(FitMixed, ConstantResponseClamps) {
  const auto d = intercept_design({2.5, 2.5, 2.5, 2.5, 2.5, 2.5}, {"a", "a", "b", "b", "c", "c"});
  const auto fit = fit_mixed(d);
  EXPECT_NEAR(fit.beta(0), 2.5, 1e-12);
  EXPECT_EQ(fit.v1, 0.0);
  EXPECT_EQ(fit.v2, FitOptions{}.v2_floor);
  EXPECT_TRUE(fit.v2_clamped);
  EXPECT_TRUE(std::isfinite(fit.loglik));
}

TEST(FitRandomIntercept, BalancedBiasIsGrandMean) {
  const std::vector<double> y{1, 1, 3, 3};
  const std::vector<std::string> g{"A", "A", "B", "B"};
  const auto fit = fit_random_intercept(y, g);
  EXPECT_NEAR(fit.beta(0), 2.0, 1e-10);
  // No within-group spread: v2 sits on its floor and v1 takes the spread of
  // the group means. Closed form on that boundary, maximised over v1:
  // ll(v1) = -0.5 (4 log(2 pi v2) + 2 log(1 + 2 v1 / v2) + 4 / (v2 + 2 v1)).
  EXPECT_TRUE(fit.v2_clamped);
  const double v2 = FitOptions{}.v2_floor;
  const auto closed = [&](double v1) {
    return -0.5 * (4.0 * std::log(2.0 * std::numbers::pi * v2) + 2.0 * std::log1p(2.0 * v1 / v2) +
                   4.0 / (v2 + 2.0 * v1));
  };
  EXPECT_NEAR(fit.v1, 1.0 - v2 / 2.0, 1e-6);
  EXPECT_NEAR(fit.loglik, closed(fit.v1), 1e-9);
  for (double v1 : {0.9, 0.99, 0.999, 1.001, 1.01, 1.1}) EXPECT_GE(fit.loglik, closed(v1));
}

TEST(FitRandomIntercept, BalancedMeanMatchesOracle) {
  const auto d = random_intercept_design(12, {6, 6}, 1.0, 0.5, false);
  const auto fit = fit_mixed(d);
  EXPECT_NEAR(fit.beta(0), d.y.mean(), 1e-9);
  EXPECT_NEAR(fit.loglik, oracle::grid_search_ml(d).loglik, 1e-6);
}

TEST(FitRandomIntercept, AllZero) {
  const std::vector<double> y(6, 0.0);
  const std::vector<std::string> g{"a", "b", "a", "b", "c", "c"};
  const auto fit = fit_random_intercept(y, g);
  EXPECT_EQ(fit.beta(0), 0.0);
  EXPECT_EQ(fit.v1, 0.0);
}

TEST(FitRandomIntercept, SingletonGroupsFlagged) {
  const std::vector<double> y{1.0, 2.0, 4.0};
  const std::vector<std::string> g{"a", "b", "c"};
  const auto fit = fit_random_intercept(y, g);
  EXPECT_FALSE(fit.identifiable);
  EXPECT_NEAR(fit.beta(0), 7.0 / 3.0, 1e-12);
  EXPECT_GT(fit.v2, 0.0);
}

TEST(FitMixed, Errors) {
  auto d = random_intercept_design(5, {4, 4}, 1.0, 1.0);
  auto one_group = d;
  std::fill(one_group.groups.begin(), one_group.groups.end(), "only");
  EXPECT_EQ(kind_of([&] { (void)fit_mixed(one_group); }), ErrorKind::identifiability);

  auto collinear = d;
  collinear.x.conservativeResize(Eigen::NoChange, 3);
  collinear.x.col(2) = 2.0 * collinear.x.col(1);
  collinear.columns.push_back("dup");
  EXPECT_EQ(kind_of([&] { (void)fit_mixed(collinear); }), ErrorKind::design);

  auto mismatch = d;
  mismatch.groups.pop_back();
  EXPECT_EQ(kind_of([&] { (void)fit_mixed(mismatch); }), ErrorKind::design);

  FitOptions tiny;
  tiny.max_iterations = 1;
  EXPECT_EQ(kind_of([&] { (void)fit_mixed(d, tiny); }), ErrorKind::convergence);
}

TEST(FitMixed, PermutationInvariant) {
  const auto d = random_intercept_design(6, {5, 9, 4}, 1.5, 0.7);
  const auto ref = fit_mixed(d);
  for (std::uint32_t s = 0; s < 5; ++s) {
    const auto fit = fit_mixed(permuted(d, s));
    EXPECT_NEAR(fit.loglik, ref.loglik, 1e-9);
    EXPECT_NEAR(fit.v1, ref.v1, 1e-6 * (1.0 + ref.v1));
    EXPECT_NEAR(fit.v2, ref.v2, 1e-6 * ref.v2);
    EXPECT_LT((fit.beta - ref.beta).norm(), 1e-8);
  }
}

TEST(FitMixed, InvariantsOnRandomDesigns) {
  for (std::uint32_t s = 10; s < 30; ++s) {
    const auto fit = fit_mixed(random_intercept_design(s, {3 + s % 4, 5, 2 + s % 3}, (s % 3) * 0.8, 0.4 + 0.1 * (s % 5)));
    EXPECT_GE(fit.v1, 0.0);
    EXPECT_GT(fit.v2, 0.0);
    EXPECT_TRUE(std::isfinite(fit.loglik));
    EXPECT_EQ(fit.n_params, 4u);
  }
}

TEST(Loa, ReportedIntervals) {
  const auto a = loa_from(0.56, 1.436);
  EXPECT_NEAR(a.lower, -2.26, 0.02);
  EXPECT_NEAR(a.upper, 3.37, 0.02);
  const auto b = loa_from(5.38, 0.888);
  EXPECT_NEAR(b.lower, 3.64, 0.02);
  EXPECT_NEAR(b.upper, 7.12, 0.02);
}

TEST(Loa, ZeroSdCollapses) {
  const auto r = loa_from(1.25, 0.0);
  EXPECT_EQ(r.lower, 1.25);
  EXPECT_EQ(r.upper, 1.25);
}

TEST(Loa, CombinesFits) {
  const auto d = random_intercept_design(7, {6, 6, 6}, 1.0, 1.0);
  const auto full = fit_mixed(d);
  const auto bias = fit_random_intercept(std::span<const double>(d.y.data(), d.n_obs()), d.groups);
  const auto r = loa_95(full, bias, "m");
  EXPECT_DOUBLE_EQ(r.bias, bias.beta(0));
  EXPECT_DOUBLE_EQ(r.sd, std::sqrt(full.v1 + full.v2));
  EXPECT_DOUBLE_EQ(r.lower, r.bias - kLoaZ * r.sd);
  EXPECT_DOUBLE_EQ(r.upper, r.bias + kLoaZ * r.sd);
  EXPECT_EQ(r.method, "m");
}

TEST(Loa, ShiftMovesBoundsTogether) {
  auto d = random_intercept_design(8, {5, 7, 6}, 0.8, 0.6);
  const std::vector<FixedEffect> effects{{"x1", {1}}};
  const auto a = analyse_agreement(d, effects);
  d.y.array() += 3.0;
  const auto b = analyse_agreement(d, effects);
  EXPECT_NEAR(b.loa.bias - a.loa.bias, 3.0, 1e-8);
  EXPECT_NEAR(b.loa.lower - a.loa.lower, 3.0, 1e-7);
  EXPECT_NEAR(b.loa.upper - a.loa.upper, 3.0, 1e-7);
  EXPECT_NEAR(b.loa.sd, a.loa.sd, 1e-7);
}

TEST(Lrt, IdenticalModels) {
  const auto fit = fit_mixed(random_intercept_design(9, {5, 5}, 1.0, 1.0));
  EXPECT_EQ(kind_of([&] { (void)likelihood_ratio_test(fit, fit); }), ErrorKind::nesting);
  auto reduced = fit;
  reduced.n_params -= 1;
  const auto t = likelihood_ratio_test(fit, reduced);
  EXPECT_EQ(t.chi2, 0.0);
  EXPECT_EQ(t.p, 1.0);
  EXPECT_EQ(t.df, 1u);
}

TEST(Lrt, NestedFitsNonNegative) {
  for (std::uint32_t s = 40; s < 60; ++s) {
    const auto d = random_intercept_design(s, {4, 6, 5}, 0.5, 1.0);
    const std::vector<std::size_t> drop{1};
    const auto full = fit_mixed(d);
    const auto reduced = fit_mixed(d.without_columns(drop));
    EXPECT_GE(full.loglik, reduced.loglik - 1e-8);
    const auto t = likelihood_ratio_test(full, reduced);
    EXPECT_GE(t.chi2, 0.0);
    EXPECT_GE(t.p, 0.0);
    EXPECT_LE(t.p, 1.0);
    EXPECT_EQ(t.df, 1u);
  }
}

TEST(Lrt, DetectsStrongEffect) {
  const auto d = random_intercept_design(61, {10, 10, 10}, 0.5, 0.2);
  const std::vector<FixedEffect> effects{{"x1", {1}}};
  const auto a = analyse_agreement(d, effects, "m");
  ASSERT_EQ(a.exclusions.size(), 1u);
  EXPECT_EQ(a.exclusions[0].effect, "x1");
  EXPECT_LT(a.exclusions[0].lrt.p, 1e-3);
  EXPECT_EQ(a.exclusions[0].loa.bias, a.loa.bias);
}
