#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace oracle {

DenseEval dense_loglik(const psmrr::Design& design, double v1, double v2) {
  const auto n = static_cast<Eigen::Index>(design.n_obs());
  Eigen::MatrixXd v = v2 * Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (design.groups[static_cast<std::size_t>(i)] == design.groups[static_cast<std::size_t>(j)]) v(i, j) += v1;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(v);
  const Eigen::MatrixXd vinv_x = llt.solve(design.x);
  const Eigen::VectorXd vinv_y = llt.solve(design.y);
  DenseEval out;
  out.beta = (design.x.transpose() * vinv_x).ldlt().solve(design.x.transpose() * vinv_y);
  const Eigen::VectorXd r = design.y - design.x * out.beta;
  const double quad = r.dot(llt.solve(r));
  const Eigen::MatrixXd l = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(l(i, i));
  out.loglik = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + logdet + quad);
  return out;
}

GridOptimum grid_search_ml(const psmrr::Design& design, int levels, int points) {
  constexpr double kV2Floor = 1e-10;
  const double var_y = std::max((design.y.array() - design.y.mean()).square().mean(), 1e-12);
  const double centre = std::log(var_y);

  // Boundary line v1 = 0: one-dimensional zoom over log v2.
  GridOptimum zero{0.0, 0.0, -std::numeric_limits<double>::infinity(), 0.0, 0.0};
  {
    double lo = std::max(centre - 25.0, std::log(kV2Floor)), hi = centre + 5.0;
    double best_l = lo;
    for (int level = 0; level < levels; ++level) {
      const double step = (hi - lo) / (points - 1);
      for (int j = 0; j < points; ++j) {
        const double l = lo + step * j;
        const double ll = dense_loglik(design, 0.0, std::exp(l)).loglik;
        if (ll > zero.loglik) {
          zero = {0.0, std::exp(l), ll, 0.0, std::exp(l) * (std::exp(step) - 1.0)};
          best_l = l;
        }
      }
      lo = std::max(best_l - 2.0 * step, std::log(kV2Floor));
      hi = best_l + 2.0 * step;
    }
  }

  // Interior: two-dimensional zoom over (log v1, log v2). The first level is
  // a fine 151 x 151 grid so a shallow interior optimum is not lost to the
  // flat v1 -> 0 plateau; each later level keeps +/- 5 cells around the best
  // point, so the window halves per level and a diagonal ridge cannot slip
  // out of it.
  GridOptimum inner{0.0, 0.0, -std::numeric_limits<double>::infinity(), 0.0, 0.0};
  double lo1 = centre - 25.0, hi1 = centre + 5.0;
  double lo2 = std::max(centre - 25.0, std::log(kV2Floor)), hi2 = centre + 5.0;
  double b1 = lo1, b2 = lo2;  // best point so far, carried across levels
  for (int level = 0; level < 2 * levels + 8; ++level) {
    const int n_pts = level == 0 ? 151 : points;
    const double s1 = (hi1 - lo1) / (n_pts - 1);
    const double s2 = (hi2 - lo2) / (n_pts - 1);
    for (int i = 0; i < n_pts; ++i) {
      const double l1 = lo1 + s1 * i;
      for (int j = 0; j < n_pts; ++j) {
        const double l2 = lo2 + s2 * j;
        const double ll = dense_loglik(design, std::exp(l1), std::exp(l2)).loglik;
        if (ll > inner.loglik) {
          inner = {std::exp(l1), std::exp(l2), ll, std::exp(l1) * (std::exp(s1) - 1.0),
                   std::exp(l2) * (std::exp(s2) - 1.0)};
          b1 = l1;
          b2 = l2;
        }
      }
    }
    const double w1 = level == 0 ? 3.0 * s1 : 5.0 * s1;
    const double w2 = level == 0 ? 3.0 * s2 : 5.0 * s2;
    lo1 = b1 - w1;
    hi1 = b1 + w1;
    lo2 = std::max(b2 - w2, std::log(kV2Floor));
    hi2 = b2 + w2;
  }
  if (zero.loglik >= inner.loglik) {
    // A boundary optimum: the interior search ran towards v1 -> 0, so the
    // cell in v1 reaches down to zero.
    zero.cell_v1 = std::max(inner.v1, inner.cell_v1);
    return zero;
  }
  return inner;
}

psmrr::Design random_intercept_design(std::uint32_t seed, std::vector<std::size_t> group_sizes, double v1,
                                      double v2, bool with_covariate) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::size_t n = 0;
  for (auto s : group_sizes) n += s;
  psmrr::Design d;
  d.y.resize(static_cast<Eigen::Index>(n));
  d.x.resize(static_cast<Eigen::Index>(n), with_covariate ? 2 : 1);
  d.columns = with_covariate ? std::vector<std::string>{"intercept", "x1"} : std::vector<std::string>{"intercept"};
  Eigen::Index row = 0;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    const double u = std::sqrt(v1) * z(gen);
    for (std::size_t i = 0; i < group_sizes[g]; ++i, ++row) {
      const double x1 = coin(gen) ? 1.0 : 0.0;
      d.x(row, 0) = 1.0;
      if (with_covariate) d.x(row, 1) = x1;
      d.y(row) = 2.0 + (with_covariate ? 1.5 * x1 : 0.0) + u + std::sqrt(v2) * z(gen);
      d.groups.push_back("g" + std::to_string(g));
    }
  }
  return d;
}

namespace {

double chi2_density(double t, double df) {
  const double k = df / 2.0;
  return std::exp((k - 1.0) * std::log(t) - t / 2.0 - k * std::log(2.0) - std::lgamma(k));
}

}  // namespace

double chi2_sf_quadrature(double x, double df, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double u_max = std::sqrt(200.0 + df + 60.0 * std::sqrt(df));
  const auto g = [&](double u) {
    const double t = x + u * u;
    if (t <= 0.0) {
      // x = 0, u = 0: the limit of 2u f(u^2) is non-zero only for df = 1
      return df == 1.0 ? 2.0 / std::sqrt(2.0 * std::numbers::pi) : 0.0;
    }
    return 2.0 * u * chi2_density(t, df);
  };
  const double h = u_max / intervals;
  double sum = g(0.0) + g(u_max);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * g(h * i);
  return sum * h / 3.0;
}

std::vector<double> direct_dft_power(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const long double arg = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) /
                              static_cast<long double>(n);
      re += x[t] * std::cos(arg);
      im += x[t] * std::sin(arg);
    }
    out[k] = static_cast<double>(re * re + im * im);
  }
  return out;
}

double residual_transfer(double f_hz, double fs, std::size_t w) {
  const auto lo = -static_cast<long>((w - 1) / 2);
  const auto hi = static_cast<long>(w / 2);
  std::complex<double> h{0.0, 0.0};
  for (long m = lo; m <= hi; ++m) {
    h += std::polar(1.0, 2.0 * std::numbers::pi * f_hz * static_cast<double>(m) / fs);
  }
  h /= static_cast<double>(w);
  return std::abs(1.0 - h);
}

std::vector<double> block_bootstrap_drift(std::span<const double> x, std::size_t block,
                                          std::size_t n_boot, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> start(0, x.size() - block);
  const std::size_t n_blocks = x.size() / block;
  std::vector<double> out;
  out.reserve(n_boot);
  std::vector<double> sample;
  for (std::size_t b = 0; b < n_boot; ++b) {
    sample.clear();
    for (std::size_t k = 0; k < n_blocks; ++k) {
      const std::size_t s = start(gen);
      sample.insert(sample.end(), x.begin() + static_cast<std::ptrdiff_t>(s),
                    x.begin() + static_cast<std::ptrdiff_t>(s + block));
    }
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(sample.size());
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    out.push_back(100.0 * std::sqrt(ss / static_cast<double>(sample.size())) / mean);
  }
  return out;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace oracle
