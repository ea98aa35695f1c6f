#include "psmrr/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>

#include "psmrr/error.hpp"
#include "psmrr/stats.hpp"

namespace psmrr {
namespace {

/// Sufficient statistics of a design, grouped once so each profile
/// evaluation costs O(groups * p^2 + p^3).
class GroupedProblem {
 public:
  GroupedProblem(const Design& d, const FitOptions& options) : design_(d), options_(options) {
    const auto n = d.n_obs();
    const auto p = static_cast<Eigen::Index>(d.n_fixed());
    std::map<std::string, std::size_t> index;
    for (const auto& g : d.groups) index.emplace(g, 0);
    std::size_t next = 0;
    for (auto& [label, id] : index) id = next++;

    group_of_.resize(n);
    sizes_.assign(index.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      group_of_[i] = index.at(d.groups[i]);
      sizes_[group_of_[i]] += 1.0;
    }

    // Group totals plus the pooled within-group scatter. Splitting X'H^-1X
    // this way avoids the cancellation of X'X - c * sum sum' at large ratios.
    xsum_.assign(index.size(), Eigen::VectorXd::Zero(p));
    ysum_.assign(index.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      xsum_[group_of_[i]] += d.x.row(static_cast<Eigen::Index>(i)).transpose();
      ysum_[group_of_[i]] += d.y(static_cast<Eigen::Index>(i));
    }
    wxx_ = Eigen::MatrixXd::Zero(p, p);
    wxy_ = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = group_of_[i];
      const Eigen::VectorXd xc = d.x.row(static_cast<Eigen::Index>(i)).transpose() - xsum_[g] / sizes_[g];
      const double yc = d.y(static_cast<Eigen::Index>(i)) - ysum_[g] / sizes_[g];
      wxx_.noalias() += xc * xc.transpose();
      wxy_.noalias() += xc * yc;
    }
  }

  std::size_t n_groups() const noexcept { return sizes_.size(); }
  bool all_singletons() const noexcept {
    return std::all_of(sizes_.begin(), sizes_.end(), [](double m) { return m == 1.0; });
  }

  struct Eval {
    double loglik;
    double v2;
    bool v2_clamped;
    Eigen::VectorXd beta;
  };

  /// Profile at variance ratio g = v1 / v2: v2 = r' H^-1 r / N (floored).
  Eval evaluate(double ratio) const { return evaluate_at(ratio, std::nullopt); }

  /// Likelihood at ratio g with v2 held fixed.
  Eval evaluate_fixed(double ratio, double v2) const { return evaluate_at(ratio, v2); }

 private:
  Eval evaluate_at(double ratio, std::optional<double> fixed_v2) const {
    const auto n = static_cast<double>(design_.n_obs());
    const auto groups = sizes_.size();
    // H_g^-1 = I - g/(1 + n_g g) 11', so 1'H_g^-1 1 = n_g / (1 + n_g g).
    Eigen::MatrixXd a = wxx_;
    Eigen::VectorXd b = wxy_;
    double logdet = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
      const double ng = sizes_[g];
      const double w = 1.0 / (ng * (1.0 + ng * ratio));
      a.noalias() += w * xsum_[g] * xsum_[g].transpose();
      b.noalias() += w * ysum_[g] * xsum_[g];
      logdet += std::log1p(ng * ratio);
    }
    Eigen::VectorXd beta = a.ldlt().solve(b);
    const Eigen::VectorXd r = design_.y - design_.x * beta;
    std::vector<double> rsum(groups, 0.0);
    for (std::size_t i = 0; i < group_of_.size(); ++i) rsum[group_of_[i]] += r(static_cast<Eigen::Index>(i));
    double rss = 0.0;
    for (std::size_t i = 0; i < group_of_.size(); ++i) {
      const auto g = group_of_[i];
      const double dev = r(static_cast<Eigen::Index>(i)) - rsum[g] / sizes_[g];
      rss += dev * dev;
    }
    for (std::size_t g = 0; g < groups; ++g) {
      const double ng = sizes_[g];
      rss += rsum[g] * rsum[g] / (ng * (1.0 + ng * ratio));
    }
    double v2 = fixed_v2 ? *fixed_v2 : rss / n;
    const bool clamped = v2 <= options_.v2_floor;
    if (clamped) v2 = options_.v2_floor;
    const double loglik = -0.5 * (n * std::log(2.0 * std::numbers::pi * v2) + logdet + rss / v2);
    return {loglik, v2, clamped, std::move(beta)};
  }

  const Design& design_;
  const FitOptions& options_;
  std::vector<std::size_t> group_of_;
  std::vector<double> sizes_;
  std::vector<Eigen::VectorXd> xsum_;
  std::vector<double> ysum_;
  Eigen::MatrixXd wxx_;
  Eigen::VectorXd wxy_;
};

struct Maximum {
  double t = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
};

/// Grid scan of f over [t_lo, t_hi] followed by golden-section refinement of
/// the bracket around the best grid point.
template <class F>
Maximum maximise(F&& f, double t_lo, double t_hi, const FitOptions& options) {
  const double step = (t_hi - t_lo) / static_cast<double>(options.scan_points - 1);
  std::size_t arg = 0;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < options.scan_points; ++i) {
    const double v = f(t_lo + step * static_cast<double>(i));
    if (v > top) {
      top = v;
      arg = i;
    }
  }
  double lo = t_lo + step * static_cast<double>(arg == 0 ? 0 : arg - 1);
  double hi = t_lo + step * static_cast<double>(std::min(arg + 1, options.scan_points - 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  std::size_t iter = 0;
  while (hi - lo > options.tolerance) {
    if (++iter > options.max_iterations) {
      throw Error(ErrorKind::convergence,
                  "variance-ratio search did not converge in " + std::to_string(options.max_iterations) +
                      " iterations (bracket log-ratio [" + std::to_string(lo) + ", " + std::to_string(hi) + "])");
    }
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  Maximum m{fc >= fd ? c : d, std::max(fc, fd), iter};
  if (top > m.value) {
    m.t = t_lo + step * static_cast<double>(arg);
    m.value = top;
  }
  return m;
}

void validate(const Design& d) {
  const auto n = d.n_obs();
  if (n == 0) throw Error(ErrorKind::empty_input, "design has no observations");
  if (static_cast<std::size_t>(d.x.rows()) != n || d.groups.size() != n) {
    throw Error(ErrorKind::design, "y, X and groups disagree on the number of rows");
  }
  if (d.x.cols() == 0) throw Error(ErrorKind::design, "design has no fixed-effect columns");
  if (!d.columns.empty() && d.columns.size() != d.n_fixed()) {
    throw Error(ErrorKind::design, "column names do not match the columns of X");
  }
  if (!d.y.allFinite() || !d.x.allFinite()) {
    throw Error(ErrorKind::design, "design contains non-finite values");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.x);
  if (static_cast<std::size_t>(qr.rank()) < d.n_fixed()) {
    throw Error(ErrorKind::design, "fixed-effect matrix is rank deficient (rank " +
                                       std::to_string(qr.rank()) + " < " +
                                       std::to_string(d.n_fixed()) + ")");
  }
}

}  // namespace

Design Design::without_columns(std::span<const std::size_t> drop) const {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (std::find(drop.begin(), drop.end(), static_cast<std::size_t>(c)) == drop.end()) keep.push_back(c);
  }
  Design out;
  out.y = y;
  out.groups = groups;
  out.x.resize(x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.x.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]);
    if (!columns.empty()) out.columns.push_back(columns[static_cast<std::size_t>(keep[j])]);
  }
  return out;
}

MixedFit fit_mixed(const Design& design, const FitOptions& options) {
  validate(design);
  GroupedProblem problem(design, options);
  if (problem.n_groups() < 2) {
    throw Error(ErrorKind::identifiability, "random intercept needs at least two groups, got " +
                                                std::to_string(problem.n_groups()));
  }
  if (!(options.ratio_min > 0.0) || !(options.ratio_max > options.ratio_min) || options.scan_points < 3) {
    throw Error(ErrorKind::invalid_parameter, "invalid variance-ratio search settings");
  }

  MixedFit fit;
  fit.n_obs = design.n_obs();
  fit.n_groups = problem.n_groups();
  fit.n_params = design.n_fixed() + 2;
  fit.identifiable = !problem.all_singletons();

  auto at_zero = problem.evaluate(0.0);
  double best_ratio = 0.0;
  auto best = at_zero;

  // With one row per group only v1 + v2 is identified; the profile is flat in
  // the ratio and the split is reported at v1 = 0.
  if (fit.identifiable) {
    const auto m = maximise([&](double t) { return problem.evaluate(std::exp(t)).loglik; },
                            std::log(options.ratio_min), std::log(options.ratio_max), options);
    fit.iterations = m.iterations;
    if (m.value > at_zero.loglik) {
      best_ratio = std::exp(m.t);
      best = problem.evaluate(best_ratio);
      fit.ratio_at_bound = best_ratio >= options.ratio_max * (1.0 - 1e-6);
    }

    // When v2 reaches its floor, or the ratio runs into its cap because the
    // within-group spread vanishes, the constrained optimum lies on v2 = floor;
    // search v1 directly there.
    if (best.v2_clamped || fit.ratio_at_bound) {
      const double floor = options.v2_floor;
      const double spread = std::max((design.y.array() - design.y.mean()).square().mean(), floor);
      const auto pinned = maximise(
          [&](double t) { return problem.evaluate_fixed(std::exp(t) / floor, floor).loglik; },
          std::log(floor * options.ratio_min), std::log(spread) + std::log(1e4), options);
      fit.iterations += pinned.iterations;
      if (pinned.value > best.loglik) {
        best_ratio = std::exp(pinned.t) / floor;
        best = problem.evaluate_fixed(best_ratio, floor);
        fit.ratio_at_bound = false;
      }
    }
  }

  fit.v1_clamped = best_ratio == 0.0;
  fit.beta = std::move(best.beta);
  fit.v2 = best.v2;
  fit.v2_clamped = best.v2_clamped;
  fit.v1 = best_ratio * best.v2;
  fit.loglik = best.loglik;
  if (!std::isfinite(fit.loglik)) {
    throw Error(ErrorKind::convergence, "log-likelihood is not finite at the optimum");
  }
  return fit;
}

MixedFit fit_random_intercept(std::span<const double> y, std::span<const std::string> groups,
                              const FitOptions& options) {
  Design d;
  d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
  d.groups.assign(groups.begin(), groups.end());
  d.columns = {"intercept"};
  return fit_mixed(d, options);
}

LoAReport loa_from(double bias, double sd, std::string method) {
  if (!(sd >= 0.0) || !std::isfinite(bias)) {
    throw Error(ErrorKind::invalid_parameter, "limits of agreement need a finite bias and sd >= 0");
  }
  return LoAReport{bias, sd, bias - kLoaZ * sd, bias + kLoaZ * sd, std::move(method)};
}

LoAReport loa_95(const MixedFit& full_fit, const MixedFit& bias_fit, std::string method) {
  if (bias_fit.beta.size() == 0) throw Error(ErrorKind::invalid_parameter, "bias fit has no intercept");
  return loa_from(bias_fit.beta(0), std::sqrt(full_fit.v1 + full_fit.v2), std::move(method));
}

LrtResult likelihood_ratio_test(const MixedFit& full, const MixedFit& reduced) {
  if (full.n_params <= reduced.n_params) {
    throw Error(ErrorKind::nesting, "reduced model must have fewer parameters than the full model");
  }
  if (full.n_obs != reduced.n_obs) {
    throw Error(ErrorKind::nesting, "nested models must be fitted to the same observations");
  }
  LrtResult out;
  out.chi2 = std::max(0.0, 2.0 * (full.loglik - reduced.loglik));
  out.df = full.n_params - reduced.n_params;
  out.p = chi2_sf(out.chi2, static_cast<double>(out.df));
  return out;
}

AgreementAnalysis analyse_agreement(const Design& design, std::span<const FixedEffect> effects,
                                    std::string method, const FitOptions& options) {
  AgreementAnalysis out;
  out.method = method;
  out.full = fit_mixed(design, options);
  const std::vector<double> y(design.y.data(), design.y.data() + design.y.size());
  out.bias = fit_random_intercept(y, design.groups, options);
  out.loa = loa_95(out.full, out.bias, method);
  for (const auto& effect : effects) {
    EffectExclusion ex;
    ex.effect = effect.name;
    ex.reduced = fit_mixed(design.without_columns(effect.columns), options);
    ex.intercept = ex.reduced.beta(0);
    ex.loa = loa_from(out.bias.beta(0), std::sqrt(ex.reduced.v1 + ex.reduced.v2), method);
    ex.lrt = likelihood_ratio_test(out.full, ex.reduced);
    out.exclusions.push_back(std::move(ex));
  }
  return out;
}

}  // namespace psmrr
