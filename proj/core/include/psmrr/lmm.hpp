#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace psmrr {

/// Random-intercept regression problem: y = X beta + Z b + e, where Z maps
/// each row to its group, b ~ N(0, v1), e ~ N(0, v2).
struct Design {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;
  std::vector<std::string> groups;
  std::vector<std::string> columns;  ///< names of the columns of x

  [[nodiscard]] std::size_t n_obs() const noexcept { return static_cast<std::size_t>(y.size()); }
  [[nodiscard]] std::size_t n_fixed() const noexcept { return static_cast<std::size_t>(x.cols()); }

  /// Copy of the design without the listed columns of x.
  [[nodiscard]] Design without_columns(std::span<const std::size_t> drop) const;
};

struct MixedFit {
  Eigen::VectorXd beta;
  double v1 = 0.0;      ///< between-group variance
  double v2 = 0.0;      ///< residual variance
  double loglik = 0.0;  ///< maximised ML log-likelihood
  std::size_t n_params = 0;  ///< fixed effects + 2 variance components
  std::size_t n_obs = 0;
  std::size_t n_groups = 0;
  bool v1_clamped = false;      ///< optimum on the v1 = 0 boundary
  bool v2_clamped = false;      ///< residual variance hit the floor
  bool ratio_at_bound = false;  ///< v1/v2 ran into FitOptions::ratio_max
  bool identifiable = true;     ///< false when every group has one row
  std::size_t iterations = 0;
};

struct FitOptions {
  double v2_floor = 1e-10;
  double ratio_max = 1e8;
  double ratio_min = 1e-8;  ///< smallest positive ratio on the scan grid
  std::size_t scan_points = 161;
  std::size_t max_iterations = 200;
  double tolerance = 1e-10;  ///< on log(v1 / v2)
};

/// Maximum-likelihood fit (not REML).
///
/// The likelihood is profiled over the variance ratio g = v1 / v2: for a given
/// g, beta is the GLS solution and v2 = r' H^-1 r / N, with H = I + g Z Z'
/// block-diagonal so each group contributes in closed form. log g is scanned
/// on a grid, refined by golden-section search, and compared with g = 0.
[[nodiscard]] MixedFit fit_mixed(const Design& design, const FitOptions& options = {});

/// fit_mixed with an intercept-only X; beta[0] is the mean bias.
[[nodiscard]] MixedFit fit_random_intercept(std::span<const double> y,
                                            std::span<const std::string> groups,
                                            const FitOptions& options = {});

struct LoAReport {
  double bias = 0.0;
  double sd = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string method;

  [[nodiscard]] double width() const noexcept { return upper - lower; }
};

inline constexpr double kLoaZ = 1.96;

/// sd = sqrt(v1 + v2) of the full fit, bias = intercept of the bias fit,
/// bounds bias -/+ 1.96 sd.
[[nodiscard]] LoAReport loa_95(const MixedFit& full_fit, const MixedFit& bias_fit,
                               std::string method = {});
[[nodiscard]] LoAReport loa_from(double bias, double sd, std::string method = {});

struct LrtResult {
  double chi2 = 0.0;
  std::size_t df = 0;
  double p = 1.0;
};

[[nodiscard]] LrtResult likelihood_ratio_test(const MixedFit& full, const MixedFit& reduced);

/// A named fixed effect and the columns of X that encode it.
struct FixedEffect {
  std::string name;
  std::vector<std::size_t> columns;
};

struct EffectExclusion {
  std::string effect;
  LoAReport loa;      ///< bias of the random-intercept fit, sd of the reduced fit
  double intercept = 0.0;  ///< reduced model intercept
  LrtResult lrt;
  MixedFit reduced;
};

struct AgreementAnalysis {
  std::string method;
  MixedFit full;
  MixedFit bias;
  LoAReport loa;
  std::vector<EffectExclusion> exclusions;
};

/// Full limits-of-agreement procedure: fit the full model, the random-intercept
/// model, combine, then drop each effect in turn and test it by LRT.
[[nodiscard]] AgreementAnalysis analyse_agreement(const Design& design,
                                                  std::span<const FixedEffect> effects,
                                                  std::string method = {},
                                                  const FitOptions& options = {});

}  // namespace psmrr
