#pragma once

#include <span>

namespace psmrr {

/// Regularised upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
[[nodiscard]] double gamma_q(double a, double x);

/// Upper-tail probability of the chi-square distribution, Q(df/2, x/2).
[[nodiscard]] double chi2_sf(double x, double df);

/// Pearson product-moment correlation. Throws ErrorKind::undefined_correlation
/// if either input is constant.
[[nodiscard]] double pearson_r(std::span<const double> a, std::span<const double> b);

}  // namespace psmrr
