#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "psmrr/frames.hpp"

namespace psmrr {

/// Characterisation of one static-load recording.
struct MetrologyReport {
  double p_avg = 0.0;             ///< psi
  double contact_area_pct = 0.0;  ///< mean share of ROI sensels above the floor
  double drift_pct = 0.0;
  double creep_pct = 0.0;  ///< per minute
  double drift_std_pct = 0.0;
  std::size_t n_samples = 0;
  double fs = 0.0;
};

struct BootstrapOptions {
  std::size_t block_size = 100;
  std::size_t n_boot = 2000;
  std::uint64_t seed = 0;
};

/// Mean of the series (P_avg); compensated accumulation.
[[nodiscard]] double mean_pressure(const PressureSeries& series);

/// Population standard deviation of the samples as a percentage of their
/// mean: 100 * sqrt(sum((P_n - P_avg)^2) / N) / P_avg. Divisor is N, not N-1.
[[nodiscard]] double drift_percent(const PressureSeries& series);

/// One-minute creep: (P_N - P_1) / P_avg * (60 fs / N) * 100, where P_1 and P_N
/// are means over the first and last `endpoint_window_s` seconds.
[[nodiscard]] double creep_percent(const PressureSeries& series, double endpoint_window_s = 5.0);

/// Moving block bootstrap replicates of drift_percent.
///
/// Each replicate concatenates floor(N / block_size) blocks whose start
/// indices are drawn uniformly from [0, N - block_size] (overlapping,
/// non-circular). The remainder N mod block_size is not filled. Replicate b
/// draws from its own stream Rng(seed, b), so the result does not depend on
/// evaluation order.
[[nodiscard]] std::vector<double> bootstrap_drift_samples(const PressureSeries& series,
                                                          const BootstrapOptions& options);

/// Sample standard deviation (divisor n_boot - 1) of bootstrap_drift_samples.
[[nodiscard]] double bootstrap_drift_std(const PressureSeries& series,
                                         const BootstrapOptions& options);

[[nodiscard]] MetrologyReport characterise(const AveragedSeries& averaged,
                                           double endpoint_window_s,
                                           const BootstrapOptions& options);

}  // namespace psmrr
