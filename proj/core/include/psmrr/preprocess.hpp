#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "psmrr/frames.hpp"

namespace psmrr {

enum class Conditioning { dc_removed, motion_suppressed };

/// Series after conditioning, ready for spectral analysis.
class ConditionedSeries {
 public:
  ConditionedSeries(std::vector<double> values, double fs, Conditioning tag);

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double fs() const noexcept { return fs_; }
  [[nodiscard]] Conditioning tag() const noexcept { return tag_; }

 private:
  std::vector<double> values_;
  double fs_;
  Conditioning tag_;
};

/// Sample mean with extended-precision accumulation. A constant input yields
/// exactly that constant, so DC removal of a constant gives exact zeros.
[[nodiscard]] double dc_level(std::span<const double> values);

[[nodiscard]] ConditionedSeries remove_dc(const PressureSeries& series);

/// Number of samples the smoother spans for a given duration: round(window_s * fs).
[[nodiscard]] std::size_t smoothing_length(double window_s, double fs);

/// Centred moving mean of length w = smoothing_length(window_s, fs).
///
/// Sample i averages [i - (w-1)/2, i + w/2] (integer division), so even
/// windows centre on the earlier of the two middle samples. Near the edges
/// the window is truncated to the samples that exist.
[[nodiscard]] PressureSeries moving_average(const PressureSeries& series, double window_s = 1.5);

/// series - moving_average(series), then DC-removed.
[[nodiscard]] ConditionedSeries isolate_breathing(const PressureSeries& series,
                                                  double window_s = 1.5);

struct SnrOptions {
  double f0 = 1.0;                ///< Hz
  std::size_t n_harmonics = 1;    ///< multiples of f0 beyond the fundamental
  double band_halfwidth = 0.05;   ///< Hz
};

inline constexpr double kSnrInfinite = std::numeric_limits<double>::infinity();
inline constexpr double kSnrRestFloor = 1e-12;

/// 10 log10(P_signal / P_rest) over the periodogram of the series.
///
/// P_signal sums bins within band_halfwidth of f0, 2 f0, ... (1 + n_harmonics)
/// f0; P_rest is every other non-DC bin. When P_rest < 1e-12 * P_total the
/// result is kSnrInfinite.
[[nodiscard]] double snr_db(const ConditionedSeries& series, const SnrOptions& options);

}  // namespace psmrr
