#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "psmrr/frames.hpp"
#include "psmrr/preprocess.hpp"

namespace psmrr {

/// One-sided power spectrum: bins k = 0 .. n_fft/2 at k * fs / n_fft Hz.
struct Spectrum {
  std::vector<double> freqs;
  std::vector<double> power;
  std::size_t n_fft = 0;
};

/// Closed frequency interval in Hz used to restrict the peak search.
struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

enum class RrMethod { baseline, modified };

[[nodiscard]] std::string_view to_string(RrMethod method) noexcept;

struct RrEstimate {
  double rr_bpm = 0.0;
  std::vector<double> per_window_peaks;  ///< Hz, in time order
  double window_s = 0.0;
  double overlap = 0.0;
  RrMethod method = RrMethod::baseline;
};

struct WindowOptions {
  double window_s = 20.0;
  double overlap = 0.5;
  std::optional<Band> band;
};

/// |DFT(x)[k]|^2 for k = 0 .. floor(N/2): rectangular window, no padding.
[[nodiscard]] Spectrum periodogram(const ConditionedSeries& series);

/// Sum of |X_k|^2 over all N bins, reconstructed from the one-sided spectrum.
/// Equals N * sum(x^2) (Parseval).
[[nodiscard]] double two_sided_power(const Spectrum& spec);

/// Frequency of the strongest bin. Bin 0 is skipped when exclude_dc, bins
/// outside `band` are skipped when given, and ties go to the lower frequency.
/// Throws ErrorKind::no_peak when every candidate bin is zero.
[[nodiscard]] double peak_frequency(const Spectrum& spec, bool exclude_dc = true,
                                    std::optional<Band> band = std::nullopt);

/// Start offsets of the analysis windows: length round(window_s * fs), hop
/// round((1 - overlap) * window_s * fs); trailing partial windows are dropped.
[[nodiscard]] std::vector<std::size_t> window_starts(std::size_t n_samples, double fs,
                                                     const WindowOptions& options);

/// Baseline estimator: per window remove the mean, take the periodogram, pick
/// the peak; report 60 * mean(peak frequencies).
[[nodiscard]] RrEstimate estimate_rr(const PressureSeries& series, const WindowOptions& options = {});

/// Motion-suppressed estimator: isolate_breathing over the whole record, then
/// the baseline pipeline.
[[nodiscard]] RrEstimate estimate_rr_modified(const PressureSeries& series,
                                              double smooth_window_s = 1.5,
                                              const WindowOptions& options = {});

}  // namespace psmrr
