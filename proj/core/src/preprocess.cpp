#include "psmrr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psmrr/error.hpp"
#include "psmrr/spectral.hpp"

namespace psmrr {

ConditionedSeries::ConditionedSeries(std::vector<double> values, double fs, Conditioning tag)
    : values_(std::move(values)), fs_(fs), tag_(tag) {
  if (values_.empty()) throw Error(ErrorKind::empty_input, "conditioned series is empty");
  if (!(fs_ > 0.0)) throw Error(ErrorKind::invalid_parameter, "sampling rate must be positive");
}

double dc_level(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::empty_input, "cannot take the mean of nothing");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    return values.front();
  }
  long double sum = 0.0L;
  for (double v : values) sum += v;
  return static_cast<double>(sum / static_cast<long double>(values.size()));
}

ConditionedSeries remove_dc(const PressureSeries& series) {
  const auto in = series.values();
  const double mean = dc_level(in);
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), [mean](double v) { return v - mean; });
  return ConditionedSeries(std::move(out), series.fs(), Conditioning::dc_removed);
}

std::size_t smoothing_length(double window_s, double fs) {
  const double w = std::round(window_s * fs);
  if (!(w >= 1.0)) {
    throw Error(ErrorKind::invalid_parameter,
                "smoothing window of " + std::to_string(window_s) + " s is shorter than one sample");
  }
  return static_cast<std::size_t>(w);
}

PressureSeries moving_average(const PressureSeries& series, double window_s) {
  const std::size_t w = smoothing_length(window_s, series.fs());
  const auto in = series.values();
  const std::size_t n = in.size();
  const std::size_t left = (w - 1) / 2;
  const std::size_t right = w / 2;

  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + in[i];

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n - 1, i + right);
    out[i] = static_cast<double>((prefix[hi + 1] - prefix[lo]) / static_cast<long double>(hi - lo + 1));
  }
  return PressureSeries(std::move(out), series.fs());
}

ConditionedSeries isolate_breathing(const PressureSeries& series, double window_s) {
  const auto smooth = moving_average(series, window_s);
  const auto raw = series.values();
  const auto trend = smooth.values();
  std::vector<double> residual(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) residual[i] = raw[i] - trend[i];
  const double mean = dc_level(residual);
  for (double& v : residual) v -= mean;
  return ConditionedSeries(std::move(residual), series.fs(), Conditioning::motion_suppressed);
}

double snr_db(const ConditionedSeries& series, const SnrOptions& options) {
  const double nyquist = series.fs() / 2.0;
  if (!(options.f0 > 0.0) || !(options.f0 < nyquist)) {
    throw Error(ErrorKind::invalid_parameter, "f0 must lie strictly between 0 and fs/2");
  }
  if (!(options.band_halfwidth >= 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "band halfwidth must be non-negative");
  }
  const std::size_t n_bands = options.n_harmonics + 1;
  for (std::size_t h = 1; h <= n_bands; ++h) {
    const double centre = options.f0 * static_cast<double>(h);
    if (!(centre - options.band_halfwidth > 0.0) || !(centre + options.band_halfwidth < nyquist)) {
      throw Error(ErrorKind::invalid_parameter,
                  "band around harmonic " + std::to_string(h) + " leaves (0, fs/2)");
    }
  }

  const auto spec = periodogram(series);
  const double slack = 1e-9 * series.fs() / static_cast<double>(spec.n_fft);
  double signal = 0.0;
  double rest = 0.0;
  for (std::size_t k = 1; k < spec.power.size(); ++k) {
    const double f = spec.freqs[k];
    bool in_band = false;
    for (std::size_t h = 1; h <= n_bands && !in_band; ++h) {
      in_band = std::abs(f - options.f0 * static_cast<double>(h)) <= options.band_halfwidth + slack;
    }
    (in_band ? signal : rest) += spec.power[k];
  }
  const double total = signal + rest;
  if (total <= 0.0) throw Error(ErrorKind::degenerate_input, "series has no non-DC power");
  if (rest < kSnrRestFloor * total) return kSnrInfinite;
  return 10.0 * std::log10(signal / rest);
}

}  // namespace psmrr
