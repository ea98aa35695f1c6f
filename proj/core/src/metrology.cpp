#include "psmrr/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "psmrr/error.hpp"
#include "psmrr/random.hpp"

namespace psmrr {
namespace {

double mean_of(std::span<const double> v) {
  long double sum = 0.0L;
  for (double x : v) sum += x;
  return static_cast<double>(sum / static_cast<long double>(v.size()));
}

double drift_of(std::span<const double> v) {
  const double avg = mean_of(v);
  if (avg == 0.0) throw Error(ErrorKind::degenerate_input, "mean pressure is zero; drift undefined");
  long double ss = 0.0L;
  for (double x : v) {
    const long double d = x - avg;
    ss += d * d;
  }
  const double sd = std::sqrt(static_cast<double>(ss / static_cast<long double>(v.size())));
  return 100.0 * sd / std::abs(avg);
}

}  // namespace

double mean_pressure(const PressureSeries& series) { return mean_of(series.values()); }

double drift_percent(const PressureSeries& series) {
  if (series.size() < 2) {
    throw Error(ErrorKind::insufficient_data, "drift needs at least two samples");
  }
  return drift_of(series.values());
}

double creep_percent(const PressureSeries& series, double endpoint_window_s) {
  if (!(endpoint_window_s > 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "endpoint window must be positive");
  }
  const auto n = series.size();
  const auto k = static_cast<std::size_t>(std::llround(endpoint_window_s * series.fs()));
  if (k == 0 || 2 * k > n) {
    throw Error(ErrorKind::insufficient_data,
                "creep needs at least two " + std::to_string(endpoint_window_s) +
                    " s endpoint windows (" + std::to_string(2 * k) + " samples), got " +
                    std::to_string(n));
  }
  const auto values = series.values();
  const double p_avg = mean_of(values);
  if (p_avg == 0.0) throw Error(ErrorKind::degenerate_input, "mean pressure is zero; creep undefined");
  const double p_first = mean_of(values.first(k));
  const double p_last = mean_of(values.last(k));
  const double per_minute = 60.0 * series.fs() / static_cast<double>(n);
  return (p_last - p_first) / p_avg * per_minute * 100.0;
}

std::vector<double> bootstrap_drift_samples(const PressureSeries& series,
                                            const BootstrapOptions& options) {
  if (options.block_size == 0) throw Error(ErrorKind::invalid_parameter, "block size must be positive");
  if (options.n_boot < 2) {
    throw Error(ErrorKind::invalid_parameter, "bootstrap needs at least two resamples");
  }
  const auto n = series.size();
  if (n < options.block_size) {
    throw Error(ErrorKind::insufficient_data,
                "series of " + std::to_string(n) + " samples is shorter than one block of " +
                    std::to_string(options.block_size));
  }
  const auto values = series.values();
  const std::size_t n_starts = n - options.block_size + 1;
  const std::size_t n_blocks = n / options.block_size;

  std::vector<double> drifts(options.n_boot);
  std::vector<double> resample(n_blocks * options.block_size);
  for (std::size_t b = 0; b < options.n_boot; ++b) {
    Rng rng(options.seed, b);
    auto out = resample.begin();
    for (std::size_t j = 0; j < n_blocks; ++j) {
      const auto start = static_cast<std::size_t>(rng.below(n_starts));
      out = std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(start), options.block_size, out);
    }
    drifts[b] = drift_of(resample);
  }
  return drifts;
}

double bootstrap_drift_std(const PressureSeries& series, const BootstrapOptions& options) {
  const auto drifts = bootstrap_drift_samples(series, options);
  const double avg = mean_of(drifts);
  long double ss = 0.0L;
  for (double d : drifts) ss += static_cast<long double>(d - avg) * (d - avg);
  return std::sqrt(static_cast<double>(ss / static_cast<long double>(drifts.size() - 1)));
}

MetrologyReport characterise(const AveragedSeries& averaged, double endpoint_window_s,
                             const BootstrapOptions& options) {
  const auto& series = averaged.series;
  MetrologyReport report;
  report.p_avg = mean_pressure(series);
  report.contact_area_pct = averaged.mean_contact_area_pct();
  report.drift_pct = drift_percent(series);
  report.creep_pct = creep_percent(series, endpoint_window_s);
  report.drift_std_pct = bootstrap_drift_std(series, options);
  report.n_samples = series.size();
  report.fs = series.fs();
  return report;
}

}  // namespace psmrr
