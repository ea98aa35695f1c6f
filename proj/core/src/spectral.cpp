#include "psmrr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "psmrr/error.hpp"

namespace psmrr {
namespace {

// FFTW's planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    if (in_ == nullptr || out_ == nullptr) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_, out_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }

  std::vector<double> power(std::span<const double> x) {
    std::copy(x.begin(), x.end(), in_);
    fftw_execute(plan_);
    std::vector<double> p(n_ / 2 + 1);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    return p;
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_ = nullptr;
};

Spectrum spectrum_of(std::span<const double> x, double fs) {
  if (x.size() < 2) throw Error(ErrorKind::insufficient_data, "periodogram needs at least two samples");
  Spectrum spec;
  spec.n_fft = x.size();
  spec.power = RealFft(x.size()).power(x);
  spec.freqs.resize(spec.power.size());
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    spec.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(spec.n_fft);
  }
  return spec;
}

RrEstimate windowed_estimate(std::span<const double> x, double fs, const WindowOptions& options,
                             RrMethod method) {
  const auto starts = window_starts(x.size(), fs, options);
  const auto length = static_cast<std::size_t>(std::llround(options.window_s * fs));
  RrEstimate est;
  est.window_s = options.window_s;
  est.overlap = options.overlap;
  est.method = method;
  est.per_window_peaks.reserve(starts.size());
  std::vector<double> window(length);
  for (auto start : starts) {
    const auto segment = x.subspan(start, length);
    const double mean = dc_level(segment);
    for (std::size_t i = 0; i < length; ++i) window[i] = segment[i] - mean;
    try {
      est.per_window_peaks.push_back(peak_frequency(spectrum_of(window, fs), true, options.band));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_peak) throw;
      throw Error(ErrorKind::no_peak, "window starting at sample " + std::to_string(start) + ": " +
                                          e.what());
    }
  }
  double sum = 0.0;
  for (double f : est.per_window_peaks) sum += f;
  est.rr_bpm = 60.0 * sum / static_cast<double>(est.per_window_peaks.size());
  return est;
}

}  // namespace

std::string_view to_string(RrMethod method) noexcept {
  return method == RrMethod::baseline ? "baseline" : "modified";
}

Spectrum periodogram(const ConditionedSeries& series) { return spectrum_of(series.values(), series.fs()); }

double two_sided_power(const Spectrum& spec) {
  if (spec.power.empty()) return 0.0;
  const std::size_t last = spec.power.size() - 1;
  const bool even = spec.n_fft % 2 == 0;
  double total = spec.power[0];
  for (std::size_t k = 1; k <= last; ++k) {
    total += (even && k == last) ? spec.power[k] : 2.0 * spec.power[k];
  }
  return total;
}

double peak_frequency(const Spectrum& spec, bool exclude_dc, std::optional<Band> band) {
  if (spec.power.empty() || spec.power.size() != spec.freqs.size()) {
    throw Error(ErrorKind::empty_input, "spectrum is empty");
  }
  if (band && !(band->lo <= band->hi)) {
    throw Error(ErrorKind::invalid_parameter, "search band has lo > hi");
  }
  std::optional<std::size_t> best;
  for (std::size_t k = exclude_dc ? 1 : 0; k < spec.power.size(); ++k) {
    if (band && (spec.freqs[k] < band->lo || spec.freqs[k] > band->hi)) continue;
    if (!best || spec.power[k] > spec.power[*best]) best = k;
  }
  if (!best || !(spec.power[*best] > 0.0)) {
    throw Error(ErrorKind::no_peak, "no spectral peak: every candidate bin has zero power");
  }
  return spec.freqs[*best];
}

std::vector<std::size_t> window_starts(std::size_t n_samples, double fs, const WindowOptions& options) {
  if (!(fs > 0.0)) throw Error(ErrorKind::invalid_parameter, "sampling rate must be positive");
  if (!(options.window_s > 0.0)) throw Error(ErrorKind::invalid_parameter, "window must be positive");
  if (!(options.overlap >= 0.0 && options.overlap < 1.0)) {
    throw Error(ErrorKind::invalid_parameter, "overlap must lie in [0, 1)");
  }
  const auto length = static_cast<std::size_t>(std::llround(options.window_s * fs));
  const auto hop =
      static_cast<std::size_t>(std::llround((1.0 - options.overlap) * options.window_s * fs));
  if (length < 2) throw Error(ErrorKind::invalid_parameter, "window spans fewer than two samples");
  if (hop < 1) throw Error(ErrorKind::invalid_parameter, "window hop rounds to zero samples");
  if (n_samples < length) {
    throw Error(ErrorKind::insufficient_data,
                "record of " + std::to_string(static_cast<double>(n_samples) / fs) +
                    " s is shorter than one " + std::to_string(options.window_s) + " s window");
  }
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + length <= n_samples; s += hop) starts.push_back(s);
  return starts;
}

RrEstimate estimate_rr(const PressureSeries& series, const WindowOptions& options) {
  return windowed_estimate(series.values(), series.fs(), options, RrMethod::baseline);
}

RrEstimate estimate_rr_modified(const PressureSeries& series, double smooth_window_s,
                                const WindowOptions& options) {
  const auto isolated = isolate_breathing(series, smooth_window_s);
  return windowed_estimate(isolated.values(), isolated.fs(), options, RrMethod::modified);
}

}  // namespace psmrr
