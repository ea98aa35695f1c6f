#include "psmrr/frames.hpp"

#include <cmath>
#include <string>

#include "psmrr/error.hpp"

namespace psmrr {

PressureFrame::PressureFrame(double timestamp, std::size_t rows, std::size_t cols,
                             std::vector<double> values)
    : timestamp_(timestamp), rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ == 0 || cols_ == 0) {
    throw Error(ErrorKind::invalid_parameter, "frame grid must have at least one row and column");
  }
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorKind::invalid_parameter,
                "frame holds " + std::to_string(values_.size()) + " values, expected " +
                    std::to_string(rows_ * cols_));
  }
  if (!std::isfinite(timestamp_)) {
    throw Error(ErrorKind::invalid_parameter, "frame timestamp is not finite");
  }
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::invalid_parameter, "sensel pressure must be finite and non-negative");
    }
  }
}

PressureFrame PressureFrame::with_timestamp(double timestamp) const {
  PressureFrame copy = *this;
  copy.timestamp_ = timestamp;
  return copy;
}

FrameSequence::FrameSequence(std::vector<PressureFrame> frames, double fs)
    : frames_(std::move(frames)), fs_(fs) {
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
    throw Error(ErrorKind::invalid_parameter, "sampling rate must be positive");
  }
  const double period = 1.0 / fs_;
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    const auto& prev = frames_[i - 1];
    const auto& cur = frames_[i];
    if (cur.rows() != prev.rows() || cur.cols() != prev.cols()) {
      throw Error(ErrorKind::invalid_parameter,
                  "frame " + std::to_string(i) + " changes grid shape");
    }
    const double dt = cur.timestamp() - prev.timestamp();
    if (!(dt > 0.0) || std::abs(dt - period) > kSpacingTolerance * period) {
      throw Error(ErrorKind::invalid_parameter,
                  "frame " + std::to_string(i) + " timestamp spacing does not match 1/fs");
    }
  }
}

FrameSequence FrameSequence::from_grids(std::vector<std::vector<double>> grids, std::size_t rows,
                                        std::size_t cols, double fs) {
  if (!(fs > 0.0)) throw Error(ErrorKind::invalid_parameter, "sampling rate must be positive");
  std::vector<PressureFrame> frames;
  frames.reserve(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    frames.emplace_back(static_cast<double>(i) / fs, rows, cols, std::move(grids[i]));
  }
  return FrameSequence(std::move(frames), fs);
}

Roi Roi::full(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw Error(ErrorKind::bounds, "cannot build an ROI on an empty grid");
  return Roi{0, rows - 1, 0, cols - 1};
}

void Roi::validate(std::size_t rows, std::size_t cols) const {
  if (row_first > row_last || col_first > col_last) {
    throw Error(ErrorKind::bounds, "ROI is empty (first index beyond last)");
  }
  if (row_last >= rows || col_last >= cols) {
    throw Error(ErrorKind::bounds, "ROI [" + std::to_string(row_first) + "," +
                                       std::to_string(row_last) + "]x[" +
                                       std::to_string(col_first) + "," + std::to_string(col_last) +
                                       "] exceeds a " + std::to_string(rows) + "x" +
                                       std::to_string(cols) + " grid");
  }
}

PressureSeries::PressureSeries(std::vector<double> values, double fs)
    : values_(std::move(values)), fs_(fs) {
  if (values_.empty()) throw Error(ErrorKind::empty_input, "pressure series is empty");
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
    throw Error(ErrorKind::invalid_parameter, "sampling rate must be positive");
  }
}

std::vector<std::size_t> AveragedSeries::flagged() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < active_counts.size(); ++i) {
    if (active_counts[i] == 0) out.push_back(i);
  }
  return out;
}

double AveragedSeries::mean_contact_area_pct() const noexcept {
  if (active_counts.empty() || roi_sensels == 0) return 0.0;
  double total = 0.0;
  for (auto c : active_counts) total += static_cast<double>(c);
  return 100.0 * total / (static_cast<double>(active_counts.size()) * static_cast<double>(roi_sensels));
}

SpatialAverage spatial_average(const PressureFrame& frame, const Roi& roi, double noise_floor) {
  roi.validate(frame.rows(), frame.cols());
  if (!(noise_floor >= 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "noise floor must be non-negative");
  }
  double sum = 0.0;
  std::size_t active = 0;
  for (std::size_t r = roi.row_first; r <= roi.row_last; ++r) {
    for (std::size_t c = roi.col_first; c <= roi.col_last; ++c) {
      const double v = frame.at(r, c);
      if (v >= noise_floor) {
        sum += v;
        ++active;
      }
    }
  }
  if (active == 0) return {};
  return {sum / static_cast<double>(active), active};
}

AveragedSeries average_series(const FrameSequence& seq, const Roi& roi, double noise_floor) {
  if (seq.empty()) throw Error(ErrorKind::empty_input, "frame sequence is empty");
  roi.validate(seq.rows(), seq.cols());
  std::vector<double> values;
  std::vector<std::size_t> counts;
  values.reserve(seq.size());
  counts.reserve(seq.size());
  for (const auto& frame : seq.frames()) {
    const auto avg = spatial_average(frame, roi, noise_floor);
    values.push_back(avg.value);
    counts.push_back(avg.active_count);
  }
  return AveragedSeries{PressureSeries(std::move(values), seq.fs()), std::move(counts),
                        roi.sensel_count()};
}

FrameSequence trim_transients(const FrameSequence& seq, double lead_s, double tail_s) {
  if (!(lead_s >= 0.0) || !(tail_s >= 0.0)) {
    throw Error(ErrorKind::invalid_parameter, "trim lengths must be non-negative");
  }
  if (seq.empty()) throw Error(ErrorKind::empty_input, "frame sequence is empty");
  if (lead_s + tail_s >= seq.duration()) {
    throw Error(ErrorKind::empty_input, "transient trims leave no frames");
  }
  // Index arithmetic on k/fs, guarded against ulp noise in s * fs.
  constexpr double kSlack = 1e-9;
  const double fs = seq.fs();
  const auto first = static_cast<std::size_t>(std::ceil(lead_s * fs - kSlack));
  const auto last_excl =
      static_cast<std::size_t>(std::ceil((seq.duration() - tail_s) * fs - kSlack));
  if (last_excl <= first || last_excl > seq.size()) {
    throw Error(ErrorKind::empty_input, "transient trims leave no frames");
  }
  std::vector<PressureFrame> kept;
  kept.reserve(last_excl - first);
  for (std::size_t i = first; i < last_excl; ++i) {
    kept.push_back(seq[i].with_timestamp(static_cast<double>(i - first) / fs));
  }
  return FrameSequence(std::move(kept), fs);
}

}  // namespace psmrr
