#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psmrr {

/// One pressure image from the mat: a rows x cols sensel grid in psi, stored
/// row-major, stamped with seconds since the start of the record.
class PressureFrame {
 public:
  PressureFrame(double timestamp, std::size_t rows, std::size_t cols, std::vector<double> values);

  [[nodiscard]] double timestamp() const noexcept { return timestamp_; }
  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double at(std::size_t row, std::size_t col) const noexcept {
    return values_[row * cols_ + col];
  }

  [[nodiscard]] PressureFrame with_timestamp(double timestamp) const;

  friend bool operator==(const PressureFrame&, const PressureFrame&) = default;

 private:
  double timestamp_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

/// Uniformly sampled run of frames sharing one grid shape.
///
/// Timestamps must increase strictly with a spacing of 1/fs (relative
/// tolerance 1e-6). An empty sequence is representable; the operations that
/// need data reject it.
class FrameSequence {
 public:
  static constexpr double kSpacingTolerance = 1e-6;

  FrameSequence(std::vector<PressureFrame> frames, double fs);

  /// Builds a sequence from bare grids; frame i gets timestamp i / fs.
  static FrameSequence from_grids(std::vector<std::vector<double>> grids, std::size_t rows,
                                  std::size_t cols, double fs);

  [[nodiscard]] std::span<const PressureFrame> frames() const noexcept { return frames_; }
  [[nodiscard]] const PressureFrame& operator[](std::size_t i) const noexcept { return frames_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return frames_.size(); }
  [[nodiscard]] bool empty() const noexcept { return frames_.empty(); }
  [[nodiscard]] double fs() const noexcept { return fs_; }
  [[nodiscard]] std::size_t rows() const noexcept { return frames_.empty() ? 0 : frames_.front().rows(); }
  [[nodiscard]] std::size_t cols() const noexcept { return frames_.empty() ? 0 : frames_.front().cols(); }
  /// N / fs seconds.
  [[nodiscard]] double duration() const noexcept { return static_cast<double>(frames_.size()) / fs_; }

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;

 private:
  std::vector<PressureFrame> frames_;
  double fs_;
};

/// Rectangular sensel window, inclusive bounds on both axes.
struct Roi {
  std::size_t row_first = 0;
  std::size_t row_last = 0;
  std::size_t col_first = 0;
  std::size_t col_last = 0;

  [[nodiscard]] static Roi full(std::size_t rows, std::size_t cols);
  [[nodiscard]] std::size_t sensel_count() const noexcept {
    return (row_last - row_first + 1) * (col_last - col_first + 1);
  }
  /// Throws ErrorKind::bounds unless the ROI is non-empty and fits the grid.
  void validate(std::size_t rows, std::size_t cols) const;

  friend bool operator==(const Roi&, const Roi&) = default;
};

/// Uniformly sampled scalar pressure trace (psi); the input to every
/// estimator downstream of the mat.
class PressureSeries {
 public:
  PressureSeries(std::vector<double> values, double fs);

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double fs() const noexcept { return fs_; }
  [[nodiscard]] double duration() const noexcept { return static_cast<double>(values_.size()) / fs_; }

 private:
  std::vector<double> values_;
  double fs_;
};

struct SpatialAverage {
  double value = 0.0;
  std::size_t active_count = 0;
};

/// ROI-averaged series plus per-frame bookkeeping of the noise-floor rule.
struct AveragedSeries {
  PressureSeries series;
  std::vector<std::size_t> active_counts;
  std::size_t roi_sensels = 0;

  /// Indices of frames where no sensel passed the floor (sample forced to 0).
  [[nodiscard]] std::vector<std::size_t> flagged() const;
  /// Mean fraction of ROI sensels above the floor, in percent.
  [[nodiscard]] double mean_contact_area_pct() const noexcept;
};

/// Mean of the ROI sensels at or above noise_floor; 0 with active_count 0 when
/// none qualify.
[[nodiscard]] SpatialAverage spatial_average(const PressureFrame& frame, const Roi& roi,
                                             double noise_floor);

[[nodiscard]] AveragedSeries average_series(const FrameSequence& seq, const Roi& roi,
                                            double noise_floor);

/// Keeps frames with lead_s <= t < duration - tail_s (t relative to the first
/// frame) and re-zeroes their timestamps.
[[nodiscard]] FrameSequence trim_transients(const FrameSequence& seq, double lead_s, double tail_s);

}  // namespace psmrr
