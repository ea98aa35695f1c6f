#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "psmrr/error.hpp"
#include "psmrr/frames.hpp"

namespace testing_support {

inline std::vector<double> sine(double f_hz, double fs, std::size_t n, double amplitude = 1.0,
                                double offset = 0.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = offset + amplitude * std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

inline std::vector<double> ramp(double from, double to, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return x;
}

/// 1.00 -> 1.02 psi over 60 s at 20 frames/s.
inline psmrr::PressureSeries ramp_fixture() { return psmrr::PressureSeries(ramp(1.0, 1.02, 1200), 20.0); }

/// Frames whose every sensel carries the matching sample of `trace`.
inline psmrr::FrameSequence uniform_frames(const std::vector<double>& trace, double fs, std::size_t rows = 4,
                                           std::size_t cols = 4) {
  std::vector<std::vector<double>> grids;
  grids.reserve(trace.size());
  for (double v : trace) grids.emplace_back(rows * cols, v);
  return psmrr::FrameSequence::from_grids(std::move(grids), rows, cols, fs);
}

/// Kind of the psmrr::Error thrown by fn; fails the test if nothing is thrown.
template <class Fn>
psmrr::ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const psmrr::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no psmrr::Error thrown";
  return psmrr::ErrorKind::io;
}

}  // namespace testing_support
