#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "psmrr/error.hpp"
#include "psmrr/frames.hpp"
#include "support.hpp"

using namespace psmrr;

using testing_support::kind_of;

TEST(SpatialAverage, ExcludesSenselsBelowFloor) {
  const PressureFrame f(0.0, 1, 3, {0.05, 0.10, 0.20});
  const auto avg = spatial_average(f, Roi::full(1, 3), 0.06);
  EXPECT_NEAR(avg.value, 0.15, 1e-15);
  EXPECT_EQ(avg.active_count, 2u);
}

TEST(SpatialAverage, IdenticalValues) {
  const PressureFrame f(0.0, 1, 2, {0.10, 0.10});
  EXPECT_DOUBLE_EQ(spatial_average(f, Roi::full(1, 2), 0.06).value, 0.10);
}

TEST(SpatialAverage, AllBelowFloorGivesZero) {
  const PressureFrame f(0.0, 1, 2, {0.01, 0.02});
  const auto avg = spatial_average(f, Roi::full(1, 2), 0.06);
  EXPECT_EQ(avg.value, 0.0);
  EXPECT_EQ(avg.active_count, 0u);
}

TEST(SpatialAverage, FloorIsInclusive) {
  const PressureFrame f(0.0, 1, 2, {0.06, 0.0});
  EXPECT_DOUBLE_EQ(spatial_average(f, Roi::full(1, 2), 0.06).value, 0.06);
}

TEST(SpatialAverage, RoiSubwindow) {
  // 3x3 grid, ROI rows 1..2, cols 0..1
  const PressureFrame f(0.0, 3, 3, {9, 9, 9, 1, 2, 9, 3, 4, 9});
  EXPECT_DOUBLE_EQ(spatial_average(f, Roi{1, 2, 0, 1}, 0.0).value, 2.5);
}

TEST(SpatialAverage, RoiOutOfBounds) {
  const PressureFrame f(0.0, 2, 2, {1, 1, 1, 1});
  EXPECT_EQ(kind_of([&] { (void)spatial_average(f, Roi{0, 2, 0, 1}, 0.0); }), ErrorKind::bounds);
  EXPECT_EQ(kind_of([&] { (void)spatial_average(f, Roi{1, 0, 0, 1}, 0.0); }), ErrorKind::bounds);
}

TEST(SpatialAverage, PermutationInvariant) {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(36);
  for (auto& x : v) x = u(gen);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = v;
    std::shuffle(p.begin(), p.end(), gen);
    const double a = spatial_average(PressureFrame(0, 6, 6, v), Roi::full(6, 6), 0.3).value;
    const double b = spatial_average(PressureFrame(0, 6, 6, p), Roi::full(6, 6), 0.3).value;
    EXPECT_NEAR(a, b, 1e-14);
  }
}

TEST(SpatialAverage, ZeroFloorIsArithmeticMean) {
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> v(25);
  for (auto& x : v) x = u(gen);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= 25.0;
  EXPECT_NEAR(spatial_average(PressureFrame(0, 5, 5, v), Roi::full(5, 5), 0.0).value, mean, 1e-14);
}

TEST(PressureFrame, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(PressureFrame(0, 1, 2, {0.1, -0.1}), Error);
  EXPECT_THROW(PressureFrame(0, 1, 2, {0.1, std::nan("")}), Error);
  EXPECT_THROW(PressureFrame(0, 2, 2, {0.1, 0.1}), Error);
}

TEST(FrameSequence, RejectsIrregularSpacing) {
  std::vector<PressureFrame> frames{PressureFrame(0.0, 1, 1, {1}), PressureFrame(0.05, 1, 1, {1}),
                                    PressureFrame(0.2, 1, 1, {1})};
  EXPECT_THROW(FrameSequence(frames, 20.0), Error);
}

TEST(FrameSequence, RejectsShapeChange) {
  std::vector<PressureFrame> frames{PressureFrame(0.0, 1, 2, {1, 1}), PressureFrame(0.05, 2, 1, {1, 1})};
  EXPECT_THROW(FrameSequence(frames, 20.0), Error);
}

TEST(FrameSequence, RejectsBadRate) {
  EXPECT_THROW(FrameSequence({}, 0.0), Error);
}

TEST(AverageSeries, IdenticalFrames) {
  const auto seq = testing_support::uniform_frames({0.1, 0.1, 0.1}, 20.0);
  const auto avg = average_series(seq, Roi::full(4, 4), 0.06);
  ASSERT_EQ(avg.series.size(), 3u);
  for (double v : avg.series.values()) EXPECT_DOUBLE_EQ(v, 0.1);
  EXPECT_DOUBLE_EQ(avg.mean_contact_area_pct(), 100.0);
}

TEST(AverageSeries, SingleFrame) {
  const auto seq = testing_support::uniform_frames({0.3}, 20.0);
  EXPECT_EQ(average_series(seq, Roi::full(4, 4), 0.06).series.size(), 1u);
}

TEST(AverageSeries, AlternatingActiveRegions) {
  // 1x4 grid; even frames load the left half, odd frames the right half
  std::vector<std::vector<double>> grids{{0.2, 0.4, 0.0, 0.0}, {0.0, 0.01, 0.5, 0.7}, {0.3, 0.1, 0.02, 0.0},
                                         {0.0, 0.0, 0.0, 0.0}};
  const auto seq = FrameSequence::from_grids(grids, 1, 4, 10.0);
  const auto avg = average_series(seq, Roi::full(1, 4), 0.06);
  EXPECT_NEAR(avg.series.values()[0], 0.3, 1e-15);
  EXPECT_NEAR(avg.series.values()[1], 0.6, 1e-15);
  EXPECT_NEAR(avg.series.values()[2], 0.2, 1e-15);
  EXPECT_EQ(avg.series.values()[3], 0.0);
  EXPECT_EQ(avg.active_counts, (std::vector<std::size_t>{2, 2, 2, 0}));
  EXPECT_EQ(avg.flagged(), std::vector<std::size_t>{3});
  EXPECT_DOUBLE_EQ(avg.mean_contact_area_pct(), 37.5);
}

TEST(AverageSeries, EmptySequenceIsError) {
  const FrameSequence empty({}, 20.0);
  EXPECT_EQ(kind_of([&] { (void)average_series(empty, Roi{0, 0, 0, 0}, 0.0); }), ErrorKind::empty_input);
}

TEST(AverageSeries, RaisingFloorNeverAddsSensels) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(0.0, 0.3);
  std::vector<std::vector<double>> grids(40, std::vector<double>(16));
  for (auto& g : grids) {
    for (auto& v : g) v = u(gen);
  }
  const auto seq = FrameSequence::from_grids(grids, 4, 4, 20.0);
  std::vector<std::size_t> previous(40, 16);
  for (double floor : {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.31}) {
    const auto avg = average_series(seq, Roi::full(4, 4), floor);
    EXPECT_EQ(avg.series.size(), seq.size());
    for (std::size_t i = 0; i < 40; ++i) {
      EXPECT_LE(avg.active_counts[i], previous[i]);
      previous[i] = avg.active_counts[i];
    }
  }
}

TEST(TrimTransients, TenSecondsTrimTwoAndTwo) {
  const auto seq = testing_support::uniform_frames(std::vector<double>(200, 0.2), 20.0);
  const auto trimmed = trim_transients(seq, 2.0, 2.0);
  EXPECT_EQ(trimmed.size(), 120u);
  EXPECT_DOUBLE_EQ(trimmed[0].timestamp(), 0.0);
  EXPECT_NEAR(trimmed[119].timestamp(), 119.0 / 20.0, 1e-12);
}

TEST(TrimTransients, ZeroTrimIsIdentity) {
  const auto seq = testing_support::uniform_frames(testing_support::ramp(0.1, 0.2, 50), 20.0);
  EXPECT_EQ(trim_transients(seq, 0.0, 0.0), seq);
}

TEST(TrimTransients, TrimsExceedingDurationFail) {
  const auto seq = testing_support::uniform_frames(std::vector<double>(60, 0.2), 20.0);
  EXPECT_EQ(kind_of([&] { (void)trim_transients(seq, 2.0, 2.0); }), ErrorKind::empty_input);
}
