#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psmrr/frames.hpp"
#include "psmrr/lmm.hpp"
#include "psmrr/spectral.hpp"

namespace psmrr {

enum class Motion { none, internal, external };
enum class Mattress { warmer, crib };
enum class Position { supine, prone };

[[nodiscard]] std::string_view to_string(Motion m) noexcept;
[[nodiscard]] std::string_view to_string(Mattress m) noexcept;
[[nodiscard]] std::string_view to_string(Position p) noexcept;
[[nodiscard]] Motion parse_motion(std::string_view s);
[[nodiscard]] Mattress parse_mattress(std::string_view s);
[[nodiscard]] Position parse_position(std::string_view s);

/// One bench trial of the emulated neonatal simulator on the mat.
struct TrialConfig {
  std::string id;
  double gold_rr_bpm = 60.0;
  double duration_s = 60.0;
  double fs = 20.0;
  Motion motion = Motion::none;
  Mattress mattress = Mattress::warmer;
  bool grunting = false;
  Position position = Position::supine;
  std::uint64_t seed = 0;
  /// Variance of the motion trace relative to the breathing trace at the ROI.
  double motion_power_ratio = 10.0;
  /// Snap the breathing frequency to multiples of snap_resolution_hz (the bin
  /// spacing of a 20 s window by default).
  bool snap_to_bin = true;
  double snap_resolution_hz = 0.05;
  /// When false, durations outside [30, 80] s are accepted.
  bool enforce_duration_bounds = true;

  /// Throws ErrorKind::invalid_parameter on any violated constraint.
  void validate() const;
  /// Breathing frequency actually synthesised (after snapping), Hz.
  [[nodiscard]] double breathing_hz() const;
};

inline constexpr double kMinTrialSeconds = 30.0;
inline constexpr double kMaxTrialSeconds = 80.0;
inline constexpr std::size_t kMatRows = 18;
inline constexpr std::size_t kMatCols = 18;

/// Thorax region of the emulated mat: the ROI the estimators average over.
[[nodiscard]] Roi thorax_roi() noexcept;

struct SyntheticTrial {
  FrameSequence frames;
  double gold_rr_bpm = 0.0;
  Roi roi;
  /// ROI-level additive traces, one sample per frame, kept for audit.
  std::vector<double> breathing;
  std::vector<double> motion;
};

/// Renders the frames of one trial. Deterministic in the config (seed included).
[[nodiscard]] SyntheticTrial synth_trial(const TrialConfig& config);

/// The 28-trial composition: 18 warmer / 10 crib, 19 normal / 9 grunting,
/// 16 supine / 12 prone, 6 x 45 / 15 x 60 / 7 x 75 bpm, 12 motion trials
/// (6 internal, 6 external). Trial i is seeded mix_seed(base_seed, i).
[[nodiscard]] std::vector<TrialConfig> default_manifest(std::uint64_t base_seed = 2017);

enum class MotionCoding {
  binary,   ///< one 0/1 column: any motion
  by_type,  ///< internal and external indicator columns (2 df)
};

struct ExperimentOptions {
  double noise_floor = 0.097;
  WindowOptions window;
  double smooth_window_s = 1.5;
  MotionCoding motion_coding = MotionCoding::binary;
  std::size_t snr_harmonics = 1;
  double snr_band_halfwidth = 0.05;
};

struct TrialResult {
  TrialConfig config;
  double gold_rr_bpm = 0.0;
  std::optional<RrEstimate> baseline;
  std::optional<RrEstimate> modified;
  std::string baseline_error;  ///< empty when the estimator succeeded
  std::string modified_error;
  double snr_db = 0.0;

  [[nodiscard]] std::optional<double> diff(RrMethod method) const;
};

struct Experiment {
  std::vector<TrialResult> trials;
  Design baseline;
  Design modified;
  std::vector<FixedEffect> effects;
};

/// Runs both estimators plus the band SNR on an ROI series with known gold RR.
/// Estimator failures are captured in the result, not thrown.
[[nodiscard]] TrialResult evaluate_trial(const TrialConfig& config, double gold_rr_bpm,
                                         const PressureSeries& series,
                                         const ExperimentOptions& options);

/// Fixed-effect columns and the effect -> column map for a coding.
[[nodiscard]] std::vector<std::string> design_columns(MotionCoding coding);
[[nodiscard]] std::vector<FixedEffect> design_effects(MotionCoding coding);

/// Per-method design: y = estimate - gold, groups = gold RR level. Trials
/// where the method failed are left out.
[[nodiscard]] Design build_design(std::span<const TrialResult> results, RrMethod method,
                                  MotionCoding coding);

/// synth_trial + evaluate_trial for every config, then both designs.
[[nodiscard]] Experiment run_experiment(std::span<const TrialConfig> manifest,
                                        const ExperimentOptions& options = {});

}  // namespace psmrr
