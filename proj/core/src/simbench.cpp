#include "psmrr/simbench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "psmrr/error.hpp"
#include "psmrr/preprocess.hpp"
#include "psmrr/random.hpp"

namespace psmrr {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Noise and load model of the emulated mat (psi unless noted).
constexpr double kSenselNoiseSd = 0.003;
constexpr double kBackgroundNoiseSd = 0.004;
constexpr double kThoraxLoadWarmer = 0.18;
constexpr double kThoraxLoadCrib = 0.25;
constexpr double kLimbLoadShare = 0.6;
constexpr double kHaloLoadWarmer = 0.07;
constexpr double kBreathingAmplitude = 0.004;
constexpr double kDriftRelativeSd = 0.002;
constexpr double kDriftPole = 0.995;
constexpr double kGruntWarp = 0.6;
constexpr double kOffRoiMotionShare = 0.5;

enum class Region { background, halo, limb, thorax };

struct Layout {
  std::array<Region, kMatRows * kMatCols> region{};
  std::array<double, kMatRows * kMatCols> profile{};
  double roi_profile_mean = 1.0;
};

bool in_box(std::size_t r, std::size_t c, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  return r >= r0 && r <= r1 && c >= c0 && c <= c1;
}

Layout make_layout(Mattress mattress) {
  Layout l;
  const Roi roi = thorax_roi();
  const double rc = 0.5 * static_cast<double>(roi.row_first + roi.row_last);
  const double cc = 0.5 * static_cast<double>(roi.col_first + roi.col_last);
  for (std::size_t r = 0; r < kMatRows; ++r) {
    for (std::size_t c = 0; c < kMatCols; ++c) {
      Region reg = Region::background;
      if (in_box(r, c, roi.row_first, roi.row_last, roi.col_first, roi.col_last)) {
        reg = Region::thorax;
      } else if (in_box(r, c, 1, 3, 7, 10) ||    // head
                 in_box(r, c, 10, 12, 6, 11) ||  // pelvis
                 in_box(r, c, 13, 16, 6, 7) || in_box(r, c, 13, 16, 10, 11) ||  // legs
                 in_box(r, c, 5, 9, 3, 4) || in_box(r, c, 5, 9, 13, 14)) {      // arms
        reg = Region::limb;
      }
      l.region[r * kMatCols + c] = reg;
      const double dr = (static_cast<double>(r) - rc) / 2.5;
      const double dc = (static_cast<double>(c) - cc) / 3.0;
      l.profile[r * kMatCols + c] = 0.85 + 0.3 * std::exp(-(dr * dr + dc * dc));
    }
  }
  double sum = 0.0;
  for (std::size_t r = roi.row_first; r <= roi.row_last; ++r) {
    for (std::size_t c = roi.col_first; c <= roi.col_last; ++c) sum += l.profile[r * kMatCols + c];
  }
  l.roi_profile_mean = sum / static_cast<double>(roi.sensel_count());
  // The softer warmer mattress spreads the load: a ring of light contact
  // around the body, below the trial noise floor but above the metrology one.
  if (mattress == Mattress::warmer) {
    auto snapshot = l.region;
    for (std::size_t r = 0; r < kMatRows; ++r) {
      for (std::size_t c = 0; c < kMatCols; ++c) {
        if (snapshot[r * kMatCols + c] != Region::background) continue;
        bool touches = false;
        for (int dr = -1; dr <= 1 && !touches; ++dr) {
          for (int dc = -1; dc <= 1 && !touches; ++dc) {
            const auto rr = static_cast<long>(r) + dr;
            const auto cc2 = static_cast<long>(c) + dc;
            if (rr < 0 || cc2 < 0 || rr >= static_cast<long>(kMatRows) || cc2 >= static_cast<long>(kMatCols)) continue;
            const auto reg = snapshot[static_cast<std::size_t>(rr) * kMatCols + static_cast<std::size_t>(cc2)];
            touches = reg == Region::limb || reg == Region::thorax;
          }
        }
        if (touches) l.region[r * kMatCols + c] = Region::halo;
      }
    }
  }
  return l;
}

double raised_cosine(double t, double centre, double width) {
  const double u = (t - centre) / width;
  if (std::abs(u) >= 0.5) return 0.0;
  return 0.5 * (1.0 + std::cos(kTwoPi * u));
}

double smooth_step(double t, double at, double rise) {
  const double u = (t - at) / rise;
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

std::vector<double> motion_trace(const TrialConfig& cfg, std::size_t n, Rng& rng) {
  std::vector<double> m(n, 0.0);
  const double duration = static_cast<double>(n) / cfg.fs;
  if (cfg.motion == Motion::internal) {
    // Intermittent limb movement: a few smooth, slowly modulated bursts.
    const auto bursts = static_cast<std::size_t>(std::max(2.0, std::round(duration / 20.0)));
    for (std::size_t b = 0; b < bursts; ++b) {
      const double centre = rng.uniform(0.1, 0.9) * duration;
      const double width = rng.uniform(8.0, 16.0);
      const double amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0);
      const double fm = rng.uniform(0.05, 0.12);
      const double ph = rng.uniform(0.0, kTwoPi);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / cfg.fs;
        m[i] += amp * raised_cosine(t, centre, width) * (1.0 + 0.5 * std::sin(kTwoPi * fm * t + ph));
      }
    }
  } else if (cfg.motion == Motion::external) {
    // Handling by staff: slow load excursions plus a repositioning shift.
    const double f1 = rng.uniform(0.03, 0.1);
    const double f2 = rng.uniform(0.03, 0.1);
    const double p1 = rng.uniform(0.0, kTwoPi);
    const double p2 = rng.uniform(0.0, kTwoPi);
    const double shift_at = rng.uniform(0.2, 0.7) * duration;
    const double shift = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / cfg.fs;
      m[i] = std::sin(kTwoPi * f1 * t + p1) + 0.6 * std::sin(kTwoPi * f2 * t + p2) +
             shift * smooth_step(t, shift_at, 3.0);
    }
  }
  return m;
}

double variance(const std::vector<double>& v) {
  const double mean = dc_level(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

std::string format_gold(double bpm) {
  std::ostringstream os;
  os << bpm;
  return os.str();
}

}  // namespace

std::string_view to_string(Motion m) noexcept {
  switch (m) {
    case Motion::none: return "none";
    case Motion::internal: return "internal";
    case Motion::external: return "external";
  }
  return "none";
}
std::string_view to_string(Mattress m) noexcept { return m == Mattress::warmer ? "warmer" : "crib"; }
std::string_view to_string(Position p) noexcept { return p == Position::supine ? "supine" : "prone"; }

Motion parse_motion(std::string_view s) {
  if (s == "none") return Motion::none;
  if (s == "internal") return Motion::internal;
  if (s == "external") return Motion::external;
  throw Error(ErrorKind::invalid_parameter, "unknown motion '" + std::string(s) + "'");
}
Mattress parse_mattress(std::string_view s) {
  if (s == "warmer") return Mattress::warmer;
  if (s == "crib") return Mattress::crib;
  throw Error(ErrorKind::invalid_parameter, "unknown mattress '" + std::string(s) + "'");
}
Position parse_position(std::string_view s) {
  if (s == "supine") return Position::supine;
  if (s == "prone") return Position::prone;
  throw Error(ErrorKind::invalid_parameter, "unknown position '" + std::string(s) + "'");
}

Roi thorax_roi() noexcept { return Roi{5, 9, 6, 11}; }

void TrialConfig::validate() const {
  auto fail = [this](const std::string& what) {
    throw Error(ErrorKind::invalid_parameter, "trial '" + id + "': " + what);
  };
  if (!(fs > 0.0)) fail("fs must be positive");
  if (!(gold_rr_bpm > 0.0) || !(gold_rr_bpm / 60.0 < fs / 2.0)) fail("gold RR must lie in (0, 30 fs) bpm");
  if (!(duration_s > 0.0)) fail("duration must be positive");
  if (enforce_duration_bounds && (duration_s < kMinTrialSeconds || duration_s > kMaxTrialSeconds)) {
    fail("duration outside [30, 80] s");
  }
  if (!(motion_power_ratio >= 0.0)) fail("motion power ratio must be non-negative");
  if (snap_to_bin && !(snap_resolution_hz > 0.0)) fail("snap resolution must be positive");
  if (breathing_hz() <= 0.0 || breathing_hz() >= fs / 2.0) fail("snapped breathing frequency leaves (0, fs/2)");
}

double TrialConfig::breathing_hz() const {
  const double f = gold_rr_bpm / 60.0;
  if (!snap_to_bin) return f;
  return std::round(f / snap_resolution_hz) * snap_resolution_hz;
}

SyntheticTrial synth_trial(const TrialConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs));
  if (n < 2) throw Error(ErrorKind::invalid_parameter, "trial '" + cfg.id + "' is shorter than two frames");

  Rng shape_rng(cfg.seed, 0);
  Rng noise_rng(cfg.seed, 1);
  Rng motion_rng(cfg.seed, 2);

  const Layout layout = make_layout(cfg.mattress);
  const double f_breath = cfg.breathing_hz();
  const double thorax_load = (cfg.mattress == Mattress::crib ? kThoraxLoadCrib : kThoraxLoadWarmer) *
                             (cfg.position == Position::prone ? 1.1 : 1.0);
  const double amplitude = kBreathingAmplitude * (cfg.position == Position::prone ? 0.75 : 1.0) *
                           (cfg.mattress == Mattress::crib ? 0.85 : 1.0) * shape_rng.uniform(0.9, 1.1);
  const double phase = shape_rng.uniform(0.0, kTwoPi);
  const double creep_per_min = shape_rng.uniform(-0.003, 0.004);

  std::vector<double> breathing(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = kTwoPi * f_breath * static_cast<double>(i) / cfg.fs + phase;
    // Grunting: asymmetric cycle at the same fundamental (phase warp adds harmonics).
    breathing[i] = amplitude * std::sin(cfg.grunting ? theta + kGruntWarp * std::sin(theta) : theta);
  }

  std::vector<double> motion = motion_trace(cfg, n, motion_rng);
  if (cfg.motion != Motion::none) {
    const double vm = variance(motion);
    const double scale = vm > 0.0 ? std::sqrt(cfg.motion_power_ratio * variance(breathing) / vm) : 0.0;
    const double mean = dc_level(motion);
    for (double& v : motion) v = (v - mean) * scale;
  }

  std::vector<double> drift(n);
  double state = 0.0;
  const double innovation = kDriftRelativeSd * std::sqrt(1.0 - kDriftPole * kDriftPole);
  for (std::size_t i = 0; i < n; ++i) {
    state = kDriftPole * state + innovation * noise_rng.normal();
    drift[i] = state;
  }

  std::vector<PressureFrame> frames;
  frames.reserve(n);
  std::vector<double> grid(kMatRows * kMatCols);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / cfg.fs;
    const double gain = 1.0 + creep_per_min * t / 60.0 + drift[i];
    for (std::size_t s = 0; s < grid.size(); ++s) {
      double v = 0.0;
      switch (layout.region[s]) {
        case Region::thorax:
          v = thorax_load * layout.profile[s] * gain + layout.profile[s] / layout.roi_profile_mean * breathing[i] + motion[i] +
              kSenselNoiseSd * noise_rng.normal();
          break;
        case Region::limb:
          v = kLimbLoadShare * thorax_load * layout.profile[s] * gain + kOffRoiMotionShare * motion[i] +
              kSenselNoiseSd * noise_rng.normal();
          break;
        case Region::halo:
          v = kHaloLoadWarmer * gain + kSenselNoiseSd * noise_rng.normal();
          break;
        case Region::background:
          v = kBackgroundNoiseSd * noise_rng.normal();
          break;
      }
      grid[s] = std::max(0.0, v);
    }
    frames.emplace_back(t, kMatRows, kMatCols, grid);
  }

  return SyntheticTrial{FrameSequence(std::move(frames), cfg.fs), f_breath * 60.0, thorax_roi(),
                        std::move(breathing), std::move(motion)};
}

std::vector<TrialConfig> default_manifest(std::uint64_t base_seed) {
  struct Row {
    double gold;
    double duration;
    Motion motion;
    Mattress mattress;
    bool grunting;
    Position position;
  };
  using enum Motion;
  constexpr auto W = Mattress::warmer;
  constexpr auto C = Mattress::crib;
  constexpr auto S = Position::supine;
  constexpr auto P = Position::prone;
  static const Row rows[] = {
      {45, 30, none, W, false, P},      {45, 43, internal, C, false, P},
      {45, 56, none, W, false, P},      {45, 69, none, W, true, S},
      {45, 31, external, C, false, S},  {45, 44, none, W, false, S},
      {60, 57, external, W, false, S},  {60, 70, none, C, false, S},
      {60, 32, external, W, true, P},   {60, 45, none, W, true, P},
      {60, 58, internal, C, false, P},  {60, 71, none, W, false, P},
      {60, 33, internal, W, false, S},  {60, 46, none, C, false, S},
      {60, 59, internal, W, true, S},   {60, 72, none, W, true, S},
      {60, 34, none, C, false, S},      {60, 47, none, W, false, S},
      {60, 60, none, W, false, P},      {60, 73, external, C, true, P},
      {60, 35, none, W, true, P},       {75, 48, external, W, false, P},
      {75, 61, none, C, false, S},      {75, 74, external, C, false, S},
      {75, 36, none, W, false, S},      {75, 49, internal, W, true, S},
      {75, 62, none, C, true, S},       {75, 75, internal, W, false, P},
  };
  std::vector<TrialConfig> out;
  out.reserve(std::size(rows));
  for (std::size_t i = 0; i < std::size(rows); ++i) {
    const auto& r = rows[i];
    TrialConfig cfg;
    cfg.id = "trial" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
    cfg.gold_rr_bpm = r.gold;
    cfg.duration_s = r.duration;
    cfg.motion = r.motion;
    cfg.mattress = r.mattress;
    cfg.grunting = r.grunting;
    cfg.position = r.position;
    cfg.seed = mix_seed(base_seed, i);
    out.push_back(cfg);
  }
  return out;
}

std::optional<double> TrialResult::diff(RrMethod method) const {
  const auto& est = method == RrMethod::baseline ? baseline : modified;
  if (!est) return std::nullopt;
  return est->rr_bpm - gold_rr_bpm;
}

TrialResult evaluate_trial(const TrialConfig& config, double gold_rr_bpm, const PressureSeries& series,
                           const ExperimentOptions& options) {
  TrialResult res;
  res.config = config;
  res.gold_rr_bpm = gold_rr_bpm;
  try {
    res.baseline = estimate_rr(series, options.window);
  } catch (const Error& e) {
    res.baseline_error = e.what();
  }
  try {
    res.modified = estimate_rr_modified(series, options.smooth_window_s, options.window);
  } catch (const Error& e) {
    res.modified_error = e.what();
  }
  try {
    res.snr_db = snr_db(remove_dc(series),
                        SnrOptions{gold_rr_bpm / 60.0, options.snr_harmonics, options.snr_band_halfwidth});
  } catch (const Error&) {
    res.snr_db = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

std::vector<std::string> design_columns(MotionCoding coding) {
  if (coding == MotionCoding::binary) return {"intercept", "motion", "mattress_crib", "grunting", "position_prone"};
  return {"intercept", "motion_internal", "motion_external", "mattress_crib", "grunting", "position_prone"};
}

std::vector<FixedEffect> design_effects(MotionCoding coding) {
  if (coding == MotionCoding::binary) {
    return {{"motion", {1}}, {"mattress", {2}}, {"grunting", {3}}, {"position", {4}}};
  }
  return {{"motion", {1, 2}}, {"mattress", {3}}, {"grunting", {4}}, {"position", {5}}};
}

Design build_design(std::span<const TrialResult> results, RrMethod method, MotionCoding coding) {
  std::vector<const TrialResult*> used;
  for (const auto& r : results) {
    if (r.diff(method)) used.push_back(&r);
  }
  Design d;
  d.columns = design_columns(coding);
  const auto n = static_cast<Eigen::Index>(used.size());
  d.y.resize(n);
  d.x.resize(n, static_cast<Eigen::Index>(d.columns.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = *used[static_cast<std::size_t>(i)];
    d.y(i) = *r.diff(method);
    Eigen::Index c = 0;
    d.x(i, c++) = 1.0;
    if (coding == MotionCoding::binary) {
      d.x(i, c++) = r.config.motion != Motion::none ? 1.0 : 0.0;
    } else {
      d.x(i, c++) = r.config.motion == Motion::internal ? 1.0 : 0.0;
      d.x(i, c++) = r.config.motion == Motion::external ? 1.0 : 0.0;
    }
    d.x(i, c++) = r.config.mattress == Mattress::crib ? 1.0 : 0.0;
    d.x(i, c++) = r.config.grunting ? 1.0 : 0.0;
    d.x(i, c++) = r.config.position == Position::prone ? 1.0 : 0.0;
    d.groups.push_back(format_gold(r.gold_rr_bpm));
  }
  return d;
}

Experiment run_experiment(std::span<const TrialConfig> manifest, const ExperimentOptions& options) {
  if (manifest.empty()) throw Error(ErrorKind::empty_input, "experiment manifest is empty");
  std::set<double> levels;
  for (const auto& cfg : manifest) {
    cfg.validate();
    levels.insert(cfg.breathing_hz());
  }
  if (levels.size() < 2) {
    throw Error(ErrorKind::identifiability, "manifest needs at least two distinct gold RR levels");
  }
  Experiment exp;
  exp.trials.reserve(manifest.size());
  for (const auto& cfg : manifest) {
    const auto trial = synth_trial(cfg);
    const auto averaged = average_series(trial.frames, trial.roi, options.noise_floor);
    exp.trials.push_back(evaluate_trial(cfg, trial.gold_rr_bpm, averaged.series, options));
  }
  exp.baseline = build_design(exp.trials, RrMethod::baseline, options.motion_coding);
  exp.modified = build_design(exp.trials, RrMethod::modified, options.motion_coding);
  exp.effects = design_effects(options.motion_coding);
  return exp;
}

}  // namespace psmrr
