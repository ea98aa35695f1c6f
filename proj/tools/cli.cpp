#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psmrr/error.hpp"
#include "psmrr/frame_io.hpp"
#include "psmrr/frames.hpp"
#include "psmrr/lmm.hpp"
#include "psmrr/metrology.hpp"
#include "psmrr/preprocess.hpp"
#include "psmrr/serialize.hpp"
#include "psmrr/simbench.hpp"
#include "psmrr/spectral.hpp"
#include "psmrr/stats.hpp"

namespace psmrr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Format { text, json, csv };

struct RunConfig {
  std::string input;
  std::string manifest;
  std::string output;
  std::string roi;
  std::optional<double> noise_floor;
  double window_s = 20.0;
  double overlap = 0.5;
  double smooth_s = 1.5;
  std::string band = "none";
  std::uint64_t seed = 2017;
  Format format = Format::text;
  std::string method = "both";
  // metrology
  double trim_s = 2.0;
  double endpoint_s = 5.0;
  std::size_t block = 100;
  std::size_t n_boot = 2000;
  // simulate / experiment
  bool default_28 = false;
  std::string frame_format = "csv";
  std::string motion_coding = "binary";
  std::string plot_dir;
};

std::string num(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_parameter, std::string("malformed ") + what + " '" + text + "'");
    }
  }
  if (out.size() != expected) {
    throw Error(ErrorKind::invalid_parameter, std::string(what) + " needs " + std::to_string(expected) +
                                                  " comma-separated values");
  }
  return out;
}

std::optional<Roi> parse_roi(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto v = parse_list(text, 4, "--roi");
  for (double x : v) {
    if (x < 0 || x != std::floor(x)) throw Error(ErrorKind::invalid_parameter, "--roi takes non-negative integers");
  }
  return Roi{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), static_cast<std::size_t>(v[2]),
             static_cast<std::size_t>(v[3])};
}

std::optional<Band> parse_band(const std::string& text) {
  if (text.empty() || text == "none") return std::nullopt;
  const auto v = parse_list(text, 2, "--band");
  if (!(v[0] >= 0.0 && v[0] < v[1])) throw Error(ErrorKind::invalid_parameter, "--band needs 0 <= lo < hi");
  return Band{v[0], v[1]};
}

WindowOptions window_options(const RunConfig& cfg) {
  return WindowOptions{cfg.window_s, cfg.overlap, parse_band(cfg.band)};
}

MotionCoding parse_coding(const std::string& s) {
  if (s == "binary") return MotionCoding::binary;
  if (s == "type") return MotionCoding::by_type;
  throw Error(ErrorKind::invalid_parameter, "--motion-coding must be binary or type");
}

const char* extension(Format f) {
  switch (f) {
    case Format::text: return ".txt";
    case Format::json: return ".json";
    case Format::csv: return ".csv";
  }
  return ".txt";
}

std::optional<fs::path> env_output_dir() {
  const char* dir = std::getenv(kOutputDirEnv);
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return fs::path(dir);
}

/// Writes via a temporary sibling and renames, so a failed run leaves no
/// partial report behind.
void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw Error(ErrorKind::io, "failed writing " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot move report into " + path.string());
  }
}

void emit(const RunConfig& cfg, const std::string& command, const std::string& content, std::ostream& out) {
  if (!cfg.output.empty()) {
    write_file(cfg.output, content);
  } else if (auto dir = env_output_dir()) {
    write_file(*dir / (command + extension(cfg.format)), content);
  } else {
    out << content;
  }
}

fs::path output_directory(const RunConfig& cfg) {
  fs::path dir;
  if (!cfg.output.empty()) {
    dir = cfg.output;
  } else if (auto env = env_output_dir()) {
    dir = *env;
  } else {
    throw Error(ErrorKind::invalid_parameter,
                std::string("an output directory is required (--output or $") + kOutputDirEnv + ")");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string());
  return dir;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- metrology

std::string render_metrology(const MetrologyReport& r, Format format) {
  if (format == Format::json) return json(r).dump(2) + "\n";
  std::ostringstream os;
  if (format == Format::csv) {
    os << "p_avg_psi,contact_area_pct,creep_pct_per_min,drift_pct,drift_std_pct,n_samples,fs\n"
       << num(r.p_avg) << ',' << num(r.contact_area_pct) << ',' << num(r.creep_pct) << ','
       << num(r.drift_pct) << ',' << num(r.drift_std_pct) << ',' << r.n_samples << ',' << num(r.fs) << '\n';
    return os.str();
  }
  os << pad("P_avg (psi)", 24) << num(r.p_avg) << '\n'
     << pad("Avg contact area (%)", 24) << num(r.contact_area_pct) << '\n'
     << pad("Creep (%/min)", 24) << num(r.creep_pct) << '\n'
     << pad("Drift (%)", 24) << num(r.drift_pct) << '\n'
     << pad("Std of Drift (%)", 24) << num(r.drift_std_pct) << '\n'
     << pad("Samples", 24) << r.n_samples << " @ " << num(r.fs) << " frames/s\n";
  return os.str();
}

int cmd_metrology(const RunConfig& cfg, std::ostream& out) {
  const auto roi_arg = parse_roi(cfg.roi);
  auto seq = load_frames(cfg.input);
  if (cfg.trim_s > 0.0) seq = trim_transients(seq, cfg.trim_s, cfg.trim_s);
  const Roi roi = roi_arg.value_or(Roi::full(seq.rows(), seq.cols()));
  const auto averaged = average_series(seq, roi, cfg.noise_floor.value_or(0.06));
  const auto report = characterise(averaged, cfg.endpoint_s, BootstrapOptions{cfg.block, cfg.n_boot, cfg.seed});
  emit(cfg, "metrology", render_metrology(report, cfg.format), out);
  return kOk;
}

// ----------------------------------------------------------------- estimate

std::vector<RrMethod> selected_methods(const std::string& method) {
  if (method == "baseline") return {RrMethod::baseline};
  if (method == "modified") return {RrMethod::modified};
  if (method == "both") return {RrMethod::baseline, RrMethod::modified};
  throw Error(ErrorKind::invalid_parameter, "--method must be baseline, modified or both");
}

void write_plot_data(const fs::path& dir, const PressureSeries& series, const RunConfig& cfg,
                     std::span<const RrEstimate> estimates) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string());
  const auto smooth = moving_average(series, cfg.smooth_s);
  const auto residual = isolate_breathing(series, cfg.smooth_s);
  std::ostringstream ts;
  ts << "t_s,pressure_psi,smoothed_psi,residual_psi\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    ts << num(static_cast<double>(i) / series.fs()) << ',' << num(series.values()[i]) << ','
       << num(smooth.values()[i]) << ',' << num(residual.values()[i]) << '\n';
  }
  write_file(dir / "series.csv", ts.str());

  const auto opts = window_options(cfg);
  const auto starts = window_starts(series.size(), series.fs(), opts);
  const auto length = static_cast<std::size_t>(std::llround(opts.window_s * series.fs()));
  std::ostringstream sp;
  sp << "method,window,freq_hz,power\n";
  for (auto method : {RrMethod::baseline, RrMethod::modified}) {
    const auto source = method == RrMethod::baseline ? std::vector<double>(series.values().begin(), series.values().end())
                                                     : std::vector<double>(residual.values().begin(), residual.values().end());
    for (std::size_t w = 0; w < starts.size(); ++w) {
      std::vector<double> seg(source.begin() + static_cast<std::ptrdiff_t>(starts[w]),
                              source.begin() + static_cast<std::ptrdiff_t>(starts[w] + length));
      const auto spec = periodogram(remove_dc(PressureSeries(std::move(seg), series.fs())));
      for (std::size_t k = 0; k < spec.power.size(); ++k) {
        sp << to_string(method) << ',' << w << ',' << num(spec.freqs[k]) << ',' << num(spec.power[k]) << '\n';
      }
    }
  }
  write_file(dir / "spectra.csv", sp.str());

  std::ostringstream pk;
  pk << "method,window,start_s,peak_hz\n";
  for (const auto& est : estimates) {
    for (std::size_t w = 0; w < est.per_window_peaks.size(); ++w) {
      pk << to_string(est.method) << ',' << w << ',' << num(static_cast<double>(starts[w]) / series.fs()) << ','
         << num(est.per_window_peaks[w]) << '\n';
    }
  }
  write_file(dir / "peaks.csv", pk.str());
}

std::string render_estimates(const RunConfig& cfg, const AveragedSeries& averaged,
                             std::span<const RrEstimate> estimates) {
  const auto& series = averaged.series;
  if (cfg.format == Format::json) {
    json doc{{"input", cfg.input},
             {"n_samples", series.size()},
             {"fs", series.fs()},
             {"flagged_frames", averaged.flagged()},
             {"estimates", json::array()}};
    for (const auto& e : estimates) doc["estimates"].push_back(e);
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  if (cfg.format == Format::csv) {
    const auto starts = window_starts(series.size(), series.fs(), window_options(cfg));
    os << "method,rr_bpm,window,start_s,peak_hz\n";
    for (const auto& e : estimates) {
      for (std::size_t w = 0; w < e.per_window_peaks.size(); ++w) {
        os << to_string(e.method) << ',' << num(e.rr_bpm) << ',' << w << ','
           << num(static_cast<double>(starts[w]) / series.fs()) << ',' << num(e.per_window_peaks[w]) << '\n';
      }
    }
    return os.str();
  }
  os << "samples " << series.size() << " @ " << num(series.fs()) << " frames/s, "
     << averaged.flagged().size() << " frames with no active sensel\n";
  os << pad("method", 10) << pad("rr_bpm", 10) << pad("windows", 9) << "peaks_hz\n";
  for (const auto& e : estimates) {
    os << pad(std::string(to_string(e.method)), 10) << pad(num(e.rr_bpm), 10)
       << pad(std::to_string(e.per_window_peaks.size()), 9);
    for (std::size_t w = 0; w < e.per_window_peaks.size(); ++w) os << (w ? "," : "") << num(e.per_window_peaks[w]);
    os << '\n';
  }
  return os.str();
}

std::string render_trial_results(const std::vector<TrialResult>& results, Format format) {
  if (format == Format::json) {
    json doc{{"trials", json::array()}};
    for (const auto& r : results) doc["trials"].push_back(r);
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  if (format == Format::csv) {
    write_trial_results_csv(os, results);
    return os.str();
  }
  os << pad("id", 10) << pad("gold", 7) << pad("motion", 10) << pad("baseline", 10) << pad("modified", 10)
     << "snr_db\n";
  for (const auto& r : results) {
    os << pad(r.config.id, 10) << pad(num(r.gold_rr_bpm), 7) << pad(std::string(to_string(r.config.motion)), 10)
       << pad(r.baseline ? num(r.baseline->rr_bpm) : "error", 10)
       << pad(r.modified ? num(r.modified->rr_bpm) : "error", 10) << num(r.snr_db) << '\n';
  }
  return os.str();
}

ExperimentOptions experiment_options(const RunConfig& cfg) {
  ExperimentOptions opts;
  opts.noise_floor = cfg.noise_floor.value_or(0.097);
  opts.window = window_options(cfg);
  opts.smooth_window_s = cfg.smooth_s;
  opts.motion_coding = parse_coding(cfg.motion_coding);
  return opts;
}

std::vector<TrialResult> estimate_index(const RunConfig& cfg) {
  const fs::path index_path = cfg.manifest;
  const auto text = read_text(index_path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, "simulation index: " + std::string(e.what()));
  }
  const auto opts = experiment_options(cfg);
  const auto roi_override = parse_roi(cfg.roi);
  std::vector<TrialResult> results;
  try {
    for (const auto& entry : doc.at("trials")) {
      const auto config = entry.at("config").get<TrialConfig>();
      const auto seq = load_frames(index_path.parent_path() / entry.at("frames").get<std::string>());
      Roi roi = roi_override.value_or(Roi::full(seq.rows(), seq.cols()));
      if (!roi_override && entry.contains("roi")) {
        const auto r = entry.at("roi").get<std::vector<std::size_t>>();
        if (r.size() != 4) throw Error(ErrorKind::parse, "roi entry needs four indices");
        roi = Roi{r[0], r[1], r[2], r[3]};
      }
      const auto averaged = average_series(seq, roi, opts.noise_floor);
      results.push_back(evaluate_trial(config, entry.at("gold_rr_bpm").get<double>(), averaged.series, opts));
    }
  } catch (const json::exception& e) {
    throw ParseError(0, "simulation index: " + std::string(e.what()));
  }
  return results;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.manifest.empty()) {
    emit(cfg, "estimate", render_trial_results(estimate_index(cfg), cfg.format), out);
    return kOk;
  }
  if (cfg.input.empty()) throw Error(ErrorKind::invalid_parameter, "estimate needs --input or --manifest");
  const auto roi_arg = parse_roi(cfg.roi);
  const auto opts = window_options(cfg);
  const auto methods = selected_methods(cfg.method);
  const auto seq = load_frames(cfg.input);
  const Roi roi = roi_arg.value_or(Roi::full(seq.rows(), seq.cols()));
  const auto averaged = average_series(seq, roi, cfg.noise_floor.value_or(0.097));
  std::vector<RrEstimate> estimates;
  for (auto method : methods) {
    estimates.push_back(method == RrMethod::baseline ? estimate_rr(averaged.series, opts)
                                                     : estimate_rr_modified(averaged.series, cfg.smooth_s, opts));
  }
  const auto report = render_estimates(cfg, averaged, estimates);
  if (!cfg.plot_dir.empty()) write_plot_data(cfg.plot_dir, averaged.series, cfg, estimates);
  emit(cfg, "estimate", report, out);
  return kOk;
}

// ----------------------------------------------------------------- simulate

std::vector<TrialConfig> manifest_from(const RunConfig& cfg) {
  if (cfg.default_28 == !cfg.manifest.empty()) {
    throw Error(ErrorKind::invalid_parameter, "give exactly one of --default-28 or --manifest");
  }
  if (cfg.default_28) return default_manifest(cfg.seed);
  return parse_manifest(read_text(cfg.manifest));
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto manifest = manifest_from(cfg);
  if (manifest.empty()) throw Error(ErrorKind::empty_input, "manifest has no trials");
  if (cfg.frame_format != "csv" && cfg.frame_format != "json") {
    throw Error(ErrorKind::invalid_parameter, "--frame-format must be csv or json");
  }
  for (const auto& c : manifest) c.validate();
  const auto dir = output_directory(cfg);
  json index{{"trials", json::array()}};
  std::ostringstream labels;
  labels << "id,frames,gold_rr_bpm\n";
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& c = manifest[i];
    const std::string name = (c.id.empty() ? "trial" + std::to_string(i + 1) : c.id) + "." + cfg.frame_format;
    const auto trial = synth_trial(c);
    std::ostringstream frames;
    if (cfg.frame_format == "json") {
      write_frames_json(frames, trial.frames);
    } else {
      write_frames_csv(frames, trial.frames);
    }
    write_file(dir / name, frames.str());
    const auto roi = trial.roi;
    index["trials"].push_back(json{{"config", c},
                                   {"frames", name},
                                   {"gold_rr_bpm", trial.gold_rr_bpm},
                                   {"roi", {roi.row_first, roi.row_last, roi.col_first, roi.col_last}}});
    labels << c.id << ',' << name << ',' << num(trial.gold_rr_bpm) << '\n';
  }
  write_file(dir / "manifest.json", dump_manifest(manifest));
  write_file(dir / "gold_labels.csv", labels.str());
  write_file(dir / "simulation.json", index.dump(2) + "\n");
  out << "wrote " << manifest.size() << " trials to " << dir.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------- loa

struct LoaBundle {
  std::vector<AgreementAnalysis> analyses;
  std::vector<double> pearson;  ///< estimate vs gold, per analysis
};

LoaBundle analyse_results(std::span<const TrialResult> results, MotionCoding coding) {
  if (results.empty()) throw Error(ErrorKind::empty_input, "no trial results to analyse");
  LoaBundle b;
  const auto effects = design_effects(coding);
  for (auto method : {RrMethod::baseline, RrMethod::modified}) {
    const auto design = build_design(results, method, coding);
    if (design.n_obs() == 0) continue;
    b.analyses.push_back(analyse_agreement(design, effects, std::string(to_string(method))));
    std::vector<double> est, gold;
    for (const auto& r : results) {
      const auto& e = method == RrMethod::baseline ? r.baseline : r.modified;
      if (!e) continue;
      est.push_back(e->rr_bpm);
      gold.push_back(r.gold_rr_bpm);
    }
    try {
      b.pearson.push_back(pearson_r(est, gold));
    } catch (const Error&) {
      b.pearson.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (b.analyses.empty()) throw Error(ErrorKind::empty_input, "every estimator failed on every trial");
  return b;
}

std::string lrt_text(const LrtResult& t) {
  return "chi2(" + std::to_string(t.df) + ") = " + num(t.chi2) + ", p = " + num(t.p);
}

std::string render_loa(const LoaBundle& b, Format format) {
  if (format == Format::json) {
    json doc{{"methods", json::array()}};
    for (std::size_t i = 0; i < b.analyses.size(); ++i) {
      json entry = b.analyses[i];
      entry["pearson_r"] = encode_double(b.pearson[i]);
      doc["methods"].push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  if (format == Format::csv) {
    os << "method,row,excluded_effect,bias,sd,lower,upper,chi2,df,p,pearson_r\n";
    for (std::size_t i = 0; i < b.analyses.size(); ++i) {
      const auto& a = b.analyses[i];
      os << a.method << ",full,," << num(a.loa.bias) << ',' << num(a.loa.sd) << ',' << num(a.loa.lower) << ','
         << num(a.loa.upper) << ",,,," << num(b.pearson[i]) << '\n';
      for (const auto& ex : a.exclusions) {
        os << a.method << ",excluded," << ex.effect << ',' << num(ex.loa.bias) << ',' << num(ex.loa.sd) << ','
           << num(ex.loa.lower) << ',' << num(ex.loa.upper) << ',' << num(ex.lrt.chi2) << ',' << ex.lrt.df << ','
           << num(ex.lrt.p) << ",\n";
      }
    }
    return os.str();
  }
  os << "95% limits of agreement (mixed-effects)\n";
  os << pad("method", 10) << pad("mean bias", 12) << pad("lower", 12) << pad("upper", 12) << pad("sd", 12)
     << "pearson_r\n";
  for (std::size_t i = 0; i < b.analyses.size(); ++i) {
    const auto& a = b.analyses[i];
    os << pad(a.method, 10) << pad(num(a.loa.bias), 12) << pad(num(a.loa.lower), 12) << pad(num(a.loa.upper), 12)
       << pad(num(a.loa.sd), 12) << num(b.pearson[i]) << '\n';
  }
  for (const auto& a : b.analyses) {
    os << "\nLikelihood ratio tests, " << a.method << " method\n";
    os << pad("excluded", 10) << pad("mean bias", 12) << pad("lower", 12) << pad("upper", 12) << "test\n";
    for (const auto& ex : a.exclusions) {
      os << pad(ex.effect, 10) << pad(num(ex.loa.bias), 12) << pad(num(ex.loa.lower), 12)
         << pad(num(ex.loa.upper), 12) << lrt_text(ex.lrt) << '\n';
    }
  }
  os << "\nMotion excluded from fixed effects\n";
  os << pad("method", 10) << pad("mean bias", 12) << pad("lower", 12) << pad("upper", 12) << "test\n";
  for (const auto& a : b.analyses) {
    for (const auto& ex : a.exclusions) {
      if (ex.effect != "motion") continue;
      os << pad(a.method, 10) << pad(num(ex.loa.bias), 12) << pad(num(ex.loa.lower), 12)
         << pad(num(ex.loa.upper), 12) << lrt_text(ex.lrt) << '\n';
    }
  }
  return os.str();
}

int cmd_loa(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw Error(ErrorKind::invalid_parameter, "loa needs --input <trial results JSON>");
  const auto results = parse_trial_results(read_text(cfg.input));
  const auto bundle = analyse_results(results, parse_coding(cfg.motion_coding));
  emit(cfg, "loa", render_loa(bundle, cfg.format), out);
  return kOk;
}

// --------------------------------------------------------------- experiment

int cmd_experiment(const RunConfig& cfg, std::ostream& out) {
  const auto manifest = manifest_from(cfg);
  const auto opts = experiment_options(cfg);
  const auto exp = run_experiment(manifest, opts);
  const auto bundle = analyse_results(exp.trials, opts.motion_coding);
  const auto dir = output_directory(cfg);
  write_file(dir / "trial_results.json", render_trial_results(exp.trials, Format::json));
  write_file(dir / "trial_results.csv", render_trial_results(exp.trials, Format::csv));
  std::ostringstream db, dm;
  write_design_csv(db, exp.baseline);
  write_design_csv(dm, exp.modified);
  write_file(dir / "design_baseline.csv", db.str());
  write_file(dir / "design_modified.csv", dm.str());
  write_file(dir / "loa.json", render_loa(bundle, Format::json));
  const auto text = render_loa(bundle, Format::text);
  write_file(dir / "loa.txt", text);
  out << render_trial_results(exp.trials, Format::text) << '\n' << text;
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return kIo;
    case ErrorKind::parse: return kParse;
    case ErrorKind::empty_input:
    case ErrorKind::insufficient_data: return kInsufficientData;
    case ErrorKind::identifiability:
    case ErrorKind::design:
    case ErrorKind::convergence:
    case ErrorKind::nesting: return kModel;
    case ErrorKind::invalid_parameter:
    case ErrorKind::bounds: return kUsage;
    default: return kFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"psmrr: pressure-mat metrology, respiratory-rate estimation and agreement analysis"};
  app.require_subcommand(1);
  RunConfig cfg;

  const std::map<std::string, Format> formats{{"text", Format::text}, {"json", Format::json}, {"csv", Format::csv}};
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", cfg.format, "Report format: text, json or csv")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  };
  auto add_output = [&](CLI::App* sub, const char* help) { sub->add_option("--output", cfg.output, help); };
  auto add_signal = [&](CLI::App* sub) {
    sub->add_option("--roi", cfg.roi, "ROI as r0,r1,c0,c1 (inclusive; default full grid)");
    sub->add_option("--noise-floor", cfg.noise_floor, "Sensel noise floor in psi (default 0.097)");
    sub->add_option("--window-s", cfg.window_s, "Analysis window in seconds")->capture_default_str();
    sub->add_option("--overlap", cfg.overlap, "Window overlap fraction")->capture_default_str();
    sub->add_option("--smooth-s", cfg.smooth_s, "Moving-average window of the modified estimator")
        ->capture_default_str();
    sub->add_option("--band", cfg.band, "Peak search band lo,hi in Hz, or 'none'")->capture_default_str();
  };

  auto* metrology = app.add_subcommand("metrology", "Drift, creep and bootstrap uncertainty of a static recording");
  metrology->add_option("--input", cfg.input, "Frame file (CSV or JSON)")->required();
  add_output(metrology, "Report file (default stdout or $PSMRR_OUTPUT_DIR)");
  metrology->add_option("--roi", cfg.roi, "ROI as r0,r1,c0,c1 (default full grid)");
  metrology->add_option("--noise-floor", cfg.noise_floor, "Sensel noise floor in psi (default 0.06)");
  metrology->add_option("--trim-s", cfg.trim_s, "Seconds discarded at each end")->capture_default_str();
  metrology->add_option("--endpoint-s", cfg.endpoint_s, "Creep endpoint averaging window")->capture_default_str();
  metrology->add_option("--block", cfg.block, "Bootstrap block size in samples")->capture_default_str();
  metrology->add_option("--n-boot", cfg.n_boot, "Bootstrap resamples")->capture_default_str();
  metrology->add_option("--seed", cfg.seed, "Bootstrap seed")->capture_default_str();
  add_format(metrology);

  auto* estimate = app.add_subcommand("estimate", "Respiratory rate from a frame file or a simulation index");
  estimate->add_option("--input", cfg.input, "Frame file (CSV or JSON)");
  estimate->add_option("--manifest", cfg.manifest, "simulation.json written by `simulate`");
  add_output(estimate, "Report file (default stdout or $PSMRR_OUTPUT_DIR)");
  add_signal(estimate);
  estimate->add_option("--method", cfg.method, "baseline, modified or both")->capture_default_str();
  estimate->add_option("--plot-dir", cfg.plot_dir, "Directory for tidy series/spectra/peaks CSV");
  estimate->add_option("--motion-coding", cfg.motion_coding, "binary or type")->capture_default_str();
  add_format(estimate);

  auto* simulate = app.add_subcommand("simulate", "Render synthetic bench trials to frame files");
  simulate->add_flag("--default-28", cfg.default_28, "Use the built-in 28-trial manifest");
  simulate->add_option("--manifest", cfg.manifest, "JSON array of trial configs");
  add_output(simulate, "Output directory (default $PSMRR_OUTPUT_DIR)");
  simulate->add_option("--seed", cfg.seed, "Base seed of the default manifest")->capture_default_str();
  simulate->add_option("--frame-format", cfg.frame_format, "csv or json")->capture_default_str();

  auto* loa = app.add_subcommand("loa", "Mixed-effects limits of agreement and likelihood ratio tests");
  loa->add_option("--input", cfg.input, "Trial results JSON")->required();
  add_output(loa, "Report file (default stdout or $PSMRR_OUTPUT_DIR)");
  loa->add_option("--motion-coding", cfg.motion_coding, "binary (1 df) or type (2 df)")->capture_default_str();
  add_format(loa);

  auto* experiment = app.add_subcommand("experiment", "Simulate, estimate and analyse a manifest end to end");
  experiment->add_flag("--default-28", cfg.default_28, "Use the built-in 28-trial manifest");
  experiment->add_option("--manifest", cfg.manifest, "JSON array of trial configs");
  add_output(experiment, "Output directory (default $PSMRR_OUTPUT_DIR)");
  experiment->add_option("--seed", cfg.seed, "Base seed of the default manifest")->capture_default_str();
  add_signal(experiment);
  experiment->add_option("--motion-coding", cfg.motion_coding, "binary or type")->capture_default_str();

  std::vector<const char*> argv{"psmrr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*metrology) return cmd_metrology(cfg, out);
    if (*estimate) return cmd_estimate(cfg, out);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*loa) return cmd_loa(cfg, out);
    if (*experiment) return cmd_experiment(cfg, out);
  } catch (const Error& e) {
    err << "psmrr: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "psmrr: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace psmrr::cli
