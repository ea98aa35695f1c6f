#include "psmrr/serialize.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "psmrr/error.hpp"

namespace psmrr {
namespace {

using nlohmann::json;

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

json parse_document(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of_offset(text, e.byte), std::string(what) + ": " + e.what());
  }
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

json encode_double(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double decode_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorKind::parse, "expected a number, got '" + s + "'");
}

void to_json(json& j, const MetrologyReport& r) {
  j = json{{"p_avg_psi", r.p_avg},        {"contact_area_pct", r.contact_area_pct},
           {"creep_pct_per_min", r.creep_pct}, {"drift_pct", r.drift_pct},
           {"drift_std_pct", r.drift_std_pct}, {"n_samples", r.n_samples},
           {"fs", r.fs}};
}

void to_json(json& j, const RrEstimate& r) {
  j = json{{"method", to_string(r.method)},
           {"rr_bpm", r.rr_bpm},
           {"window_s", r.window_s},
           {"overlap", r.overlap},
           {"per_window_peaks_hz", r.per_window_peaks}};
}

void from_json(const json& j, RrEstimate& r) {
  const auto method = j.at("method").get<std::string>();
  if (method != "baseline" && method != "modified") {
    throw Error(ErrorKind::parse, "unknown estimator method '" + method + "'");
  }
  r.method = method == "baseline" ? RrMethod::baseline : RrMethod::modified;
  r.rr_bpm = j.at("rr_bpm").get<double>();
  r.window_s = j.at("window_s").get<double>();
  r.overlap = j.at("overlap").get<double>();
  r.per_window_peaks = j.at("per_window_peaks_hz").get<std::vector<double>>();
}

void to_json(json& j, const LoAReport& r) {
  j = json{{"method", r.method}, {"bias", r.bias}, {"sd", r.sd}, {"lower", r.lower}, {"upper", r.upper}};
}

void to_json(json& j, const LrtResult& r) { j = json{{"chi2", r.chi2}, {"df", r.df}, {"p", r.p}}; }

void to_json(json& j, const MixedFit& r) {
  j = json{{"beta", std::vector<double>(r.beta.data(), r.beta.data() + r.beta.size())},
           {"v1", r.v1},
           {"v2", r.v2},
           {"loglik", r.loglik},
           {"n_params", r.n_params},
           {"n_obs", r.n_obs},
           {"n_groups", r.n_groups},
           {"v1_clamped", r.v1_clamped},
           {"v2_clamped", r.v2_clamped},
           {"ratio_at_bound", r.ratio_at_bound},
           {"identifiable", r.identifiable}};
}

void to_json(json& j, const AgreementAnalysis& r) {
  j = json{{"method", r.method}, {"loa", r.loa}, {"full_fit", r.full}, {"bias_fit", r.bias}};
  auto& rows = j["exclusions"] = json::array();
  for (const auto& ex : r.exclusions) {
    rows.push_back(json{{"effect", ex.effect},
                        {"loa", ex.loa},
                        {"intercept", ex.intercept},
                        {"lrt", ex.lrt},
                        {"reduced_fit", ex.reduced}});
  }
}

void to_json(json& j, const TrialConfig& c) {
  j = json{{"id", c.id},
           {"gold_rr_bpm", c.gold_rr_bpm},
           {"duration_s", c.duration_s},
           {"fs", c.fs},
           {"motion", to_string(c.motion)},
           {"mattress", to_string(c.mattress)},
           {"grunting", c.grunting},
           {"position", to_string(c.position)},
           {"seed", c.seed},
           {"motion_power_ratio", c.motion_power_ratio},
           {"snap_to_bin", c.snap_to_bin},
           {"snap_resolution_hz", c.snap_resolution_hz},
           {"enforce_duration_bounds", c.enforce_duration_bounds}};
}

void from_json(const json& j, TrialConfig& c) {
  TrialConfig d;
  c.id = j.value("id", d.id);
  c.gold_rr_bpm = j.at("gold_rr_bpm").get<double>();
  c.duration_s = j.at("duration_s").get<double>();
  c.fs = j.value("fs", d.fs);
  c.motion = parse_motion(j.value("motion", std::string(to_string(d.motion))));
  c.mattress = parse_mattress(j.value("mattress", std::string(to_string(d.mattress))));
  c.grunting = j.value("grunting", d.grunting);
  c.position = parse_position(j.value("position", std::string(to_string(d.position))));
  c.seed = j.value("seed", d.seed);
  c.motion_power_ratio = j.value("motion_power_ratio", d.motion_power_ratio);
  c.snap_to_bin = j.value("snap_to_bin", d.snap_to_bin);
  c.snap_resolution_hz = j.value("snap_resolution_hz", d.snap_resolution_hz);
  c.enforce_duration_bounds = j.value("enforce_duration_bounds", d.enforce_duration_bounds);
}

void to_json(json& j, const TrialResult& r) {
  j = json{{"config", r.config},
           {"gold_rr_bpm", r.gold_rr_bpm},
           {"baseline", r.baseline ? json(*r.baseline) : json(nullptr)},
           {"modified", r.modified ? json(*r.modified) : json(nullptr)},
           {"baseline_error", r.baseline_error},
           {"modified_error", r.modified_error},
           {"diff_baseline", r.diff(RrMethod::baseline) ? json(*r.diff(RrMethod::baseline)) : json(nullptr)},
           {"diff_modified", r.diff(RrMethod::modified) ? json(*r.diff(RrMethod::modified)) : json(nullptr)},
           {"snr_db", encode_double(r.snr_db)}};
}

void from_json(const json& j, TrialResult& r) {
  r.config = j.at("config").get<TrialConfig>();
  r.gold_rr_bpm = j.value("gold_rr_bpm", r.config.gold_rr_bpm);
  r.baseline.reset();
  r.modified.reset();
  if (j.contains("baseline") && !j.at("baseline").is_null()) r.baseline = j.at("baseline").get<RrEstimate>();
  if (j.contains("modified") && !j.at("modified").is_null()) r.modified = j.at("modified").get<RrEstimate>();
  r.baseline_error = j.value("baseline_error", std::string());
  r.modified_error = j.value("modified_error", std::string());
  r.snr_db = j.contains("snr_db") ? decode_double(j.at("snr_db")) : std::numeric_limits<double>::quiet_NaN();
}

void to_json(json& j, const Design& d) {
  j = json{{"columns", d.columns},
           {"y", std::vector<double>(d.y.data(), d.y.data() + d.y.size())},
           {"groups", d.groups}};
  auto& rows = j["x"] = json::array();
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(d.x.cols()));
    for (Eigen::Index c = 0; c < d.x.cols(); ++c) row[static_cast<std::size_t>(c)] = d.x(i, c);
    rows.push_back(std::move(row));
  }
}

std::vector<TrialConfig> parse_manifest(std::string_view text) {
  const auto doc = parse_document(text, "manifest");
  if (!doc.is_array()) throw ParseError(1, "manifest must be a JSON array of trial configs");
  std::vector<TrialConfig> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(doc[i].get<TrialConfig>());
    } catch (const json::exception& e) {
      throw ParseError(0, "manifest entry " + std::to_string(i + 1) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(0, "manifest entry " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string dump_manifest(std::span<const TrialConfig> manifest) {
  json doc = json::array();
  for (const auto& c : manifest) doc.push_back(c);
  return doc.dump(2) + "\n";
}

std::vector<TrialResult> parse_trial_results(std::string_view text) {
  const auto doc = parse_document(text, "trial results");
  const json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("trials")) throw ParseError(1, "trial results object lacks a \"trials\" array");
    list = &doc.at("trials");
  }
  if (!list->is_array()) throw ParseError(1, "trial results must be a JSON array");
  std::vector<TrialResult> out;
  for (std::size_t i = 0; i < list->size(); ++i) {
    try {
      out.push_back((*list)[i].get<TrialResult>());
    } catch (const json::exception& e) {
      throw ParseError(0, "trial result " + std::to_string(i + 1) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(0, "trial result " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

void write_trial_results_csv(std::ostream& out, std::span<const TrialResult> results) {
  out << "id,gold_rr_bpm,duration_s,motion,mattress,grunting,position,seed,rr_baseline,rr_modified,"
         "diff_baseline,diff_modified,snr_db,baseline_error,modified_error\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); };
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (const auto& r : results) {
    const auto& c = r.config;
    out << c.id << ',' << csv_number(r.gold_rr_bpm) << ',' << csv_number(c.duration_s) << ','
        << to_string(c.motion) << ',' << to_string(c.mattress) << ',' << (c.grunting ? 1 : 0) << ','
        << to_string(c.position) << ',' << c.seed << ','
        << (r.baseline ? csv_number(r.baseline->rr_bpm) : "") << ','
        << (r.modified ? csv_number(r.modified->rr_bpm) : "") << ',' << opt(r.diff(RrMethod::baseline))
        << ',' << opt(r.diff(RrMethod::modified)) << ','
        << (std::isinf(r.snr_db) ? (r.snr_db > 0 ? "inf" : "-inf") : csv_number(r.snr_db)) << ','
        << quote(r.baseline_error) << ',' << quote(r.modified_error) << '\n';
  }
}

void write_design_csv(std::ostream& out, const Design& d) {
  out << "y,group";
  for (const auto& c : d.columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < d.y.size(); ++i) {
    out << csv_number(d.y(i)) << ',' << d.groups[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < d.x.cols(); ++c) out << ',' << csv_number(d.x(i, c));
    out << '\n';
  }
}

}  // namespace psmrr
