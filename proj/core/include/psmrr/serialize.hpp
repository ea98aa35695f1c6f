#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "psmrr/lmm.hpp"
#include "psmrr/metrology.hpp"
#include "psmrr/simbench.hpp"
#include "psmrr/spectral.hpp"

namespace psmrr {

// JSON encodings of the report types. Non-finite doubles are written as the
// strings "inf", "-inf" or "nan" so nothing is silently lost.

void to_json(nlohmann::json& j, const MetrologyReport& r);
void to_json(nlohmann::json& j, const RrEstimate& r);
void from_json(const nlohmann::json& j, RrEstimate& r);
void to_json(nlohmann::json& j, const LoAReport& r);
void to_json(nlohmann::json& j, const LrtResult& r);
void to_json(nlohmann::json& j, const MixedFit& r);
void to_json(nlohmann::json& j, const AgreementAnalysis& r);
void to_json(nlohmann::json& j, const TrialConfig& c);
void from_json(const nlohmann::json& j, TrialConfig& c);
void to_json(nlohmann::json& j, const TrialResult& r);
void from_json(const nlohmann::json& j, TrialResult& r);
void to_json(nlohmann::json& j, const Design& d);

/// Manifest: a JSON array of trial configs. Missing optional fields take the
/// TrialConfig defaults. Throws ParseError with the line of a syntax error or
/// the 1-based entry index of a schema error.
[[nodiscard]] std::vector<TrialConfig> parse_manifest(std::string_view text);
[[nodiscard]] std::string dump_manifest(std::span<const TrialConfig> manifest);

/// Trial results: a JSON array of TrialResult, or an object with a "trials" array.
[[nodiscard]] std::vector<TrialResult> parse_trial_results(std::string_view text);

void write_trial_results_csv(std::ostream& out, std::span<const TrialResult> results);
void write_design_csv(std::ostream& out, const Design& design);

[[nodiscard]] nlohmann::json encode_double(double v);
[[nodiscard]] double decode_double(const nlohmann::json& j);

}  // namespace psmrr
