#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "psmrr/frames.hpp"

namespace psmrr {

// CSV frame files:
//
//   fs=20,rows=18,cols=18
//   t=0,0.1,0.2,...        (rows*cols values, row-major)
//   t=0.05,0.1,0.2,...
//
// The `t=` token is optional; frames without it are stamped index / fs.
// Sensel values are written with 6 significant digits, timestamps with 10.
//
// The JSON mirror carries the same fields:
//   {"fs": 20, "rows": 18, "cols": 18, "frames": [{"t": 0, "values": [...]}, ...]}

void write_frames_csv(std::ostream& out, const FrameSequence& seq);
[[nodiscard]] FrameSequence read_frames_csv(std::istream& in);

void write_frames_json(std::ostream& out, const FrameSequence& seq);
[[nodiscard]] FrameSequence read_frames_json(std::istream& in);

/// Dispatches on extension: `.json` uses the JSON mirror, anything else CSV.
void save_frames(const std::filesystem::path& path, const FrameSequence& seq);
[[nodiscard]] FrameSequence load_frames(const std::filesystem::path& path);

/// Formats with the same 6-significant-digit rule the writers use.
[[nodiscard]] std::string format_sensel(double value);

}  // namespace psmrr
