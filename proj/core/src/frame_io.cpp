#include "psmrr/frame_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "psmrr/error.hpp"

namespace psmrr {
namespace {

std::string format_number(double value, int precision) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_size(std::string_view s) {
  s = trim(s);
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

struct Header {
  double fs = 0.0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

Header parse_header(std::string_view line, std::size_t line_no) {
  Header h;
  bool have_fs = false, have_rows = false, have_cols = false;
  for (auto token : split(line, ',')) {
    token = trim(token);
    auto eq = token.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "header token without '='");
    auto key = trim(token.substr(0, eq));
    auto value = token.substr(eq + 1);
    if (key == "fs") {
      auto v = parse_double(value);
      if (!v || !(*v > 0.0)) throw ParseError(line_no, "fs must be a positive number");
      h.fs = *v;
      have_fs = true;
    } else if (key == "rows" || key == "cols") {
      auto v = parse_size(value);
      if (!v || *v == 0) throw ParseError(line_no, std::string(key) + " must be a positive integer");
      (key == "rows" ? h.rows : h.cols) = *v;
      (key == "rows" ? have_rows : have_cols) = true;
    } else {
      throw ParseError(line_no, "unknown header key '" + std::string(key) + "'");
    }
  }
  if (!have_fs || !have_rows || !have_cols) {
    throw ParseError(line_no, "header must declare fs, rows and cols");
  }
  return h;
}

/// Shared by both readers: checks spacing against fs and fills in absent
/// timestamps, reporting failures against `where`.
class FrameAssembler {
 public:
  explicit FrameAssembler(const Header& header) : header_(header) {}

  void add(std::optional<double> t, std::vector<double> values, std::size_t where) {
    const std::size_t index = frames_.size();
    const std::size_t expected = header_.rows * header_.cols;
    if (values.size() != expected) {
      throw ParseError(where, "frame " + std::to_string(index + 1) + " has " +
                                  std::to_string(values.size()) + " values, expected " +
                                  std::to_string(expected) + " (" + std::to_string(header_.rows) +
                                  "x" + std::to_string(header_.cols) + ")");
    }
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ParseError(where, "frame " + std::to_string(index + 1) +
                                    " has a negative or non-finite sensel value");
      }
    }
    const double stamp = t.value_or(static_cast<double>(index) / header_.fs);
    if (!frames_.empty()) {
      const double period = 1.0 / header_.fs;
      const double dt = stamp - frames_.back().timestamp();
      if (!(dt > 0.0)) {
        throw ParseError(where, "frame " + std::to_string(index + 1) + " timestamp is not increasing");
      }
      if (std::abs(dt - period) > FrameSequence::kSpacingTolerance * period) {
        throw ParseError(where, "frame " + std::to_string(index + 1) +
                                    " timestamp spacing disagrees with fs");
      }
    }
    frames_.emplace_back(stamp, header_.rows, header_.cols, std::move(values));
  }

  FrameSequence finish() && {
    if (frames_.empty()) throw Error(ErrorKind::empty_input, "frame file contains no frames");
    return FrameSequence(std::move(frames_), header_.fs);
  }

 private:
  Header header_;
  std::vector<PressureFrame> frames_;
};

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

std::string format_sensel(double value) { return format_number(value, 6); }

void write_frames_csv(std::ostream& out, const FrameSequence& seq) {
  out << "fs=" << format_number(seq.fs(), 10) << ",rows=" << seq.rows() << ",cols=" << seq.cols()
      << '\n';
  std::string line;
  for (const auto& frame : seq.frames()) {
    line = "t=" + format_number(frame.timestamp(), 10);
    for (double v : frame.values()) {
      line += ',';
      line += format_sensel(v);
    }
    line += '\n';
    out << line;
  }
}

FrameSequence read_frames_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<Header> header;
  std::optional<FrameAssembler> frames;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty()) continue;
    if (!header) {
      header = parse_header(view, line_no);
      frames.emplace(*header);
      continue;
    }
    auto tokens = split(view, ',');
    std::optional<double> stamp;
    std::size_t first_value = 0;
    auto head = trim(tokens.front());
    if (head.starts_with("t=")) {
      stamp = parse_double(head.substr(2));
      if (!stamp) throw ParseError(line_no, "malformed timestamp");
      first_value = 1;
    }
    std::vector<double> values;
    values.reserve(tokens.size());
    for (std::size_t i = first_value; i < tokens.size(); ++i) {
      auto v = parse_double(tokens[i]);
      if (!v) {
        throw ParseError(line_no, "malformed sensel value '" + std::string(trim(tokens[i])) + "'");
      }
      values.push_back(*v);
    }
    frames->add(stamp, std::move(values), line_no);
  }
  if (!header) throw Error(ErrorKind::empty_input, "frame file is empty");
  return std::move(*frames).finish();
}

void write_frames_json(std::ostream& out, const FrameSequence& seq) {
  // Round values through the 6-digit formatter so both mirrors agree.
  nlohmann::json doc;
  doc["fs"] = seq.fs();
  doc["rows"] = seq.rows();
  doc["cols"] = seq.cols();
  auto& frames = doc["frames"] = nlohmann::json::array();
  for (const auto& frame : seq.frames()) {
    std::vector<double> values;
    values.reserve(frame.values().size());
    for (double v : frame.values()) values.push_back(*parse_double(format_sensel(v)));
    frames.push_back({{"t", *parse_double(format_number(frame.timestamp(), 10))},
                      {"values", std::move(values)}});
  }
  out << doc.dump() << '\n';
}

FrameSequence read_frames_json(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (trim(text).empty()) throw Error(ErrorKind::empty_input, "frame file is empty");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_of_offset(text, e.byte), e.what());
  }
  try {
    Header h;
    h.fs = doc.at("fs").get<double>();
    h.rows = doc.at("rows").get<std::size_t>();
    h.cols = doc.at("cols").get<std::size_t>();
    if (!(h.fs > 0.0) || h.rows == 0 || h.cols == 0) {
      throw ParseError(0, "fs, rows and cols must be positive");
    }
    FrameAssembler frames(h);
    const auto& list = doc.at("frames");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& f = list[i];
      std::optional<double> stamp;
      if (f.contains("t")) stamp = f.at("t").get<double>();
      frames.add(stamp, f.at("values").get<std::vector<double>>(), 0);
    }
    return std::move(frames).finish();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("frame JSON schema: ") + e.what());
  }
}

void save_frames(const std::filesystem::path& path, const FrameSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  if (path.extension() == ".json") {
    write_frames_json(out, seq);
  } else {
    write_frames_csv(out, seq);
  }
  if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

FrameSequence load_frames(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return path.extension() == ".json" ? read_frames_json(in) : read_frames_csv(in);
}

}  // namespace psmrr
