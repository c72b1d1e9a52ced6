#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ephemera/errors.hpp"
#include "ephemera/io.hpp"

namespace ephemera {

namespace {

using nlohmann::json;

std::string where(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

const json& require(const json& obj, const char* key, const std::string& loc) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError(loc + ": missing required key '" + key + "'");
  }
  return *it;
}

double require_number(const json& obj, const char* key, const std::string& loc) {
  const json& v = require(obj, key, loc);
  if (!v.is_number()) {
    throw FormatError(loc + ": key '" + key + "' must be a number");
  }
  return v.get<double>();
}

Box parse_box(const json& j, const std::string& loc) {
  if (!j.is_object()) throw FormatError(loc + ": box must be an object");
  Box b;
  b.cx = require_number(j, "cx", loc);
  b.cy = require_number(j, "cy", loc);
  b.cz = require_number(j, "cz", loc);
  b.l = require_number(j, "l", loc);
  b.w = require_number(j, "w", loc);
  b.h = require_number(j, "h", loc);
  b.yaw = normalize_yaw(require_number(j, "yaw", loc));
  if (auto it = j.find("score"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw FormatError(loc + ": key 'score' must be a number");
    b.score = it->get<double>();
  }
  try {
    b.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(loc + ": " + e.what());
  }
  return b;
}

json box_to_json(const Box& b) {
  json j = {{"cx", b.cx}, {"cy", b.cy}, {"cz", b.cz}, {"l", b.l},
            {"w", b.w},   {"h", b.h},   {"yaw", b.yaw}};
  if (b.score) j["score"] = *b.score;
  return j;
}

}  // namespace

std::vector<LabelSet> parse_labels(std::istream& in, const std::string& source) {
  std::vector<LabelSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string loc = where(source, line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(loc + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError(loc + ": expected a JSON object");

    LabelSet set;
    const json& frame = require(j, "frame", loc);
    if (!frame.is_string()) throw FormatError(loc + ": key 'frame' must be a string");
    set.frame_id = frame.get<std::string>();
    const json& kind = require(j, "kind", loc);
    if (!kind.is_string()) throw FormatError(loc + ": key 'kind' must be a string");
    try {
      set.kind = label_kind_from_string(kind.get<std::string>());
    } catch (const FormatError& e) {
      throw FormatError(loc + ": " + e.what());
    }
    const json& boxes = require(j, "boxes", loc);
    if (!boxes.is_array()) throw FormatError(loc + ": key 'boxes' must be an array");
    set.boxes.reserve(boxes.size());
    for (const json& b : boxes) set.boxes.push_back(parse_box(b, loc));
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<LabelSet> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label file '" + path.string() + "'");
  return parse_labels(in, path.string());
}

void format_labels(std::ostream& out, std::span<const LabelSet> labels) {
  for (const LabelSet& set : labels) {
    json boxes = json::array();
    for (const Box& b : set.boxes) {
      b.validate();
      boxes.push_back(box_to_json(b));
    }
    json j = {{"frame", set.frame_id},
              {"kind", std::string(to_string(set.kind))},
              {"boxes", std::move(boxes)}};
    out << j.dump() << '\n';
  }
}

void write_labels(const std::filesystem::path& path,
                  std::span<const LabelSet> labels) {
  std::ostringstream out;
  format_labels(out, labels);
  write_file_atomic(path, out.str());
}

}  // namespace ephemera
