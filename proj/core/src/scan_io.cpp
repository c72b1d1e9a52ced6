#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ephemera/errors.hpp"
#include "ephemera/io.hpp"

namespace ephemera {

namespace {

constexpr std::size_t kRecordBytes = 16;

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void write_f32_le(float v, unsigned char* p) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  p[0] = static_cast<unsigned char>(bits & 0xffu);
  p[1] = static_cast<unsigned char>((bits >> 8) & 0xffu);
  p[2] = static_cast<unsigned char>((bits >> 16) & 0xffu);
  p[3] = static_cast<unsigned char>((bits >> 24) & 0xffu);
}

std::string_view next_token(std::string_view& rest) {
  const auto begin = rest.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) {
    rest = {};
    return {};
  }
  rest.remove_prefix(begin);
  const auto end = rest.find_first_of(" \t\r");
  std::string_view tok = rest.substr(0, end);
  rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
  return tok;
}

}  // namespace

std::vector<Point> decode_points(std::span<const unsigned char> bytes,
                                 const std::string& source) {
  if (bytes.empty()) {
    throw FormatError(source + ": empty scan (zero points)");
  }
  if (bytes.size() % kRecordBytes != 0) {
    std::ostringstream msg;
    msg << source << ": length " << bytes.size()
        << " is not a multiple of 16; trailing record starts at byte offset "
        << (bytes.size() / kRecordBytes) * kRecordBytes;
    throw FormatError(msg.str());
  }
  const std::size_t n = bytes.size() / kRecordBytes;
  std::vector<Point> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kRecordBytes;
    const float x = read_f32_le(rec);
    const float y = read_f32_le(rec + 4);
    const float z = read_f32_le(rec + 8);
    const float intensity = read_f32_le(rec + 12);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      std::ostringstream msg;
      msg << source << ": point " << i << " has a non-finite coordinate";
      throw FormatError(msg.str());
    }
    points[i].xyz = Vec3(x, y, z);
    points[i].intensity =
        std::isnan(intensity) ? 0.0 : std::clamp<double>(intensity, 0.0, 1.0);
  }
  return points;
}

std::vector<unsigned char> encode_points(std::span<const Point> points) {
  std::vector<unsigned char> bytes(points.size() * kRecordBytes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    unsigned char* rec = bytes.data() + i * kRecordBytes;
    write_f32_le(static_cast<float>(points[i].xyz.x()), rec);
    write_f32_le(static_cast<float>(points[i].xyz.y()), rec + 4);
    write_f32_le(static_cast<float>(points[i].xyz.z()), rec + 8);
    write_f32_le(static_cast<float>(points[i].intensity), rec + 12);
  }
  return bytes;
}

Scan load_scan(const std::filesystem::path& path, const Pose& pose,
               std::string scan_id, std::string traversal_id) {
  const auto bytes = read_file_bytes(path);
  Scan scan;
  scan.scan_id = std::move(scan_id);
  scan.traversal_id = std::move(traversal_id);
  scan.points = decode_points(bytes, path.string());
  scan.pose = pose;
  return scan;
}

void save_scan(const std::filesystem::path& path, std::span<const Point> points) {
  write_file_atomic(path, encode_points(points));
}

std::map<std::string, Pose> parse_poses(std::istream& in,
                                        const std::string& source) {
  std::map<std::string, Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = line;
    const std::string_view id = next_token(rest);
    if (id.empty() || id.front() == '#') continue;

    auto fail = [&](const std::string& why) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": " << why;
      return msg.str();
    };

    double values[12];
    for (int k = 0; k < 12; ++k) {
      const std::string_view tok = next_token(rest);
      if (tok.empty()) throw FormatError(fail("expected 12 numbers after scan id"));
      const auto [ptr, ec] =
          std::from_chars(tok.data(), tok.data() + tok.size(), values[k]);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw FormatError(fail("cannot parse number '" + std::string(tok) + "'"));
      }
    }
    if (!next_token(rest).empty()) {
      throw FormatError(fail("trailing tokens after 12 numbers"));
    }

    Mat3 r;
    Vec3 t;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r(row, col) = values[row * 4 + col];
      t(row) = values[row * 4 + 3];
    }
    Pose pose;
    try {
      pose = Pose::from_matrix_reorthonormalized(r, t,
                                                 kPoseReorthonormalizeTolerance);
    } catch (const ValidationError& e) {
      throw ValidationError(fail(e.what()));
    }
    if (!poses.emplace(std::string(id), pose).second) {
      throw ValidationError(fail("duplicate scan id '" + std::string(id) + "'"));
    }
  }
  return poses;
}

std::map<std::string, Pose> load_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open pose file '" + path.string() + "'");
  return parse_poses(in, path.string());
}

void save_poses(const std::filesystem::path& path,
                const std::vector<std::pair<std::string, Pose>>& poses) {
  std::string out;
  char buf[64];
  for (const auto& [id, pose] : poses) {
    out += id;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 4; ++col) {
        const double v =
            col < 3 ? pose.rotation()(row, col) : pose.translation()(row);
        std::snprintf(buf, sizeof(buf), " %.17g", v);
        out += buf;
      }
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace ephemera
