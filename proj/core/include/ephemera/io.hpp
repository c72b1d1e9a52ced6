#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ephemera/types.hpp"

namespace ephemera {

/// Reads a KITTI-style binary scan: N records of 4 little-endian float32
/// (x, y, z, intensity). Intensity is clamped to [0, 1].
///
/// Throws FormatError when the file is empty or not a multiple of 16 bytes,
/// and when a coordinate is NaN (the message names the point index).
Scan load_scan(const std::filesystem::path& path, const Pose& pose,
               std::string scan_id, std::string traversal_id);

/// Decodes the same layout from memory. `source` only feeds error messages.
std::vector<Point> decode_points(std::span<const unsigned char> bytes,
                                 const std::string& source);

std::vector<unsigned char> encode_points(std::span<const Point> points);

/// Writes points in the binary scan layout (float32, little-endian).
void save_scan(const std::filesystem::path& path, std::span<const Point> points);

/// Pose file: one line per scan, `scan_id r00 r01 r02 t0 r10 r11 r12 t1 r20
/// r21 r22 t2`. Rotations drifting up to 1e-3 from orthonormal are
/// re-orthonormalized; larger drift or a reflection is rejected.
std::map<std::string, Pose> load_poses(const std::filesystem::path& path);
std::map<std::string, Pose> parse_poses(std::istream& in,
                                        const std::string& source);

void save_poses(const std::filesystem::path& path,
                const std::vector<std::pair<std::string, Pose>>& poses);

inline constexpr double kPoseReorthonormalizeTolerance = 1e-3;

/// JSON-lines label stream, one object per frame:
/// {"frame": str, "kind": str, "boxes": [{"cx","cy","cz","l","w","h","yaw","score"?}]}
std::vector<LabelSet> read_labels(const std::filesystem::path& path);
std::vector<LabelSet> parse_labels(std::istream& in, const std::string& source);

void write_labels(const std::filesystem::path& path,
                  std::span<const LabelSet> labels);
void format_labels(std::ostream& out, std::span<const LabelSet> labels);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const unsigned char> contents);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);

}  // namespace ephemera
