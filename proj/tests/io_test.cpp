#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "ephemera/errors.hpp"
#include "ephemera/io.hpp"
#include "ephemera/types.hpp"
#include "test_util.hpp"

namespace ephemera {
namespace {

std::vector<unsigned char> float_bytes(std::initializer_list<float> values) {
  std::vector<unsigned char> out(values.size() * 4);
  std::size_t i = 0;
  for (float v : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int b = 0; b < 4; ++b) out[i++] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return out;
}

TEST(ScanFormat, DecodesTwoPoints) {
  auto bytes = float_bytes({1, 2, 3, 0.5f, 4, 5, 6, 1.0f});
  ASSERT_EQ(bytes.size(), 32u);
  auto pts = decode_points(bytes, "mem");
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].xyz, Vec3(1, 2, 3));
  EXPECT_DOUBLE_EQ(pts[0].intensity, 0.5);
  EXPECT_EQ(pts[1].xyz, Vec3(4, 5, 6));
  EXPECT_DOUBLE_EQ(pts[1].intensity, 1.0);
}

TEST(ScanFormat, RejectsEmpty) {
  EXPECT_THROW(decode_points({}, "mem"), FormatError);
}

TEST(ScanFormat, TruncatedReportsByteOffset) {
  auto bytes = float_bytes({1, 2, 3, 0.5f});
  bytes.push_back(0);
  try {
    decode_points(bytes, "scan.bin");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos) << e.what();
  }
}

TEST(ScanFormat, NanCoordinateNamesPointIndex) {
  auto bytes = float_bytes({1, 2, 3, 0, 4, std::nanf(""), 6, 0});
  try {
    decode_points(bytes, "scan.bin");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("point 1"), std::string::npos) << e.what();
  }
}

TEST(ScanFormat, IntensityClamped) {
  auto pts = decode_points(float_bytes({0, 0, 0, 3.0f, 0, 0, 0, -1.0f}), "mem");
  EXPECT_DOUBLE_EQ(pts[0].intensity, 1.0);
  EXPECT_DOUBLE_EQ(pts[1].intensity, 0.0);
}

TEST(ScanFormat, FileRoundTrip) {
  testing::TempDir dir;
  std::vector<Point> pts = {{Vec3(1.5, -2.25, 3.0), 0.25}, {Vec3(-7, 8, 0.125), 1.0}};
  save_scan(dir / "a.bin", pts);
  EXPECT_EQ(std::filesystem::file_size(dir / "a.bin"), 32u);
  Scan s = load_scan(dir / "a.bin", Pose(), "a", "t0");
  ASSERT_EQ(s.points.size(), 2u);
  EXPECT_EQ(s.points[1].xyz, pts[1].xyz);
  EXPECT_EQ(s.scan_id, "a");
  EXPECT_EQ(s.traversal_id, "t0");
}

TEST(ToWorld, IdentityTranslationRotation) {
  Scan s;
  s.points = {{Vec3(1, 2, 3), 0}};
  EXPECT_EQ(to_world(s)[0], Vec3(1, 2, 3));

  s.pose = Pose::from_yaw(0.0, Vec3(10, 0, 0));
  EXPECT_EQ(to_world(s)[0], Vec3(11, 2, 3));

  s.points = {{Vec3(1, 0, 0), 0}};
  s.pose = Pose::from_yaw(std::numbers::pi / 2.0, Vec3::Zero());
  const Vec3 w = to_world(s)[0];
  EXPECT_NEAR(w.x(), 0.0, 1e-9);
  EXPECT_NEAR(w.y(), 1.0, 1e-9);
  EXPECT_NEAR(w.z(), 0.0, 1e-9);
}

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Quaterniond q(u(rng), u(rng), u(rng), u(rng));
  q.normalize();
  return Pose::from_matrix(q.toRotationMatrix(), Vec3(10 * u(rng), 10 * u(rng), u(rng)));
}

TEST(PoseProperty, CompositionAssociative) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    Vec3 p = testing::random_point(rng, -20, 20);
    Vec3 lhs = a.compose(b).compose(c).apply(p);
    Vec3 rhs = a.compose(b.compose(c)).apply(p);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PoseProperty, ToWorldThenInverseIsIdentity) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 50; ++i) {
    Scan s;
    s.pose = random_pose(rng);
    for (int k = 0; k < 20; ++k) s.points.push_back({testing::random_point(rng, -50, 50), 0});
    auto world = to_world(s);
    const Pose inv = s.pose.inverse();
    for (std::size_t k = 0; k < world.size(); ++k) {
      EXPECT_LT((inv.apply(world[k]) - s.points[k].xyz).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(PoseFile, IdentityLine) {
  std::istringstream in("s0 1 0 0 0 0 1 0 0 0 0 1 0\n");
  auto poses = parse_poses(in, "poses.txt");
  ASSERT_EQ(poses.count("s0"), 1u);
  EXPECT_TRUE(poses.at("s0").rotation().isIdentity(0.0));
  EXPECT_EQ(poses.at("s0").translation(), Vec3::Zero());
}

TEST(PoseFile, DuplicateIdRejected) {
  std::istringstream in("s0 1 0 0 0 0 1 0 0 0 0 1 0\ns0 1 0 0 1 0 1 0 0 0 0 1 0\n");
  EXPECT_THROW(parse_poses(in, "poses.txt"), ValidationError);
}

TEST(PoseFile, ReflectionRejected) {
  std::istringstream in("s0 1 0 0 0 0 1 0 0 0 0 -1 0\n");
  EXPECT_THROW(parse_poses(in, "poses.txt"), ValidationError);
}

TEST(PoseFile, SmallDriftReorthonormalized) {
  std::istringstream in("s0 1.0003 0 0 0 0 1 0 0 0 0 1 0\n");
  auto poses = parse_poses(in, "poses.txt");
  EXPECT_LT(orthonormality_drift(poses.at("s0").rotation()), 1e-12);
}

TEST(PoseFile, LargeDriftRejected) {
  std::istringstream in("s0 1.01 0 0 0 0 1 0 0 0 0 1 0\n");
  EXPECT_THROW(parse_poses(in, "poses.txt"), ValidationError);
}

TEST(PoseFile, MalformedLineNamesLineNumber) {
  std::istringstream in("# header\ns0 1 0 0 0 0 1 0 0 0 0 1 0\ns1 1 0 0 x 0 1 0 0 0 0 1 0\n");
  try {
    parse_poses(in, "poses.txt");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("poses.txt:3"), std::string::npos) << e.what();
  }
}

TEST(PoseFile, SaveLoadRoundTrip) {
  testing::TempDir dir;
  std::mt19937_64 rng(3);
  std::vector<std::pair<std::string, Pose>> poses;
  for (int i = 0; i < 5; ++i) poses.emplace_back("s" + std::to_string(i), random_pose(rng));
  save_poses(dir / "poses.txt", poses);
  auto back = load_poses(dir / "poses.txt");
  for (const auto& [id, p] : poses) {
    EXPECT_LT((back.at(id).rotation() - p.rotation()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((back.at(id).translation() - p.translation()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Labels, EmptyBoxesRoundTrip) {
  std::vector<LabelSet> sets = {{"f0", LabelKind::kGroundTruth, {}}};
  std::ostringstream out;
  format_labels(out, sets);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_labels(in, "mem"), sets);
}

TEST(Labels, ZeroLengthRejected) {
  std::istringstream in(
      R"({"frame":"f0","kind":"seed","boxes":[{"cx":0,"cy":0,"cz":0,"l":0,"w":1,"h":1,"yaw":0}]})"
      "\n");
  EXPECT_THROW(parse_labels(in, "mem"), ValidationError);
}

TEST(Labels, MissingKeyNamesKeyAndLine) {
  std::istringstream in(
      R"({"frame":"f0","kind":"seed","boxes":[]})"
      "\n"
      R"({"frame":"f1","kind":"seed","boxes":[{"cx":0,"cy":0,"cz":0,"l":1,"w":1,"yaw":0}]})"
      "\n");
  try {
    parse_labels(in, "labels.jsonl");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'h'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("labels.jsonl:2"), std::string::npos) << msg;
  }
}

TEST(Labels, RandomRoundTripWithin1e9) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  testing::TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LabelSet> sets(1);
    sets[0].frame_id = "frame_" + std::to_string(trial);
    sets[0].kind = LabelKind::kDetection;
    for (int i = 0; i < 3; ++i) {
      Box b = testing::random_box(rng, 60.0);
      b.score = unit(rng);
      sets[0].boxes.push_back(b);
    }
    write_labels(dir / "l.jsonl", sets);
    auto back = read_labels(dir / "l.jsonl");
    ASSERT_EQ(back.size(), 1u);
    ASSERT_EQ(back[0].boxes.size(), 3u);
    EXPECT_EQ(back[0].kind, LabelKind::kDetection);
    for (int i = 0; i < 3; ++i) {
      const Box& a = sets[0].boxes[i];
      const Box& b = back[0].boxes[i];
      for (auto [x, y] : {std::pair{a.cx, b.cx}, {a.cy, b.cy}, {a.cz, b.cz}, {a.l, b.l},
                          {a.w, b.w}, {a.h, b.h}, {a.yaw, b.yaw}, {*a.score, *b.score}}) {
        EXPECT_NEAR(x, y, 1e-9);
      }
    }
  }
}

TEST(Labels, KindNames) {
  for (LabelKind k : {LabelKind::kSeed, LabelKind::kPseudo, LabelKind::kDetection,
                      LabelKind::kGroundTruth}) {
    EXPECT_EQ(label_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(label_kind_from_string("car"), FormatError);
}

TEST(BoxInvariant, YawNormalizedIntoHalfOpenRange) {
  Box b{0, 0, 0, 4, 2, 1.5, std::numbers::pi / 2.0, {}};
  EXPECT_DOUBLE_EQ(b.normalized().yaw, -std::numbers::pi / 2.0);
  b.yaw = 3.0;
  EXPECT_NEAR(b.normalized().yaw, 3.0 - std::numbers::pi, 1e-12);
  EXPECT_THROW(b.validate(), ValidationError);
  EXPECT_NO_THROW(b.normalized().validate());
}

TEST(TraversalInvariant, DuplicateScanIdRejected) {
  Traversal t{"t0", {}};
  t.scans.push_back({"a", "t0", {{Vec3::Zero(), 0}}, Pose()});
  t.scans.push_back({"a", "t0", {{Vec3::Zero(), 0}}, Pose()});
  EXPECT_THROW(validate_traversal(t), ValidationError);
}

TEST(AtomicWrite, ReplacesContentsWithoutTempLeftovers) {
  testing::TempDir dir;
  write_file_atomic(dir / "f.txt", std::string_view("one"));
  write_file_atomic(dir / "f.txt", std::string_view("two"));
  std::ifstream in(dir / "f.txt");
  std::string s;
  in >> s;
  EXPECT_EQ(s, "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  EXPECT_EQ(entries, 1u);
}

}  // namespace
}  // namespace ephemera
