#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ephemera/ephemerality.hpp"
#include "ephemera/errors.hpp"
#include "test_util.hpp"

namespace ephemera {
namespace {

// Independent entropy evaluation in an arbitrary log base.
double reference_tau(const std::vector<std::size_t>& n, double base) {
  double total = 0.0;
  for (std::size_t v : n) total += static_cast<double>(v);
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (std::size_t v : n) {
    if (v == 0) continue;
    const double p = static_cast<double>(v) / total;
    h -= p * std::log(p) / std::log(base);
  }
  return h / (std::log(static_cast<double>(n.size())) / std::log(base));
}

TEST(PersistenceScore, ZeroCountsGiveZero) {
  std::vector<std::size_t> n = {0, 0, 0};
  EXPECT_EQ(persistence_score(n), 0.0);
}

TEST(PersistenceScore, UniformTwoTraversalsGiveOne) {
  std::vector<std::size_t> n = {5, 5};
  EXPECT_NEAR(persistence_score(n), 1.0, 1e-9);
}

TEST(PersistenceScore, SingleTraversalGivesZero) {
  std::vector<std::size_t> n = {8, 0, 0, 0};
  EXPECT_NEAR(persistence_score(n), 0.0, 1e-9);
}

TEST(PersistenceScore, TwoOneOne) {
  std::vector<std::size_t> n = {2, 1, 1};
  const double expected = (0.5 * std::log(2.0) + 0.5 * std::log(4.0)) / std::log(3.0);
  EXPECT_NEAR(persistence_score(n), expected, 1e-9);
  EXPECT_NEAR(persistence_score(n), 0.946395, 1e-6);
}

TEST(PersistenceScore, FewerThanTwoCountsRejected) {
  std::vector<std::size_t> n = {3};
  EXPECT_THROW(persistence_score(n), ContractError);
}

TEST(PersistenceProperty, BaseIndependentAndInRange) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> tdist(2, 8), cdist(0, 50);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::size_t> n(tdist(rng));
    for (auto& v : n) v = cdist(rng);
    const double nat = persistence_score(n, EntropyBase::kNatural);
    const double bin = persistence_score(n, EntropyBase::kBinary);
    EXPECT_NEAR(nat, bin, 1e-12);
    EXPECT_GE(nat, 0.0);
    EXPECT_LE(nat, 1.0);
    EXPECT_NEAR(nat, reference_tau(n, 10.0), 1e-12);
  }
}

TEST(PersistenceProperty, PermutationInvariant) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<std::size_t> cdist(0, 30);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> n(5);
    for (auto& v : n) v = cdist(rng);
    const double base = persistence_score(n);
    std::shuffle(n.begin(), n.end(), rng);
    EXPECT_NEAR(persistence_score(n), base, 1e-12);
  }
}

TEST(PersistenceProperty, ScaleInvariant) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> cdist(0, 30), mdist(2, 9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> n(4);
    for (auto& v : n) v = cdist(rng);
    const std::size_t m = mdist(rng);
    std::vector<std::size_t> scaled = n;
    for (auto& v : scaled) v *= m;
    EXPECT_NEAR(persistence_score(scaled), persistence_score(n), 1e-12);
  }
}

Traversal line_traversal(const std::string& id, int count) {
  Traversal t{id, {}};
  for (int i = 0; i < count; ++i) {
    Scan s;
    s.scan_id = id + "_" + std::to_string(i);
    s.traversal_id = id;
    s.pose = Pose::from_yaw(0.0, Vec3(static_cast<double>(i), 0.0, 0.0));
    s.points = {{Vec3::Zero(), 0.0}};
    t.scans.push_back(std::move(s));
  }
  return t;
}

TEST(SelectScans, GreedySpacing) {
  Traversal t = line_traversal("t", 11);
  AggregationWindow w{0.0, 70.0, 2.0, false};
  EXPECT_EQ(select_scans(t, Pose(), w), (std::vector<std::size_t>{0, 2, 4, 6, 8, 10}));
}

TEST(SelectScans, AllBeyondRangeIsEmpty) {
  Traversal t = line_traversal("t", 5);
  AggregationWindow w{0.0, 70.0, 2.0, false};
  EXPECT_TRUE(select_scans(t, Pose::from_yaw(0.0, Vec3(200, 0, 0)), w).empty());
}

TEST(SelectScans, TwoPassesBothContribute) {
  Traversal t{"t", {}};
  const std::vector<double> xs = {0, 2, 4, 6, 4, 2, 0};  // out and back
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Scan s;
    s.scan_id = "s" + std::to_string(i);
    s.pose = Pose::from_yaw(0.0, Vec3(xs[i], 0.0, 0.0));
    s.points = {{Vec3::Zero(), 0.0}};
    t.scans.push_back(s);
  }
  AggregationWindow w{0.0, 3.0, 2.0, false};
  EXPECT_EQ(select_scans(t, Pose(), w), (std::vector<std::size_t>{0, 1, 6}));
}

TEST(SelectScans, ForwardOnlyDropsScansBehind) {
  Traversal t = line_traversal("t", 11);
  AggregationWindow w{0.0, 70.0, 2.0, true};
  auto picks = select_scans(t, Pose::from_yaw(0.0, Vec3(5, 0, 0)), w);
  EXPECT_EQ(picks, (std::vector<std::size_t>{5, 7, 9}));
}

TEST(DenseCloud, SingleIdentityScanEqualsRawPoints) {
  Scan s;
  s.points = {{Vec3(1, 2, 3), 0}, {Vec3(4, 5, 6), 0}};
  const Scan* sel[] = {&s};
  DenseCloud c = build_dense_cloud("t", sel, 0.3);
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0], Vec3(1, 2, 3));
  EXPECT_EQ(c.grid.size(), 2u);
  EXPECT_DOUBLE_EQ(c.grid.cell_size(), 0.3);
}

TEST(DenseCloud, ConcatenatesAndKeepsDuplicates) {
  std::mt19937_64 rng(24);
  Scan a, b;
  for (int i = 0; i < 100; ++i) {
    a.points.push_back({testing::random_point(rng, -5, 5), 0});
    b.points.push_back({testing::random_point(rng, -5, 5), 0});
  }
  const Scan* two[] = {&a, &b};
  EXPECT_EQ(build_dense_cloud("t", two, 0.3).points.size(), 200u);

  Scan moved = a;
  moved.pose = Pose::from_yaw(0.0, Vec3(0, 0, 0));
  const Scan* same[] = {&a, &moved};
  DenseCloud c = build_dense_cloud("t", same, 0.3);
  EXPECT_EQ(c.points.size(), 200u);
  EXPECT_EQ(c.grid.count_within(a.points[0].xyz, 0.3) % 2, 0u);
}

TEST(DenseCloud, EmptySelectionIsDataError) {
  EXPECT_THROW(build_dense_cloud("t", std::span<const Scan* const>{}, 0.3), DataError);
}

DenseCloud cloud_of(const std::vector<Vec3>& pts) {
  Scan s;
  for (const Vec3& p : pts) s.points.push_back({p, 0});
  const Scan* sel[] = {&s};
  return build_dense_cloud("t", sel, 0.3);
}

TEST(PPScore, CountsPerTraversal) {
  // Query point at the origin, seen 2/1/1 times within 0.3 m.
  std::vector<DenseCloud> clouds;
  clouds.push_back(cloud_of({Vec3(0.1, 0, 0), Vec3(0, 0.1, 0), Vec3(5, 5, 5)}));
  clouds.push_back(cloud_of({Vec3(0, 0, 0.2)}));
  clouds.push_back(cloud_of({Vec3(-0.2, 0, 0), Vec3(0.3, 0, 0)}));
  Scan q;
  q.scan_id = "q";
  q.points = {{Vec3::Zero(), 0}, {Vec3(50, 0, 0), 0}};
  q.pose = Pose();
  PPField f = pp_score(q, clouds, 0.3);
  ASSERT_EQ(f.tau.size(), 2u);
  EXPECT_NEAR(f.tau[0], 1.5 * std::log(2.0) / std::log(3.0), 1e-6);
  EXPECT_EQ(f.tau[1], 0.0f);
  EXPECT_EQ(f.traversal_count, 3u);
}

TEST(PPScore, QueryTransformedToWorld) {
  std::vector<DenseCloud> clouds = {cloud_of({Vec3(10, 0, 0)}), cloud_of({Vec3(10, 0, 0)})};
  Scan q;
  q.points = {{Vec3::Zero(), 0}};
  q.pose = Pose::from_yaw(0.0, Vec3(10, 0, 0));
  EXPECT_NEAR(pp_score(q, clouds).tau[0], 1.0, 1e-6);
}

TEST(PPScore, FewerThanTwoCloudsRejected) {
  std::vector<DenseCloud> clouds = {cloud_of({Vec3::Zero()})};
  Scan q;
  q.points = {{Vec3::Zero(), 0}};
  EXPECT_THROW(pp_score(q, clouds), ContractError);
}

TEST(PPScore, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(25);
  std::vector<DenseCloud> clouds;
  for (int t = 0; t < 3; ++t) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 3000; ++i) pts.push_back(testing::random_point(rng, -3, 3));
    clouds.push_back(cloud_of(pts));
  }
  Scan q;
  for (int i = 0; i < 2000; ++i) q.points.push_back({testing::random_point(rng, -3, 3), 0});
  EXPECT_EQ(pp_score(q, clouds, 0.3, 1).tau, pp_score(q, clouds, 0.3, 4).tau);
}

TEST(PPScorer, StaticPointsHighMobileLow) {
  // Three traversals of a wall; one traversal also sees a transient box.
  std::vector<Traversal> ts;
  for (int t = 0; t < 3; ++t) {
    Traversal tr{"t" + std::to_string(t), {}};
    for (int i = 0; i < 3; ++i) {
      Scan s;
      s.scan_id = tr.traversal_id + "_" + std::to_string(i);
      s.traversal_id = tr.traversal_id;
      s.pose = Pose::from_yaw(0.0, Vec3(2.0 * i, 0, 0));
      for (int y = -20; y <= 20; ++y) {
        for (int z = 0; z <= 20; ++z) s.points.push_back({Vec3(10 - 2.0 * i, 0.1 * y, 0.1 * z), 0});
      }
      if (t == 0) {
        for (int y = -5; y <= 5; ++y) s.points.push_back({Vec3(5 - 2.0 * i, 0.1 * y, 0.5), 0});
      }
      tr.scans.push_back(std::move(s));
    }
    ts.push_back(std::move(tr));
  }
  PPScorer scorer(ts, PPOptions{});
  auto f = scorer.score(ts[0].scans[0]);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(f->traversal_count, 3u);
  const std::size_t wall = 41 * 21;
  for (std::size_t i = 0; i < wall; i += 37) EXPECT_GT(f->tau[i], 0.9f);
  for (std::size_t i = wall; i < f->tau.size(); ++i) EXPECT_LT(f->tau[i], 0.1f);
}

TEST(PPScorer, SingleTraversalGivesNoField) {
  std::vector<Traversal> ts = {line_traversal("a", 3), line_traversal("b", 3)};
  ts[1].scans.clear();
  PPScorer scorer(ts, PPOptions{});
  EXPECT_FALSE(scorer.score(ts[0].scans[0]).has_value());
}

TEST(PPFSidecar, EncodeLayoutAndRoundTrip) {
  std::vector<float> tau = {0.0f, 0.25f, 1.0f};
  auto bytes = encode_ppf(tau);
  ASSERT_EQ(bytes.size(), 8u + 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "PPF1");
  EXPECT_EQ(bytes[4], 3);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(decode_ppf(bytes, "mem"), tau);
}

TEST(PPFSidecar, BadMagicAndLengthRejected) {
  auto bytes = encode_ppf(std::vector<float>{0.5f});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_ppf(bad, "mem"), FormatError);
  bytes.pop_back();
  EXPECT_THROW(decode_ppf(bytes, "mem"), FormatError);
}

}  // namespace
}  // namespace ephemera
