#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ephemera/errors.hpp"
#include "ephemera/sim.hpp"

namespace ephemera::sim {

namespace {

constexpr std::size_t kTraversals = 4;
constexpr double kLaneY = -1.75;       // ego lane
constexpr double kOncomingY = 1.75;
constexpr double kParkingY = 4.6;      // both curbs, mirrored

class Layout {
 public:
  explicit Layout(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

  // Axis-aligned footprint test with a clearance margin.
  bool free(const Cuboid& c, double margin, const std::vector<Cuboid>& taken) const {
    auto half = [](const Cuboid& k) {
      const double cs = std::abs(std::cos(k.yaw));
      const double sn = std::abs(std::sin(k.yaw));
      return Vec2(0.5 * (k.l * cs + k.w * sn), 0.5 * (k.l * sn + k.w * cs));
    };
    const Vec2 hc = half(c);
    return std::none_of(taken.begin(), taken.end(), [&](const Cuboid& o) {
      const Vec2 ho = half(o);
      return std::abs(c.x - o.x) < hc.x() + ho.x() + margin &&
             std::abs(c.y - o.y) < hc.y() + ho.y() + margin;
    });
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct VehicleSize {
  const char* kind;
  double l, w, h;
};

VehicleSize sample_vehicle(Layout& lay) {
  const double u = lay.uniform(0.0, 1.0);
  if (u < 0.7) {
    return {"car", lay.uniform(4.0, 4.9), lay.uniform(1.75, 2.0), lay.uniform(1.45, 1.7)};
  }
  if (u < 0.9) {
    return {"van", lay.uniform(5.0, 6.0), lay.uniform(1.95, 2.1), lay.uniform(1.9, 2.4)};
  }
  return {"cyclist", lay.uniform(1.7, 1.9), lay.uniform(0.6, 0.8), lay.uniform(1.6, 1.8)};
}

// Near-continuous facades on both sides of a road running along +x, plus
// poles.
void add_street(WorldSpec& spec, Layout& lay, double x_min, double x_max,
                double setback, bool poles, std::vector<Cuboid>& taken) {
  for (int sign : {-1, 1}) {
    double x = x_min;
    while (x < x_max) {
      const double len = lay.uniform(10.0, 25.0);
      const double depth = lay.uniform(8.0, 15.0);
      Cuboid c;
      c.l = len;
      c.w = depth;
      c.h = lay.uniform(6.0, 15.0);
      c.x = x + len / 2.0;
      c.y = sign * (setback + lay.uniform(0.0, 0.6) + depth / 2.0);
      spec.statics.push_back({"building", c, {}});
      taken.push_back(c);
      x += len + lay.uniform(0.0, 0.5);
    }
    for (double px = x_min + lay.uniform(0.0, 6.0); poles && px < x_max;
         px += lay.uniform(10.0, 16.0)) {
      Cuboid pole{px, sign * 6.8, 0.0, 0.3, 0.3, lay.uniform(5.0, 7.0), 0.0};
      spec.statics.push_back({"pole", pole, {}});
      taken.push_back(pole);
    }
  }
}

// Street furniture roughly the size of a small vehicle (kiosks, skips).
void add_clutter(WorldSpec& spec, Layout& lay, double x_min, double x_max, int count,
                 double y_min, double y_max, std::vector<Cuboid>& taken) {
  int placed = 0;
  for (int attempt = 0; placed < count && attempt < 50 * count; ++attempt) {
    Cuboid c;
    c.l = lay.uniform(2.8, 4.2);
    c.w = lay.uniform(1.5, 2.0);
    c.h = lay.uniform(1.4, 2.0);
    c.x = lay.uniform(x_min, x_max);
    c.y = (lay.coin(0.5) ? 1.0 : -1.0) * lay.uniform(y_min, y_max);
    c.yaw = lay.uniform(-0.1, 0.1);
    if (!lay.free(c, 1.0, taken)) continue;
    spec.statics.push_back({"clutter", c, {}});
    taken.push_back(c);
    ++placed;
  }
}

Route straight_route(double x0, double x1, double y, double spacing) {
  Route r;
  r.waypoints = {Vec2(x0, y), Vec2(x1, y)};
  r.scan_spacing = spacing;
  return r;
}

// One vehicle at a random lane slot; returns nullopt when no free slot found.
std::optional<Cuboid> place_vehicle(Layout& lay, const VehicleSize& size, double x_min,
                                    double x_max, bool allow_oncoming,
                                    std::vector<Cuboid>& taken, double margin = 1.5,
                                    double parking_y = kParkingY) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Cuboid c;
    c.l = size.l;
    c.w = size.w;
    c.h = size.h;
    c.x = lay.uniform(x_min, x_max);
    const double lane = lay.uniform(0.0, 1.0);
    if (allow_oncoming && lane < 0.4) {
      c.y = kOncomingY + lay.uniform(-0.3, 0.3);
    } else {
      c.y = (lane < 0.7 ? -1.0 : 1.0) * (parking_y + lay.uniform(-0.2, 0.2));
    }
    c.yaw = (lay.coin(0.5) ? 0.0 : std::numbers::pi) + lay.uniform(-0.08, 0.08);
    if (!lay.free(c, margin, taken)) continue;
    taken.push_back(c);
    return c;
  }
  return std::nullopt;
}

// Ephemeral vehicles never share ground with those of another traversal, so a
// location occupied in one traversal is empty road in all others.
void add_ephemeral_vehicles(WorldSpec& spec, Layout& lay, std::size_t traversal,
                            int count, double x_min, double x_max,
                            std::vector<Cuboid>& taken, bool allow_oncoming = true,
                            double margin = 1.5, double parking_y = kParkingY) {
  for (int k = 0; k < count; ++k) {
    const VehicleSize size = sample_vehicle(lay);
    auto place =
        place_vehicle(lay, size, x_min, x_max, allow_oncoming, taken, margin, parking_y);
    if (!place) continue;
    MobileObject m;
    m.id = "m" + std::to_string(spec.mobiles.size());
    m.kind = size.kind;
    m.l = size.l;
    m.w = size.w;
    m.h = size.h;
    m.placement.assign(kTraversals, std::nullopt);
    m.placement[traversal] = *place;
    spec.mobiles.push_back(std::move(m));
  }
}

// Persistent vehicles occupy the same spot in every traversal.
void add_parked_vehicles(WorldSpec& spec, Layout& lay, int count, double x_min,
                         double x_max, std::vector<Cuboid>& taken) {
  for (int k = 0; k < count; ++k) {
    VehicleSize size = sample_vehicle(lay);
    if (std::string(size.kind) == "cyclist") size = {"car", 4.5, 1.85, 1.55};
    auto place = place_vehicle(lay, size, x_min, x_max, false, taken);
    if (!place) continue;
    MobileObject m;
    m.id = "m" + std::to_string(spec.mobiles.size());
    m.kind = size.kind;
    m.l = size.l;
    m.w = size.w;
    m.h = size.h;
    m.placement.assign(kTraversals, *place);
    spec.mobiles.push_back(std::move(m));
  }
}

void add_routes(WorldSpec& spec, Layout& lay, double x0, double x1, double spacing,
                double lane_y = kLaneY) {
  for (std::size_t t = 0; t < kTraversals; ++t) {
    const double start = x0 + lay.uniform(0.0, spacing);
    spec.routes.push_back(straight_route(start, x1, lane_y + lay.uniform(-0.2, 0.2), spacing));
  }
}

WorldSpec separation(std::uint64_t seed) {
  WorldSpec spec;
  spec.name = "separation";
  spec.seed = seed;
  Layout lay(seed);
  std::vector<Cuboid> fixed;
  spec.sensor.height = 2.0;  // roof mount, sees the tops of parked cars
  add_street(spec, lay, -70.0, 140.0, 11.0, false, fixed);
  // One-way street: the ego drives down the middle, vehicles park well apart
  // on both curbs.
  add_routes(spec, lay, 0.0, 30.0, 2.5, 0.0);
  for (std::size_t t = 0; t < kTraversals; ++t) {
    add_ephemeral_vehicles(spec, lay, t, 5, -10.0, 45.0, fixed, false, 4.0, 5.5);
  }
  return spec;
}

WorldSpec parked(std::uint64_t seed) {
  WorldSpec spec;
  spec.name = "parked";
  spec.seed = seed;
  Layout lay(seed);
  std::vector<Cuboid> fixed;
  add_street(spec, lay, -70.0, 280.0, 11.0, true, fixed);
  add_clutter(spec, lay, -10.0, 210.0, 10, 7.8, 9.0, fixed);
  add_parked_vehicles(spec, lay, 3, -5.0, 70.0, fixed);
  add_parked_vehicles(spec, lay, 8, 140.0, 215.0, fixed);

  // Traversal 0 continues past the shared segment into a street that no
  // other traversal visits.
  add_routes(spec, lay, 0.0, 60.0, 5.0);
  spec.routes[0].waypoints.back() = Vec2(200.0, spec.routes[0].waypoints.back().y());
  for (std::size_t t = 0; t < kTraversals; ++t) {
    add_ephemeral_vehicles(spec, lay, t, 5, -10.0, 70.0, fixed);
  }
  add_ephemeral_vehicles(spec, lay, 0, 6, 140.0, 215.0, fixed);
  return spec;
}

WorldSpec dense(std::uint64_t seed) {
  WorldSpec spec;
  spec.name = "dense";
  spec.seed = seed;
  Layout lay(seed);
  std::vector<Cuboid> fixed;
  add_street(spec, lay, -70.0, 140.0, 9.5, true, fixed);
  add_clutter(spec, lay, -10.0, 70.0, 10, 6.2, 6.8, fixed);
  add_routes(spec, lay, 0.0, 60.0, 5.0);

  // Transient structures that are ephemeral but not mobile objects: site
  // hoardings far larger than any vehicle and banners hung overhead.
  for (std::size_t t = 0; t < kTraversals; ++t) {
    std::vector<bool> presence(kTraversals, false);
    presence[t] = true;
    Cuboid big{lay.uniform(0.0, 60.0), (t % 2 == 0 ? 1.0 : -1.0) * 8.6, 0.0,
               lay.uniform(14.0, 18.0), 1.2, lay.uniform(7.0, 9.0), 0.0};
    spec.statics.push_back({"hoarding", big, presence});
    Cuboid banner{lay.uniform(5.0, 55.0), 0.0, std::numbers::pi / 2.0, 6.0, 0.3,
                  lay.uniform(0.8, 1.2), lay.uniform(4.5, 5.5)};
    spec.statics.push_back({"banner", banner, presence});
  }
  for (std::size_t t = 0; t < kTraversals; ++t) {
    add_ephemeral_vehicles(spec, lay, t, 8, -10.0, 70.0, fixed);
  }
  return spec;
}

}  // namespace

WorldSpec make_benchmark(const std::string& preset, std::uint64_t seed) {
  if (preset == "separation") return separation(seed);
  if (preset == "parked") return parked(seed);
  if (preset == "dense") return dense(seed);
  throw ContractError("unknown benchmark preset '" + preset +
                      "' (expected separation, parked or dense)");
}

}  // namespace ephemera::sim
