#include "gbpplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "gbpplan/rng.hpp"

namespace gbpplan {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stream keys for the independent seeded draws.
constexpr std::uint64_t kRadiusStream = 0x52;
constexpr std::uint64_t kSpawnStream = 0xE0;

// Five regular pentagons (circumradius 6 m) with centers on a ring of
// radius 1.5 m and one vertex aimed through the origin, so the shapes fuse
// into a solid lobed island about 13 m across. The middle of the workspace
// is blocked outright: crossing traffic must commit to one side and flow
// around the island instead of meeting head-on.
std::vector<Polygon> pentagon_ring() {
  std::vector<Polygon> polys;
  for (int i = 0; i < 5; ++i) {
    const double phi = kPi / 2.0 + i * (2.0 * kPi / 5.0);
    const Eigen::Vector2d center(1.5 * std::cos(phi), 1.5 * std::sin(phi));
    Polygon p;
    for (int j = 0; j < 5; ++j) {
      const double a = phi + kPi + j * (2.0 * kPi / 5.0);
      p.emplace_back(center.x() + 6.0 * std::cos(a), center.y() + 6.0 * std::sin(a));
    }
    polys.push_back(std::move(p));
  }
  return polys;
}

// Four L-shaped walls hugging the channel edges of the orthogonal cross.
// Each is the north-east L reflected into its quadrant.
std::vector<Polygon> junction_walls(double half_width, double arm_length) {
  const double w = half_width, L = arm_length, t = 8.0;
  const Polygon ne = {{w, w}, {L, w}, {L, w + t}, {w + t, w + t}, {w + t, L}, {w, L}};
  std::vector<Polygon> walls;
  for (const auto& [sx, sy] :
       std::vector<std::pair<double, double>>{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}) {
    Polygon p;
    for (const auto& v : ne) p.emplace_back(sx * v.x(), sy * v.y());
    walls.push_back(std::move(p));
  }
  return walls;
}

std::vector<RobotSpec> circle_robots(const ScenarioConfig& cfg) {
  std::vector<RobotSpec> robots;
  robots.reserve(cfg.n_robots);
  for (int i = 0; i < cfg.n_robots; ++i) {
    const double theta = 2.0 * kPi * i / cfg.n_robots;
    const Eigen::Vector2d start(cfg.circle_radius * std::cos(theta),
                                cfg.circle_radius * std::sin(theta));
    RobotSpec r;
    r.id = i;
    r.start.pos = start;
    r.start.vel = -start.normalized() * cfg.initial_speed;  // aimed at the antipode
    r.goal.pos = -start;
    r.goal.vel.setZero();
    SplitMix rng{mix_key(cfg.seed, kRadiusStream, static_cast<std::uint64_t>(i))};
    r.radius = cfg.radius_min + rng.uniform() * (cfg.radius_max - cfg.radius_min);
    r.max_speed = cfg.initial_speed;
    r.moving_horizon = false;
    robots.push_back(r);
  }
  return robots;
}

}  // namespace

std::string scenario_kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Circle: return "circle";
    case ScenarioKind::CircleWithObstacles: return "circle_with_obstacles";
    case ScenarioKind::Junction: return "junction";
    case ScenarioKind::Custom: return "custom";
  }
  throw std::logic_error("scenario_kind_name: bad kind");
}

ScenarioKind scenario_kind_from_name(const std::string& name) {
  if (name == "circle") return ScenarioKind::Circle;
  if (name == "circle_with_obstacles") return ScenarioKind::CircleWithObstacles;
  if (name == "junction") return ScenarioKind::Junction;
  if (name == "custom") return ScenarioKind::Custom;
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

void ScenarioConfig::validate() const {
  const bool custom = kind == ScenarioKind::Custom;
  if (!custom && kind != ScenarioKind::Junction && n_robots < 1)
    throw std::invalid_argument("config: n_robots must be at least 1");
  if (circle_radius <= 0 || initial_speed <= 0)
    throw std::invalid_argument("config: circle_radius and initial_speed must be positive");
  if (radius_min <= 0 || radius_max < radius_min)
    throw std::invalid_argument("config: need 0 < radius_min <= radius_max");
  if (horizon < 0) throw std::invalid_argument("config: horizon must be non-negative");
  if (num_states < 2) throw std::invalid_argument("config: num_states must be at least 2");
  if (timestep <= 0) throw std::invalid_argument("config: timestep must be positive");
  if (horizon > 0 && horizon < (num_states - 1) * timestep - 1e-9)
    throw std::invalid_argument("config: horizon shorter than num_states * timestep");
  if (internal_iterations < 0 || interrobot_iterations < 0)
    throw std::invalid_argument("config: iteration counts must be non-negative");
  if (damping < 0 || damping >= 1) throw std::invalid_argument("config: damping in [0,1)");
  if (max_ticks < 1) throw std::invalid_argument("config: max_ticks must be at least 1");
  if (sdf_cell <= 0) throw std::invalid_argument("config: sdf_cell must be positive");
  if (world_half_extent < 0) throw std::invalid_argument("config: negative world_half_extent");
  factors.validate();
  if (comm.r_c <= 0) throw std::invalid_argument("config: comm.radius must be positive");
  if (comm.gamma < 0 || comm.gamma > 1) throw std::invalid_argument("config: comm.gamma in [0,1]");
  if (junction.channel_width <= 0 || junction.robot_radius <= 0)
    throw std::invalid_argument("config: bad junction geometry");
  if (junction.q_in < 0) throw std::invalid_argument("config: junction.q_in must be non-negative");
  if (junction.arm_length <= junction.channel_width / 2.0)
    throw std::invalid_argument("config: junction.arm_length must exceed the half width");
  if (custom) {
    if (custom_robots.empty()) throw std::invalid_argument("config: custom scenario has no robots");
    std::set<int> ids;
    for (const auto& r : custom_robots) {
      if (!ids.insert(r.id).second) throw std::invalid_argument("config: duplicate robot id");
      if (r.radius <= 0 || r.max_speed <= 0)
        throw std::invalid_argument("config: robot radius and max_speed must be positive");
      if (!r.start.finite() || !r.goal.finite())
        throw std::invalid_argument("config: non-finite robot state");
    }
    for (const auto& poly : custom_obstacles)
      if (poly.size() < 3) throw std::invalid_argument("config: obstacle needs 3+ vertices");
  }
}

ScenarioConfig resolve_config(const ScenarioConfig& in) {
  ScenarioConfig cfg = in;
  if (cfg.horizon == 0.0) {
    switch (cfg.kind) {
      case ScenarioKind::Circle:
      case ScenarioKind::CircleWithObstacles:
        // Constant-deceleration crossing of the diameter: d = v t / 2.
        cfg.horizon = 2.0 * (2.0 * cfg.circle_radius) / cfg.initial_speed;
        break;
      case ScenarioKind::Junction:
        cfg.horizon = 2.0;
        break;
      case ScenarioKind::Custom:
        throw std::invalid_argument("config: custom scenario requires an explicit horizon");
    }
  }
  if (cfg.world_half_extent == 0.0) {
    switch (cfg.kind) {
      case ScenarioKind::Circle:
      case ScenarioKind::CircleWithObstacles:
        cfg.world_half_extent = cfg.circle_radius + 10.0;
        break;
      case ScenarioKind::Junction:
        cfg.world_half_extent = cfg.junction.arm_length + 6.0;
        break;
      case ScenarioKind::Custom: {
        double extent = 0.0;
        for (const auto& r : cfg.custom_robots) {
          extent = std::max(extent, r.start.pos.cwiseAbs().maxCoeff());
          extent = std::max(extent, r.goal.pos.cwiseAbs().maxCoeff());
        }
        for (const auto& poly : cfg.custom_obstacles)
          for (const auto& v : poly) extent = std::max(extent, v.cwiseAbs().maxCoeff());
        cfg.world_half_extent = extent + 10.0;
        break;
      }
    }
  }
  cfg.comm.seed = cfg.seed;
  cfg.factors.comm_radius = cfg.comm.r_c;
  cfg.validate();
  return cfg;
}

JunctionSpawner::JunctionSpawner(const ScenarioConfig& cfg) {
  const double q_stream = cfg.junction.q_in / 2.0;
  if (q_stream <= 0.0) return;
  const double interval = 1.0 / q_stream;
  const double w = cfg.junction.channel_width;
  const double L = cfg.junction.arm_length;
  const double speed = cfg.initial_speed;

  struct Arrival {
    double time;
    int stream;
    int n;
  };
  std::vector<Arrival> arrivals;
  const double duration = cfg.max_ticks * cfg.timestep;
  for (int stream = 0; stream < 2; ++stream) {
    for (int n = 0;; ++n) {
      SplitMix rng{mix_key(cfg.seed, kSpawnStream + static_cast<std::uint64_t>(stream),
                           static_cast<std::uint64_t>(n))};
      const double jitter = (rng.uniform() - 0.5) * 0.4 * interval;
      const double t = (n + 0.5) * interval + jitter;
      if (t > duration) break;
      arrivals.push_back({t, stream, n});
    }
  }
  std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.stream < b.stream;
  });

  schedule_.reserve(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    const Arrival& a = arrivals[i];
    // Right-hand traffic, two staggered lanes per stream.
    const double lane = (a.n % 2 == 0) ? w * 0.125 : w * 0.3125;
    RobotSpec spec;
    spec.id = static_cast<int>(i);
    spec.radius = cfg.junction.robot_radius;
    spec.max_speed = speed;
    spec.moving_horizon = true;
    if (a.stream == 0) {  // eastbound along y = -lane
      spec.start.pos = {-L, -lane};
      spec.start.vel = {speed, 0.0};
      spec.goal.pos = {L + 1000.0, -lane};
      spec.goal.vel = {speed, 0.0};
      spec.expected_exit = kSideEast;
    } else {  // northbound along x = +lane
      spec.start.pos = {lane, -L};
      spec.start.vel = {0.0, speed};
      spec.goal.pos = {lane, L + 1000.0};
      spec.goal.vel = {0.0, speed};
      spec.expected_exit = kSideNorth;
    }
    const int tick = std::max(1, static_cast<int>(std::ceil(a.time / cfg.timestep - 1e-9)));
    schedule_.push_back({tick, spec});
  }
}

std::vector<RobotSpec> JunctionSpawner::take_due(int tick) {
  std::vector<RobotSpec> due = std::move(deferred_);
  deferred_.clear();
  while (next_ < schedule_.size() && schedule_[next_].tick <= tick) {
    due.push_back(schedule_[next_].spec);
    ++next_;
  }
  std::sort(due.begin(), due.end(), [](const RobotSpec& a, const RobotSpec& b) { return a.id < b.id; });
  return due;
}

void JunctionSpawner::defer(const RobotSpec& spec) {
  deferred_.push_back(spec);
  ++deferrals_;
}

Scenario build_scenario(const ScenarioConfig& in) {
  Scenario s;
  s.cfg = resolve_config(in);
  const ScenarioConfig& cfg = s.cfg;
  const double E = cfg.world_half_extent;

  switch (cfg.kind) {
    case ScenarioKind::Circle:
      s.initial_robots = circle_robots(cfg);
      break;
    case ScenarioKind::CircleWithObstacles:
      s.initial_robots = circle_robots(cfg);
      s.obstacles = pentagon_ring();
      break;
    case ScenarioKind::Junction: {
      const double w = cfg.junction.channel_width / 2.0;
      const double L = cfg.junction.arm_length;
      s.obstacles = junction_walls(w, L);
      s.spawner = std::make_unique<JunctionSpawner>(cfg);
      s.despawn_bounds = {{-(L + 4.0), -(L + 4.0)}, {L + 4.0, L + 4.0}};
      s.flow_region = {{-w, -w}, {w, w}};
      break;
    }
    case ScenarioKind::Custom:
      s.initial_robots = cfg.custom_robots;
      s.obstacles = cfg.custom_obstacles;
      break;
  }

  s.sdf = std::make_shared<const SdfGrid>(
      build_sdf(s.obstacles, {-E, -E}, {E, E}, cfg.sdf_cell));
  return s;
}

}  // namespace gbpplan
