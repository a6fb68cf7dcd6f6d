#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "gbpplan/config.hpp"
#include "gbpplan/manifest.hpp"
#include "gbpplan/simulator.hpp"

namespace fs = std::filesystem;
using gbpplan::apply_config_value;
using gbpplan::config_from_json;
using gbpplan::config_to_json;
using gbpplan::ConfigError;
using gbpplan::parse_config_text;
using gbpplan::parse_seeds;
using gbpplan::render_config;
using gbpplan::RunManifest;
using gbpplan::ScenarioConfig;
using gbpplan::ScenarioKind;

namespace {

// Unique scratch directory per process, removed by the last test case.
fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("gbpplan_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

ScenarioConfig sample_custom() {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Custom;
  cfg.horizon = 2.0;
  cfg.seed = 17;
  cfg.factors.sigma_d = 0.75;
  gbpplan::RobotSpec r;
  r.start.pos = {-7.25, 0.125};
  r.start.vel = {15.0, 0.0};
  r.goal.pos = {7.0, 1.0 / 3.0};
  r.radius = 2.5;
  r.max_speed = 12.0;
  r.moving_horizon = true;
  cfg.custom_robots = {r};
  cfg.custom_obstacles = {{{0.0, 0.1}, {1.5, 0.2}, {0.7, 2.3}}};
  return cfg;
}

}  // namespace

TEST_CASE("rendered configs re-parse to the identical rendering") {
  const ScenarioConfig cfg = sample_custom();
  const std::string text = render_config(cfg);
  const ScenarioConfig back = parse_config_text(text, "echo");
  CHECK(render_config(back) == text);
  CHECK(back.custom_robots.size() == 1);
  CHECK(back.custom_obstacles.size() == 1);
  CHECK(back.custom_robots[0].start.pos.x() == cfg.custom_robots[0].start.pos.x());
  CHECK(back.custom_robots[0].goal.pos.y() == cfg.custom_robots[0].goal.pos.y());  // 1/3 survives
  CHECK(back.custom_robots[0].moving_horizon);
}

TEST_CASE("the echo names every tunable") {
  std::set<std::string> keys;
  for (const auto& [k, v] : gbpplan::config_entries(sample_custom())) keys.insert(k);
  for (const char* want :
       {"scenario", "n_robots", "circle_radius", "initial_speed", "radius_min", "radius_max",
        "horizon", "num_states", "timestep", "internal_iterations", "interrobot_iterations",
        "damping", "max_ticks", "seed", "world_half_extent", "sdf_cell", "factors.sigma_p",
        "factors.sigma_d", "factors.sigma_o", "factors.sigma_r", "factors.robot_radius",
        "factors.epsilon", "comm.radius", "comm.gamma", "junction.channel_width",
        "junction.q_in", "junction.arm_length", "junction.robot_radius", "robot", "obstacle"})
    CHECK_MESSAGE(keys.count(want) == 1, "missing key: ", want);
}

TEST_CASE("parse errors carry the source location") {
  try {
    parse_config_text("timestep = 0.1\nwhat is this\n", "bad.cfg");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad.cfg:2:") == 0);
  }

  try {
    parse_config_text("# fine\n\nnonsense = 3\n", "odd.cfg");
    FAIL("expected an unknown-key error");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("odd.cfg:3:") == 0);
    CHECK(msg.find("unknown key 'nonsense'") != std::string::npos);
  }

  try {
    parse_config_text("timestep = fast\n", "typo.cfg");
    FAIL("expected a number error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("typo.cfg:1:") == 0);
  }
}

TEST_CASE("robot lines demand the full tuple") {
  ScenarioConfig cfg;
  CHECK_THROWS_AS(apply_config_value(cfg, "robot", "1 2 3"), ConfigError);
  CHECK_THROWS_AS(apply_config_value(cfg, "obstacle", "0 0 1 0"), ConfigError);  // two points
  CHECK_THROWS_AS(apply_config_value(cfg, "obstacle", "0 0 1 0 1"), ConfigError);  // odd count
  CHECK_THROWS_AS(apply_config_value(cfg, "seed", "-4"), ConfigError);
}

TEST_CASE("json echo survives the round trip") {
  const ScenarioConfig cfg = sample_custom();
  const ScenarioConfig back = config_from_json(config_to_json(cfg));
  CHECK(render_config(back) == render_config(cfg));
  CHECK(back.kind == ScenarioKind::Custom);
  CHECK(back.factors.sigma_d == cfg.factors.sigma_d);
  CHECK(back.custom_obstacles[0][2].y() == cfg.custom_obstacles[0][2].y());
}

TEST_CASE("seed expressions expand to explicit lists") {
  CHECK(parse_seeds("3") == std::vector<std::uint64_t>{3});
  CHECK(parse_seeds("1..5") == std::vector<std::uint64_t>({1, 2, 3, 4, 5}));
  CHECK(parse_seeds("1,4,9") == std::vector<std::uint64_t>({1, 4, 9}));
  CHECK(parse_seeds(" 2 .. 3 ") == std::vector<std::uint64_t>({2, 3}));
  CHECK_THROWS(parse_seeds(""));
  CHECK_THROWS(parse_seeds("5..1"));
  CHECK_THROWS(parse_seeds("1..999999"));
  CHECK_THROWS(parse_seeds("one"));
  CHECK_THROWS(parse_seeds("1,,3"));
}

TEST_CASE("a sweep runs the full override cross product") {
  const fs::path dir = scratch_dir() / "sweep";
  const fs::path scenario = scratch_dir() / "tiny.cfg";
  {
    std::ofstream f(scenario);
    f << "scenario = circle\nn_robots = 1\nmax_ticks = 3\n"
      << "internal_iterations = 2\ninterrobot_iterations = 1\n";
  }
  RunManifest m;
  m.scenario_path = scenario.string();
  m.seeds = "1,2";
  m.overrides = {"damping=0,0.4", "comm.gamma=0"};
  m.out_dir = dir.string();

  std::ostringstream log;
  const int rc = gbpplan::run_command(m, log);
  CHECK(rc == 2);  // three ticks cannot finish the crossing

  std::ifstream sf(dir / "summary.json");
  REQUIRE(sf.good());
  nlohmann::json summary;
  sf >> summary;
  CHECK(summary["runs"].size() == 4);    // 2 damping values x 1 gamma x 2 seeds
  CHECK(summary["groups"].size() == 2);  // one group per override combo
  for (const auto& g : summary["groups"]) CHECK(g["runs"] == 2);
  CHECK(fs::exists(dir / "run_damping=0_comm.gamma=0_s1" / "trace.csv"));
  CHECK(fs::exists(dir / "run_damping=0.4_comm.gamma=0_s2" / "metrics.json"));
  CHECK(fs::exists(dir / "run_damping=0.4_comm.gamma=0_s2" / "meta.json"));
}

TEST_CASE("the resolved echo reproduces the run byte for byte") {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Circle;
  cfg.n_robots = 2;
  cfg.circle_radius = 20.0;
  cfg.internal_iterations = 10;
  cfg.interrobot_iterations = 5;
  cfg.max_ticks = 8;

  auto first = run_scenario(cfg);
  const ScenarioConfig reloaded = parse_config_text(render_config(first.cfg), "echo");
  auto second = run_scenario(reloaded);

  std::ostringstream a, b;
  write_trace_csv(first, a);
  write_trace_csv(second, b);
  CHECK(a.str() == b.str());
}

TEST_CASE("missing scenario files fail cleanly") {
  RunManifest m;
  m.scenario_path = (scratch_dir() / "no_such.cfg").string();
  m.out_dir = (scratch_dir() / "never").string();
  std::ostringstream log;
  CHECK(gbpplan::run_command(m, log) == 1);
  CHECK(log.str().find("error:") != std::string::npos);
}

TEST_CASE("experiment tables mark missing grid cells") {
  const fs::path dir = scratch_dir();
  const fs::path summary = dir / "gamma_summary.json";
  {
    nlohmann::json g0, g5;
    g0["overrides"] = {{"comm.gamma", "0"}};
    g0["runs"] = 5;
    g0["completed"] = 5;
    g0["total_collisions"] = 0;
    g0["mean_makespan"] = 19.5;
    g0["mean_distance"] = 104.0;
    g0["mean_ldj"] = -15.0;
    g0["mean_collisions"] = 0.0;
    g5["overrides"] = {{"comm.gamma", "0.5"}};
    g5["runs"] = 5;
    g5["completed"] = 5;
    g5["total_collisions"] = 0;
    g5["mean_makespan"] = 35.6;
    g5["mean_distance"] = 120.0;
    g5["mean_ldj"] = -18.0;
    g5["mean_collisions"] = 0.0;
    nlohmann::json j;
    j["groups"] = {g0, g5};
    std::ofstream f(summary);
    f << j.dump();
  }
  std::ostringstream out;
  const int rc = gbpplan::table_command(gbpplan::TableKind::Table3, {summary.string()}, out);
  CHECK(rc == 0);
  const std::string text = out.str();
  CHECK(text.find("19.5") != std::string::npos);
  CHECK(text.find("35.6") != std::string::npos);
  CHECK(text.find("absent") != std::string::npos);  // 0.2 and 0.8 rows have no runs

  std::ostringstream err;
  CHECK(gbpplan::table_command(gbpplan::TableKind::Table3,
                               {(dir / "missing_summary.json").string()}, err) == 1);

  fs::remove_all(scratch_dir());
}
