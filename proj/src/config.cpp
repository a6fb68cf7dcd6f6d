#include "gbpplan/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gbpplan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  return v;
}

std::vector<double> parse_numbers(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(key, tok));
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string robot_line(const RobotSpec& r) {
  std::string s;
  for (double v : {r.start.pos.x(), r.start.pos.y(), r.start.vel.x(), r.start.vel.y(),
                   r.goal.pos.x(), r.goal.pos.y(), r.goal.vel.x(), r.goal.vel.y(), r.radius,
                   r.max_speed})
    s += fmt(v) + " ";
  s += r.moving_horizon ? "1" : "0";
  return s;
}

std::string obstacle_line(const Polygon& poly) {
  std::string s;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (i) s += " ";
    s += fmt(poly[i].x()) + " " + fmt(poly[i].y());
  }
  return s;
}

}  // namespace

void apply_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  const auto num = [&] { return parse_double(key, value); };
  const auto integer = [&] { return parse_int(key, value); };

  if (key == "scenario") {
    cfg.kind = scenario_kind_from_name(trim(value));
  } else if (key == "n_robots") {
    cfg.n_robots = static_cast<int>(integer());
  } else if (key == "circle_radius") {
    cfg.circle_radius = num();
  } else if (key == "initial_speed") {
    cfg.initial_speed = num();
  } else if (key == "radius_min") {
    cfg.radius_min = num();
  } else if (key == "radius_max") {
    cfg.radius_max = num();
  } else if (key == "horizon") {
    cfg.horizon = num();
  } else if (key == "num_states") {
    cfg.num_states = static_cast<int>(integer());
  } else if (key == "timestep") {
    cfg.timestep = num();
  } else if (key == "internal_iterations") {
    cfg.internal_iterations = static_cast<int>(integer());
  } else if (key == "interrobot_iterations") {
    cfg.interrobot_iterations = static_cast<int>(integer());
  } else if (key == "damping") {
    cfg.damping = num();
  } else if (key == "max_ticks") {
    cfg.max_ticks = static_cast<int>(integer());
  } else if (key == "seed") {
    const long long s = integer();
    if (s < 0) throw ConfigError("key 'seed': must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "world_half_extent") {
    cfg.world_half_extent = num();
  } else if (key == "sdf_cell") {
    cfg.sdf_cell = num();
  } else if (key == "factors.sigma_p") {
    cfg.factors.sigma_p = num();
  } else if (key == "factors.sigma_d") {
    cfg.factors.sigma_d = num();
  } else if (key == "factors.sigma_o") {
    cfg.factors.sigma_o = num();
  } else if (key == "factors.sigma_r") {
    cfg.factors.sigma_r = num();
  } else if (key == "factors.robot_radius") {
    cfg.factors.robot_radius = num();
  } else if (key == "factors.epsilon") {
    cfg.factors.epsilon = num();
  } else if (key == "comm.radius") {
    cfg.comm.r_c = num();
  } else if (key == "comm.gamma") {
    cfg.comm.gamma = num();
  } else if (key == "junction.channel_width") {
    cfg.junction.channel_width = num();
  } else if (key == "junction.q_in") {
    cfg.junction.q_in = num();
  } else if (key == "junction.arm_length") {
    cfg.junction.arm_length = num();
  } else if (key == "junction.robot_radius") {
    cfg.junction.robot_radius = num();
  } else if (key == "robot") {
    const auto v = parse_numbers(key, value);
    if (v.size() != 11)
      throw ConfigError(
          "key 'robot': expected 11 numbers "
          "(x y vx vy gx gy gvx gvy radius max_speed moving_horizon)");
    RobotSpec r;
    r.id = static_cast<int>(cfg.custom_robots.size());
    r.start.pos = {v[0], v[1]};
    r.start.vel = {v[2], v[3]};
    r.goal.pos = {v[4], v[5]};
    r.goal.vel = {v[6], v[7]};
    r.radius = v[8];
    r.max_speed = v[9];
    r.moving_horizon = v[10] != 0.0;
    cfg.custom_robots.push_back(r);
  } else if (key == "obstacle") {
    const auto v = parse_numbers(key, value);
    if (v.size() < 6 || v.size() % 2 != 0)
      throw ConfigError("key 'obstacle': expected an even list of 6+ coordinates");
    Polygon poly;
    for (std::size_t i = 0; i < v.size(); i += 2) poly.emplace_back(v[i], v[i + 1]);
    cfg.custom_obstacles.push_back(std::move(poly));
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& source_name) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      apply_config_value(cfg, key, value);
    } catch (const std::exception& e) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("scenario", scenario_kind_name(cfg.kind));
  e.emplace_back("n_robots", std::to_string(cfg.n_robots));
  e.emplace_back("circle_radius", fmt(cfg.circle_radius));
  e.emplace_back("initial_speed", fmt(cfg.initial_speed));
  e.emplace_back("radius_min", fmt(cfg.radius_min));
  e.emplace_back("radius_max", fmt(cfg.radius_max));
  e.emplace_back("horizon", fmt(cfg.horizon));
  e.emplace_back("num_states", std::to_string(cfg.num_states));
  e.emplace_back("timestep", fmt(cfg.timestep));
  e.emplace_back("internal_iterations", std::to_string(cfg.internal_iterations));
  e.emplace_back("interrobot_iterations", std::to_string(cfg.interrobot_iterations));
  e.emplace_back("damping", fmt(cfg.damping));
  e.emplace_back("max_ticks", std::to_string(cfg.max_ticks));
  e.emplace_back("seed", std::to_string(cfg.seed));
  e.emplace_back("world_half_extent", fmt(cfg.world_half_extent));
  e.emplace_back("sdf_cell", fmt(cfg.sdf_cell));
  e.emplace_back("factors.sigma_p", fmt(cfg.factors.sigma_p));
  e.emplace_back("factors.sigma_d", fmt(cfg.factors.sigma_d));
  e.emplace_back("factors.sigma_o", fmt(cfg.factors.sigma_o));
  e.emplace_back("factors.sigma_r", fmt(cfg.factors.sigma_r));
  e.emplace_back("factors.robot_radius", fmt(cfg.factors.robot_radius));
  e.emplace_back("factors.epsilon", fmt(cfg.factors.epsilon));
  e.emplace_back("comm.radius", fmt(cfg.comm.r_c));
  e.emplace_back("comm.gamma", fmt(cfg.comm.gamma));
  e.emplace_back("junction.channel_width", fmt(cfg.junction.channel_width));
  e.emplace_back("junction.q_in", fmt(cfg.junction.q_in));
  e.emplace_back("junction.arm_length", fmt(cfg.junction.arm_length));
  e.emplace_back("junction.robot_radius", fmt(cfg.junction.robot_radius));
  for (const auto& r : cfg.custom_robots) e.emplace_back("robot", robot_line(r));
  for (const auto& poly : cfg.custom_obstacles) e.emplace_back("obstacle", obstacle_line(poly));
  return e;
}

std::string render_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

nlohmann::json config_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config_entries(cfg)) {
    if (k == "robot" || k == "obstacle") {
      if (!j.contains(k)) j[k] = nlohmann::json::array();
      j[k].push_back(v);
    } else {
      j[k] = v;
    }
  }
  return j;
}

ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  for (const auto& [k, v] : j.items()) {
    if (v.is_array()) {
      for (const auto& el : v) apply_config_value(cfg, k, el.get<std::string>());
    } else {
      apply_config_value(cfg, k, v.get<std::string>());
    }
  }
  return cfg;
}

}  // namespace gbpplan
