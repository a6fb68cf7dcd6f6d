#include "gbpplan/manifest.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "gbpplan/config.hpp"
#include "gbpplan/metrics.hpp"
#include "gbpplan/simulator.hpp"

namespace gbpplan {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_one_seed(const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size())
    throw std::invalid_argument("bad seed '" + text + "'");
  return v;
}

/// Mean of a json field across entries, counting only finite numbers.
json mean_of(const std::vector<json>& entries, const std::string& field) {
  double sum = 0.0;
  int n = 0;
  for (const json& e : entries) {
    if (!e.contains(field) || !e[field].is_number()) continue;
    sum += e[field].get<double>();
    ++n;
  }
  if (n == 0) return nullptr;
  return sum / n;
}

std::string cell(const json& v, const char* format = "%.4g") {
  if (v.is_null()) return "absent";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v.get<double>());
  return buf;
}

void print_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (const auto& c : cells) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%16s", c.c_str());
    out << buf;
  }
  out << "\n";
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw std::invalid_argument("empty seed list");

  const auto dots = t.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = parse_one_seed(t.substr(0, dots));
    const std::uint64_t hi = parse_one_seed(t.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("seed range '" + t + "' is reversed");
    if (hi - lo >= 10000) throw std::invalid_argument("seed range '" + t + "' is too large");
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }

  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    const auto comma = t.find(',', pos);
    const std::string tok = t.substr(pos, comma == std::string::npos ? std::string::npos
                                                                     : comma - pos);
    seeds.push_back(parse_one_seed(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return seeds;
}

int run_command(const RunManifest& manifest, std::ostream& log) {
  try {
    const ScenarioConfig base = load_config_file(manifest.scenario_path);
    const auto seeds = parse_seeds(manifest.seeds);

    // Each override key may carry a comma list of values to sweep.
    std::vector<std::pair<std::string, std::vector<std::string>>> sweep;
    for (const std::string& o : manifest.overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("override '" + o + "': expected key=value");
      const std::string key = trim(o.substr(0, eq));
      std::vector<std::string> values;
      std::string rest = o.substr(eq + 1);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        values.push_back(trim(rest.substr(
            pos, comma == std::string::npos ? std::string::npos : comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (values.empty()) throw std::invalid_argument("override '" + o + "': no values");
      sweep.emplace_back(key, std::move(values));
    }

    using Combo = std::vector<std::pair<std::string, std::string>>;
    std::vector<Combo> combos{{}};
    for (const auto& [key, values] : sweep) {
      std::vector<Combo> next;
      for (const Combo& c : combos)
        for (const std::string& v : values) {
          Combo ext = c;
          ext.emplace_back(key, v);
          next.push_back(std::move(ext));
        }
      combos = std::move(next);
    }

    std::string out_dir = manifest.out_dir;
    if (out_dir.empty()) {
      const char* env = std::getenv("GBPPLAN_OUT");
      out_dir = env && *env ? env : "out";
    }
    fs::create_directories(out_dir);

    json runs = json::array();
    std::vector<std::pair<Combo, std::vector<json>>> groups;
    bool any_incomplete = false;

    for (const Combo& combo : combos) {
      groups.emplace_back(combo, std::vector<json>{});
      for (const std::uint64_t seed : seeds) {
        ScenarioConfig cfg = base;
        for (const auto& [k, v] : combo) apply_config_value(cfg, k, v);
        cfg.seed = seed;
        if (manifest.max_ticks > 0) cfg.max_ticks = manifest.max_ticks;

        std::string name = "run";
        for (const auto& [k, v] : combo) name += "_" + k + "=" + v;
        name += "_s" + std::to_string(seed);
        const fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);

        const RunResult result = run_scenario(cfg);
        {
          std::ofstream f(dir / "trace.csv");
          write_trace_csv(result, f);
        }
        {
          std::ofstream f(dir / "meta.json");
          write_metadata_json(result, f);
        }
        const json mj = metrics_json(result);
        {
          std::ofstream f(dir / "metrics.json");
          f << mj.dump(2) << "\n";
        }

        if (!result.complete) any_incomplete = true;

        json entry;
        entry["name"] = name;
        entry["seed"] = seed;
        entry["overrides"] = json::object();
        for (const auto& [k, v] : combo) entry["overrides"][k] = v;
        entry["complete"] = result.complete;
        entry["ticks"] = result.tick_count;
        entry["abort"] = result.abort_reason;
        entry["makespan"] = mj["makespan"];
        entry["mean_distance"] = mj["mean_distance"];
        entry["mean_ldj"] = mj["mean_ldj"];
        entry["collision_episodes"] = mj["collision_episodes"];
        if (mj.contains("flow")) {
          entry["q_in"] = mj["flow"]["q_in"];
          entry["q_out"] = mj["flow"]["q_out"];
          entry["violations"] = mj["flow"]["violations"];
        }
        runs.push_back(entry);
        groups.back().second.push_back(entry);

        log << name << ": " << (result.complete ? "complete" : "INCOMPLETE") << ", ticks "
            << result.tick_count << ", collisions " << mj["collision_episodes"] << "\n";
      }
    }

    json group_rows = json::array();
    for (const auto& [combo, entries] : groups) {
      json g;
      g["overrides"] = json::object();
      for (const auto& [k, v] : combo) g["overrides"][k] = v;
      g["runs"] = entries.size();
      int completed = 0;
      int collisions = 0;
      int violations = 0;
      for (const json& e : entries) {
        if (e["complete"].get<bool>()) ++completed;
        collisions += e["collision_episodes"].get<int>();
        if (e.contains("violations")) violations += e["violations"].get<int>();
      }
      g["completed"] = completed;
      g["total_collisions"] = collisions;
      g["mean_makespan"] = mean_of(entries, "makespan");
      g["mean_distance"] = mean_of(entries, "mean_distance");
      g["mean_ldj"] = mean_of(entries, "mean_ldj");
      g["mean_collisions"] =
          entries.empty() ? json(nullptr) : json(double(collisions) / double(entries.size()));
      g["mean_q_in"] = mean_of(entries, "q_in");
      g["mean_q_out"] = mean_of(entries, "q_out");
      g["total_violations"] = violations;
      group_rows.push_back(g);
    }

    json summary;
    summary["scenario"] = manifest.scenario_path;
    summary["runs"] = runs;
    summary["groups"] = group_rows;
    {
      std::ofstream f(fs::path(out_dir) / "summary.json");
      f << summary.dump(2) << "\n";
    }
    log << "summary: " << (fs::path(out_dir) / "summary.json").string() << "\n";
    return any_incomplete ? 2 : 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

int table_command(TableKind kind, const std::vector<std::string>& summary_paths,
                  std::ostream& out) {
  try {
    std::vector<json> groups;
    for (const std::string& path : summary_paths) {
      std::ifstream f(path);
      if (!f) throw std::invalid_argument("cannot open summary '" + path + "'");
      json j;
      f >> j;
      for (const json& g : j.value("groups", json::array())) groups.push_back(g);
    }

    const char* param = kind == TableKind::Table1   ? "comm.radius"
                        : kind == TableKind::Table3 ? "comm.gamma"
                                                    : "junction.q_in";
    std::map<double, json> by_value;
    for (const json& g : groups) {
      const json& ov = g["overrides"];
      if (!ov.contains(param)) continue;
      by_value[std::strtod(ov[param].get<std::string>().c_str(), nullptr)] = g;
    }

    std::vector<double> grid;
    if (kind == TableKind::Table1) grid = {20.0, 40.0, 60.0, 80.0};
    else if (kind == TableKind::Table3) grid = {0.0, 0.2, 0.5, 0.8};
    else
      for (const auto& [v, g] : by_value) grid.push_back(v);

    const auto find_row = [&](double v) -> const json* {
      for (const auto& [key, g] : by_value)
        if (std::abs(key - v) <= 1e-9 * std::max(1.0, std::abs(v))) return &g;
      return nullptr;
    };

    if (kind == TableKind::Flow) {
      print_row(out, {"q_in", "measured_q_in", "q_out", "violations", "runs"});
      for (double v : grid) {
        const json* g = find_row(v);
        if (!g) {
          print_row(out, {cell(v), "absent", "absent", "absent", "absent"});
          continue;
        }
        print_row(out, {cell(v), cell((*g)["mean_q_in"]), cell((*g)["mean_q_out"]),
                        cell((*g)["total_violations"], "%.0f"), cell((*g)["runs"], "%.0f")});
      }
    } else {
      const char* label = kind == TableKind::Table1 ? "comm_radius" : "gamma";
      print_row(out, {label, "makespan", "mean_distance", "mean_ldj", "mean_collisions",
                      "completed"});
      for (double v : grid) {
        const json* g = find_row(v);
        if (!g) {
          print_row(out, {cell(v), "absent", "absent", "absent", "absent", "absent"});
          continue;
        }
        print_row(out, {cell(v), cell((*g)["mean_makespan"]), cell((*g)["mean_distance"]),
                        cell((*g)["mean_ldj"]), cell((*g)["mean_collisions"]),
                        cell((*g)["completed"], "%.0f")});
      }
    }
    return 0;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gbpplan
