#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gbpplan {

/// One `run` invocation: a scenario file swept over seeds and overrides.
struct RunManifest {
  std::string scenario_path;
  std::string seeds = "1";                // "a..b" range or comma list
  std::vector<std::string> overrides;     // "key=value" or "key=v1,v2,..." (sweep)
  std::string out_dir;                    // empty: $GBPPLAN_OUT, then "out"
  int max_ticks = 0;                      // 0: keep the config's value
};

/// "3" -> {3}; "1..5" -> {1..5}; "1,4,9" -> {1,4,9}. Throws on anything else.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/// Runs the full sweep: one directory per (override combo, seed) holding
/// trace.csv, meta.json, and metrics.json, plus summary.json at the root.
/// Returns 0 when every run completed, 2 when any was incomplete, 1 on error.
int run_command(const RunManifest& manifest, std::ostream& log);

enum class TableKind { Table1, Table3, Flow };

/// Formats sweep summaries into the experiment tables: Table1 rows over
/// comm.radius, Table3 rows over comm.gamma, Flow rows over junction.q_in.
/// Grid cells with no runs are printed as "absent".
int table_command(TableKind kind, const std::vector<std::string>& summary_paths,
                  std::ostream& out);

}  // namespace gbpplan
