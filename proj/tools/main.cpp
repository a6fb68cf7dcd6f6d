#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gbpplan/manifest.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed multi-robot trajectory planner and batch simulator"};
  app.require_subcommand(1);

  gbpplan::RunManifest manifest;
  CLI::App* run = app.add_subcommand("run", "Run a scenario sweep; write traces and metrics");
  run->add_option("--scenario", manifest.scenario_path, "Scenario config file")->required();
  run->add_option("--seeds", manifest.seeds, "Seeds: a..b range or comma list (default 1)");
  run->add_option("--set", manifest.overrides,
                  "Override key=value; a comma list of values sweeps that key");
  run->add_option("--out", manifest.out_dir, "Output directory (default $GBPPLAN_OUT, then ./out)");
  run->add_option("--max-ticks", manifest.max_ticks, "Cap the tick count of every run");

  std::string table_kind;
  std::vector<std::string> table_files;
  CLI::App* table = app.add_subcommand("table", "Format sweep summaries as an experiment table");
  table->add_option("--kind", table_kind, "table1 (comm radius sweep) or table3 (failure sweep)")
      ->required()
      ->check(CLI::IsMember({"table1", "table3"}));
  table->add_option("summaries", table_files, "summary.json files")->required();

  std::vector<std::string> flow_files;
  CLI::App* flow = app.add_subcommand("flow", "Format junction flow summaries");
  flow->add_option("summaries", flow_files, "summary.json files")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return gbpplan::run_command(manifest, std::cout);
  if (table->parsed())
    return gbpplan::table_command(
        table_kind == "table1" ? gbpplan::TableKind::Table1 : gbpplan::TableKind::Table3,
        table_files, std::cout);
  if (flow->parsed()) return gbpplan::table_command(gbpplan::TableKind::Flow, flow_files, std::cout);
  return 1;
}
