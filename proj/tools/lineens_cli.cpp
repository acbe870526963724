#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "lineens/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for H-Brownian Gibbs line ensembles"};
  app.require_subcommand(1);

  lineens::ConfigOverrides ov;
  std::string config_path;
  bool no_timing = false;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "key = value config file")->required();
  run->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { ov.seed = s; }, "override the seed");
  run->add_option_function<int>("--threads", [&](int t) { ov.threads = t; }, "override the thread count");
  run->add_option_function<std::string>("--output", [&](const std::string& p) { ov.output_path = p; },
                                        "output file ('-' for stdout)");
  run->add_option_function<std::string>(
         "--format",
         [&](const std::string& f) {
           ov.format = f == "csv" ? lineens::OutputFormat::Csv : lineens::OutputFormat::JsonLines;
         },
         "report format")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  run->add_flag("--no-timing", no_timing, "omit the wall-time record (byte-identical reruns)");

  std::string experiment;
  auto* emit = app.add_subcommand("emit-default-config", "print a default config");
  emit->add_option("experiment", experiment, "experiment name")->required();

  auto* list = app.add_subcommand("list-experiments", "list registered experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*list) {
    for (const auto& e : lineens::list_experiments()) std::cout << e.name << "\t" << e.description << "\n";
    return 0;
  }
  if (*emit) {
    try {
      std::cout << lineens::emit_default_config(experiment);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return 2;
  }
  std::stringstream text;
  text << in.rdbuf();
  lineens::RunConfig cfg;
  try {
    cfg = lineens::parse_config(text.str(), ov);
  } catch (const std::exception& e) {
    std::cerr << "error: " << config_path << ": " << e.what() << "\n";
    return 2;
  }
  if (no_timing) cfg.record_wall_time = false;
  const int code = lineens::run(cfg, std::cerr);
  if (code != 2 && lineens::output_file(cfg) != "-")
    std::cerr << "report written to " << lineens::output_file(cfg) << "\n";
  return code;
}
