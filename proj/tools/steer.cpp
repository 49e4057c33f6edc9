#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "steer/orchestrator/simulation.hpp"

namespace fs = std::filesystem;
using namespace steer;

namespace {

fs::path data_dir() {
  if (const char* env = std::getenv("STEER_DATA_DIR")) return env;
  return STEER_DATA_DIR;
}

grammar::Dictionary load_dictionary(const std::string& path) {
  return grammar::load_grammar_file(path.empty() ? data_dir() / "grammar" / "english.grammar" : fs::path(path));
}

void print_summary(const orchestrator::RunMetrics& m) {
  auto list = [](const std::vector<double>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    return out.str();
  };
  std::cout << "t_plan   [" << list(m.t_plan) << "] s\n"
            << "t_traj   [" << list(m.t_traj) << "] s\n"
            << "t_task   " << (m.t_task ? std::to_string(*m.t_task) + " s" : std::string("not reached")) << "\n"
            << "t_idle   " << m.t_idle << " s\n"
            << "min mid-motion speed " << (m.min_mid_motion_speed ? std::to_string(*m.min_mid_motion_speed) : "-")
            << " m/s\n"
            << "max slack " << m.max_slack << ", keep-out depth " << m.max_keepout_depth << " m\n";
  for (const auto& e : m.errors) std::cout << "error: " << e << "\n";
}

int cmd_run(const std::string& file, const std::string& mode, double latency, long long seed, const std::string& out,
            const std::string& grammar) {
  auto scenario = orchestrator::load_scenario_file(file);
  if (!mode.empty()) {
    scenario.mode = orchestrator::mode_from_string(mode);
    if (scenario.mode == orchestrator::Mode::online) scenario.offline_latency = 0;
    if (scenario.mode == orchestrator::Mode::offline && scenario.offline_latency <= 0) scenario.offline_latency = 5.6;
  }
  if (latency > 0) {
    if (scenario.mode != orchestrator::Mode::offline) throw orchestrator::ScenarioError("--offline-latency needs offline mode");
    scenario.offline_latency = latency;
  }
  if (seed >= 0) scenario.seed = static_cast<std::uint64_t>(seed);
  const auto dict = load_dictionary(grammar);
  const auto result = orchestrator::run(scenario, dict);
  const fs::path dir = out.empty() ? fs::path("runs") / (scenario.name.empty() ? "run" : scenario.name) : fs::path(out);
  orchestrator::write_run(dir, result);
  std::cout << "run " << scenario.name << " (" << orchestrator::to_string(scenario.mode) << ") -> " << dir.string()
            << "\n";
  print_summary(result.metrics);
  return result.metrics.goal_reached || scenario.words.empty() ? 0 : 2;
}

int cmd_metrics(const std::string& dir) {
  const auto log = orchestrator::load_run(dir);
  const auto m = orchestrator::compute_metrics(log);
  std::cout << orchestrator::to_json(m).dump(2) << "\n";
  return 0;
}

// REPL: one word per token, the chart after every line.
int cmd_parse(const std::string& grammar, const std::string& world_file) {
  const auto dict = load_dictionary(grammar);
  std::optional<world::WorldSnapshot> world;
  if (!world_file.empty()) world = world::load_world_file(world_file);
  parser::Chart chart;
  std::cout << "words are added to the current utterance; ':reset' starts over, ':quit' exits\n";
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    if (line == ":quit" || line == ":q") break;
    if (line == ":reset") {
      chart.reset();
      continue;
    }
    parser::ParseResult r;
    for (const auto& w : grammar::tokenize(line)) r = chart.feed_word(w, dict);
    if (chart.size() == 0) continue;
    r = chart.result();
    if (world) r.best = parser::best_parse(r, resolver::referent_check(*world));
    std::cout << chart.dump(dict, r.best);
    std::cout << "status: " << parser::to_string(r.status) << "\n";
    if (r.best) std::cout << "best:   " << r.best->semantics.str() << "\n";
  }
  return 0;
}

}  // namespace

int serve_main(int port, const std::string& world_file, const std::string& grammar);

int main(int argc, char** argv) {
  CLI::App app{"steer: incremental language-to-motion pipeline"};
  app.require_subcommand(1);
  std::string grammar;
  app.add_option("--grammar", grammar, "grammar file (default: shipped English grammar)");

  auto* run = app.add_subcommand("run", "run a scenario file");
  std::string scenario_file, mode, out;
  double latency = 0;
  long long seed = -1;
  run->add_option("scenario", scenario_file, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "online | offline")->check(CLI::IsMember({"online", "offline"}));
  run->add_option("--offline-latency", latency, "planning latency of the offline baseline, s");
  run->add_option("--seed", seed, "referent/grasp choice seed");
  run->add_option("--out", out, "run directory");

  auto* serve = app.add_subcommand("serve", "WebSocket service for the live UI");
  int port = 8765;
  std::string world_file;
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--world", world_file, "world JSON")->check(CLI::ExistingFile);

  auto* parse = app.add_subcommand("parse", "parse words and print the chart");
  bool interactive = false;
  std::string parse_world;
  parse->add_flag("--interactive", interactive, "read words from stdin");
  parse->add_option("--world", parse_world, "world JSON used for best-parse selection");

  auto* metrics = app.add_subcommand("metrics", "recompute metrics of a run directory");
  std::string run_dir;
  metrics->add_option("run-dir", run_dir, "directory written by run")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(scenario_file, mode, latency, seed, out, grammar);
    if (*serve) return serve_main(port, world_file, grammar);
    if (*parse) return cmd_parse(grammar, parse_world);
    if (*metrics) return cmd_metrics(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
