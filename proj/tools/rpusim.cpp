// rpusim: command-line front end for the RPU query-sequence emulator.
//
// Exit status: 0 success, 1 input/validation error, 2 usage error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rpusim/rpusim.hpp"

#ifndef RPUSIM_SCENARIO_DIR
#define RPUSIM_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kUsageError = 2;

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError(path + ": cannot write file");
  out << content;
  if (!out) throw FileError(path + ": write failed");
}

rpusim::Scenario read_scenario(const std::string& path) {
  const auto text = read_file(path);
  try {
    return rpusim::load_scenario(text);
  } catch (const rpusim::ValidationError& e) {
    throw rpusim::ValidationError("", path + ": " + e.what());
  } catch (const rpusim::ParseError& e) {
    throw rpusim::ParseError(path + ": " + e.what());
  }
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw CLI::ValidationError("--values", "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<rpusim::Strategy> parse_strategies(const std::string& csv) {
  std::vector<rpusim::Strategy> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto st = rpusim::strategy_from_string(item);
    if (!st || *st == rpusim::Strategy::oracle)
      throw CLI::ValidationError("--strategies", "unknown sweep strategy '" + item + "'");
    out.push_back(*st);
  }
  return out;
}

int cmd_simulate(const std::string& scenario_path, const std::string& schedule_path,
                 const std::string& trace_path) {
  const auto s = read_scenario(scenario_path);
  const auto sch = schedule_path.empty() ? rpusim::plan_baseline(s)
                                         : rpusim::load_schedule(read_file(schedule_path));
  const auto report = rpusim::execute_schedule(s, sch);
  std::cout << "total_ms=" << rpusim::format_number(report.total_ms) << "\n";
  for (std::size_t i = 0; i < report.per_query_ms.size(); ++i)
    std::cout << "query=" << s.sequence[i].id << " ms=" << rpusim::format_number(report.per_query_ms[i])
              << "\n";
  std::cout << "reconfigurations=" << report.reconfigurations << "\n";
  if (!trace_path.empty()) write_file(trace_path, rpusim::emit_trace(report));
  return kOk;
}

int cmd_optimize(const std::string& scenario_path, const std::string& strategy, const std::string& out_path) {
  const auto s = read_scenario(scenario_path);
  const auto st = rpusim::strategy_from_string(strategy);
  if (!st) {
    std::cerr << "unknown strategy '" << strategy << "'\n";
    return kUsageError;
  }
  const auto outcome = rpusim::optimize(s, *st);
  const std::string doc = rpusim::to_json(outcome, s).dump(2) + "\n";
  std::cout << "strategy=" << rpusim::to_string(outcome.strategy)
            << " total_ms=" << rpusim::format_number(outcome.total_ms)
            << " improvement_pct=" << rpusim::format_number(outcome.improvement_pct) << "\n";
  if (out_path.empty()) std::cout << doc;
  else write_file(out_path, doc);
  return kOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& axis, const std::string& values,
              const std::string& strategies, const std::string& out_path) {
  rpusim::SweepSpec spec;
  const auto a = rpusim::sweep_axis_from_string(axis);
  if (!a) throw CLI::ValidationError("--axis", "expected scale_factor or gap_ms");
  spec.axis = *a;
  spec.values = parse_values(values);
  spec.strategies = parse_strategies(strategies);
  const auto s = read_scenario(scenario_path);
  write_file(out_path, rpusim::run_sweep(s, spec));
  return kOk;
}

int cmd_corpus_verify(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw FileError(dir + ": no scenario files");

  bool all_ok = true;
  for (const auto& f : files) {
    const auto name = f.filename().string();
    try {
      const auto c = rpusim::check_scenario(name, read_scenario(f.string()));
      std::cout << (c.ok() ? "PASS " : "FAIL ") << name << " baseline_ms=" << rpusim::format_number(c.baseline_ms)
                << " auto_ms=" << rpusim::format_number(c.auto_ms);
      if (c.exhaustive_ms) std::cout << " oracle_ms=" << rpusim::format_number(*c.exhaustive_ms);
      else std::cout << " oracle_ms=skipped";
      if (c.oracle_gap()) std::cout << " gap_ms=" << rpusim::format_number(c.auto_ms - *c.exhaustive_ms);
      std::cout << "\n";
      for (const auto& n : c.notes) std::cout << "  " << n << "\n";
      all_ok = all_ok && c.ok();
    } catch (const std::exception& e) {
      std::cout << "FAIL " << name << " " << e.what() << "\n";
      all_ok = false;
    }
  }
  std::cout << files.size() << " scenarios, " << (all_ok ? "all passed" : "failures") << "\n";
  return all_ok ? kOk : kInputError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emulator and optimizer for query sequences on a reconfigurable storage accelerator"};
  app.require_subcommand(1);

  std::string scenario, schedule, trace, strategy = "auto", out, axis, values;
  std::string strategies = "baseline,spec_reconfig,reorder,combined,auto";
  std::string corpus_dir = std::string(RPUSIM_SCENARIO_DIR) + "/corpus";

  auto* simulate = app.add_subcommand("simulate", "Emulate a scenario and print its timing");
  simulate->add_option("scenario", scenario, "Scenario document")->required();
  simulate->add_option("--schedule", schedule, "Schedule or optimizer output (default: baseline)");
  simulate->add_option("--trace", trace, "Write the span trace to this file");

  auto* optimize = app.add_subcommand("optimize", "Plan a schedule and print the optimizer output");
  optimize->add_option("scenario", scenario, "Scenario document")->required();
  optimize->add_option("--strategy", strategy, "baseline|spec_reconfig|reorder|combined|auto|oracle");
  optimize->add_option("--out", out, "Write the optimizer document here instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Sweep scale factor or gap and write CSV");
  sweep->add_option("scenario", scenario, "Scenario document")->required();
  sweep->add_option("--axis", axis, "scale_factor|gap_ms")->required();
  sweep->add_option("--values", values, "Comma-separated, strictly increasing")->required();
  sweep->add_option("--strategies", strategies, "Comma-separated strategies");
  sweep->add_option("--out", out, "CSV output file")->required();

  auto* corpus = app.add_subcommand("corpus", "Bundled scenario corpus");
  corpus->require_subcommand(1);
  auto* verify = corpus->add_subcommand("verify", "Run every corpus scenario through the checks");
  verify->add_option("--dir", corpus_dir, "Corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(scenario, schedule, trace);
    if (optimize->parsed()) return cmd_optimize(scenario, strategy, out);
    if (sweep->parsed()) return cmd_sweep(scenario, axis, values, strategies, out);
    if (verify->parsed()) return cmd_corpus_verify(corpus_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const rpusim::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kInputError;
  } catch (const rpusim::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kInputError;
  } catch (const rpusim::InstanceTooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kUsageError;
}
