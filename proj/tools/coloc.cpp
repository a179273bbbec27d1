#include "coloc/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <sstream>
#include <iostream>

using namespace coloc;

namespace {

struct Options {
  std::string scenario = "cabin";
  std::string algorithm = "crlb-las";
  std::vector<double> sigmas{3.0};
  int runs = 1;
  std::uint64_t seed = 0;
  double budget_seconds = 0.0;
  double max_evaluations = 0.0;
  std::string output;
  int workers = 1;
  bool strict_paper_fim = false;
  bool no_traces = false;
  std::string measurements;
  std::string samples;
  std::vector<std::string> inputs;
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int run_simulate(const Options& o) {
  ExperimentConfig cfg;
  cfg.scenario = o.scenario;
  cfg.algorithm = parse_algorithm(o.algorithm);
  cfg.sigmas = o.sigmas;
  cfg.runs = o.runs;
  cfg.seed = o.seed;
  cfg.time_budget_seconds = o.budget_seconds;
  cfg.max_evaluations = o.max_evaluations;
  cfg.output_dir = o.output;
  cfg.workers = o.workers;
  cfg.strict_paper_fim = o.strict_paper_fim;
  cfg.write_traces = !o.no_traces;
  const auto records = run_experiment(cfg);
  std::cout << format_summary(aggregate(records));
  int failed = 0;
  for (const auto& r : records) failed += !r.error.empty();
  if (failed > 0) std::clog << failed << " of " << records.size() << " trials failed\n";
  return 0;
}

int run_solve(const Options& o) {
  if (o.measurements.empty()) throw std::invalid_argument("solve: --measurements is required");
  const ScenarioConfig sc = resolve_scenario(o.scenario);
  sc.network.validate();
  const RssMatrix rss = load_measurements(o.measurements, sc.network);
  PathLossParams params = sc.path_loss;
  if (o.sigmas.size() == 1) params.sigma = o.sigmas.front();
  SolveOptions opts;
  opts.seed = o.seed;
  opts.time_budget_seconds = o.budget_seconds;
  opts.max_evaluations = o.max_evaluations;
  opts.strict_paper_fim = o.strict_paper_fim;
  const SearchResult res = solve(parse_algorithm(o.algorithm), rss, sc.network, params, opts);

  // Device indices are reported in measurement-file numbering (anchors first).
  std::ostringstream out;
  out << "# cost " << res.cost << "\n# evaluations " << res.evaluations << "\ndevice,install_point\n";
  const int na = sc.network.num_anchors();
  for (int i = 0; i < res.assignment.size(); ++i) out << (na + i) << ',' << res.assignment[i] << '\n';
  emit(out.str(), o.output);
  return 0;
}

int run_fit(const Options& o) {
  if (o.samples.empty()) throw std::invalid_argument("fit: --samples is required");
  const auto samples = load_path_loss_samples(o.samples);
  const PathLossParams p = fit_path_loss(samples);
  std::ostringstream out;
  out.precision(10);
  out << "p0,gamma,d0,sigma\n" << p.p0 << ',' << p.gamma << ',' << p.d0 << ',' << p.sigma << '\n';
  emit(out.str(), o.output);
  return 0;
}

int run_report(const Options& o) {
  if (o.inputs.empty()) throw std::invalid_argument("report: at least one experiment directory is required");
  std::vector<TrialRecord> all;
  for (const auto& dir : o.inputs) {
    auto r = read_records(dir);
    all.insert(all.end(), r.begin(), r.end());
  }
  emit(format_summary(aggregate(all)), o.output);
  return 0;
}

int run_export(const Options& o) {
  const ScenarioConfig sc = resolve_scenario(o.scenario);
  emit(format_scenario(sc), o.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Device-to-installation-point association from pairwise RSS"};
  app.require_subcommand(1);
  Options o;

  auto add_scenario = [&](CLI::App* c) {
    c->add_option("--scenario", o.scenario, "Built-in scenario name or scenario JSON file")->capture_default_str();
  };
  auto add_solver = [&](CLI::App* c) {
    c->add_option("--algorithm", o.algorithm, "crlb-las, cso, sa, ga or tabu")->capture_default_str();
    c->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    c->add_option("--budget-seconds", o.budget_seconds, "Wall-clock budget for sa/ga/tabu (0 = none)")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--max-evaluations", o.max_evaluations,
                  "Deterministic sa/ga/tabu budget in full cost evaluations (0 = none)")
        ->check(CLI::NonNegativeNumber);
    c->add_flag("--strict-paper-fim", o.strict_paper_fim, "Exclude anchor terms from the FIM diagonal");
  };

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo experiment over sigmas and runs");
  add_scenario(sim);
  add_solver(sim);
  sim->add_option("--sigma", o.sigmas, "Shadowing sigma(s) in dB, comma separated")->delimiter(',');
  sim->add_option("--runs", o.runs, "Trials per sigma")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--output", o.output, "Output directory for records and traces");
  sim->add_option("--workers", o.workers, "Concurrent trials")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_flag("--no-traces", o.no_traces, "Skip per-trial trace files");

  auto* sol = app.add_subcommand("solve", "Solve one instance from a measurement file");
  add_scenario(sol);
  add_solver(sol);
  sol->add_option("--measurements", o.measurements, "Measurement file (i,j,rss lines, anchors first)")
      ->check(CLI::ExistingFile);
  sol->add_option("--sigma", o.sigmas, "Shadowing sigma used for the CRLB (default: scenario value)");
  sol->add_option("--output", o.output, "Write the assignment here instead of stdout");

  auto* fit = app.add_subcommand("fit", "Least-squares path-loss fit");
  fit->add_option("--samples", o.samples, "Sample file (distance_m,rss_dBm lines)")->check(CLI::ExistingFile);
  fit->add_option("--output", o.output, "Write the fit here instead of stdout");

  auto* rep = app.add_subcommand("report", "Summarize experiment record directories");
  rep->add_option("inputs", o.inputs, "Experiment output directories")->check(CLI::ExistingDirectory);
  rep->add_option("--output", o.output, "Write the summary here instead of stdout");

  auto* exp = app.add_subcommand("export-scenario", "Write a scenario as JSON");
  add_scenario(exp);
  exp->add_option("--output", o.output, "Destination file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  // solve uses the scenario's own sigma unless one is given.
  if (sol->parsed() && sol->count("--sigma") == 0) o.sigmas.clear();

  try {
    if (sim->parsed()) return run_simulate(o);
    if (sol->parsed()) return run_solve(o);
    if (fit->parsed()) return run_fit(o);
    if (rep->parsed()) return run_report(o);
    if (exp->parsed()) return run_export(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
