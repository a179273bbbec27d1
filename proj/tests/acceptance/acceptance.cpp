#include "coloc/assign.hpp"
#include "coloc/crlb.hpp"
#include "coloc/harness.hpp"
#include "../unit/support.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace coloc;
using coloc::testing::brute_force_minimum;
using coloc::testing::random_network;

namespace {

struct Experiment {
  ExperimentConfig config;
  std::vector<TrialRecord> records;
};

class Suite {
 public:
  explicit Suite(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  // Runs and remembers an experiment so later criteria can inspect its
  // traces and rerun it.
  const std::vector<TrialRecord>& run(const std::string& label, const std::string& scenario, Algorithm algorithm,
                                      std::vector<double> sigmas, int runs, std::uint64_t seed,
                                      double max_evaluations = 0.0) {
    ExperimentConfig c;
    c.scenario = scenario;
    c.algorithm = algorithm;
    c.sigmas = std::move(sigmas);
    c.runs = runs;
    c.seed = seed;
    c.max_evaluations = max_evaluations;
    c.output_dir = root_ / "runs" / label;
    fs::remove_all(c.output_dir);
    experiments_.push_back({c, run_experiment(c)});
    return experiments_.back().records;
  }

  const std::vector<Experiment>& experiments() const { return experiments_; }

  void verdict(int id, const std::string& title, bool pass, const std::string& detail) {
    std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
    std::fflush(stdout);
    failures_ += !pass;
  }

  int failures() const { return failures_; }

 private:
  fs::path root_;
  std::vector<Experiment> experiments_;
  int failures_ = 0;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const SummaryRow& row_for(const std::vector<SummaryRow>& rows, double sigma) {
  for (const auto& r : rows)
    if (r.sigma == sigma) return r;
  throw std::runtime_error("no summary row for sigma " + fmt(sigma, 1));
}

void print_summary(const std::vector<TrialRecord>& records) {
  std::istringstream lines(format_summary(aggregate(records)));
  std::string line;
  while (std::getline(lines, line)) std::printf("    %s\n", line.c_str());
}

// Criterion 1: every seeded zero-noise trial is solved exactly.
void zero_noise_exactness(Suite& suite) {
  bool pass = true;
  std::string detail;
  for (const char* scenario : {"cabin", "building", "lab-1.47", "lab-1.97"}) {
    for (Algorithm a : {Algorithm::CrlbLas, Algorithm::Cso}) {
      const auto& recs = suite.run(std::string("c1-") + scenario + "-" + algorithm_name(a), scenario, a, {0.0}, 20, 101);
      int exact = 0;
      for (const auto& r : recs) exact += r.error.empty() && r.accuracy == 1.0;
      pass = pass && exact == 20;
      detail += std::string(detail.empty() ? "" : ", ") + scenario + " " + algorithm_name(a) + " " +
                std::to_string(exact) + "/20";
    }
  }
  suite.verdict(1, "zero-noise exactness", pass, detail);
}

// Criteria 2 and 3 share the cabin experiments: identical seeds give both
// pipelines the same instances.
void cabin_noise(Suite& suite) {
  const auto& las = suite.run("c23-cabin-crlb-las", "cabin", Algorithm::CrlbLas, {3.0, 7.0}, 100, 202);
  const auto las_rows = aggregate(las);
  const auto& cso_recs = suite.run("c23-cabin-cso", "cabin", Algorithm::Cso, {3.0, 7.0}, 100, 202);
  const auto cso_rows = aggregate(cso_recs);
  print_summary(las);
  print_summary(cso_recs);

  const SummaryRow& l3 = row_for(las_rows, 3.0);
  suite.verdict(2, "cabin low noise", l3.count >= 50 && l3.failures == 0 && l3.median >= 0.98,
                "sigma=3, " + std::to_string(l3.count) + " trials, CRLB-LAS median " + fmt(l3.median) +
                    " (need >= 0.980)");

  const SummaryRow& l7 = row_for(las_rows, 7.0);
  const SummaryRow& c7 = row_for(cso_rows, 7.0);
  const double gap = l7.median - c7.median;
  const bool pass = l7.count >= 50 && c7.count >= 50 && l7.failures == 0 && c7.failures == 0 && gap >= 0.04 &&
                    c7.median >= 0.70 && c7.median <= 0.95;
  suite.verdict(3, "cabin high-noise ordering", pass,
                "sigma=7, CRLB-LAS median " + fmt(l7.median) + ", CSO median " + fmt(c7.median) + ", gap " +
                    fmt(gap) + " (need gap >= 0.040 and CSO median in [0.70, 0.95])");
}

// Criterion 4: the baselines get the evaluation count CRLB-LAS used on
// average, so the comparison is at equal (and reproducible) effort.
void baseline_dominance(Suite& suite) {
  const auto& las = suite.run("c4-lab-crlb-las", "lab-1.47", Algorithm::CrlbLas, {2.0}, 100, 303);
  double evals = 0.0;
  int perfect = 0;
  for (const auto& r : las) {
    evals += r.evaluations;
    perfect += r.error.empty() && r.accuracy == 1.0;
  }
  const double budget = std::ceil(evals / static_cast<double>(las.size()));
  const SummaryRow ref = aggregate(las).front();
  print_summary(las);

  bool pass = ref.failures == 0 && perfect >= 95;
  std::string detail = "CRLB-LAS perfect " + std::to_string(perfect) + "/100 (need >= 95), mean " +
                       fmt(ref.mean_accuracy) + ", wall " + fmt(ref.mean_wall_time, 4) + " s; budget " +
                       fmt(budget, 0) + " evaluations";
  for (Algorithm a : {Algorithm::SA, Algorithm::GA, Algorithm::Tabu}) {
    const auto& recs = suite.run("c4-lab-" + algorithm_name(a), "lab-1.47", a, {2.0}, 100, 303, budget);
    const SummaryRow row = aggregate(recs).front();
    print_summary(recs);
    pass = pass && row.failures == 0 && row.mean_accuracy < ref.mean_accuracy;
    detail += "; " + algorithm_name(a) + " mean " + fmt(row.mean_accuracy) + ", wall " + fmt(row.mean_wall_time, 4) + " s";
  }
  suite.verdict(4, "baseline dominance", pass, detail);
}

// Criterion 5: Kuhn-Munkres against enumeration, half the matrices with
// integer entries so that ties are common.
void assignment_oracle(Suite& suite) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> real(0.0, 10.0);
  std::uniform_int_distribution<int> integer(0, 9);
  int agree = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + k % 7;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = k % 2 ? static_cast<double>(integer(rng)) : real(rng);
    const CostMatrix cost(m);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do best = std::min(best, cost.total(Assignment(perm)));
    while (std::next_permutation(perm.begin(), perm.end()));
    agree += cost.total(solve_assignment(cost)) == best;
  }
  suite.verdict(5, "assignment oracle", agree == 1000, std::to_string(agree) + "/1000 matrices match enumeration");
}

struct Instance {
  DeviceNetwork net;
  Assignment truth;
  RssMatrix rss;
  PathLossParams params;
};

Instance random_instance(std::mt19937_64& rng, int nt, int na, double sigma) {
  Instance in;
  in.net = random_network(nt, na, rng);
  in.truth = random_assignment(nt, rng);
  in.params.sigma = sigma;
  in.rss = simulate_measurements(in.net, in.truth, in.params, rng());
  return in;
}

// Criterion 6: analytic gradient against central differences.
void gradient_check(Suite& suite) {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> jitter(0.0, 0.4);
  int ok = 0;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Instance in = random_instance(rng, 2 + k % 9, 3, 3.0);
    const auto all = in.net.device_positions(in.truth);
    std::vector<Position> pos(all.begin(), all.begin() + in.net.num_blindfolded());
    for (auto& p : pos) p += Position(jitter(rng), jitter(rng), jitter(rng));
    const Eigen::VectorXd g = p2_gradient(pos, in.rss, in.net, in.params);
    Eigen::VectorXd fd(g.size());
    const double h = 1e-5;
    for (int c = 0; c < g.size(); ++c) {
      auto plus = pos;
      auto minus = pos;
      plus[static_cast<std::size_t>(c / 3)][c % 3] += h;
      minus[static_cast<std::size_t>(c / 3)][c % 3] -= h;
      fd[c] = (p2_objective(plus, in.rss, in.net, in.params) - p2_objective(minus, in.rss, in.net, in.params)) / (2.0 * h);
    }
    const double rel = (g - fd).norm() / g.norm();
    worst = std::max(worst, rel);
    ok += rel <= 1e-5;
  }
  suite.verdict(6, "gradient correctness", ok == 100,
                std::to_string(ok) + "/100 instances, worst relative error " + fmt(worst * 1e6, 3) + "e-6");
}

// Criterion 7: small instances against exhaustive enumeration.  Install
// points are random inside a 6 x 6 x 3 m room; as in every shipped
// scenario the four anchors sit on the periphery, here at alternating
// corner heights.
void small_instance_optimality(Suite& suite) {
  std::mt19937_64 rng(707);
  bool pass = true;
  std::string detail;
  for (double sigma : {0.0, 1.0}) {
    int hits = 0;
    for (int k = 0; k < 100; ++k) {
      const int nt = 2 + k % 4;
      Instance in;
      in.net = random_network(nt, 0, rng);
      in.net.anchors = {{0, 0, 0}, {6, 0, 3}, {0, 6, 3}, {6, 6, 0}};
      in.truth = random_assignment(nt, rng);
      in.params.sigma = sigma;
      in.rss = simulate_measurements(in.net, in.truth, in.params, rng());
      const AssignmentCost cost(in.rss, in.net, in.params);
      const double best = brute_force_minimum(cost).first;
      const SearchResult r = crlb_las(in.rss, in.net, in.params);
      hits += r.cost <= best + 1e-9 * std::max(1.0, best);
    }
    pass = pass && hits >= 95;
    detail += std::string(detail.empty() ? "" : ", ") + "sigma=" + fmt(sigma, 0) + " " + std::to_string(hits) + "/100";
  }
  suite.verdict(7, "small-instance global optimality", pass, detail + " (need >= 95 each)");
}

// Chi-squared(3) CDF by composite Simpson after substituting x = u^2.
double simpson_cdf(double q) {
  const int n = 20000;
  const double b = std::sqrt(q);
  const double h = b / n;
  auto f = [](double u) { return 2.0 * u * u * std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); };
  double s = f(0.0) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(k * h);
  return s * h / 3.0;
}

double oracle_quantile(double p) {
  double lo = 0.0;
  double hi = 50.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (simpson_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Criterion 8: FIM symmetry and PSD, sigma scaling, chi-squared quantile.
void fim_properties(Suite& suite) {
  bool psd = true;
  double worst_scaling = 0.0;
  for (const char* name : {"cabin", "building", "lab-1.47", "lab-1.97"}) {
    ScenarioConfig sc = builtin_scenario(name);
    sc.path_loss.sigma = 3.0;
    for (bool strict : {false, true}) {
      FimOptions opt;
      opt.strict_paper = strict;
      const FisherMatrix fim = fisher_information(sc.network, sc.path_loss, opt);
      const double scale = fim.F.cwiseAbs().maxCoeff();
      const bool symmetric = (fim.F - fim.F.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
      const Eigen::MatrixXd sym = 0.5 * (fim.F + fim.F.transpose());
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().minCoeff();
      psd = psd && symmetric && min_eig >= -1e-8 * sym.diagonal().maxCoeff();
    }
    PathLossParams p1 = sc.path_loss;
    PathLossParams p2 = sc.path_loss;
    p1.sigma = 2.0;
    p2.sigma = 4.0;
    const auto c1 = device_covariances(fisher_information(sc.network, p1));
    const auto c2 = device_covariances(fisher_information(sc.network, p2));
    for (std::size_t i = 0; i < c1.size(); ++i) {
      const double err = (c2[i] - 4.0 * c1[i]).cwiseAbs().maxCoeff() / c2[i].cwiseAbs().maxCoeff();
      worst_scaling = std::max(worst_scaling, err);
    }
  }
  const double q = chi2_quantile_3dof(0.95);
  const double oracle = oracle_quantile(0.95);
  const bool chi2_ok = std::abs(q - 7.8147) <= 1e-3 && std::abs(q - oracle) <= 1e-3;
  suite.verdict(8, "FIM/CRLB properties", psd && worst_scaling <= 1e-10 && chi2_ok,
                std::string("symmetric PSD ") + (psd ? "yes" : "no") + ", worst sigma-scaling error " +
                    fmt(worst_scaling * 1e12, 3) + "e-12, chi2 quantile " + fmt(q, 5) + " vs oracle " + fmt(oracle, 5));
}

// Criterion 9: recorded LAS and GA traces from criteria 1-4 never go up.
void descent_invariants(Suite& suite) {
  int checked = 0;
  int violations = 0;
  for (const auto& e : suite.experiments()) {
    if (e.config.algorithm != Algorithm::CrlbLas && e.config.algorithm != Algorithm::GA) continue;
    for (const auto& r : e.records) {
      if (r.trace_file.empty()) continue;
      const auto trace = read_trace(e.config.output_dir / r.trace_file);
      ++checked;
      for (std::size_t t = 1; t < trace.size(); ++t)
        if (trace[t].cost > trace[t - 1].cost) {
          ++violations;
          break;
        }
    }
  }
  suite.verdict(9, "descent invariants", checked > 0 && violations == 0,
                std::to_string(checked) + " CRLB-LAS/GA traces checked, " + std::to_string(violations) + " violations");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Criterion 10: every experiment above, rerun with a different worker
// count, reproduces its records file byte for byte.
void determinism(Suite& suite) {
  int identical = 0;
  const int total = static_cast<int>(suite.experiments().size());
  for (const auto& e : suite.experiments()) {
    ExperimentConfig c = e.config;
    c.output_dir = suite.root() / "rerun" / e.config.output_dir.filename();
    c.workers = 2;
    fs::remove_all(c.output_dir);
    run_experiment(c);
    const std::string a = slurp(e.config.output_dir / kRecordsFile);
    identical += !a.empty() && a == slurp(c.output_dir / kRecordsFile);
  }
  suite.verdict(10, "determinism", total > 0 && identical == total,
                std::to_string(identical) + "/" + std::to_string(total) + " records files byte-identical on rerun");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks; prints one PASS/FAIL line per criterion"};
  std::string output = "acceptance_runs";
  app.add_option("--output", output, "Directory for experiment records and traces");
  CLI11_PARSE(app, argc, argv);

  Suite suite{fs::path(output)};
  const auto timed = [](const char* name, auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    std::printf("    (%s took %.1f s)\n", name, dt.count());
  };
  try {
    timed("criterion 1", [&] { zero_noise_exactness(suite); });
    timed("criteria 2-3", [&] { cabin_noise(suite); });
    timed("criterion 4", [&] { baseline_dominance(suite); });
    timed("criterion 5", [&] { assignment_oracle(suite); });
    timed("criterion 6", [&] { gradient_check(suite); });
    timed("criterion 7", [&] { small_instance_optimality(suite); });
    timed("criterion 8", [&] { fim_properties(suite); });
    timed("criterion 9", [&] { descent_invariants(suite); });
    timed("criterion 10", [&] { determinism(suite); });
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return 2;
  }
  std::printf("%d of 10 criteria failed\n", suite.failures());
  return suite.failures() == 0 ? 0 : 1;
}
