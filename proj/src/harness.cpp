#include "coloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace coloc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ParseError("bad number '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s) {
  Int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ParseError("bad integer '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = (c == ',') ? ';' : ' ';
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

const char* kRecordsHeader =
    "scenario,algorithm,sigma_index,run,sigma,seed,accuracy,final_cost,evaluations,iterations,trace,error";
const char* kTimingsHeader = "sigma_index,run,wall_time_seconds";
const char* kTraceHeader = "elapsed_seconds,evaluations,cost,accuracy";

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::CrlbLas: return "crlb-las";
    case Algorithm::Cso: return "cso";
    case Algorithm::SA: return "sa";
    case Algorithm::GA: return "ga";
    case Algorithm::Tabu: return "tabu";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  const std::string n = lower(name);
  if (n == "crlb-las" || n == "crlb_las" || n == "crlblas") return Algorithm::CrlbLas;
  if (n == "cso") return Algorithm::Cso;
  if (n == "sa") return Algorithm::SA;
  if (n == "ga") return Algorithm::GA;
  if (n == "tabu") return Algorithm::Tabu;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected crlb-las, cso, sa, ga or tabu)");
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw std::invalid_argument("experiment: runs must be >= 1");
  if (sigmas.empty()) throw std::invalid_argument("experiment: at least one sigma is required");
  for (double s : sigmas)
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("experiment: sigmas must be finite and >= 0");
  if (workers < 1) throw std::invalid_argument("experiment: workers must be >= 1");
}

bool TrialRecord::operator==(const TrialRecord& o) const {
  return scenario == o.scenario && algorithm == o.algorithm && sigma_index == o.sigma_index && run == o.run &&
         sigma == o.sigma && seed == o.seed && accuracy == o.accuracy && final_cost == o.final_cost &&
         evaluations == o.evaluations && iterations == o.iterations && wall_time_seconds == o.wall_time_seconds &&
         trace_file == o.trace_file && error == o.error;
}

std::uint64_t trial_seed(std::uint64_t master, int sigma_index, int run) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ static_cast<std::uint64_t>(sigma_index));
  return splitmix64(s ^ (static_cast<std::uint64_t>(run) << 20));
}

TrialInstance make_trial(const ScenarioConfig& scenario, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Assignment truth = random_assignment(scenario.network.num_blindfolded(), rng);
  PathLossParams params = scenario.path_loss;
  params.sigma = sigma;
  params.validate();
  RssMatrix rss = simulate_measurements(scenario.network, truth, params, rng());
  return {std::move(truth), std::move(rss), params};
}

SearchResult solve(Algorithm algorithm, const RssMatrix& rss, const DeviceNetwork& network,
                   const PathLossParams& params, const SolveOptions& options) {
  if (algorithm == Algorithm::CrlbLas || algorithm == Algorithm::Cso) {
    PipelineSettings ps;
    ps.strict_paper_fim = options.strict_paper_fim;
    ps.truth = options.truth;
    return algorithm == Algorithm::CrlbLas ? crlb_las(rss, network, params, ps) : cso(rss, network, params, ps);
  }
  BaselineSettings bs;
  bs.seed = options.seed;
  bs.max_evaluations = options.max_evaluations;
  bs.time_budget_seconds = options.time_budget_seconds;
  bs.truth = options.truth;
  switch (algorithm) {
    case Algorithm::SA: return simulated_annealing(rss, network, params, bs);
    case Algorithm::GA: return genetic_algorithm(rss, network, params, bs);
    default: return tabu_search(rss, network, params, bs);
  }
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ScenarioConfig scenario = resolve_scenario(config.scenario);
  scenario.network.validate();

  const int total = static_cast<int>(config.sigmas.size()) * config.runs;
  std::vector<TrialRecord> records(static_cast<std::size_t>(total));
  const bool write = !config.output_dir.empty();
  if (write) {
    std::filesystem::create_directories(config.output_dir);
    if (config.write_traces) std::filesystem::create_directories(config.output_dir / "traces");
  }

  std::atomic<int> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (int idx = next++; idx < total; idx = next++) {
      TrialRecord& rec = records[static_cast<std::size_t>(idx)];
      rec.scenario = scenario.name;
      rec.algorithm = algorithm_name(config.algorithm);
      rec.sigma_index = idx / config.runs;
      rec.run = idx % config.runs;
      rec.sigma = config.sigmas[static_cast<std::size_t>(rec.sigma_index)];
      rec.seed = trial_seed(config.seed, rec.sigma_index, rec.run);
      const auto start = std::chrono::steady_clock::now();
      try {
        const TrialInstance inst = make_trial(scenario, rec.sigma, rec.seed);
        SolveOptions opts;
        opts.seed = splitmix64(rec.seed);
        opts.time_budget_seconds = config.time_budget_seconds;
        opts.max_evaluations = config.max_evaluations;
        opts.strict_paper_fim = config.strict_paper_fim;
        opts.truth = &inst.truth;
        SearchResult res = solve(config.algorithm, inst.rss, scenario.network, inst.params, opts);
        rec.accuracy = accuracy(res.assignment, inst.truth);
        rec.final_cost = res.cost;
        rec.evaluations = res.evaluations;
        rec.iterations = res.iterations;
        rec.trace = std::move(res.cost_trace);
      } catch (const std::exception& e) {
        rec.error = sanitize(e.what());
        std::lock_guard lock(log_mutex);
        std::clog << "trial " << rec.sigma_index << '/' << rec.run << " failed: " << e.what() << '\n';
      }
      rec.wall_time_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (write && config.write_traces && rec.error.empty()) {
        rec.trace_file = "traces/trial_" + std::to_string(rec.sigma_index) + "_" + std::to_string(rec.run) + ".csv";
        write_trace(rec.trace, config.output_dir / rec.trace_file);
      }
    }
  };

  const int nthreads = std::min(config.workers, total);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (write) write_records(records, config.output_dir);
  return records;
}

std::string format_records(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << sanitize(r.scenario) << ',' << sanitize(r.algorithm) << ',' << r.sigma_index << ',' << r.run << ','
        << fmt(r.sigma) << ',' << r.seed << ',' << fmt(r.accuracy) << ',' << fmt(r.final_cost) << ','
        << fmt(r.evaluations) << ',' << r.iterations << ',' << r.trace_file << ',' << sanitize(r.error) << '\n';
  }
  return out.str();
}

std::string format_timings(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << kTimingsHeader << '\n';
  for (const auto& r : records) out << r.sigma_index << ',' << r.run << ',' << fmt(r.wall_time_seconds) << '\n';
  return out.str();
}

std::vector<TrialRecord> parse_records(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) throw ParseError("records: missing or unexpected header");
  std::vector<TrialRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 12) throw ParseError("records line " + std::to_string(lineno) + ": expected 12 fields");
    TrialRecord r;
    r.scenario = f[0];
    r.algorithm = f[1];
    r.sigma_index = parse_int<int>(f[2]);
    r.run = parse_int<int>(f[3]);
    r.sigma = parse_double(f[4]);
    r.seed = parse_int<std::uint64_t>(f[5]);
    r.accuracy = parse_double(f[6]);
    r.final_cost = parse_double(f[7]);
    r.evaluations = parse_double(f[8]);
    r.iterations = parse_int<int>(f[9]);
    r.trace_file = f[10];
    r.error = f[11];
    out.push_back(std::move(r));
  }
  return out;
}

void write_records(const std::vector<TrialRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / kRecordsFile, format_records(records));
  write_file(dir / kTimingsFile, format_timings(records));
}

std::vector<TrialRecord> read_records(const std::filesystem::path& dir) {
  auto records = parse_records(read_file(dir / kRecordsFile));
  const auto timings = dir / kTimingsFile;
  if (!std::filesystem::exists(timings)) return records;
  std::map<std::pair<int, int>, double> wall;
  std::istringstream in(read_file(timings));
  std::string line;
  std::getline(in, line);
  if (line != kTimingsHeader) throw ParseError("timings: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 3) throw ParseError("timings: expected 3 fields");
    wall[{parse_int<int>(f[0]), parse_int<int>(f[1])}] = parse_double(f[2]);
  }
  for (auto& r : records) {
    auto it = wall.find({r.sigma_index, r.run});
    if (it != wall.end()) r.wall_time_seconds = it->second;
  }
  return records;
}

std::string format_trace(const std::vector<TracePoint>& trace) {
  std::ostringstream out;
  out << kTraceHeader << '\n';
  for (const auto& p : trace)
    out << fmt(p.elapsed_seconds) << ',' << fmt(p.evaluations) << ',' << fmt(p.cost) << ',' << fmt(p.accuracy)
        << '\n';
  return out.str();
}

void write_trace(const std::vector<TracePoint>& trace, const std::filesystem::path& path) {
  write_file(path, format_trace(trace));
}

std::vector<TracePoint> read_trace(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError("trace: unexpected header");
  std::vector<TracePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 4) throw ParseError("trace: expected 4 fields");
    out.push_back({parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
  }
  return out;
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("nearest_rank: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("nearest_rank: q outside [0, 1]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n - 1e-12)));
  return values[std::min(rank, values.size()) - 1];
}

std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.algorithm, r.sigma);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& key : keys) {
    SummaryRow row;
    row.algorithm = key.first;
    row.sigma = key.second;
    std::vector<double> acc;
    double wall = 0.0;
    for (const TrialRecord* r : groups[key]) {
      if (!r->error.empty()) {
        ++row.failures;
        continue;
      }
      acc.push_back(r->accuracy);
      wall += r->wall_time_seconds;
    }
    row.count = static_cast<int>(acc.size());
    if (!acc.empty()) {
      row.median = nearest_rank(acc, 0.5);
      row.p25 = nearest_rank(acc, 0.25);
      row.p75 = nearest_rank(acc, 0.75);
      row.min = *std::min_element(acc.begin(), acc.end());
      row.max = *std::max_element(acc.begin(), acc.end());
      double sum = 0.0;
      int perfect = 0;
      for (double a : acc) {
        sum += a;
        perfect += (a == 1.0);
      }
      row.mean_accuracy = sum / row.count;
      row.perfect_fraction = static_cast<double>(perfect) / row.count;
      row.mean_wall_time = wall / row.count;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "algorithm,sigma,count,failures,median,p25,p75,min,max,mean_accuracy,perfect_fraction,mean_wall_time_seconds\n";
  for (const auto& r : rows)
    out << r.algorithm << ',' << fmt(r.sigma) << ',' << r.count << ',' << r.failures << ',' << fmt(r.median) << ','
        << fmt(r.p25) << ',' << fmt(r.p75) << ',' << fmt(r.min) << ',' << fmt(r.max) << ',' << fmt(r.mean_accuracy)
        << ',' << fmt(r.perfect_fraction) << ',' << fmt(r.mean_wall_time) << '\n';
  return out.str();
}

}  // namespace coloc
