#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bamc/baselines.hpp"
#include "bamc/bamc.hpp"
#include "bamc/models.hpp"
#include "bamc/search.hpp"
#include "bamc/summary.hpp"

namespace bamc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One experiment grid cell: a model, an algorithm, and a seeded batch of runs.
/// Run r uses seed base_seed + r.
struct ExperimentConfig {
  std::string model = "tiny-hmm";  // tiny-hmm | hmm16 | gmm | single-choice
  std::string model_data;          // hmm16 spec file
  std::string algorithm = "bamc";  // bamc | mh | sa
  ScheduleKind schedule = ScheduleKind::exponential;
  double rate = 0.9;
  double t0 = 1.0;
  std::size_t iterations = 4000;
  std::size_t n_runs = 50;
  std::uint64_t base_seed = 1;
  std::size_t threads = 1;
  std::string output;

  void validate() const {
    if (iterations == 0) throw ConfigError("iterations must be at least 1");
    if (n_runs == 0) throw ConfigError("runs must be at least 1");
    if (model != "tiny-hmm" && model != "hmm16" && model != "gmm" && model != "single-choice")
      throw ConfigError("unknown model '" + model + "'");
    if (algorithm != "bamc" && algorithm != "mh" && algorithm != "sa")
      throw ConfigError("unknown algorithm '" + algorithm + "'");
    if (model == "hmm16" && model_data.empty()) throw ConfigError("model hmm16 needs a data file");
    if (algorithm == "sa") {
      try {
        Schedule{schedule, t0, rate}.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }
};

inline ScheduleKind parse_schedule(const std::string& name) {
  if (name == "exponential") return ScheduleKind::exponential;
  if (name == "lundy-mees") return ScheduleKind::lundy_mees;
  throw ConfigError("unknown schedule '" + name + "'");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  if (!(in >> v) || !(in >> std::ws).eof()) throw ConfigError("bad value for '" + key + "': " + text);
  return v;
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "model") c.model = value;
  else if (key == "data") c.model_data = value;
  else if (key == "algorithm") c.algorithm = value;
  else if (key == "schedule") c.schedule = parse_schedule(value);
  else if (key == "rate") c.rate = detail::parse_number<double>(key, value);
  else if (key == "t0") c.t0 = detail::parse_number<double>(key, value);
  else if (key == "iterations") c.iterations = detail::parse_number<std::size_t>(key, value);
  else if (key == "runs") c.n_runs = detail::parse_number<std::size_t>(key, value);
  else if (key == "seed") c.base_seed = detail::parse_number<std::uint64_t>(key, value);
  else if (key == "threads") c.threads = detail::parse_number<std::size_t>(key, value);
  else if (key == "out") c.output = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Reads `key = value` lines; '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in, std::move(base));
}

/// Self-describing dump of the settings, in the same format parse_config reads.
inline void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "model = " << c.model << '\n';
  if (!c.model_data.empty()) out << "data = " << c.model_data << '\n';
  out << "algorithm = " << c.algorithm << '\n';
  if (c.algorithm == "sa") {
    out << "schedule = " << schedule_name(c.schedule) << '\n';
    out << "rate = " << format_real(c.rate) << "  # applied per iteration\n";
    out << "t0 = " << format_real(c.t0) << '\n';
  }
  out << "iterations = " << c.iterations << '\n';
  out << "runs = " << c.n_runs << '\n';
  out << "seed = " << c.base_seed << '\n';
}

inline Program single_choice_program() {
  return Program([]() -> Execution { co_await sample(Distribution::categorical({1.0})); });
}

inline Program make_model(const ExperimentConfig& c) {
  if (c.model == "tiny-hmm") return tiny_hmm_program(default_tiny_hmm());
  if (c.model == "hmm16") return hmm16_program(load_hmm_spec(c.model_data));
  if (c.model == "gmm") return gmm_program(default_mixture());
  if (c.model == "single-choice") return single_choice_program();
  throw ConfigError("unknown model '" + c.model + "'");
}

/// Runs search number `run` of the experiment.
inline SearchReport run_search(const ExperimentConfig& c, const Program& program, std::size_t run) {
  Rng rng(c.base_seed + run);
  if (c.algorithm == "bamc") return bamc_search(program, c.iterations, rng);
  if (c.algorithm == "mh") return mh_map_search(program, c.iterations, rng);
  if (c.algorithm == "sa") return sa_search(program, Schedule{c.schedule, c.t0, c.rate}, c.iterations, rng);
  throw ConfigError("unknown algorithm '" + c.algorithm + "'");
}

/// Runs every search of the experiment, fanning out over `c.threads` workers.
/// Reports are indexed by run, so the result does not depend on scheduling.
inline std::vector<SearchReport> run_reports(const ExperimentConfig& c) {
  c.validate();
  const Program program = make_model(c);
  std::vector<SearchReport> reports(c.n_runs);
  const std::size_t workers = std::max<std::size_t>(1, std::min(c.threads, c.n_runs));
  if (workers == 1) {
    for (std::size_t r = 0; r < c.n_runs; ++r) reports[r] = run_search(c, program, r);
    return reports;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t r; (r = next++) < c.n_runs;) {
        try {
          reports[r] = run_search(c, program, r);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return reports;
}

struct RunRecord {
  std::size_t run_id = 0;
  std::size_t iteration = 0;
  double sample_log_weight = kNegInf;
  double best_log_weight_so_far = kNegInf;
  bool is_new_map = false;
  double elapsed_ms = 0.0;
};

inline std::vector<RunRecord> records_from_reports(const std::vector<SearchReport>& reports) {
  std::vector<RunRecord> out;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    double best = kNegInf;
    for (const auto& it : reports[r].iterations) {
      if (it.is_new_map) best = it.log_weight;
      out.push_back({r, it.iteration, it.log_weight, best, it.is_new_map, it.elapsed_ms});
    }
  }
  return out;
}

inline constexpr const char* kRunCsvHeader =
    "run_id,iteration,sample_log_weight,best_log_weight_so_far,is_new_map,elapsed_ms";
inline constexpr const char* kNormalizedRunCsvHeader =
    "run_id,iteration,sample_log_weight,best_log_weight_so_far,is_new_map";

/// Writes records with 17 significant digits. The normalized form drops the
/// wall-time column so it is byte-identical across reruns.
inline void write_run_csv(std::ostream& out, const std::vector<RunRecord>& records, bool with_timing = true) {
  out << (with_timing ? kRunCsvHeader : kNormalizedRunCsvHeader) << '\n';
  for (const auto& r : records) {
    out << r.run_id << ',' << r.iteration << ',' << format_real(r.sample_log_weight) << ','
        << format_real(r.best_log_weight_so_far) << ',' << (r.is_new_map ? 1 : 0);
    if (with_timing) out << ',' << format_real(r.elapsed_ms);
    out << '\n';
  }
}

inline std::vector<RunRecord> read_run_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("run csv: empty input");
  line = detail::trim(line);
  const bool timed = line == kRunCsvHeader;
  if (!timed && line != kNormalizedRunCsvHeader) throw DataError("run csv: unexpected header '" + line + "'");
  std::vector<RunRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != (timed ? 6u : 5u)) throw DataError("run csv line " + std::to_string(lineno) + ": wrong field count");
    try {
      RunRecord r;
      r.run_id = std::stoull(f[0]);
      r.iteration = std::stoull(f[1]);
      r.sample_log_weight = std::stod(f[2]);
      r.best_log_weight_so_far = std::stod(f[3]);
      r.is_new_map = f[4] == "1";
      if (timed) r.elapsed_ms = std::stod(f[5]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw DataError("run csv line " + std::to_string(lineno) + ": malformed number");
    }
  }
  if (out.empty()) throw DataError("run csv: no records");
  return out;
}

inline std::vector<RunRecord> read_run_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_run_csv(in);
}

/// Groups a column of the records by run, ordered by (run_id, iteration).
template <class Field>
std::vector<std::vector<double>> by_run(std::vector<RunRecord> records, Field field) {
  std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
    return a.run_id != b.run_id ? a.run_id < b.run_id : a.iteration < b.iteration;
  });
  std::vector<std::vector<double>> runs;
  std::size_t current = static_cast<std::size_t>(-1);
  for (const auto& r : records) {
    if (runs.empty() || r.run_id != current) {
      runs.emplace_back();
      current = r.run_id;
    }
    runs.back().push_back(field(r));
  }
  return runs;
}

/// Quantiles of best_log_weight_so_far across runs, per iteration.
inline std::vector<Series> quantile_summary(const std::vector<RunRecord>& records, std::span<const double> quantiles,
                                            const std::string& prefix = "") {
  if (records.empty()) throw DataError("quantile_summary: no records");
  return quantile_summary(by_run(records, [](const RunRecord& r) { return r.best_log_weight_so_far; }), quantiles,
                          prefix);
}

/// Checks that best_log_weight_so_far never decreases within a run.
inline bool best_is_nondecreasing(const std::vector<RunRecord>& records) {
  for (const auto& run : by_run(records, [](const RunRecord& r) { return r.best_log_weight_so_far; }))
    for (std::size_t i = 1; i < run.size(); ++i)
      if (run[i] < run[i - 1]) return false;
  return true;
}

/// Path of the timing-free companion file: `runs.csv` -> `runs.normalized.csv`.
inline std::string normalized_path(const std::string& output) {
  std::filesystem::path p(output);
  std::filesystem::path ext = p.extension();
  return (p.parent_path() / (p.stem().string() + ".normalized" + (ext.empty() ? ".csv" : ext.string()))).string();
}

/// Runs the experiment and writes `c.output`, its normalized companion and a
/// `.meta` file holding the configuration. Returns the records.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& c) {
  c.validate();
  if (c.output.empty()) throw ConfigError("no output path");
  const auto records = records_from_reports(run_reports(c));

  auto open = [](const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
  };
  {
    auto out = open(c.output);
    write_run_csv(out, records, true);
    if (!out) throw std::runtime_error("write failed: " + c.output);
  }
  {
    const auto path = normalized_path(c.output);
    auto out = open(path);
    write_run_csv(out, records, false);
    if (!out) throw std::runtime_error("write failed: " + path);
  }
  {
    auto out = open(c.output + ".meta");
    write_config(out, c);
  }
  return records;
}

}  // namespace bamc
