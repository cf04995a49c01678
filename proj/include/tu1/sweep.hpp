#pragma once

#include "tu1/solver.hpp"
#include "tu1/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tu1 {

struct ExperimentRecord {
  std::vector<Index> shape;
  Index R = 0;
  double p = 0;
  std::uint64_t seed = 0;  // cell base seed
  int trials = 0;
  double mean_re = 0;
  std::vector<double> trial_re;
  bool success = false;
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double mean_iterations = 0;
  double mean_terminal_residual = 0;
  double wall_seconds = 0;
};

struct SweepPlan {
  std::vector<Index> shape;
  std::vector<Index> r_values;
  std::vector<double> p_values;
  int trials = 5;
  std::uint64_t base_seed = 0;
  FactorSource source = FactorSource::Dcm;
  int n_fixed_modes = -1;  // -1: first half of the modes
  int workers = 1;
  double success_threshold = 1e-2;

  void validate() const {
    if (shape.empty() || r_values.empty() || p_values.empty()) {
      throw std::invalid_argument("sweep plan needs a shape and nonempty grids");
    }
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
    for (double p : p_values) {
      if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("sampling rates must lie in (0,1]");
    }
  }
};

namespace detail {

inline std::string shape_string(const std::vector<Index>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

inline std::vector<Index> parse_shape_string(const std::string& s) {
  std::vector<Index> shape;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find('x', pos);
    if (next == std::string::npos) next = s.size();
    shape.push_back(static_cast<Index>(std::stoll(s.substr(pos, next - pos))));
    pos = next + 1;
  }
  if (shape.empty()) throw std::runtime_error("bad shape field in sweep CSV");
  return shape;
}

inline std::string full_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return fields;
}

}  // namespace detail

inline constexpr const char* kSweepCsvHeader =
    "shape,R,p,seed,trials,mean_re,trial_re,success,psnr,mean_iterations,"
    "mean_terminal_residual,wall_seconds";

inline std::string to_csv_row(const ExperimentRecord& r) {
  std::string row = detail::shape_string(r.shape);
  row += ',' + std::to_string(r.R);
  row += ',' + detail::full_double(r.p);
  row += ',' + std::to_string(r.seed);
  row += ',' + std::to_string(r.trials);
  row += ',' + detail::full_double(r.mean_re);
  row += ',';
  for (std::size_t i = 0; i < r.trial_re.size(); ++i) {
    if (i) row += ';';
    row += detail::full_double(r.trial_re[i]);
  }
  row += ',' + std::to_string(r.success ? 1 : 0);
  row += ',' + detail::full_double(r.psnr);
  row += ',' + detail::full_double(r.mean_iterations);
  row += ',' + detail::full_double(r.mean_terminal_residual);
  row += ',' + detail::full_double(r.wall_seconds);
  return row;
}

inline ExperimentRecord from_csv_row(const std::string& line) {
  const std::vector<std::string> f = detail::split_csv_line(line);
  if (f.size() != 12) throw std::runtime_error("bad sweep CSV row: " + line);
  ExperimentRecord r;
  r.shape = detail::parse_shape_string(f[0]);
  r.R = static_cast<Index>(std::stoll(f[1]));
  r.p = std::stod(f[2]);
  r.seed = static_cast<std::uint64_t>(std::stoull(f[3]));
  r.trials = std::stoi(f[4]);
  r.mean_re = std::stod(f[5]);
  if (!f[6].empty()) {
    std::size_t pos = 0;
    while (pos <= f[6].size()) {
      std::size_t next = f[6].find(';', pos);
      if (next == std::string::npos) next = f[6].size();
      r.trial_re.push_back(std::stod(f[6].substr(pos, next - pos)));
      pos = next + 1;
    }
  }
  r.success = std::stoi(f[7]) != 0;
  r.psnr = std::stod(f[8]);
  r.mean_iterations = std::stod(f[9]);
  r.mean_terminal_residual = std::stod(f[10]);
  r.wall_seconds = std::stod(f[11]);
  return r;
}

inline std::vector<ExperimentRecord> read_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  std::vector<ExperimentRecord> out;
  if (!is) return out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("shape,", 0) == 0) continue;
    }
    out.push_back(from_csv_row(line));
  }
  return out;
}

inline void write_sweep_csv(const std::string& path, std::vector<ExperimentRecord> records) {
  std::sort(records.begin(), records.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
    if (a.R != b.R) return a.R < b.R;
    if (a.p != b.p) return a.p < b.p;
    return a.seed < b.seed;
  });
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write sweep CSV: " + path);
  os << kSweepCsvHeader << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
  if (!os) throw std::runtime_error("sweep CSV write failed: " + path);
}

inline std::uint64_t cell_seed(const SweepPlan& plan, std::size_t ri, std::size_t pi) {
  const std::uint64_t cell_index = ri * plan.p_values.size() + pi;
  return detail::splitmix64(plan.base_seed ^ (0xC311ull + cell_index * 0x100000001b3ull));
}

/// Runs all trials of one (R, p) cell. Deterministic in (plan, ri, pi) alone,
/// so resumed sweeps reproduce the records an uninterrupted run would give.
inline ExperimentRecord run_sweep_cell(const SweepPlan& plan, std::size_t ri, std::size_t pi,
                                       const TransformFamily& fam, const SolverConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.shape = plan.shape;
  rec.R = plan.r_values.at(ri);
  rec.p = plan.p_values.at(pi);
  rec.seed = cell_seed(plan, ri, pi);
  rec.trials = plan.trials;
  double sum_re = 0, sum_iter = 0, sum_resid = 0;
  for (int trial = 0; trial < plan.trials; ++trial) {
    const std::uint64_t s = rec.seed + static_cast<std::uint64_t>(trial);
    SyntheticSpec spec;
    spec.shape = plan.shape;
    spec.R = rec.R;
    spec.seed = s;
    spec.basis_seed = plan.base_seed;
    spec.source = plan.source;
    const RTensor m = gen_synthetic(spec);
    const MaskIndexSet mask = gen_mask(plan.shape, rec.p, detail::splitmix64(s ^ 0xA5C3ull));
    const CompletionResult res = complete(m, mask, fam, cfg);
    const double re = relative_error(m, res.recovered);
    rec.trial_re.push_back(re);
    sum_re += re;
    sum_iter += res.iterations;
    sum_resid += res.terminal_relative_residual;
  }
  rec.mean_re = sum_re / plan.trials;
  rec.mean_iterations = sum_iter / plan.trials;
  rec.mean_terminal_residual = sum_resid / plan.trials;
  rec.success = rec.mean_re <= plan.success_threshold;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

/// Grid sweep over R x p. Cells already present in the output CSV are kept
/// as-is; remaining cells run on `workers` threads, append to the CSV as they
/// finish (crash-safe progress), and the file is rewritten in canonical
/// (R, p) order at the end.
inline std::vector<ExperimentRecord> sweep(
    const SweepPlan& plan, const TransformFamily& fam, const SolverConfig& cfg,
    const std::string& csv_path,
    const std::function<void(const ExperimentRecord&)>& on_record = {}) {
  plan.validate();
  cfg.validate();

  std::vector<ExperimentRecord> records = read_sweep_csv(csv_path);
  auto cell_done = [&records](Index r, double p) {
    for (const auto& rec : records) {
      if (rec.R == r && std::abs(rec.p - p) < 1e-12) return true;
    }
    return false;
  };

  std::vector<std::pair<std::size_t, std::size_t>> todo;
  for (std::size_t ri = 0; ri < plan.r_values.size(); ++ri) {
    for (std::size_t pi = 0; pi < plan.p_values.size(); ++pi) {
      if (!cell_done(plan.r_values[ri], plan.p_values[pi])) todo.emplace_back(ri, pi);
    }
  }

  std::ofstream append(csv_path, std::ios::app);
  if (!append) throw std::runtime_error("cannot open sweep CSV for append: " + csv_path);
  if (records.empty() && todo.size() == plan.r_values.size() * plan.p_values.size()) {
    append << kSweepCsvHeader << '\n';
    append.flush();
  }

  std::mutex mtx;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const auto [ri, pi] = todo[k];
      ExperimentRecord rec = run_sweep_cell(plan, ri, pi, fam, cfg);
      std::lock_guard<std::mutex> lock(mtx);
      append << to_csv_row(rec) << '\n';
      append.flush();
      records.push_back(rec);
      if (on_record) on_record(rec);
    }
  };

  const int n_workers = std::min<int>(plan.workers, static_cast<int>(std::max<std::size_t>(todo.size(), 1)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  append.close();

  write_sweep_csv(csv_path, records);
  return read_sweep_csv(csv_path);
}

}  // namespace tu1
