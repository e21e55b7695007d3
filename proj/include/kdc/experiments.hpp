#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kdc/bounds.hpp"
#include "kdc/errors.hpp"
#include "kdc/graph_model.hpp"
#include "kdc/linalg.hpp"
#include "kdc/sdp_solver.hpp"

namespace kdc {

/// k = floor(n / r_hat) sizes. The n - k r_hat leftover nodes go one at a time,
/// round-robin, to clusters 1..k-1 so the last cluster keeps exactly r_hat.
/// With k = 1 the single cluster takes every node.
inline std::vector<Index> cluster_sizes(Index n, Index r_hat) {
  if (r_hat < 1 || r_hat > n) throw ValidationError("cluster_sizes: r_hat must lie in 1..n");
  const Index k = n / r_hat;
  std::vector<Index> sizes(static_cast<std::size_t>(k), r_hat);
  const Index remainder = n - k * r_hat;
  if (k == 1) {
    sizes[0] += remainder;
    return sizes;
  }
  for (Index i = 0; i < remainder; ++i) sizes[static_cast<std::size_t>(i % (k - 1))] += 1;
  return sizes;
}

/// ||Y - X_0||_F^2 / ||X_0||_F^2.
inline double relative_error(const Matrix& y, const Matrix& x0) {
  if (y.rows() != x0.rows() || y.cols() != x0.cols()) {
    throw DimensionError("relative_error: matrix sizes differ");
  }
  const double denom = x0.squaredNorm();
  if (!(denom > 0.0)) throw ValidationError("relative_error: X_0 is zero");
  return (y - x0).squaredNorm() / denom;
}

inline constexpr double kRecoveryThreshold = 1e-3;

inline bool recovery_test(const Matrix& y, const Matrix& x0) {
  return relative_error(y, x0) < kRecoveryThreshold;
}

/// Connected components of the graph {(i, j) : y_ij > tau}. Isolated nodes with
/// y_ii <= tau become outliers. tau <= 0 selects the default 1 / (2n).
inline Partition extract_partition(const Matrix& y, double tau = 0.0) {
  const Index n = y.rows();
  if (y.cols() != n) throw DimensionError("extract_partition: matrix is not square");
  if (tau <= 0.0) tau = 1.0 / (2.0 * static_cast<double>(std::max<Index>(n, 1)));
  std::vector<int> label(static_cast<std::size_t>(n), -2);
  int next = 0;
  std::vector<Index> stack;
  for (Index start = 0; start < n; ++start) {
    if (label[static_cast<std::size_t>(start)] != -2) continue;
    std::vector<Index> members{start};
    label[static_cast<std::size_t>(start)] = next;
    stack.assign(1, start);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v = 0; v < n; ++v) {
        if (v == u || label[static_cast<std::size_t>(v)] != -2) continue;
        if (y(u, v) > tau || y(v, u) > tau) {
          label[static_cast<std::size_t>(v)] = next;
          members.push_back(v);
          stack.push_back(v);
        }
      }
    }
    if (members.size() == 1 && y(start, start) <= tau) {
      label[static_cast<std::size_t>(start)] = -1;
    } else {
      ++next;
    }
  }
  return Partition::from_labels(label);
}

struct BruteForceResult {
  Partition partition;
  double objective = 0.0;
};

inline constexpr Index kBruteForceMaxNodes = 12;

/// Exact maximiser of the sum of cluster densities over every choice of k
/// disjoint nonempty clusters (remaining nodes are outliers). Labelings are
/// enumerated in lexicographic order of their canonical encoding (outlier = 0,
/// clusters numbered by first appearance), and only a strictly better value
/// replaces the incumbent, so ties resolve to the smallest encoding.
inline BruteForceResult brute_force_kdc(const WeightMatrix& w, Index k) {
  const Index n = w.n();
  if (n > kBruteForceMaxNodes) {
    throw ValidationError("brute_force_kdc: n = " + std::to_string(n) + " exceeds " +
                          std::to_string(kBruteForceMaxNodes));
  }
  if (k < 1 || k > n) throw ValidationError("brute_force_kdc: k must lie in 1..n");

  std::vector<int> label(static_cast<std::size_t>(n), 0);
  std::vector<int> best_label;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> sum(static_cast<std::size_t>(k + 1), 0.0);
  std::vector<Index> size(static_cast<std::size_t>(k + 1), 0);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(k + 1));

  std::function<void(Index, int)> visit = [&](Index v, int used) {
    if (v == n) {
      if (used != k) return;
      double value = 0.0;
      for (int c = 1; c <= k; ++c) {
        value += sum[static_cast<std::size_t>(c)] /
                 static_cast<double>(size[static_cast<std::size_t>(c)]);
      }
      if (best_label.empty() || value > best + 1e-12 * std::max(1.0, std::abs(best))) {
        best = value;
        best_label = label;
      }
      return;
    }
    if (k - used > n - v) return;
    const int top = std::min<int>(used + 1, static_cast<int>(k));
    for (int c = 0; c <= top; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      double added = 0.0;
      if (c > 0) {
        added = w(v, v);
        for (Index u : members[cu]) added += 2.0 * w(u, v);
      }
      label[static_cast<std::size_t>(v)] = c;
      sum[cu] += added;
      size[cu] += 1;
      members[cu].push_back(v);
      visit(v + 1, c == used + 1 ? used + 1 : used);
      members[cu].pop_back();
      size[cu] -= 1;
      sum[cu] -= added;
    }
    label[static_cast<std::size_t>(v)] = 0;
  };
  visit(0, 0);

  std::vector<int> zero_based(best_label.size());
  std::transform(best_label.begin(), best_label.end(), zero_based.begin(),
                 [](int l) { return l - 1; });
  return {Partition::from_labels(zero_based), best};
}

struct SweepSpec {
  Index n = 0;
  double within_p = 1.0;
  std::vector<Index> r_hat_grid;
  std::vector<double> q_grid;
  int trials = 1;
  AdmmParams solver;
  std::uint64_t base_seed = 0;

  void validate() const {
    if (n < 2) throw ValidationError("sweep: n must be at least 2");
    if (r_hat_grid.empty() || q_grid.empty()) throw ValidationError("sweep: empty grid");
    if (trials < 1) throw ValidationError("sweep: trials must be at least 1");
    if (!(within_p > 0.0 && within_p <= 1.0)) {
      throw ValidationError("sweep: within_p must lie in (0,1]");
    }
    for (Index r : r_hat_grid) {
      if (r < 1 || r > n) throw ValidationError("sweep: r_hat outside 1..n");
    }
    for (double q : q_grid) {
      if (!(q >= 0.0 && q < within_p)) {
        throw ValidationError("sweep: every q must satisfy 0 <= q < within_p");
      }
    }
    solver.validate();
  }
};

/// q in {0, 0.25 log n / n, ..., 5 log n / n}.
inline std::vector<double> sparse_q_grid(Index n) {
  const double unit = std::log(static_cast<double>(n)) / static_cast<double>(n);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.25 * i * unit);
  return grid;
}

/// SplitMix64 finaliser.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for one trial, a hash of (base, r_hat * 10^6 + round(q * 10^6), trial).
inline std::uint64_t trial_seed(std::uint64_t base, Index r_hat, double q, int trial) {
  const auto cell = static_cast<std::uint64_t>(r_hat) * 1000000ULL +
                    static_cast<std::uint64_t>(std::llround(q * 1e6));
  return mix64(mix64(mix64(base) ^ cell) ^ static_cast<std::uint64_t>(trial));
}

struct TrialOutcome {
  bool recovered = false;
  bool solver_failed = false;
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;
  bool converged = false;
  double objective = 0.0;        // tr(W Y)
  double ideal_objective = 0.0;  // tr(W X_0)
  double primal_residual = 0.0;
};

struct SweepCell {
  Index r_hat = 0;
  double q = 0.0;
  int trials = 0;
  int successes = 0;
  double mean_rel_err = 0.0;
  double mean_iters = 0.0;
  double curve_r_hat = 0.0;
  std::vector<TrialOutcome> outcomes;

  double success_rate() const { return trials ? static_cast<double>(successes) / trials : 0.0; }
};

struct SweepResult {
  Index n = 0;
  std::vector<Index> r_hat_grid;
  std::vector<double> q_grid;
  std::vector<double> curve;     // phase_curve(n, q) per q
  std::vector<SweepCell> cells;  // r_hat major, q minor

  const SweepCell& cell(std::size_t r_index, std::size_t q_index) const {
    return cells[r_index * q_grid.size() + q_index];
  }
};

/// One planted instance: sample, solve, compare against X_0. Solver errors are
/// reported as a failed, unrecovered trial.
inline TrialOutcome run_trial(Index n, Index r_hat, double within_p, double q,
                              const AdmmParams& solver, std::uint64_t seed) {
  const std::vector<Index> sizes = cluster_sizes(n, r_hat);
  PlantedModelSpec spec;
  spec.partition = Partition::from_sizes(sizes, n);
  spec.within = EdgeDistribution::bernoulli(within_p);
  spec.between = EdgeDistribution::bernoulli(q);
  spec.seed = seed;
  const WeightMatrix w = sample_weight_matrix(spec);
  const Matrix x0 = build_ideal_solution(spec.partition);
  TrialOutcome out;
  out.ideal_objective = w.matrix().cwiseProduct(x0).sum();
  try {
    const SdpSolution sol = admm_solve(w, spec.partition.k(), solver);
    out.rel_err = relative_error(sol.y, x0);
    out.recovered = out.rel_err < kRecoveryThreshold;
    out.iters = sol.iters;
    out.converged = sol.converged();
    out.objective = sol.objective;
    out.primal_residual = sol.primal_residual;
  } catch (const NumericalError&) {
    out.solver_failed = true;
  }
  return out;
}

using SweepProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Runs every (r_hat, q, trial) task on up to `jobs` threads (0 = hardware
/// concurrency). The result depends only on the spec.
inline SweepResult run_sweep(const SweepSpec& spec, unsigned jobs = 1,
                             const SweepProgress& progress = {}) {
  spec.validate();
  const std::size_t nr = spec.r_hat_grid.size();
  const std::size_t nq = spec.q_grid.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  const std::size_t total = nr * nq * trials;

  std::vector<TrialOutcome> outcomes(total);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      const std::size_t cell = task / trials;
      const int t = static_cast<int>(task % trials);
      const Index r_hat = spec.r_hat_grid[cell / nq];
      const double q = spec.q_grid[cell % nq];
      outcomes[task] = run_trial(spec.n, r_hat, spec.within_p, q, spec.solver,
                                 trial_seed(spec.base_seed, r_hat, q, t));
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(finished, total);
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(total, 1)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  result.n = spec.n;
  result.r_hat_grid = spec.r_hat_grid;
  result.q_grid = spec.q_grid;
  for (double q : spec.q_grid) result.curve.push_back(bounds::phase_curve(static_cast<double>(spec.n), q));
  for (std::size_t c = 0; c < nr * nq; ++c) {
    SweepCell cell;
    cell.r_hat = spec.r_hat_grid[c / nq];
    cell.q = spec.q_grid[c % nq];
    cell.trials = spec.trials;
    cell.curve_r_hat = result.curve[c % nq];
    double err_sum = 0.0;
    double iter_sum = 0.0;
    int err_count = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialOutcome& o = outcomes[c * trials + t];
      cell.successes += o.recovered ? 1 : 0;
      iter_sum += o.iters;
      if (!o.solver_failed) {
        err_sum += o.rel_err;
        ++err_count;
      }
      cell.outcomes.push_back(o);
    }
    cell.mean_rel_err =
        err_count ? err_sum / err_count : std::numeric_limits<double>::quiet_NaN();
    cell.mean_iters = iter_sum / static_cast<double>(trials);
    result.cells.push_back(std::move(cell));
  }
  return result;
}

/// Header r_hat,q,trials,successes,mean_rel_err,mean_iters,curve_r_hat; one
/// row per cell in r_hat-major order.
inline std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out.precision(10);
  out << "r_hat,q,trials,successes,mean_rel_err,mean_iters,curve_r_hat\n";
  for (const SweepCell& c : result.cells) {
    out << c.r_hat << ',' << c.q << ',' << c.trials << ',' << c.successes << ','
        << c.mean_rel_err << ',' << c.mean_iters << ',' << c.curve_r_hat << '\n';
  }
  return out.str();
}

}  // namespace kdc
