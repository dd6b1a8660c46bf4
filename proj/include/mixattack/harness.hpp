#pragma once

// Experiment drivers: the angle sweep (attack score vs classifier angle)
// and the random-mixture benchmark (mean score vs mixture size). Both
// record enough seeds that any row can be replayed independently, and both
// emit CSV tables whose content is deterministic apart from the timestamp
// metadata line.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mixattack/attacks.hpp"
#include "mixattack/core.hpp"
#include "mixattack/io.hpp"
#include "mixattack/synth.hpp"

namespace mixattack {

inline std::optional<AttackKind> parse_attack_kind(const std::string& s) {
  if (s == "lca") return AttackKind::LcaBinaryLinear;
  if (s == "lca_multiclass") return AttackKind::LcaMulticlass;
  if (s == "apgd") return AttackKind::Apgd;
  if (s == "arc") return AttackKind::Arc;
  return std::nullopt;
}

// Experiment defaults per attack: LCA with the guaranteed step schedule,
// APGD with its standard momentum/restart settings, ARC parameter-free.
inline AttackSpec default_spec_for(AttackKind kind, int m,
                                   const AttackBudget& budget,
                                   std::uint64_t seed) {
  switch (kind) {
    case AttackKind::LcaBinaryLinear:
      return make_lca_spec(m, budget, seed);
    case AttackKind::LcaMulticlass:
      return make_lca_multiclass_spec(m, budget, seed);
    case AttackKind::Apgd:
      return make_apgd_spec(budget, seed);
    case AttackKind::Arc:
      return make_arc_spec(seed);
  }
  throw ContractViolation("unknown attack kind");
}

namespace detail {

template <class Fn>
void parallel_for(std::size_t n_tasks, int workers, const Fn& fn) {
  std::size_t n_workers =
      workers > 0 ? static_cast<std::size_t>(workers)
                  : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, n_tasks);
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_workers);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= n_tasks) break;
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// ---- angle sweep ----

inline std::vector<double> default_angle_grid(int n = 50) {
  if (n < 1) throw ContractViolation("default_angle_grid: n < 1");
  std::vector<double> thetas(n);
  for (int j = 0; j < n; ++j) thetas[j] = (j + 1) * M_PI / (n + 1);
  return thetas;
}

struct SweepRow {
  double theta = 0.0;
  AttackKind kind = AttackKind::LcaBinaryLinear;
  double score = 0.0;
};

inline std::vector<SweepRow> run_angle_sweep(double r,
                                             const AttackBudget& budget,
                                             const std::vector<double>& thetas,
                                             const std::vector<AttackKind>& kinds,
                                             std::uint64_t base_seed,
                                             int workers = 0) {
  std::vector<SweepRow> rows(thetas.size() * kinds.size());
  detail::parallel_for(thetas.size(), workers, [&](std::size_t ti) {
    AngleInstance inst = make_angle_instance(r, thetas[ti]);
    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
      AttackSpec spec = default_spec_for(
          kinds[ki], 2, budget,
          derive_seed(base_seed, ti * 64 + static_cast<int>(kinds[ki])));
      AttackOutcome out = run_attack(inst.mixture, inst.point, budget, spec);
      rows[ti * kinds.size() + ki] = {thetas[ti], kinds[ki], out.score};
    }
  });
  return rows;
}

inline CsvTable sweep_to_csv(double r, const AttackBudget& budget,
                             const std::vector<SweepRow>& rows,
                             std::uint64_t base_seed) {
  CsvTable t;
  t.meta.push_back({"r", format_double(r)});
  t.meta.push_back({"epsilon", format_double(budget.epsilon)});
  t.meta.push_back({"norm", norm_name(budget.norm)});
  if (r < budget.epsilon)
    t.meta.push_back(
        {"theta_star", format_double(critical_angle(r, budget.epsilon))});
  t.meta.push_back({"seed", std::to_string(base_seed)});
  t.header = {"theta", "attack", "score"};
  std::vector<SweepRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     if (a.theta != b.theta) return a.theta < b.theta;
                     return std::string(attack_name(a.kind)) <
                            attack_name(b.kind);
                   });
  for (const SweepRow& row : sorted)
    t.rows.push_back({format_double(row.theta), attack_name(row.kind),
                      format_double(row.score)});
  return t;
}

// ---- random-mixture benchmark ----

struct BenchConfig {
  int d = 256;
  std::vector<int> ms;
  int trials = 100;
  double bias_mean = 0.5;
  double bias_std = 0.5;
  double weight_temperature = 10.0;
  AttackBudget budget{Norm::L2, 1.0};
  std::vector<AttackKind> kinds;
  std::uint64_t base_seed = 0;
  int workers = 0;  // 0: hardware concurrency
};

struct BenchRow {
  int m = 0;
  AttackKind kind = AttackKind::LcaBinaryLinear;
  int trial = 0;
  std::uint64_t instance_seed = 0;
  std::uint64_t attack_seed = 0;
  double score = 0.0;
};

struct BenchAggregate {
  int m = 0;
  AttackKind kind = AttackKind::LcaBinaryLinear;
  int trials = 0;
  double mean_score = 0.0;
  double std_score = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;        // sorted by (m, attack, trial)
  std::vector<BenchAggregate> aggregates;
};

inline std::uint64_t bench_instance_seed(std::uint64_t base_seed, int m,
                                         int trial) {
  return derive_seed(derive_seed(base_seed, static_cast<std::uint64_t>(m)),
                     static_cast<std::uint64_t>(trial));
}

inline std::uint64_t bench_attack_seed(std::uint64_t instance_seed,
                                       AttackKind kind) {
  return derive_seed(instance_seed, 1000 + static_cast<std::uint64_t>(kind));
}

// Replays one benchmark cell from its recorded seeds; equals the score in
// the corresponding CSV row by construction.
inline double replay_bench_row(const BenchConfig& cfg, int m, AttackKind kind,
                               std::uint64_t instance_seed,
                               std::uint64_t attack_seed) {
  RandomMixtureSpec rspec{cfg.d, m, cfg.bias_mean, cfg.bias_std,
                          cfg.weight_temperature};
  RandomInstance inst = sample_random_mixture(rspec, instance_seed);
  AttackSpec spec = default_spec_for(kind, m, cfg.budget, attack_seed);
  return run_attack(inst.mixture, inst.point, cfg.budget, spec).score;
}

inline BenchResult run_random_bench(const BenchConfig& cfg) {
  if (cfg.ms.empty() || cfg.kinds.empty() || cfg.trials < 1)
    throw ContractViolation("run_random_bench: empty configuration");
  const std::size_t n_cells = cfg.ms.size() * cfg.trials;
  BenchResult res;
  res.rows.resize(n_cells * cfg.kinds.size());

  detail::parallel_for(n_cells, cfg.workers, [&](std::size_t cell) {
    int mi = static_cast<int>(cell) / cfg.trials;
    int trial = static_cast<int>(cell) % cfg.trials;
    int m = cfg.ms[mi];
    std::uint64_t iseed = bench_instance_seed(cfg.base_seed, m, trial);
    RandomMixtureSpec rspec{cfg.d, m, cfg.bias_mean, cfg.bias_std,
                            cfg.weight_temperature};
    RandomInstance inst = sample_random_mixture(rspec, iseed);
    for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
      std::uint64_t aseed = bench_attack_seed(iseed, cfg.kinds[ki]);
      AttackSpec spec = default_spec_for(cfg.kinds[ki], m, cfg.budget, aseed);
      AttackOutcome out = run_attack(inst.mixture, inst.point, cfg.budget,
                                     spec);
      res.rows[cell * cfg.kinds.size() + ki] = {
          m, cfg.kinds[ki], trial, iseed, aseed, out.score};
    }
  });

  auto row_less = [](const BenchRow& a, const BenchRow& b) {
    if (a.m != b.m) return a.m < b.m;
    std::string an = attack_name(a.kind), bn = attack_name(b.kind);
    if (an != bn) return an < bn;
    return a.trial < b.trial;
  };
  std::stable_sort(res.rows.begin(), res.rows.end(), row_less);

  for (std::size_t i = 0; i < res.rows.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < res.rows.size() && res.rows[j].m == res.rows[i].m &&
           res.rows[j].kind == res.rows[i].kind) {
      sum += res.rows[j].score;
      ++j;
    }
    int n = static_cast<int>(j - i);
    double mean = sum / n;
    double ss = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      double dev = res.rows[k].score - mean;
      ss += dev * dev;
    }
    res.aggregates.push_back(
        {res.rows[i].m, res.rows[i].kind, n, mean,
         n > 1 ? std::sqrt(ss / (n - 1)) : 0.0});
    i = j;
  }
  return res;
}

inline void bench_meta(const BenchConfig& cfg, CsvTable& t) {
  t.meta.push_back({"d", std::to_string(cfg.d)});
  t.meta.push_back({"trials", std::to_string(cfg.trials)});
  t.meta.push_back({"bias_mean", format_double(cfg.bias_mean)});
  t.meta.push_back({"bias_std", format_double(cfg.bias_std)});
  t.meta.push_back({"weight_temperature",
                    format_double(cfg.weight_temperature)});
  t.meta.push_back({"epsilon", format_double(cfg.budget.epsilon)});
  t.meta.push_back({"norm", norm_name(cfg.budget.norm)});
  t.meta.push_back({"seed", std::to_string(cfg.base_seed)});
}

inline CsvTable bench_aggregates_to_csv(const BenchConfig& cfg,
                                        const BenchResult& res) {
  CsvTable t;
  bench_meta(cfg, t);
  t.header = {"m", "attack", "trials", "mean_score", "std_score"};
  for (const BenchAggregate& a : res.aggregates)
    t.rows.push_back({std::to_string(a.m), attack_name(a.kind),
                      std::to_string(a.trials), format_double(a.mean_score),
                      format_double(a.std_score)});
  return t;
}

inline CsvTable bench_rows_to_csv(const BenchConfig& cfg,
                                  const BenchResult& res) {
  CsvTable t;
  bench_meta(cfg, t);
  t.header = {"m", "attack", "trial", "instance_seed", "attack_seed", "score"};
  for (const BenchRow& r : res.rows)
    t.rows.push_back({std::to_string(r.m), attack_name(r.kind),
                      std::to_string(r.trial), std::to_string(r.instance_seed),
                      std::to_string(r.attack_seed), format_double(r.score)});
  return t;
}

}  // namespace mixattack
