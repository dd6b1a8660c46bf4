// Command-line front end: generate synthetic instances, run attacks on
// stored instances, sweep the two-classifier angle family, benchmark random
// mixtures, and enumerate the vulnerability lattice.
//
// Exit codes: 0 success, 1 internal/numeric failure, 2 usage error
// (bad flags, missing or malformed files), 3 size cap exceeded.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixattack/mixattack.hpp"

namespace {

using namespace mixattack;

std::string join_indices(const IndexSet& s, char sep) {
  std::string out;
  for (int i : s.to_indices()) {
    if (!out.empty()) out += sep;
    out += std::to_string(i);
  }
  return out;
}

Norm parse_norm(const std::string& s) {
  if (s == "l2") return Norm::L2;
  if (s == "linf") return Norm::Linf;
  throw ContractViolation("unknown norm '" + s + "' (expected l2 or linf)");
}

std::vector<AttackKind> parse_attack_list(const std::string& csv) {
  std::vector<AttackKind> kinds;
  std::string cur;
  std::istringstream in(csv);
  while (std::getline(in, cur, ',')) {
    auto k = parse_attack_kind(cur);
    if (!k) throw ContractViolation("unknown attack '" + cur + "'");
    kinds.push_back(*k);
  }
  if (kinds.empty()) throw ContractViolation("empty attack list");
  return kinds;
}

struct PgdOverrides {
  std::optional<int> steps;
  std::optional<double> step_size;
  std::optional<double> momentum;
  std::optional<int> restarts;
  std::optional<double> halve_at;
  std::optional<std::string> rule;
  bool random_init = false;

  void apply(PgdConfig& cfg) const {
    if (steps) cfg.steps = *steps;
    if (step_size) cfg.step_size = *step_size;
    if (momentum) cfg.momentum = *momentum;
    if (restarts) cfg.restarts = *restarts;
    if (halve_at) cfg.halve_at = *halve_at;
    if (random_init) cfg.random_init = true;
    if (rule) {
      if (*rule == "vanilla") cfg.rule = StepRule::Vanilla;
      else if (*rule == "normalized_l2") cfg.rule = StepRule::NormalizedL2;
      else if (*rule == "sign_linf") cfg.rule = StepRule::SignLinf;
      else throw ContractViolation("unknown step rule '" + *rule + "'");
    }
  }
};

int cmd_gen(const std::string& kind, const std::string& out_path, double r,
            double theta, double w1, double w2, int d, int m, double bias_mean,
            double bias_std, double temperature, std::uint64_t seed) {
  if (kind == "angle") {
    AngleInstance inst = make_angle_instance(r, theta, {w1, w2});
    save_instance(out_path, inst.mixture, inst.point);
  } else if (kind == "random") {
    RandomMixtureSpec spec{d, m, bias_mean, bias_std, temperature};
    RandomInstance inst = sample_random_mixture(spec, seed);
    save_instance(out_path, inst.mixture, inst.point);
  } else {
    throw ContractViolation("unknown kind '" + kind +
                            "' (expected angle or random)");
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_attack(const std::string& in_path, const std::string& attack,
               double eps, const std::string& norm_s, std::uint64_t seed,
               const PgdOverrides& overrides, const std::string& csv_path) {
  AttackBudget budget(parse_norm(norm_s), eps);
  auto kind = parse_attack_kind(attack);
  if (!kind) throw ContractViolation("unknown attack '" + attack + "'");
  LoadedInstance inst = load_instance(in_path);

  auto t0 = std::chrono::steady_clock::now();
  AttackOutcome out;
  AttackKind ran = *kind;
  if (std::holds_alternative<BinaryInstance>(inst)) {
    const BinaryInstance& bi = std::get<BinaryInstance>(inst);
    AttackSpec spec =
        default_spec_for(*kind, bi.mixture.size(), budget, seed);
    overrides.apply(spec.pgd);
    out = run_attack(bi.mixture, bi.point, budget, spec);
  } else {
    const MulticlassInstance& mi = std::get<MulticlassInstance>(inst);
    // Plain "lca" on a multiclass instance means its multiclass variant.
    ran = *kind == AttackKind::LcaBinaryLinear ? AttackKind::LcaMulticlass
                                               : *kind;
    AttackSpec spec = default_spec_for(ran, mi.mixture.size(), budget, seed);
    overrides.apply(spec.pgd);
    out = run_attack(mi.mixture, mi.point, budget, spec);
  }
  double wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();

  std::cout << "attack=" << attack_name(ran) << " norm=" << norm_s
            << " eps=" << format_double(eps)
            << " score=" << format_double(out.score)
            << " fooled=" << out.fooled.to_string()
            << " delta_norm="
            << format_double(ball_norm(out.delta, budget.norm))
            << " iterations=" << out.iterations_used << " wall_ms="
            << format_double(wall_ms) << "\n";

  if (!csv_path.empty()) {
    CsvTable t;
    t.header = {"attack", "norm",       "eps",        "score",
                "fooled", "delta_norm", "iterations", "wall_ms"};
    t.rows.push_back({attack_name(ran), norm_s, format_double(eps),
                      format_double(out.score), join_indices(out.fooled, '|'),
                      format_double(ball_norm(out.delta, budget.norm)),
                      std::to_string(out.iterations_used),
                      format_double(wall_ms)});
    write_csv(csv_path, t);
  }
  return 0;
}

int cmd_sweep_angle(double r, double eps, const std::string& norm_s,
                    int points, const std::string& attacks,
                    std::uint64_t seed, const std::string& out_path,
                    int workers) {
  AttackBudget budget(parse_norm(norm_s), eps);
  std::vector<AttackKind> kinds = parse_attack_list(attacks);
  std::vector<double> thetas = default_angle_grid(points);
  std::vector<SweepRow> rows =
      run_angle_sweep(r, budget, thetas, kinds, seed, workers);
  CsvTable t = sweep_to_csv(r, budget, rows, seed);
  if (!out_path.empty()) write_csv(out_path, t);
  if (r < eps)
    std::cout << "theta_star=" << format_double(critical_angle(r, eps))
              << "\n";
  std::cout << "rows=" << t.rows.size();
  if (!out_path.empty()) std::cout << " wrote " << out_path;
  std::cout << "\n";
  return 0;
}

int cmd_bench_random(int d, const std::string& ms_csv, int trials,
                     double bias_mean, double bias_std, double temperature,
                     double eps, const std::string& norm_s,
                     const std::string& attacks, std::uint64_t seed,
                     const std::string& out_path, const std::string& raw_path,
                     int workers) {
  BenchConfig cfg;
  cfg.d = d;
  {
    std::istringstream in(ms_csv);
    std::string tok;
    while (std::getline(in, tok, ',')) cfg.ms.push_back(std::stoi(tok));
    if (cfg.ms.empty()) throw ContractViolation("empty --ms list");
  }
  cfg.trials = trials;
  cfg.bias_mean = bias_mean;
  cfg.bias_std = bias_std;
  cfg.weight_temperature = temperature;
  cfg.budget = AttackBudget(parse_norm(norm_s), eps);
  cfg.kinds = parse_attack_list(attacks);
  cfg.base_seed = seed;
  cfg.workers = workers;

  BenchResult res = run_random_bench(cfg);
  if (!out_path.empty()) write_csv(out_path, bench_aggregates_to_csv(cfg, res));
  if (!raw_path.empty()) write_csv(raw_path, bench_rows_to_csv(cfg, res));
  for (const BenchAggregate& a : res.aggregates)
    std::cout << "m=" << a.m << " attack=" << attack_name(a.kind)
              << " trials=" << a.trials
              << " mean_score=" << format_double(a.mean_score)
              << " std_score=" << format_double(a.std_score) << "\n";
  return 0;
}

int cmd_oracle(const std::string& in_path, double eps,
               const std::string& norm_s, int max_m,
               const std::string& out_path) {
  AttackBudget budget(parse_norm(norm_s), eps);
  LoadedInstance inst = load_instance(in_path);
  LatticeReport rep;
  if (std::holds_alternative<BinaryInstance>(inst)) {
    const BinaryInstance& bi = std::get<BinaryInstance>(inst);
    rep = enumerate_lattice(bi.mixture, bi.point, budget, max_m);
  } else {
    const MulticlassInstance& mi = std::get<MulticlassInstance>(inst);
    rep = enumerate_lattice(mi.mixture, mi.point, budget, max_m);
  }

  int feasible = 0;
  for (const RegionStatus& st : rep.statuses)
    if (st.feasible) ++feasible;
  char fp[32];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(rep.fingerprint));
  std::cout << "m=" << rep.m << " fingerprint=" << fp
            << " oracle_grade=" << (rep.oracle_grade ? "true" : "false")
            << " feasible_regions=" << feasible << " maximal=[";
  for (std::size_t i = 0; i < rep.maximal_regions.size(); ++i)
    std::cout << (i ? "," : "") << rep.maximal_regions[i].to_string();
  std::cout << "] optimal_score=" << format_double(rep.optimal_score) << "\n";

  if (!out_path.empty())
    write_text_file(out_path, report_to_json(rep).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attacks on randomized mixtures of classifiers"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  std::string gen_kind = "angle", gen_out;
  double gen_r = 0.9, gen_theta = 0.5, gen_w1 = 0.5, gen_w2 = 0.5;
  int gen_d = 2, gen_m = 2;
  double gen_bias_mean = 0.5, gen_bias_std = 0.5, gen_temp = 10.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--kind", gen_kind, "angle or random");
  gen->add_option("--out", gen_out, "output instance path")->required();
  gen->add_option("--r", gen_r, "angle family: boundary distance");
  gen->add_option("--theta", gen_theta, "angle family: angle in (0, pi)");
  gen->add_option("--w1", gen_w1, "angle family: weight of classifier 0");
  gen->add_option("--w2", gen_w2, "angle family: weight of classifier 1");
  gen->add_option("--d", gen_d, "random family: dimension");
  gen->add_option("--m", gen_m, "random family: classifier count");
  gen->add_option("--bias-mean", gen_bias_mean, "random family: mean distance");
  gen->add_option("--bias-std", gen_bias_std, "random family: distance std");
  gen->add_option("--temperature", gen_temp, "random family: weight softmax temperature");
  gen->add_option("--seed", gen_seed, "random family: seed");

  // attack
  auto* atk = app.add_subcommand("attack", "run one attack on an instance");
  std::string atk_in, atk_name = "lca", atk_norm = "l2", atk_csv;
  double atk_eps = 1.0;
  std::uint64_t atk_seed = 0;
  PgdOverrides overrides;
  atk->add_option("--in", atk_in, "instance path")->required();
  atk->add_option("--attack", atk_name, "lca, apgd, or arc");
  atk->add_option("--eps", atk_eps, "perturbation budget")->required();
  atk->add_option("--norm", atk_norm, "l2 or linf");
  atk->add_option("--seed", atk_seed, "attack seed");
  atk->add_option("--csv", atk_csv, "write a one-row CSV");
  atk->add_option("--steps", overrides.steps, "PGD steps override");
  atk->add_option("--step-size", overrides.step_size, "PGD step size override");
  atk->add_option("--momentum", overrides.momentum, "PGD momentum override");
  atk->add_option("--restarts", overrides.restarts, "PGD restarts override");
  atk->add_option("--halve-at", overrides.halve_at, "PGD halving fraction");
  atk->add_option("--rule", overrides.rule,
                  "step rule: vanilla, normalized_l2, sign_linf");
  atk->add_flag("--random-init", overrides.random_init,
                "random init for restarts");

  // sweep-angle
  auto* sweep = app.add_subcommand("sweep-angle",
                                   "attack scores across the angle family");
  double sw_r = 0.9, sw_eps = 1.0;
  std::string sw_norm = "l2", sw_attacks = "lca,arc", sw_out;
  int sw_points = 50, sw_workers = 0;
  std::uint64_t sw_seed = 0;
  sweep->add_option("--r", sw_r, "boundary distance");
  sweep->add_option("--eps", sw_eps, "perturbation budget");
  sweep->add_option("--norm", sw_norm, "l2 or linf");
  sweep->add_option("--points", sw_points, "theta grid size");
  sweep->add_option("--attacks", sw_attacks, "comma-separated attacks");
  sweep->add_option("--seed", sw_seed, "base seed");
  sweep->add_option("--out", sw_out, "CSV output path");
  sweep->add_option("--workers", sw_workers, "worker threads (0 = auto)");

  // bench-random
  auto* bench = app.add_subcommand("bench-random",
                                   "random-mixture benchmark across m");
  int bn_d = 256, bn_trials = 100, bn_workers = 0;
  std::string bn_ms = "1,2,4,8,16", bn_norm = "l2", bn_attacks = "lca,arc",
              bn_out, bn_raw;
  double bn_bias_mean = 0.5, bn_bias_std = 0.5, bn_temp = 10.0, bn_eps = 1.0;
  std::uint64_t bn_seed = 0;
  bench->add_option("--d", bn_d, "dimension");
  bench->add_option("--ms", bn_ms, "comma-separated mixture sizes");
  bench->add_option("--trials", bn_trials, "trials per size");
  bench->add_option("--bias-mean", bn_bias_mean, "mean boundary distance");
  bench->add_option("--bias-std", bn_bias_std, "distance std");
  bench->add_option("--temperature", bn_temp, "weight softmax temperature");
  bench->add_option("--eps", bn_eps, "perturbation budget");
  bench->add_option("--norm", bn_norm, "l2 or linf");
  bench->add_option("--attacks", bn_attacks, "comma-separated attacks");
  bench->add_option("--seed", bn_seed, "base seed");
  bench->add_option("--out", bn_out, "aggregate CSV path");
  bench->add_option("--raw-out", bn_raw, "per-trial CSV path (with seeds)");
  bench->add_option("--workers", bn_workers, "worker threads (0 = auto)");

  // oracle
  auto* orc = app.add_subcommand("oracle",
                                 "enumerate the vulnerability lattice");
  std::string or_in, or_norm = "l2", or_out;
  double or_eps = 1.0;
  int or_max_m = 16;
  orc->add_option("--in", or_in, "instance path")->required();
  orc->add_option("--eps", or_eps, "perturbation budget")->required();
  orc->add_option("--norm", or_norm, "l2 or linf");
  orc->add_option("--max-m", or_max_m, "refuse mixtures larger than this");
  orc->add_option("--out", or_out, "report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen(gen_kind, gen_out, gen_r, gen_theta, gen_w1, gen_w2,
                     gen_d, gen_m, gen_bias_mean, gen_bias_std, gen_temp,
                     gen_seed);
    if (atk->parsed())
      return cmd_attack(atk_in, atk_name, atk_eps, atk_norm, atk_seed,
                        overrides, atk_csv);
    if (sweep->parsed())
      return cmd_sweep_angle(sw_r, sw_eps, sw_norm, sw_points, sw_attacks,
                             sw_seed, sw_out, sw_workers);
    if (bench->parsed())
      return cmd_bench_random(bn_d, bn_ms, bn_trials, bn_bias_mean,
                              bn_bias_std, bn_temp, bn_eps, bn_norm,
                              bn_attacks, bn_seed, bn_out, bn_raw, bn_workers);
    if (orc->parsed())
      return cmd_oracle(or_in, or_eps, or_norm, or_max_m, or_out);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const mixattack::SizeCapError& e) {
    std::cerr << "size cap: " << e.what() << "\n";
    return 3;
  } catch (const mixattack::ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
