#pragma once

// Projected (sub)gradient descent over a norm ball, with momentum, restarts,
// step-size halving, and best-iterate tracking. This is the single descent
// engine behind every attack in the library.

#include <cassert>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "mixattack/core.hpp"
#include "mixattack/random.hpp"

namespace mixattack {

enum class StepRule {
  Vanilla,       // raw (sub)gradient
  NormalizedL2,  // g / ||g||_2, zero kept as zero (L2 budgets only)
  SignLinf,      // componentwise sign (Linf budgets only)
};

struct PgdConfig {
  int steps = 1;
  double step_size = 0.0;
  StepRule rule = StepRule::Vanilla;
  double momentum = 0.0;
  int restarts = 0;        // extra runs beyond the first
  bool random_init = false;  // restarts start uniformly in the ball
  std::optional<double> halve_at;  // fraction of steps after which eta halves
  bool early_exit = true;  // stop once the objective is exactly 0 (<= 1e-12);
                           // callers with signed objectives must disable
};

// Parameter schedule under which plain PGD on the mean reverse hinge of a
// pool is guaranteed to land within 1/m of the pool minimum when classifiers
// are rescaled to unit weight norm: T = ceil(eps^2 m^2) + 1 steps of size
// eps / sqrt(T), no momentum, no restarts, no halving.
inline PgdConfig lemma1_params(int m, const AttackBudget& budget) {
  if (m < 1) throw ContractViolation("lemma1_params: m must be >= 1");
  PgdConfig cfg;
  double t = budget.epsilon * budget.epsilon * static_cast<double>(m) * m;
  cfg.steps = static_cast<int>(std::ceil(t)) + 1;
  cfg.step_size = budget.epsilon / std::sqrt(static_cast<double>(cfg.steps));
  cfg.rule = StepRule::Vanilla;
  return cfg;
}

struct PgdResult {
  Vec best_delta;
  double best_value = 0.0;
  long iterations = 0;  // objective/gradient evaluations actually spent
};

using Objective = std::function<double(const Vec&)>;
using Gradient = std::function<Vec(const Vec&)>;

namespace detail {

inline void check_pgd_config(const PgdConfig& cfg, const AttackBudget& budget) {
  if (cfg.steps < 1) throw ContractViolation("PgdConfig: steps must be >= 1");
  if (!(cfg.step_size > 0.0) || !std::isfinite(cfg.step_size))
    throw ContractViolation("PgdConfig: step_size must be finite and > 0");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw ContractViolation("PgdConfig: momentum must be in [0, 1)");
  if (cfg.restarts < 0) throw ContractViolation("PgdConfig: restarts < 0");
  if (cfg.halve_at && !(*cfg.halve_at > 0.0 && *cfg.halve_at <= 1.0))
    throw ContractViolation("PgdConfig: halve_at must be in (0, 1]");
  if (cfg.rule == StepRule::NormalizedL2 && budget.norm != Norm::L2)
    throw ContractViolation("NormalizedL2 step rule requires an L2 budget");
  if (cfg.rule == StepRule::SignLinf && budget.norm != Norm::Linf)
    throw ContractViolation("SignLinf step rule requires an Linf budget");
}

inline Vec apply_step_rule(const Vec& velocity, StepRule rule) {
  switch (rule) {
    case StepRule::Vanilla:
      return velocity;
    case StepRule::NormalizedL2: {
      double n = velocity.norm();
      if (n < 1e-300) return Vec::Zero(velocity.size());
      return velocity / n;
    }
    case StepRule::SignLinf:
      return velocity.array().sign().matrix();
  }
  return velocity;
}

}  // namespace detail

// Minimizes the objective over the budget ball. Returns the best iterate
// ever seen across all runs (strict improvements only, so the earliest
// iterate wins ties). Restart r > 0 starts uniformly in the ball when
// cfg.random_init, otherwise from init_delta again.
inline PgdResult pgd_minimize(const Objective& objective,
                              const Gradient& gradient,
                              const AttackBudget& budget, const PgdConfig& cfg,
                              const Vec& init_delta, std::uint64_t seed = 0) {
  detail::check_pgd_config(cfg, budget);
  if (!init_delta.allFinite())
    throw ContractViolation("pgd_minimize: non-finite init");

  const long d = init_delta.size();
  const int halve_from =
      cfg.halve_at ? static_cast<int>(std::floor(*cfg.halve_at * cfg.steps))
                   : cfg.steps + 1;

  PgdResult res;
  res.best_delta = project_to_ball(init_delta, budget);
  res.best_value = objective(res.best_delta);
  res.iterations = 1;
  if (!std::isfinite(res.best_value))
    throw NumericError("pgd_minimize: objective not finite at init");

  auto done = [&] { return cfg.early_exit && res.best_value <= 1e-12; };
  if (done()) return res;

  for (int r = 0; r <= cfg.restarts; ++r) {
    Vec delta;
    if (r == 0) {
      delta = res.best_delta;
    } else {
      if (cfg.random_init) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        delta = budget.norm == Norm::L2
                    ? rng.uniform_in_l2_ball(static_cast<int>(d), budget.epsilon)
                    : rng.uniform_in_linf_ball(static_cast<int>(d),
                                               budget.epsilon);
      } else {
        delta = project_to_ball(init_delta, budget);
      }
      double v = objective(delta);
      ++res.iterations;
      if (!std::isfinite(v))
        throw NumericError("pgd_minimize: objective not finite at restart " +
                           std::to_string(r));
      if (v < res.best_value) {
        res.best_value = v;
        res.best_delta = delta;
      }
      if (done()) return res;
    }

    Vec velocity = Vec::Zero(d);
    for (int t = 0; t < cfg.steps; ++t) {
      Vec g = gradient(delta);
      if (!g.allFinite())
        throw NumericError("pgd_minimize: non-finite gradient at iteration " +
                           std::to_string(t));
      velocity = cfg.momentum * velocity + g;
      double eta = t >= halve_from ? 0.5 * cfg.step_size : cfg.step_size;
      delta = project_to_ball(delta - eta * detail::apply_step_rule(velocity,
                                                                    cfg.rule),
                              budget);
      assert(ball_norm(delta, budget.norm) <= budget.epsilon * (1.0 + 1e-12) + 1e-12);
      double v = objective(delta);
      ++res.iterations;
      if (!std::isfinite(v))
        throw NumericError("pgd_minimize: objective not finite at iteration " +
                           std::to_string(t));
      if (v < res.best_value) {
        res.best_value = v;
        res.best_delta = delta;
      }
      if (done()) return res;
    }
  }
  return res;
}

}  // namespace mixattack
