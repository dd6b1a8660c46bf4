#pragma once

// Attacks on randomized mixtures.
//
//  - lca_binary_linear: lattice climbing with verified joins. Classifiers are
//    visited in decreasing weight order; each step attacks the intersection
//    of the current pool's fooling regions with the candidate's and joins the
//    pool only when a strictly verified common point is found. On exact
//    verification the final fooled set is a maximal vulnerable region.
//  - lca_multiclass: same climb for multiclass classifiers; adversarial
//    target classes are re-selected every outer step and acceptance is by
//    strict 0-1 loss improvement.
//  - apgd: momentum PGD on the weight-averaged margin surrogate.
//  - arc: one greedy pass of closed-form boundary-crossing steps.
//
// All attacks return immediately when some classifier already misclassifies
// the unperturbed point.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mixattack/core.hpp"
#include "mixattack/diff.hpp"
#include "mixattack/optim.hpp"
#include "mixattack/random.hpp"

namespace mixattack {

enum class AttackKind { LcaBinaryLinear, LcaMulticlass, Apgd, Arc };

enum class Ordering { DecreasingWeight, GivenOrder };

struct AttackSpec {
  AttackKind kind = AttackKind::LcaBinaryLinear;
  PgdConfig pgd;
  Ordering ordering = Ordering::DecreasingWeight;
  std::uint64_t seed = 0;
};

inline const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::LcaBinaryLinear: return "lca";
    case AttackKind::LcaMulticlass: return "lca_multiclass";
    case AttackKind::Apgd: return "apgd";
    case AttackKind::Arc: return "arc";
  }
  return "?";
}

// Visit order over classifier indices. Decreasing weight, stable on ties
// (lower index first).
inline std::vector<int> attack_order(const Vec& weights, Ordering ordering) {
  std::vector<int> idx(weights.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (ordering == Ordering::DecreasingWeight)
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return weights[a] > weights[b]; });
  return idx;
}

namespace detail {

// Linear view of a pool attack: row r of G is a unit-normalized margin
// gradient, and margins(delta) = offsets + G delta are the normalized
// margins. Raw margins are recovered through row_norms. Fooling the whole
// pool means making every raw margin strictly negative.
struct LinearPoolView {
  Eigen::MatrixXd G;
  Vec offsets;
  Vec row_norms;

  int rows() const { return static_cast<int>(G.rows()); }
  int dim() const { return static_cast<int>(G.cols()); }
  Vec margins(const Vec& delta) const { return offsets + G * delta; }

  // Mean reverse hinge of the normalized margins; unit rows make each term
  // 1-Lipschitz, which is what the step-count schedule assumes.
  double srh_value(const Vec& delta) const {
    Vec m = margins(delta);
    double s = 0.0;
    for (long r = 0; r < m.size(); ++r) s += reverse_hinge(m[r]);
    return s / static_cast<double>(m.size());
  }

  Vec srh_gradient(const Vec& delta) const {
    Vec m = margins(delta);
    Vec g = Vec::Zero(dim());
    for (long r = 0; r < m.size(); ++r)
      if (m[r] > 0.0) g += G.row(r).transpose();
    return g / static_cast<double>(m.size());
  }
};

// Margin rows for a pool of binary linear classifiers: the raw margin of
// classifier i at x + delta is y (theta_i . (x + delta) + b_i).
inline LinearPoolView build_pool_view(const Mixture<LinearClassifier>& mix,
                                      const LabeledPoint& point,
                                      IndexSet pool) {
  std::vector<int> rows = pool.to_indices();
  const int d = mix.dim();
  LinearPoolView v;
  v.G.resize(rows.size(), d);
  v.offsets.resize(rows.size());
  v.row_norms.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const LinearClassifier& h = mix.classifiers[rows[r]];
    Vec u = point.label > 0 ? h.theta : Vec(-h.theta);
    double bias = point.label > 0 ? h.bias : -h.bias;
    double n = u.norm();
    v.G.row(r) = (u / n).transpose();
    v.offsets[r] = (u.dot(point.x) + bias) / n;
    v.row_norms[r] = n;
  }
  return v;
}

// Margin rows for multiclass pools with fixed adversarial targets: the raw
// margin of (classifier i, target a) at x + delta is
// logit_y(x+delta) - logit_a(x+delta), affine for softmax-linear models.
inline LinearPoolView build_pool_view(
    const Mixture<SoftmaxLinearClassifier>& mix, const LabeledPoint& point,
    const std::vector<std::pair<int, int>>& rows) {
  const int d = mix.dim();
  LinearPoolView v;
  v.G.resize(rows.size(), d);
  v.offsets.resize(rows.size());
  v.row_norms.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const SoftmaxLinearClassifier& h = mix.classifiers[rows[r].first];
    int adv = rows[r].second;
    Vec u = (h.W.row(point.label) - h.W.row(adv)).transpose();
    double bias = h.c[point.label] - h.c[adv];
    double n = u.norm();
    if (n < 1e-300)
      throw NumericError("pool view: duplicate class rows");
    v.G.row(r) = (u / n).transpose();
    v.offsets[r] = (u.dot(point.x) + bias) / n;
    v.row_norms[r] = n;
  }
  return v;
}

struct StartPoint {
  Vec delta;
  bool pgd_eligible;
};

// Deterministic candidate starts for a pool attack, in priority order:
// the warm start (incumbent), any extra warm points (subset witnesses),
// zero, the deep point opposite the summed normals, per-row boundary
// crossings from the warm start, and exact pairwise corner points pushed
// into the feasible wedge (direct verification only). The corners matter
// when two rows are nearly opposed with unequal offsets: the wedge then
// lives in a thin lens near the ball boundary that neither the deep point
// nor coarse PGD steps can reach.
inline std::vector<StartPoint> assemble_starts(const LinearPoolView& view,
                                               const AttackBudget& budget,
                                               const Vec& warm,
                                               const std::vector<Vec>& extra) {
  std::vector<StartPoint> starts;
  auto add = [&](const Vec& cand, bool pgd) {
    Vec p = project_to_ball(cand, budget);
    for (const StartPoint& s : starts)
      if (s.delta.size() == p.size() && s.delta == p) return;
    starts.push_back({std::move(p), pgd});
  };

  add(warm, true);
  for (const Vec& e : extra) add(e, true);
  add(Vec::Zero(view.dim()), true);

  Vec g = view.G.colwise().sum().transpose();
  if (budget.norm == Norm::L2) {
    double n = g.norm();
    if (n > 1e-12) add(-(budget.epsilon / n) * g, true);
  } else {
    add(-budget.epsilon * g.array().sign().matrix(), true);
  }

  Vec warm_margins = view.margins(project_to_ball(warm, budget));
  for (int r = 0; r < view.rows(); ++r) {
    if (warm_margins[r] <= 0.0) continue;
    Vec row = view.G.row(r).transpose();
    if (budget.norm == Norm::L2) {
      add(project_to_ball(warm, budget) -
              (warm_margins[r] + 1e-3 * budget.epsilon) * row,
          true);
    } else {
      double n1 = row.lpNorm<1>();
      if (n1 < 1e-300) continue;
      add(project_to_ball(warm, budget) -
              (warm_margins[r] / n1 + 1e-3 * budget.epsilon) *
                  row.array().sign().matrix(),
          true);
    }
  }

  return starts;
}

// Exact pairwise corner points pushed into the feasible wedge, tried only
// when the primary starts fail (direct verification, no PGD). The corners
// matter when two rows are nearly opposed with unequal offsets: the wedge
// then lives in a thin lens near the ball boundary that neither the deep
// point nor coarse PGD steps can reach.
inline std::vector<StartPoint> corner_starts(const LinearPoolView& view,
                                             const AttackBudget& budget) {
  std::vector<StartPoint> starts;
  if (view.rows() > 32) return starts;
  auto add = [&](const Vec& cand) {
    Vec p = project_to_ball(cand, budget);
    for (const StartPoint& s : starts)
      if (s.delta == p) return;
    starts.push_back({std::move(p), false});
  };
  for (int a = 0; a < view.rows(); ++a) {
    for (int b = a + 1; b < view.rows(); ++b) {
      Vec ga = view.G.row(a).transpose();
      Vec gb = view.G.row(b).transpose();
      double c = ga.dot(gb);
      double det = 1.0 - c * c;
      if (det < 1e-12) continue;  // parallel rows share no corner
      // delta* = alpha ga + beta gb puts both margins exactly at zero.
      double alpha = (-view.offsets[a] + c * view.offsets[b]) / det;
      double beta = (-view.offsets[b] + c * view.offsets[a]) / det;
      Vec corner = alpha * ga + beta * gb;
      add(corner);
      double room = budget.epsilon - ball_norm(corner, budget.norm);
      if (room <= 0.0) continue;
      Vec s = ga + gb;
      double sn = s.norm();
      if (sn < 1e-12) continue;
      // Walk off the corner into the wedge; both margins decrease along
      // -(ga + gb) while the ball constraint keeps holding by room.
      for (double f : {0.9, 0.5, 0.1, 0.01})
        add(corner - (f * room / sn) * s);
    }
  }
  return starts;
}

struct PoolAttackResult {
  bool ok = false;
  Vec delta;
  double residual = 0.0;  // best mean reverse hinge seen (0 when ok)
  long iterations = 0;
};

constexpr double kStrictMargin = -1e-9;

// Finds a point in the budget ball where every raw margin of the view is
// strictly negative (< -1e-9), or reports the best effort. Strategy:
// directly verify each start, then run PGD from each PGD-eligible start and
// verify its best iterate. Boundary-sitting iterates (all margins <= 0 but
// some within 1e-9 of zero) are nudged along the negative gradient of the
// active rows and re-verified. First verified point wins, so the result is
// deterministic for fixed seeds.
inline PoolAttackResult attack_pool_strict(const LinearPoolView& view,
                                           const AttackBudget& budget,
                                           const PgdConfig& cfg,
                                           const Vec& warm,
                                           const std::vector<Vec>& extra_warm,
                                           std::uint64_t seed) {
  PoolAttackResult res;
  res.delta = project_to_ball(warm, budget);
  res.residual = view.srh_value(res.delta);

  auto strictly_ok = [&](const Vec& delta) {
    if (ball_norm(delta, budget.norm) > budget.epsilon + 1e-9) return false;
    Vec m = view.margins(delta);
    for (int r = 0; r < view.rows(); ++r)
      if (m[r] * view.row_norms[r] >= kStrictMargin) return false;
    return true;
  };

  auto track_best = [&](const Vec& delta) {
    double v = view.srh_value(delta);
    if (v < res.residual) {
      res.residual = v;
      res.delta = delta;
    }
  };

  // Rescue points that converged onto the boundary of the intersection.
  auto nudged = [&](const Vec& delta) -> std::optional<Vec> {
    Vec m = view.margins(delta);
    Vec g = Vec::Zero(view.dim());
    for (int r = 0; r < view.rows(); ++r) {
      if (m[r] > 1e-9) return std::nullopt;  // genuinely unsolved row
      if (m[r] * view.row_norms[r] >= kStrictMargin)
        g += view.G.row(r).transpose();
    }
    double n = g.norm();
    if (n < 1e-300) return std::nullopt;
    for (double step : {1e-7, 1e-6, 1e-5}) {
      Vec cand = project_to_ball(delta - (step / n) * g, budget);
      if (strictly_ok(cand)) return cand;
    }
    return std::nullopt;
  };

  // Newton-style projection onto the intersection of the active rows'
  // boundaries: the minimum-norm correction D with G_A (delta + D) pushed
  // to a small negative slack. Resolves multi-row corners that single-row
  // nudges and coarse PGD steps cannot hit.
  const double polish_slack = std::max(1e-9, 1e-7 * budget.epsilon);
  auto polished = [&](Vec delta) -> std::optional<Vec> {
    for (int iter = 0; iter < 8; ++iter) {
      Vec m = view.margins(delta);
      std::vector<int> active;
      for (int r = 0; r < view.rows(); ++r)
        if (m[r] * view.row_norms[r] >= kStrictMargin) active.push_back(r);
      if (active.empty()) return std::nullopt;  // strictness failed elsewhere
      const int a = static_cast<int>(active.size());
      Eigen::MatrixXd ga(a, view.dim());
      Vec rhs(a);
      for (int i = 0; i < a; ++i) {
        ga.row(i) = view.G.row(active[i]);
        rhs[i] = -polish_slack - m[active[i]];
      }
      Eigen::MatrixXd gram = ga * ga.transpose();
      gram.diagonal().array() += 1e-12;
      Vec coef = gram.ldlt().solve(rhs);
      Vec step = ga.transpose() * coef;
      if (!step.allFinite()) return std::nullopt;
      if (step.norm() > 4.0 * budget.epsilon) return std::nullopt;
      delta = project_to_ball(delta + step, budget);
      if (strictly_ok(delta)) return delta;
      track_best(delta);
    }
    return std::nullopt;
  };

  auto finalize = [&](const Vec& delta) -> bool {
    if (strictly_ok(delta)) {
      res.ok = true;
      res.delta = delta;
      res.residual = 0.0;
      return true;
    }
    if (auto fixed = nudged(delta)) {
      res.ok = true;
      res.delta = *fixed;
      res.residual = 0.0;
      return true;
    }
    if (auto fixed = polished(delta)) {
      res.ok = true;
      res.delta = *fixed;
      res.residual = 0.0;
      return true;
    }
    track_best(delta);
    return false;
  };

  std::vector<StartPoint> starts =
      assemble_starts(view, budget, warm, extra_warm);

  for (const StartPoint& s : starts)
    if (finalize(s.delta)) return res;

  // Corner candidates are only worth assembling once the cheap starts fail.
  for (const StartPoint& s : corner_starts(view, budget))
    if (finalize(s.delta)) return res;

  auto objective = [&](const Vec& d) { return view.srh_value(d); };
  auto gradient = [&](const Vec& d) { return view.srh_gradient(d); };

  std::uint64_t run = 0;
  for (const StartPoint& s : starts) {
    if (!s.pgd_eligible) continue;
    PgdResult pgd = pgd_minimize(objective, gradient, budget, cfg, s.delta,
                                 derive_seed(seed, run++));
    res.iterations += pgd.iterations;
    if (finalize(pgd.best_delta)) return res;
  }
  return res;
}

}  // namespace detail

// Lattice climbing attack for binary linear mixtures. Guarantees (up to the
// inner attack's verification, which is exact here): every join is certified
// by a strictly-fooling point, so the pool only grows along feasible
// regions, and the final fooled set cannot be extended by any classifier
// visited after its own join was refuted.
inline AttackOutcome lca_binary_linear(const Mixture<LinearClassifier>& mix,
                                       const LabeledPoint& point,
                                       const AttackBudget& budget,
                                       const AttackSpec& spec) {
  detail::check_instance(mix, point);
  check_binary_label(point.label);
  const Vec zero = Vec::Zero(mix.dim());

  IndexSet natural = fooled_set(mix, point, zero);
  if (!natural.empty())
    return {zero, natural, mixture_weight_of(mix, natural), 0, {}};

  AttackOutcome out;
  out.delta = zero;
  std::vector<int> order = attack_order(mix.weights, spec.ordering);

  IndexSet pool;
  int step = 0;
  for (int k : order) {
    IndexSet cand = pool.with(k);
    detail::LinearPoolView view = detail::build_pool_view(mix, point, cand);
    detail::PoolAttackResult r = detail::attack_pool_strict(
        view, budget, spec.pgd, out.delta, {},
        derive_seed(spec.seed, static_cast<std::uint64_t>(step)));
    out.iterations_used += r.iterations;
    if (r.ok) {
      pool = cand;
      out.delta = r.delta;
    }
    out.trace.push_back({step, k, r.ok, pool, r.ok ? 0.0 : r.residual,
                         zero_one_loss(mix, point, out.delta)});
    ++step;
  }

  out.fooled = fooled_set(mix, point, out.delta);
  out.score = mixture_weight_of(mix, out.fooled);
  return out;
}

namespace detail {

// Inner pool attack for multiclass classifiers with fixed targets.
// Softmax-linear pools reduce to the exact linear machinery; other models
// get plain PGD from the warm start plus strict verification of the raw
// margins and the same boundary nudge.
template <MulticlassClassifier C>
PoolAttackResult attack_multiclass_pool(
    const Mixture<C>& mix, const LabeledPoint& point,
    const AttackBudget& budget, const PgdConfig& cfg,
    const std::vector<std::pair<int, int>>& rows, const Vec& warm,
    std::uint64_t seed) {
  if constexpr (std::is_same_v<C, SoftmaxLinearClassifier>) {
    LinearPoolView view = build_pool_view(mix, point, rows);
    return attack_pool_strict(view, budget, cfg, warm, {}, seed);
  } else {
    const int y = point.label;
    auto margins_at = [&](const Vec& delta) {
      Vec m(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        Vec l = mix.classifiers[rows[r].first].logits(point.x + delta);
        m[r] = l[y] - l[rows[r].second];
      }
      return m;
    };
    auto objective = [&](const Vec& delta) {
      Vec m = margins_at(delta);
      double s = 0.0;
      for (long r = 0; r < m.size(); ++r) s += reverse_hinge(m[r]);
      return s / static_cast<double>(m.size());
    };
    auto gradient = [&](const Vec& delta) {
      Vec m = margins_at(delta);
      Vec g = Vec::Zero(point.x.size());
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (m[r] > 0.0)
          g += mix.classifiers[rows[r].first].raw_margin_gradient(
              point.x + delta, y, rows[r].second);
      return Vec(g / static_cast<double>(rows.size()));
    };

    auto strictly_ok = [&](const Vec& delta) {
      if (ball_norm(delta, budget.norm) > budget.epsilon + 1e-9) return false;
      Vec m = margins_at(delta);
      return (m.array() < kStrictMargin).all();
    };

    PoolAttackResult res;
    res.delta = project_to_ball(warm, budget);
    res.residual = objective(res.delta);
    if (strictly_ok(res.delta)) {
      res.ok = true;
      res.residual = 0.0;
      return res;
    }

    PgdResult pgd =
        pgd_minimize(objective, gradient, budget, cfg, res.delta, seed);
    res.iterations = pgd.iterations;
    Vec d = pgd.best_delta;
    if (strictly_ok(d)) {
      res.ok = true;
      res.delta = d;
      res.residual = 0.0;
      return res;
    }
    // Boundary nudge with the live (raw) gradient of the active rows.
    Vec m = margins_at(d);
    if ((m.array() <= 1e-9).all()) {
      Vec g = Vec::Zero(point.x.size());
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (m[r] >= kStrictMargin)
          g += mix.classifiers[rows[r].first].raw_margin_gradient(
              point.x + d, y, rows[r].second);
      double n = g.norm();
      if (n >= 1e-300) {
        for (double step : {1e-7, 1e-6, 1e-5}) {
          Vec cand = project_to_ball(d - (step / n) * g, budget);
          if (strictly_ok(cand)) {
            res.ok = true;
            res.delta = cand;
            res.residual = 0.0;
            return res;
          }
        }
      }
    }
    if (pgd.best_value < res.residual) {
      res.residual = pgd.best_value;
      res.delta = d;
    }
    return res;
  }
}

}  // namespace detail

// Lattice climbing for multiclass mixtures. The pool is recomputed as the
// exact fooled set before every step, adversarial targets are re-selected at
// the current point, and a candidate perturbation replaces the incumbent
// only when the mixture 0-1 loss strictly improves.
template <MulticlassClassifier C>
AttackOutcome lca_multiclass(const Mixture<C>& mix, const LabeledPoint& point,
                             const AttackBudget& budget,
                             const AttackSpec& spec) {
  detail::check_instance(mix, point);
  check_class_label(mix.classifiers.front(), point.label);
  const Vec zero = Vec::Zero(mix.dim());

  IndexSet natural = fooled_set(mix, point, zero);
  if (!natural.empty())
    return {zero, natural, mixture_weight_of(mix, natural), 0, {}};

  AttackOutcome out;
  out.delta = zero;
  double score = 0.0;
  std::vector<int> order = attack_order(mix.weights, spec.ordering);

  int step = 0;
  for (int k : order) {
    IndexSet pool = fooled_set(mix, point, out.delta);
    IndexSet cand = pool.with(k);

    std::vector<std::pair<int, int>> rows;
    for (int i : cand.to_indices())
      rows.push_back(
          {i, select_target(mix.classifiers[i], point.x + out.delta,
                            point.label)});

    detail::PoolAttackResult r = detail::attack_multiclass_pool(
        mix, point, budget, spec.pgd, rows, out.delta,
        derive_seed(spec.seed, static_cast<std::uint64_t>(step)));
    out.iterations_used += r.iterations;

    double cand_score = zero_one_loss(mix, point, r.delta);
    bool accepted = cand_score > score;
    if (accepted) {
      out.delta = r.delta;
      score = cand_score;
    }
    out.trace.push_back({step, k, accepted, fooled_set(mix, point, out.delta),
                         r.ok ? 0.0 : r.residual, score});
    ++step;
  }

  out.fooled = fooled_set(mix, point, out.delta);
  out.score = mixture_weight_of(mix, out.fooled);
  return out;
}

namespace detail {

template <class C, class SurrogateFn, class GradFn>
AttackOutcome apgd_impl(const Mixture<C>& mix, const LabeledPoint& point,
                        const AttackBudget& budget, const AttackSpec& spec,
                        const SurrogateFn& surrogate, const GradFn& grad) {
  const Vec zero = Vec::Zero(mix.dim());
  IndexSet natural = fooled_set(mix, point, zero);
  if (!natural.empty())
    return {zero, natural, mixture_weight_of(mix, natural), 0, {}};

  PgdConfig cfg = spec.pgd;
  cfg.early_exit = false;  // the surrogate is signed
  PgdResult r = pgd_minimize(surrogate, grad, budget, cfg, zero, spec.seed);

  AttackOutcome out;
  out.delta = r.best_delta;
  out.fooled = fooled_set(mix, point, out.delta);
  out.score = mixture_weight_of(mix, out.fooled);
  out.iterations_used = r.iterations;
  return out;
}

}  // namespace detail

// Averaged-surrogate PGD baseline: descends sum_i q_i s_i(x + delta) where
// s_i is classifier i's margin-style score, and returns the outcome at the
// best surrogate iterate across restarts.
inline AttackOutcome apgd(const Mixture<LinearClassifier>& mix,
                          const LabeledPoint& point,
                          const AttackBudget& budget, const AttackSpec& spec) {
  detail::check_instance(mix, point);
  check_binary_label(point.label);
  // sum_i q_i y f_i is affine: precompute its weight vector and offset.
  Vec w = Vec::Zero(mix.dim());
  double b = 0.0;
  for (int i = 0; i < mix.size(); ++i) {
    w += mix.weights[i] * mix.classifiers[i].theta;
    b += mix.weights[i] * mix.classifiers[i].bias;
  }
  const double y = point.label;
  auto surrogate = [&, y](const Vec& delta) {
    return y * (w.dot(point.x + delta) + b);
  };
  auto grad = [&, y](const Vec&) { return Vec(y * w); };
  return detail::apgd_impl(mix, point, budget, spec, surrogate, grad);
}

template <MulticlassClassifier C>
AttackOutcome apgd(const Mixture<C>& mix, const LabeledPoint& point,
                   const AttackBudget& budget, const AttackSpec& spec) {
  detail::check_instance(mix, point);
  check_class_label(mix.classifiers.front(), point.label);
  const int y = point.label;
  auto surrogate = [&](const Vec& delta) {
    double s = 0.0;
    for (int i = 0; i < mix.size(); ++i) {
      Vec l = mix.classifiers[i].logits(point.x + delta);
      int adv = select_target(mix.classifiers[i], point.x + delta, y);
      s += mix.weights[i] * (l[y] - l[adv]);
    }
    return s;
  };
  auto grad = [&](const Vec& delta) {
    Vec g = Vec::Zero(mix.dim());
    for (int i = 0; i < mix.size(); ++i) {
      int adv = select_target(mix.classifiers[i], point.x + delta, y);
      g += mix.weights[i] *
           mix.classifiers[i].raw_margin_gradient(point.x + delta, y, adv);
    }
    return g;
  };
  return detail::apgd_impl(mix, point, budget, spec, surrogate, grad);
}

namespace detail {

// Monotone greedy acceptance shared by both ARC variants: the candidate has
// to keep every currently fooled classifier fooled and either raise the
// score or tie it while actually fooling the targeted classifier. Dropping
// an already-fooled classifier is never allowed, even for a heavier set of
// accidental riders: the straight-line crossing step has no mechanism to
// deliberately re-fool what it abandons, so traded-away weight is gone for
// the rest of the pass. Plain ties-accept would also let zero-progress moves
// drift the perturbation and derail later crossing steps.
inline bool arc_accept(IndexSet cand_fooled, double cand_score,
                       IndexSet cur_fooled, double cur_score, int target) {
  if (!cur_fooled.subset_of(cand_fooled)) return false;
  if (cand_score > cur_score) return true;
  return cand_score == cur_score && cand_fooled.contains(target);
}

}  // namespace detail

// Greedy boundary-crossing baseline: one pass over the classifiers in visit
// order; each not-yet-fooled classifier gets a single linearized crossing
// step (exact for linear models), projected back into the ball, accepted
// under the monotone greedy rule. Uses exactly one margin computation per
// classifier for binary linear mixtures.
inline AttackOutcome arc(const Mixture<LinearClassifier>& mix,
                         const LabeledPoint& point, const AttackBudget& budget,
                         const AttackSpec& spec) {
  detail::check_instance(mix, point);
  check_binary_label(point.label);
  const Vec zero = Vec::Zero(mix.dim());

  IndexSet natural = fooled_set(mix, point, zero);
  if (!natural.empty())
    return {zero, natural, mixture_weight_of(mix, natural), 0, {}};

  AttackOutcome out;
  out.delta = zero;
  double score = 0.0;
  IndexSet cur;  // fooled set at out.delta, maintained across steps
  std::vector<int> order = attack_order(mix.weights, spec.ordering);

  int step = 0;
  for (int k : order) {
    ++out.iterations_used;  // one margin computation per classifier
    const LinearClassifier& h = mix.classifiers[k];
    Vec shifted = point.x + out.delta;
    double f = h.decision(shifted);
    bool accepted = false;
    if ((f >= 0.0 ? 1 : -1) == point.label) {
      // Crossing step derived from the single margin evaluation above.
      double m = point.label * f;
      Vec dir;
      double dist;
      if (budget.norm == Norm::L2) {
        double n = h.theta.norm();
        dist = m / n;
        dir = -(point.label / n) * h.theta;
      } else {
        double n1 = h.theta.lpNorm<1>();
        dist = m / n1;
        dir = -point.label * h.theta.array().sign().matrix();
      }
      Vec cand =
          project_to_ball(out.delta + (dist + 1e-6) * dir, budget);
      IndexSet cand_fooled = fooled_set(mix, point, cand);
      double cand_score = mixture_weight_of(mix, cand_fooled);
      if (detail::arc_accept(cand_fooled, cand_score, cur, score, k)) {
        out.delta = cand;
        score = cand_score;
        cur = cand_fooled;
        accepted = true;
      }
    }
    out.trace.push_back({step, k, accepted, cur, 0.0, score});
    ++step;
  }

  out.fooled = fooled_set(mix, point, out.delta);
  out.score = mixture_weight_of(mix, out.fooled);
  return out;
}

// Multiclass ARC: the crossing step is linearized at the current point; for
// each wrong class the distance to the linearized boundary is computed in
// the budget norm and the nearest one is taken.
template <MulticlassClassifier C>
AttackOutcome arc(const Mixture<C>& mix, const LabeledPoint& point,
                  const AttackBudget& budget, const AttackSpec& spec) {
  detail::check_instance(mix, point);
  check_class_label(mix.classifiers.front(), point.label);
  const Vec zero = Vec::Zero(mix.dim());
  const int y = point.label;

  IndexSet natural = fooled_set(mix, point, zero);
  if (!natural.empty())
    return {zero, natural, mixture_weight_of(mix, natural), 0, {}};

  AttackOutcome out;
  out.delta = zero;
  double score = 0.0;
  IndexSet cur;  // fooled set at out.delta, maintained across steps
  std::vector<int> order = attack_order(mix.weights, spec.ordering);

  int step = 0;
  for (int k : order) {
    ++out.iterations_used;
    Vec shifted = point.x + out.delta;
    const C& h = mix.classifiers[k];
    bool accepted = false;
    if (!misclassifies(h, shifted, y)) {
      Vec l = h.logits(shifted);
      double best_dist = -1.0;
      Vec best_dir;
      for (int j = 0; j < h.num_classes(); ++j) {
        if (j == y) continue;
        Vec g = h.raw_margin_gradient(shifted, j, y);  // grad of l_j - l_y
        double gap = l[y] - l[j];                      // > 0 here
        double dist, n;
        Vec dir;
        if (budget.norm == Norm::L2) {
          n = g.norm();
          if (n < 1e-300) continue;
          dist = gap / n;
          dir = g / n;
        } else {
          n = g.lpNorm<1>();
          if (n < 1e-300) continue;
          dist = gap / n;
          dir = g.array().sign().matrix();
        }
        if (best_dist < 0.0 || dist < best_dist) {
          best_dist = dist;
          best_dir = dir;
        }
      }
      if (best_dist >= 0.0) {
        Vec cand = project_to_ball(
            out.delta + (best_dist + 1e-6) * best_dir, budget);
        IndexSet cand_fooled = fooled_set(mix, point, cand);
        double cand_score = mixture_weight_of(mix, cand_fooled);
        if (detail::arc_accept(cand_fooled, cand_score, cur, score, k)) {
          out.delta = cand;
          score = cand_score;
          cur = cand_fooled;
          accepted = true;
        }
      }
    }
    out.trace.push_back({step, k, accepted, cur, 0.0, score});
    ++step;
  }

  out.fooled = fooled_set(mix, point, out.delta);
  out.score = mixture_weight_of(mix, out.fooled);
  return out;
}

// Ready-made specs matching the defaults used throughout the experiments.

inline AttackSpec make_lca_spec(int m, const AttackBudget& budget,
                                std::uint64_t seed = 0) {
  return {AttackKind::LcaBinaryLinear, lemma1_params(m, budget),
          Ordering::DecreasingWeight, seed};
}

inline AttackSpec make_lca_multiclass_spec(int m, const AttackBudget& budget,
                                           std::uint64_t seed = 0) {
  return {AttackKind::LcaMulticlass, lemma1_params(m, budget),
          Ordering::DecreasingWeight, seed};
}

inline AttackSpec make_apgd_spec(const AttackBudget& budget,
                                 std::uint64_t seed = 0) {
  PgdConfig cfg;
  cfg.steps = 100;
  cfg.step_size = budget.epsilon / 4.0;
  cfg.rule =
      budget.norm == Norm::L2 ? StepRule::NormalizedL2 : StepRule::SignLinf;
  cfg.momentum = 0.9;
  cfg.restarts = 5;
  cfg.random_init = true;
  cfg.halve_at = 0.9;
  cfg.early_exit = false;
  return {AttackKind::Apgd, cfg, Ordering::DecreasingWeight, seed};
}

inline AttackSpec make_arc_spec(std::uint64_t seed = 0) {
  PgdConfig cfg;  // ARC never runs PGD; keep a valid placeholder
  cfg.steps = 1;
  cfg.step_size = 1.0;
  return {AttackKind::Arc, cfg, Ordering::DecreasingWeight, seed};
}

inline AttackOutcome run_attack(const Mixture<LinearClassifier>& mix,
                                const LabeledPoint& point,
                                const AttackBudget& budget,
                                const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::LcaBinaryLinear:
      return lca_binary_linear(mix, point, budget, spec);
    case AttackKind::Apgd:
      return apgd(mix, point, budget, spec);
    case AttackKind::Arc:
      return arc(mix, point, budget, spec);
    case AttackKind::LcaMulticlass:
      throw ContractViolation("multiclass attack on a binary mixture");
  }
  throw ContractViolation("unknown attack kind");
}

template <MulticlassClassifier C>
AttackOutcome run_attack(const Mixture<C>& mix, const LabeledPoint& point,
                         const AttackBudget& budget, const AttackSpec& spec) {
  switch (spec.kind) {
    case AttackKind::LcaMulticlass:
      return lca_multiclass(mix, point, budget, spec);
    case AttackKind::Apgd:
      return apgd(mix, point, budget, spec);
    case AttackKind::Arc:
      return arc(mix, point, budget, spec);
    case AttackKind::LcaBinaryLinear:
      throw ContractViolation("binary attack on a multiclass mixture");
  }
  throw ContractViolation("unknown attack kind");
}

}  // namespace mixattack
