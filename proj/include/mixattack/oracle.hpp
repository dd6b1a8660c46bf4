#pragma once

// Brute-force vulnerability lattice: for every subset I of classifiers,
// decide whether some in-budget perturbation fools exactly-at-least I
// (all raw margins strictly negative), and from the full table derive the
// maximal vulnerable regions and the best achievable mixture 0-1 loss.
// Feasibility claims always come with a verified witness point; regions
// whose fooling set has no strictly-interior point are reported infeasible.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixattack/attacks.hpp"
#include "mixattack/core.hpp"
#include "mixattack/diff.hpp"
#include "mixattack/optim.hpp"

namespace mixattack {

namespace detail {

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ULL;

  void byte(unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>(v >> (8 * i)));
  }
  void i64(long long v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    u64(bits);
  }
  void vec(const Vec& v) {
    i64(v.size());
    for (long i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void mat(const Eigen::MatrixXd& m) {
    i64(m.rows());
    i64(m.cols());
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
};

inline void hash_classifier(Fnv1a& f, const LinearClassifier& h) {
  f.byte('L');
  f.vec(h.theta);
  f.f64(h.bias);
}

inline void hash_classifier(Fnv1a& f, const SoftmaxLinearClassifier& h) {
  f.byte('S');
  f.mat(h.W);
  f.vec(h.c);
}

inline void hash_classifier(Fnv1a& f, const MlpClassifier& h) {
  f.byte('M');
  f.mat(h.W1);
  f.vec(h.b1);
  f.mat(h.W2);
  f.vec(h.b2);
}

}  // namespace detail

// Order- and content-sensitive hash of (mixture, point, budget); reports
// carry it so a certification can prove it is being read against the same
// instance it was computed for.
template <class C>
std::uint64_t instance_fingerprint(const Mixture<C>& mix,
                                   const LabeledPoint& point,
                                   const AttackBudget& budget) {
  detail::Fnv1a f;
  f.i64(mix.size());
  f.i64(mix.dim());
  for (const C& h : mix.classifiers) detail::hash_classifier(f, h);
  f.vec(mix.weights);
  f.vec(point.x);
  f.i64(point.label);
  f.byte(budget.norm == Norm::L2 ? '2' : 'i');
  f.f64(budget.epsilon);
  return f.h;
}

struct RegionStatus {
  IndexSet indices;
  bool feasible = false;
  std::optional<Vec> witness;  // absolute point x + delta, when feasible
};

namespace detail {

#ifdef MIXATTACK_MEMBERSHIP_GRID_CROSSCHECK
// Dense scan of the budget ball at resolution eps/1000, d <= 2 only.
// Returns a strictly fooling point for the region if the grid finds one.
inline std::optional<Vec> grid_search_region(
    const Mixture<LinearClassifier>& mix, const LabeledPoint& point,
    const AttackBudget& budget, IndexSet region) {
  const int d = mix.dim();
  if (d > 2) return std::nullopt;
  const double eps = budget.epsilon;
  const double h = eps / 1000.0;
  std::vector<int> idx = region.to_indices();
  auto strict_at = [&](const Vec& delta) {
    for (int i : idx)
      if (binary_margin(mix.classifiers[i], point.x + delta, point.label) >=
          -1e-9)
        return false;
    return true;
  };
  if (d == 1) {
    for (int a = -1000; a <= 1000; ++a) {
      Vec delta(1);
      delta[0] = a * h;
      if (strict_at(delta)) return delta;
    }
    return std::nullopt;
  }
  for (int a = -1000; a <= 1000; ++a) {
    for (int b = -1000; b <= 1000; ++b) {
      Vec delta(2);
      delta[0] = a * h;
      delta[1] = b * h;
      if (budget.norm == Norm::L2 && delta.norm() > eps) continue;
      if (strict_at(delta)) return delta;
    }
  }
  return std::nullopt;
}
#endif

constexpr std::uint64_t kOracleSeedBase = 0x0C1A55F1EDFACADEULL;

}  // namespace detail

// Decides feasibility of one region of the vulnerability lattice for a
// binary linear mixture. Warm-start deltas (e.g. witnesses of subsets) may
// be supplied; the verdict is deterministic regardless.
inline RegionStatus membership(const Mixture<LinearClassifier>& mix,
                               const LabeledPoint& point,
                               const AttackBudget& budget, IndexSet region,
                               const std::vector<Vec>& warm_deltas = {}) {
  detail::check_instance(mix, point);
  check_binary_label(point.label);
  RegionStatus st;
  st.indices = region;
  if (region.empty()) {
    st.feasible = true;
    st.witness = point.x;
    return st;
  }
  for (int i : region.to_indices())
    if (i >= mix.size())
      throw ContractViolation("membership: region index out of range");

  detail::LinearPoolView view = detail::build_pool_view(mix, point, region);
  PgdConfig cfg = lemma1_params(mix.size(), budget);
  detail::PoolAttackResult r = detail::attack_pool_strict(
      view, budget, cfg, Vec::Zero(mix.dim()), warm_deltas,
      derive_seed(detail::kOracleSeedBase, region.mask()));
  if (r.ok) {
    st.feasible = true;
    st.witness = point.x + r.delta;
  }

#ifdef MIXATTACK_MEMBERSHIP_GRID_CROSSCHECK
  if (!st.feasible && mix.dim() <= 2) {
    if (auto delta = detail::grid_search_region(mix, point, budget, region))
      throw NumericError("membership: grid found a point for region " +
                         region.to_string() + " that the attack missed");
  }
#endif
  return st;
}

struct LatticeReport {
  int m = 0;
  AttackBudget budget;
  std::vector<RegionStatus> statuses;  // indexed by region mask, size 2^m
  std::vector<IndexSet> maximal_regions;
  double optimal_score = 0.0;
  std::optional<Vec> optimal_witness;  // absolute point
  std::uint64_t fingerprint = 0;
  bool oracle_grade = true;
};

namespace detail {

// Shared scaffolding for the full-lattice walk: masks visited in
// (cardinality, ascending mask) order, infeasible-subset pruning (downward
// closure), warm starts from feasible immediate subsets, then maximal
// regions and the optimum off the finished table.
template <class C, class MembershipFn>
LatticeReport enumerate_lattice_impl(const Mixture<C>& mix,
                                     const LabeledPoint& point,
                                     const AttackBudget& budget, int max_m,
                                     const MembershipFn& decide) {
  detail::check_instance(mix, point);
  const int m = mix.size();
  if (max_m < 1) throw ContractViolation("enumerate_lattice: max_m < 1");
  if (m > max_m)
    throw SizeCapError("enumerate_lattice: mixture size " + std::to_string(m) +
                       " exceeds cap " + std::to_string(max_m));

  LatticeReport rep;
  rep.m = m;
  rep.budget = budget;
  rep.fingerprint = instance_fingerprint(mix, point, budget);
  const std::uint64_t n_masks = 1ULL << m;
  rep.statuses.resize(n_masks);

  for (int card = 0; card <= m; ++card) {
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
      if (__builtin_popcountll(mask) != card) continue;
      IndexSet region = IndexSet::from_mask(mask);
      if (card == 0) {
        rep.statuses[mask] = {region, true, point.x};
        continue;
      }
      bool pruned = false;
      std::vector<Vec> warms;
      for (int i : region.to_indices()) {
        const RegionStatus& parent = rep.statuses[mask & ~(1ULL << i)];
        if (!parent.feasible) {
          pruned = true;
          break;
        }
        if (parent.witness && card > 1)
          warms.push_back(*parent.witness - point.x);
      }
      if (pruned) {
        rep.statuses[mask] = {region, false, std::nullopt};
        continue;
      }
      rep.statuses[mask] = decide(region, warms);
    }
  }

  for (std::uint64_t mask = 1; mask < n_masks; ++mask) {
    if (!rep.statuses[mask].feasible) continue;
    bool maximal = true;
    for (int j = 0; j < m && maximal; ++j)
      if (!(mask & (1ULL << j)) && rep.statuses[mask | (1ULL << j)].feasible)
        maximal = false;
    if (maximal)
      rep.maximal_regions.push_back(IndexSet::from_mask(mask));
  }
  std::stable_sort(rep.maximal_regions.begin(), rep.maximal_regions.end(),
                   [](IndexSet a, IndexSet b) {
                     if (a.size() != b.size()) return a.size() < b.size();
                     return a.mask() < b.mask();
                   });

  rep.optimal_score = 0.0;
  rep.optimal_witness = point.x;
  for (int card = 0; card <= m; ++card) {
    for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
      if (__builtin_popcountll(mask) != card) continue;
      const RegionStatus& st = rep.statuses[mask];
      if (!st.feasible) continue;
      double w = mixture_weight_of(mix, st.indices);
      if (w > rep.optimal_score) {
        rep.optimal_score = w;
        rep.optimal_witness = st.witness;
      }
    }
  }
  return rep;
}

}  // namespace detail

// Full vulnerability lattice of a binary linear mixture. Throws SizeCapError
// beyond max_m classifiers (the table has 2^m entries).
inline LatticeReport enumerate_lattice(const Mixture<LinearClassifier>& mix,
                                       const LabeledPoint& point,
                                       const AttackBudget& budget,
                                       int max_m = 16) {
  return detail::enumerate_lattice_impl(
      mix, point, budget, max_m,
      [&](IndexSet region, const std::vector<Vec>& warms) {
        return membership(mix, point, budget, region, warms);
      });
}

// Best-effort multiclass region test: adversarial targets are fixed by
// select_target at each warm point before its PGD run, and any verified
// strict witness proves feasibility. A miss is not a proof of infeasibility,
// hence reports from this path are flagged not oracle grade.
template <MulticlassClassifier C>
RegionStatus membership(const Mixture<C>& mix, const LabeledPoint& point,
                        const AttackBudget& budget, IndexSet region,
                        const std::vector<Vec>& warm_deltas = {}) {
  detail::check_instance(mix, point);
  check_class_label(mix.classifiers.front(), point.label);
  RegionStatus st;
  st.indices = region;
  if (region.empty()) {
    st.feasible = true;
    st.witness = point.x;
    return st;
  }
  for (int i : region.to_indices())
    if (i >= mix.size())
      throw ContractViolation("membership: region index out of range");

  PgdConfig cfg = lemma1_params(mix.size(), budget);
  std::vector<Vec> warms;
  warms.push_back(Vec::Zero(mix.dim()));
  for (const Vec& w : warm_deltas) warms.push_back(w);

  std::uint64_t run = 0;
  for (const Vec& warm : warms) {
    std::vector<std::pair<int, int>> rows;
    for (int i : region.to_indices())
      rows.push_back({i, select_target(mix.classifiers[i], point.x + warm,
                                       point.label)});
    detail::PoolAttackResult r = detail::attack_multiclass_pool(
        mix, point, budget, cfg, rows, warm,
        derive_seed(derive_seed(detail::kOracleSeedBase, region.mask()),
                    run++));
    if (r.ok) {
      st.feasible = true;
      st.witness = point.x + r.delta;
      return st;
    }
  }
  return st;
}

template <MulticlassClassifier C>
LatticeReport enumerate_lattice(const Mixture<C>& mix,
                                const LabeledPoint& point,
                                const AttackBudget& budget, int max_m = 16) {
  LatticeReport rep = detail::enumerate_lattice_impl(
      mix, point, budget, max_m,
      [&](IndexSet region, const std::vector<Vec>& warms) {
        return membership(mix, point, budget, region, warms);
      });
  rep.oracle_grade = false;
  return rep;
}

struct Certification {
  bool effective = false;
  std::optional<bool> maximal;  // set only for oracle-grade reports
  std::optional<bool> optimal;
};

// Grades an attack outcome against a finished lattice report for the same
// instance (fingerprints must match). Effective: fooled something whenever
// anything was foolable. Maximal: the fooled set is one of the maximal
// vulnerable regions (vacuously true when nothing is foolable). Optimal:
// the score matches the lattice optimum to 1e-12.
template <class C>
Certification certify(const Mixture<C>& mix, const LabeledPoint& point,
                      const AttackBudget& budget, const AttackOutcome& outcome,
                      const LatticeReport& report) {
  if (instance_fingerprint(mix, point, budget) != report.fingerprint)
    throw ContractViolation("certify: report is for a different instance");
  bool anything_foolable = !report.maximal_regions.empty();
  Certification cert;
  cert.effective = !anything_foolable || !outcome.fooled.empty();
  if (!report.oracle_grade) return cert;
  if (!anything_foolable) {
    cert.maximal = true;
  } else {
    bool found = false;
    for (IndexSet s : report.maximal_regions)
      if (s == outcome.fooled) found = true;
    cert.maximal = found;
  }
  cert.optimal = std::abs(outcome.score - report.optimal_score) <= 1e-12;
  return cert;
}

}  // namespace mixattack
