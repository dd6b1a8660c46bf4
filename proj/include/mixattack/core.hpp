#pragma once

// Core value types for randomized-mixture attacks: classifiers, mixtures,
// perturbation budgets, fooled sets, and the scalar losses everything else
// is built from. All types are immutable value types; all functions are
// pure. Indices are 0-based everywhere (code, traces, file formats).

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mixattack {

using Vec = Eigen::VectorXd;

// Caller passed arguments that violate a documented precondition.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite value showed up where the math guarantees finiteness.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Work refused because it would exceed a hard size cap (lattice enumeration).
struct SizeCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Norm { L2, Linf };

inline const char* norm_name(Norm n) { return n == Norm::L2 ? "l2" : "linf"; }

struct AttackBudget {
  Norm norm = Norm::L2;
  double epsilon = 0.0;

  AttackBudget() = default;
  AttackBudget(Norm n, double eps) : norm(n), epsilon(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps))
      throw ContractViolation("AttackBudget: epsilon must be finite and > 0");
  }
};

// A point with its true label: +1/-1 for binary classifiers, a 0-based
// class index for multiclass ones.
struct LabeledPoint {
  Vec x;
  int label = 0;
};

// Subset of classifier indices as a 64-bit mask.
class IndexSet {
 public:
  static constexpr int kMaxIndex = 63;

  IndexSet() = default;

  static IndexSet from_mask(std::uint64_t mask) {
    IndexSet s;
    s.bits_ = mask;
    return s;
  }

  static IndexSet single(int i) { return IndexSet().with(i); }

  static IndexSet from_indices(const std::vector<int>& idx) {
    IndexSet s;
    for (int i : idx) s = s.with(i);
    return s;
  }

  static IndexSet full(int m) {
    if (m < 0 || m > kMaxIndex + 1)
      throw ContractViolation("IndexSet::full: bad size");
    return m == 64 ? from_mask(~0ULL) : from_mask((1ULL << m) - 1);
  }

  bool contains(int i) const {
    check_index(i);
    return (bits_ >> i) & 1ULL;
  }

  IndexSet with(int i) const {
    check_index(i);
    return from_mask(bits_ | (1ULL << i));
  }

  IndexSet without(int i) const {
    check_index(i);
    return from_mask(bits_ & ~(1ULL << i));
  }

  int size() const { return __builtin_popcountll(bits_); }
  bool empty() const { return bits_ == 0; }
  bool subset_of(IndexSet o) const { return (bits_ & ~o.bits_) == 0; }
  std::uint64_t mask() const { return bits_; }

  std::vector<int> to_indices() const {
    std::vector<int> out;
    out.reserve(size());
    for (std::uint64_t b = bits_; b;) {
      int i = __builtin_ctzll(b);
      out.push_back(i);
      b &= b - 1;
    }
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int i : to_indices()) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
    return s + "}";
  }

  friend bool operator==(IndexSet a, IndexSet b) { return a.bits_ == b.bits_; }
  friend bool operator!=(IndexSet a, IndexSet b) { return a.bits_ != b.bits_; }
  friend bool operator<(IndexSet a, IndexSet b) { return a.bits_ < b.bits_; }

 private:
  static void check_index(int i) {
    if (i < 0 || i > kMaxIndex)
      throw ContractViolation("IndexSet: index out of range");
  }
  std::uint64_t bits_ = 0;
};

// Binary linear classifier f(x) = theta . x + bias, predicting
// sign(f) with f = 0 mapped to +1.
struct LinearClassifier {
  Vec theta;
  double bias = 0.0;

  LinearClassifier() = default;
  LinearClassifier(Vec t, double b) : theta(std::move(t)), bias(b) {
    if (theta.size() == 0)
      throw ContractViolation("LinearClassifier: empty theta");
    if (!theta.allFinite() || !std::isfinite(bias))
      throw ContractViolation("LinearClassifier: non-finite parameter");
    if (theta.isZero(0.0))
      throw ContractViolation("LinearClassifier: theta must be nonzero");
  }

  int input_dim() const { return static_cast<int>(theta.size()); }
  double decision(const Vec& x) const { return theta.dot(x) + bias; }
};

inline void check_binary_label(int y) {
  if (y != 1 && y != -1)
    throw ContractViolation("binary label must be +1 or -1");
}

inline int predicted_sign(const LinearClassifier& h, const Vec& x) {
  return h.decision(x) >= 0.0 ? 1 : -1;
}

inline bool misclassifies(const LinearClassifier& h, const Vec& x, int y) {
  check_binary_label(y);
  return predicted_sign(h, x) != y;
}

// y * f(x): positive iff correctly classified with positive margin.
inline double binary_margin(const LinearClassifier& h, const Vec& x, int y) {
  check_binary_label(y);
  return y * h.decision(x);
}

// Ordered classifiers plus simplex weights. Weights must sum to 1 within
// 1e-9 and are never renormalized.
template <class C>
struct Mixture {
  std::vector<C> classifiers;
  Vec weights;

  Mixture() = default;
  Mixture(std::vector<C> cs, Vec q)
      : classifiers(std::move(cs)), weights(std::move(q)) {
    if (classifiers.empty()) throw ContractViolation("Mixture: no classifiers");
    if (weights.size() != static_cast<long>(classifiers.size()))
      throw ContractViolation("Mixture: weight count != classifier count");
    if (!weights.allFinite())
      throw ContractViolation("Mixture: non-finite weight");
    double sum = 0.0;
    for (long i = 0; i < weights.size(); ++i) {
      if (weights[i] < 0.0)
        throw ContractViolation("Mixture: negative weight");
      sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ContractViolation("Mixture: weights must sum to 1 within 1e-9");
    int d = classifiers.front().input_dim();
    for (const C& c : classifiers)
      if (c.input_dim() != d)
        throw ContractViolation("Mixture: inconsistent input dims");
    if constexpr (requires(const C& c) { c.num_classes(); }) {
      int k = classifiers.front().num_classes();
      for (const C& c : classifiers)
        if (c.num_classes() != k)
          throw ContractViolation("Mixture: inconsistent class counts");
    }
  }

  int size() const { return static_cast<int>(classifiers.size()); }
  int dim() const { return classifiers.front().input_dim(); }
};

namespace detail {

template <class C>
inline void check_instance(const Mixture<C>& mix, const LabeledPoint& point) {
  if (point.x.size() != mix.dim())
    throw ContractViolation("point dimension does not match mixture");
  if (mix.size() > IndexSet::kMaxIndex + 1)
    throw ContractViolation("mixture too large for index sets");
}

template <class C>
inline void check_delta(const Mixture<C>& mix, const Vec& delta) {
  if (delta.size() != mix.dim())
    throw ContractViolation("delta dimension does not match mixture");
  if (!delta.allFinite()) throw NumericError("non-finite delta");
}

}  // namespace detail

// Indices whose prediction at x + delta differs from the label. Works for
// any classifier type with a misclassifies(h, x, label) overload.
template <class C>
IndexSet fooled_set(const Mixture<C>& mix, const LabeledPoint& point,
                    const Vec& delta) {
  detail::check_instance(mix, point);
  detail::check_delta(mix, delta);
  Vec z = point.x + delta;
  IndexSet out;
  for (int i = 0; i < mix.size(); ++i)
    if (misclassifies(mix.classifiers[i], z, point.label)) out = out.with(i);
  return out;
}

template <class C>
double mixture_weight_of(const Mixture<C>& mix, IndexSet s) {
  double w = 0.0;
  for (int i : s.to_indices()) {
    if (i >= mix.size()) throw ContractViolation("index set exceeds mixture");
    w += mix.weights[i];
  }
  return w;
}

// Expected 0-1 loss of the mixture at x + delta.
template <class C>
double zero_one_loss(const Mixture<C>& mix, const LabeledPoint& point,
                     const Vec& delta) {
  return mixture_weight_of(mix, fooled_set(mix, point, delta));
}

inline Vec project_to_ball(const Vec& delta, const AttackBudget& budget) {
  if (!delta.allFinite()) throw NumericError("project_to_ball: non-finite");
  if (budget.norm == Norm::L2) {
    double n = delta.norm();
    if (n <= budget.epsilon) return delta;
    return delta * (budget.epsilon / n);
  }
  return delta.cwiseMax(-budget.epsilon).cwiseMin(budget.epsilon);
}

inline double ball_norm(const Vec& delta, Norm norm) {
  return norm == Norm::L2 ? delta.norm() : delta.lpNorm<Eigen::Infinity>();
}

// max(m, 0): the piece of the margin still to be destroyed.
inline double reverse_hinge(double margin) {
  return margin > 0.0 ? margin : 0.0;
}

// Mean reverse hinge of the subset's margins at x + delta. Zero exactly when
// every classifier in the subset is pushed to (or past) its boundary.
inline double srh(IndexSet subset, const Mixture<LinearClassifier>& mix,
                  const LabeledPoint& point, const Vec& delta) {
  if (subset.empty()) throw ContractViolation("srh: empty subset");
  detail::check_instance(mix, point);
  detail::check_delta(mix, delta);
  check_binary_label(point.label);
  Vec z = point.x + delta;
  double total = 0.0;
  int count = 0;
  for (int i : subset.to_indices()) {
    if (i >= mix.size()) throw ContractViolation("srh: index out of range");
    total += reverse_hinge(binary_margin(mix.classifiers[i], z, point.label));
    ++count;
  }
  return total / count;
}

struct MarginStep {
  double distance = 0.0;  // distance to the decision boundary in the norm
  Vec direction;          // unit (in the norm) direction that reduces margin
};

// Distance from x to h's boundary together with the steepest-descent
// direction for the margin, both measured in the budget's norm. Already
// misclassified points get distance 0 and a zero direction.
inline MarginStep linear_margin_and_direction(const LinearClassifier& h,
                                              const LabeledPoint& point,
                                              const AttackBudget& budget) {
  double m = binary_margin(h, point.x, point.label);
  const long d = h.theta.size();
  if (m <= 0.0) return {0.0, Vec::Zero(d)};
  MarginStep out;
  if (budget.norm == Norm::L2) {
    double n = h.theta.norm();
    out.distance = m / n;
    out.direction = -(point.label / n) * h.theta;
  } else {
    double n1 = h.theta.lpNorm<1>();
    out.distance = m / n1;
    out.direction = -point.label * h.theta.array().sign().matrix();
  }
  return out;
}

// One row per outer step of an iterative attack.
struct TraceRecord {
  int step = 0;        // outer step number, 0-based
  int candidate = -1;  // classifier index targeted this step
  bool accepted = false;
  IndexSet pool;       // pool after the step
  double residual = 0.0;  // surrogate value that decided the step
  double score = 0.0;     // mixture 0-1 loss after the step
};

struct AttackOutcome {
  Vec delta;
  IndexSet fooled;
  double score = 0.0;
  long iterations_used = 0;
  std::vector<TraceRecord> trace;
};

}  // namespace mixattack
