#pragma once

// Differentiable multiclass classifiers and the margin machinery attacks
// need: target selection, reverse margins, and analytic input gradients.
// Class labels are 0-based; argmax ties resolve to the lowest index.

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mixattack/core.hpp"

namespace mixattack {

template <class C>
concept MulticlassClassifier = requires(const C& h, const Vec& x) {
  { h.input_dim() } -> std::convertible_to<int>;
  { h.num_classes() } -> std::convertible_to<int>;
  { h.logits(x) } -> std::convertible_to<Vec>;
};

// logits(x) = W x + c. Softmax itself is irrelevant for attacks: it is
// monotone, so margins and argmax are taken on the logits directly.
struct SoftmaxLinearClassifier {
  Eigen::MatrixXd W;
  Vec c;

  SoftmaxLinearClassifier() = default;
  SoftmaxLinearClassifier(Eigen::MatrixXd w, Vec bias)
      : W(std::move(w)), c(std::move(bias)) {
    if (W.rows() < 2) throw ContractViolation("softmax-linear: need >= 2 classes");
    if (W.cols() < 1) throw ContractViolation("softmax-linear: empty input dim");
    if (c.size() != W.rows())
      throw ContractViolation("softmax-linear: bias size != class count");
    if (!W.allFinite() || !c.allFinite())
      throw ContractViolation("softmax-linear: non-finite parameter");
  }

  int input_dim() const { return static_cast<int>(W.cols()); }
  int num_classes() const { return static_cast<int>(W.rows()); }
  Vec logits(const Vec& x) const { return W * x + c; }

  // Gradient of logits[a] - logits[b] with respect to the input.
  Vec raw_margin_gradient(const Vec&, int a, int b) const {
    return (W.row(a) - W.row(b)).transpose();
  }
};

// Two-layer tanh network: logits(x) = W2 tanh(W1 x + b1) + b2.
struct MlpClassifier {
  Eigen::MatrixXd W1;
  Vec b1;
  Eigen::MatrixXd W2;
  Vec b2;

  MlpClassifier() = default;
  MlpClassifier(Eigen::MatrixXd w1, Vec bias1, Eigen::MatrixXd w2, Vec bias2)
      : W1(std::move(w1)), b1(std::move(bias1)),
        W2(std::move(w2)), b2(std::move(bias2)) {
    if (W1.rows() < 1 || W1.cols() < 1)
      throw ContractViolation("mlp: empty hidden layer or input");
    if (b1.size() != W1.rows()) throw ContractViolation("mlp: b1 size");
    if (W2.rows() < 2) throw ContractViolation("mlp: need >= 2 classes");
    if (W2.cols() != W1.rows()) throw ContractViolation("mlp: layer mismatch");
    if (b2.size() != W2.rows()) throw ContractViolation("mlp: b2 size");
    if (!W1.allFinite() || !b1.allFinite() || !W2.allFinite() ||
        !b2.allFinite())
      throw ContractViolation("mlp: non-finite parameter");
  }

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int num_classes() const { return static_cast<int>(W2.rows()); }

  Vec logits(const Vec& x) const {
    Vec h = (W1 * x + b1).array().tanh().matrix();
    return W2 * h + b2;
  }

  Vec raw_margin_gradient(const Vec& x, int a, int b) const {
    Vec pre = W1 * x + b1;
    Eigen::ArrayXd t = pre.array().tanh();
    Vec row = (W2.row(a) - W2.row(b)).transpose();
    Vec s = ((1.0 - t * t) * row.array()).matrix();
    return W1.transpose() * s;
  }
};

template <MulticlassClassifier C>
void check_class_label(const C& h, int y) {
  if (y < 0 || y >= h.num_classes())
    throw ContractViolation("class label out of range");
}

// Argmax over logits, lowest index on ties.
template <MulticlassClassifier C>
int predicted_class(const C& h, const Vec& x) {
  Vec l = h.logits(x);
  int best = 0;
  for (int j = 1; j < l.size(); ++j)
    if (l[j] > l[best]) best = j;
  return best;
}

template <MulticlassClassifier C>
bool misclassifies(const C& h, const Vec& x, int y) {
  check_class_label(h, y);
  return predicted_class(h, x) != y;
}

// Most competitive wrong class: argmax over logits excluding y, lowest
// index on ties.
template <MulticlassClassifier C>
int select_target(const C& h, const Vec& x, int y) {
  check_class_label(h, y);
  Vec l = h.logits(x);
  int best = -1;
  for (int j = 0; j < l.size(); ++j) {
    if (j == y) continue;
    if (best < 0 || l[j] > l[best]) best = j;
  }
  return best;
}

// max(logit_y - logit_adv, 0): zero exactly when the adversarial class has
// caught up with the true one.
template <MulticlassClassifier C>
double multiclass_rev_margin(const C& h, const Vec& x, int y, int y_adv) {
  check_class_label(h, y);
  check_class_label(h, y_adv);
  if (y_adv == y)
    throw ContractViolation("multiclass_rev_margin: target equals label");
  Vec l = h.logits(x);
  return reverse_hinge(l[y] - l[y_adv]);
}

// Subgradient of the reverse margin: zero once the margin is closed.
template <MulticlassClassifier C>
Vec input_gradient(const C& h, const Vec& x, int y, int y_adv) {
  check_class_label(h, y);
  check_class_label(h, y_adv);
  if (y_adv == y)
    throw ContractViolation("input_gradient: target equals label");
  Vec l = h.logits(x);
  if (l[y] - l[y_adv] > 0.0) return h.raw_margin_gradient(x, y, y_adv);
  return Vec::Zero(x.size());
}

// Binary view of a 2-class softmax-linear classifier: class 0 <-> +1,
// class 1 <-> -1. Ties agree: equal logits -> argmax class 0 <-> f = 0
// -> predicted sign +1.
inline LinearClassifier to_binary(const SoftmaxLinearClassifier& h) {
  if (h.num_classes() != 2)
    throw ContractViolation("to_binary: classifier is not 2-class");
  return LinearClassifier((h.W.row(0) - h.W.row(1)).transpose(),
                          h.c[0] - h.c[1]);
}

inline int binary_label_from_class(int cls) {
  if (cls != 0 && cls != 1)
    throw ContractViolation("binary_label_from_class: class must be 0 or 1");
  return cls == 0 ? 1 : -1;
}

inline std::pair<Mixture<LinearClassifier>, LabeledPoint> reduce_to_binary(
    const Mixture<SoftmaxLinearClassifier>& mix, const LabeledPoint& point) {
  std::vector<LinearClassifier> cs;
  cs.reserve(mix.classifiers.size());
  for (const auto& h : mix.classifiers) cs.push_back(to_binary(h));
  return {Mixture<LinearClassifier>(std::move(cs), mix.weights),
          LabeledPoint{point.x, binary_label_from_class(point.label)}};
}

}  // namespace mixattack
