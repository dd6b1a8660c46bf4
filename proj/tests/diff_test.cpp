#include "mixattack/diff.hpp"

#include <gtest/gtest.h>

#include "mixattack/random.hpp"
#include "test_support.hpp"

using namespace mixattack;

namespace {

SoftmaxLinearClassifier identity_softmax(int k) {
  return SoftmaxLinearClassifier(Eigen::MatrixXd::Identity(k, k),
                                 Vec::Zero(k));
}

MlpClassifier random_mlp(Rng& rng, int d, int hidden, int k) {
  Eigen::MatrixXd w1(hidden, d), w2(k, hidden);
  for (int r = 0; r < hidden; ++r)
    w1.row(r) = rng.gaussian_vector(d).transpose();
  for (int r = 0; r < k; ++r)
    w2.row(r) = rng.gaussian_vector(hidden).transpose();
  return MlpClassifier(w1, rng.gaussian_vector(hidden), w2,
                       rng.gaussian_vector(k));
}

SoftmaxLinearClassifier random_softmax(Rng& rng, int d, int k) {
  Eigen::MatrixXd w(k, d);
  for (int r = 0; r < k; ++r) w.row(r) = rng.gaussian_vector(d).transpose();
  return SoftmaxLinearClassifier(w, rng.gaussian_vector(k));
}

Vec make_vec(std::initializer_list<double> xs) {
  Vec v(xs.size());
  long i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(PredictedClass, ArgmaxWithIdentityLogits) {
  auto h = identity_softmax(2);
  EXPECT_EQ(predicted_class(h, make_vec({0.1, 0.9})), 1);
  EXPECT_EQ(predicted_class(h, make_vec({0.9, 0.1})), 0);
}

TEST(PredictedClass, TiesPickLowestIndex) {
  auto h = identity_softmax(2);
  EXPECT_EQ(predicted_class(h, make_vec({0.5, 0.5})), 0);
  auto h3 = identity_softmax(3);
  EXPECT_EQ(predicted_class(h3, make_vec({1.0, 2.0, 2.0})), 1);
}

TEST(SelectTarget, MostCompetitiveWrongClass) {
  auto h = identity_softmax(3);
  Vec x = make_vec({5.0, 1.0, 3.0});
  EXPECT_EQ(select_target(h, x, 0), 2);
  EXPECT_EQ(select_target(h, x, 2), 0);
  EXPECT_EQ(select_target(h, x, 1), 0);
  EXPECT_THROW(select_target(h, x, 3), ContractViolation);
}

TEST(SelectTarget, TiesPickLowestWrongIndex) {
  auto h = identity_softmax(3);
  EXPECT_EQ(select_target(h, make_vec({0.0, 2.0, 2.0}), 0), 1);
}

TEST(RevMargin, GapToTarget) {
  auto h = identity_softmax(2);
  Vec x = make_vec({2.0, 0.5});
  EXPECT_DOUBLE_EQ(multiclass_rev_margin(h, x, 0, 1), 1.5);
  EXPECT_DOUBLE_EQ(multiclass_rev_margin(h, x, 1, 0), 0.0);
  EXPECT_THROW(multiclass_rev_margin(h, x, 0, 0), ContractViolation);
}

TEST(InputGradient, ZeroOnceMarginClosed) {
  auto h = identity_softmax(2);
  Vec g = input_gradient(h, make_vec({0.5, 2.0}), 0, 1);
  EXPECT_TRUE(g.isZero(0.0));
  Vec g2 = input_gradient(h, make_vec({2.0, 0.5}), 0, 1);
  EXPECT_DOUBLE_EQ(g2[0], 1.0);
  EXPECT_DOUBLE_EQ(g2[1], -1.0);
}

TEST(InputGradient, MatchesFiniteDifferencesSoftmax) {
  Rng rng(41);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    auto h = random_softmax(rng, 4, 3);
    Vec x = rng.gaussian_vector(4);
    int y = static_cast<int>(rng.next_u64() % 3);
    int adv = select_target(h, x, y);
    double margin = h.logits(x)[y] - h.logits(x)[adv];
    if (std::abs(margin) <= 1e-4) continue;
    Vec analytic = input_gradient(h, x, y, adv);
    Vec fd = mixtest::central_difference_gradient(
        [&](const Vec& z) { return multiclass_rev_margin(h, z, y, adv); }, x);
    EXPECT_LT(mixtest::vector_rel_error(analytic, fd), 1e-5);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(InputGradient, MatchesFiniteDifferencesMlp) {
  Rng rng(43);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    auto h = random_mlp(rng, 4, 6, 3);
    Vec x = 0.5 * rng.gaussian_vector(4);
    int y = static_cast<int>(rng.next_u64() % 3);
    int adv = select_target(h, x, y);
    double margin = h.logits(x)[y] - h.logits(x)[adv];
    if (std::abs(margin) <= 1e-4) continue;
    Vec analytic = input_gradient(h, x, y, adv);
    Vec fd = mixtest::central_difference_gradient(
        [&](const Vec& z) { return multiclass_rev_margin(h, z, y, adv); }, x);
    EXPECT_LT(mixtest::vector_rel_error(analytic, fd), 1e-5);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(MlpClassifier, LogitsShapeAndValidation) {
  Rng rng(5);
  auto h = random_mlp(rng, 3, 4, 2);
  EXPECT_EQ(h.input_dim(), 3);
  EXPECT_EQ(h.num_classes(), 2);
  EXPECT_EQ(h.logits(Vec::Zero(3)).size(), 2);
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Ones(4, 3);
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Ones(2, 5);  // mismatched
  EXPECT_THROW(MlpClassifier(w1, Vec::Zero(4), w2, Vec::Zero(2)),
               ContractViolation);
}

TEST(SoftmaxLinear, Validation) {
  EXPECT_THROW(
      SoftmaxLinearClassifier(Eigen::MatrixXd::Identity(1, 1), Vec::Zero(1)),
      ContractViolation);
  EXPECT_THROW(
      SoftmaxLinearClassifier(Eigen::MatrixXd::Identity(2, 2), Vec::Zero(3)),
      ContractViolation);
}

TEST(BinaryBridge, PredictionsAgreeIncludingTies) {
  Rng rng(97);
  for (int t = 0; t < 300; ++t) {
    auto h = random_softmax(rng, 3, 2);
    LinearClassifier hb = to_binary(h);
    Vec x = rng.gaussian_vector(3);
    int cls = predicted_class(h, x);
    EXPECT_EQ(binary_label_from_class(cls), predicted_sign(hb, x));
  }
  // Exact tie: equal rows give equal logits, argmax class 0, sign +1.
  Eigen::MatrixXd w(2, 2);
  w << 1.0, 2.0, 1.0, 2.0;
  // Equal rows make theta zero, which a LinearClassifier rejects; perturb
  // the bias route instead: logits tie exactly at x where f crosses 0.
  Eigen::MatrixXd w2(2, 2);
  w2 << 1.0, 0.0, -1.0, 0.0;
  SoftmaxLinearClassifier hs(w2, make_vec({0.0, 0.0}));
  LinearClassifier hb = to_binary(hs);
  Vec x0 = Vec::Zero(2);  // logits (0, 0): tie
  EXPECT_EQ(predicted_class(hs, x0), 0);
  EXPECT_EQ(predicted_sign(hb, x0), 1);
  EXPECT_EQ(binary_label_from_class(predicted_class(hs, x0)),
            predicted_sign(hb, x0));
}

TEST(BinaryBridge, ReduceMapsLabelsAndAgreesOnFooledSets) {
  Rng rng(131);
  for (int t = 0; t < 100; ++t) {
    std::vector<SoftmaxLinearClassifier> cs;
    int m = 2 + static_cast<int>(rng.next_u64() % 3);
    for (int i = 0; i < m; ++i) cs.push_back(random_softmax(rng, 3, 2));
    Vec q = Vec::Constant(m, 1.0 / m);
    Mixture<SoftmaxLinearClassifier> mix(cs, q);
    int label = static_cast<int>(rng.next_u64() % 2);
    LabeledPoint p{rng.gaussian_vector(3), label};
    auto [bmix, bp] = reduce_to_binary(mix, p);
    EXPECT_EQ(bp.label, label == 0 ? 1 : -1);
    Vec delta = rng.gaussian_vector(3);
    EXPECT_EQ(fooled_set(mix, p, delta).mask(),
              fooled_set(bmix, bp, delta).mask());
  }
}

TEST(Mixture, InconsistentClassCountsRejected) {
  Rng rng(7);
  std::vector<SoftmaxLinearClassifier> cs{random_softmax(rng, 3, 2),
                                          random_softmax(rng, 3, 4)};
  EXPECT_THROW(Mixture<SoftmaxLinearClassifier>(cs, make_vec({0.5, 0.5})),
               ContractViolation);
}

TEST(MulticlassFooledSet, UsesArgmax) {
  auto h = identity_softmax(3);
  Mixture<SoftmaxLinearClassifier> mix({h}, make_vec({1.0}));
  LabeledPoint p{make_vec({1.0, 0.0, 0.0}), 0};
  EXPECT_TRUE(fooled_set(mix, p, Vec::Zero(3)).empty());
  Vec delta = make_vec({0.0, 2.0, 0.0});
  EXPECT_TRUE(fooled_set(mix, p, delta).contains(0));
}

}  // namespace
