#pragma once

// Synthetic instance generators: the two-classifier angle family with a
// closed-form critical angle, and random unit-normal mixtures with
// truncated-Gaussian boundary distances and softmax weights. Sampling is
// bit-reproducible from the seed.

#include <cmath>
#include <utility>
#include <vector>

#include "mixattack/core.hpp"
#include "mixattack/random.hpp"

namespace mixattack {

struct AngleInstance {
  Mixture<LinearClassifier> mixture;
  LabeledPoint point;
  double r = 0.0;
  double theta = 0.0;
};

// Two unit-normal classifiers at angle theta, both boundaries at distance r
// from the origin, point at the origin with label -1. Their joint fooling
// region (when nonempty) has its nearest point at distance r / cos(theta/2).
inline AngleInstance make_angle_instance(
    double r, double theta, std::pair<double, double> weights = {0.5, 0.5}) {
  if (!(r > 0.0) || !std::isfinite(r))
    throw ContractViolation("make_angle_instance: r must be > 0");
  if (!(theta > 0.0 && theta < M_PI))
    throw ContractViolation("make_angle_instance: theta must be in (0, pi)");
  double half = 0.5 * theta;
  Vec u1(2), u2(2);
  u1 << std::cos(half), std::sin(half);
  u2 << std::cos(half), -std::sin(half);
  std::vector<LinearClassifier> cs;
  cs.emplace_back(u1, -r);
  cs.emplace_back(u2, -r);
  Vec q(2);
  q << weights.first, weights.second;
  AngleInstance inst{Mixture<LinearClassifier>(std::move(cs), std::move(q)),
                     LabeledPoint{Vec::Zero(2), -1}, r, theta};
  return inst;
}

// Largest angle at which both classifiers can still be fooled at once:
// r / cos(theta/2) <= eps  <=>  theta <= 2 acos(r / eps).
inline double critical_angle(double r, double eps) {
  if (!(r > 0.0) || !(eps > 0.0) || r >= eps)
    throw ContractViolation("critical_angle: need 0 < r < eps");
  return 2.0 * std::acos(r / eps);
}

inline Vec softmax_weights(const Vec& z, double temperature) {
  if (!(temperature > 0.0))
    throw ContractViolation("softmax_weights: temperature must be > 0");
  double mx = z.maxCoeff();
  Vec q = ((z.array() - mx) / temperature).exp().matrix();
  return q / q.sum();
}

struct RandomMixtureSpec {
  int d = 2;
  int m = 2;
  double bias_mean = 0.5;    // mean boundary distance before truncation
  double bias_std = 0.5;     // its standard deviation
  double weight_temperature = 10.0;
};

struct RandomInstance {
  Mixture<LinearClassifier> mixture;
  LabeledPoint point;
};

// Each classifier: uniformly random unit normal, boundary distance drawn
// from N(bias_mean, bias_std^2) resampled until positive, arranged so the
// origin is classified correctly with label -1 and its margin equals the
// distance. Weights are a temperature-softmax of standard Gaussians.
inline RandomInstance sample_random_mixture(const RandomMixtureSpec& spec,
                                            std::uint64_t seed) {
  if (spec.d < 1) throw ContractViolation("sample_random_mixture: d < 1");
  if (spec.m < 1) throw ContractViolation("sample_random_mixture: m < 1");
  if (!(spec.bias_std >= 0.0))
    throw ContractViolation("sample_random_mixture: bias_std < 0");
  Rng rng(seed);
  std::vector<LinearClassifier> cs;
  cs.reserve(spec.m);
  for (int i = 0; i < spec.m; ++i) {
    Vec u;
    double n = 0.0;
    do {
      u = rng.gaussian_vector(spec.d);
      n = u.norm();
    } while (n < 1e-12);
    u /= n;
    double dist = 0.0;
    do {
      dist = spec.bias_mean + spec.bias_std * rng.gaussian();
    } while (dist <= 0.0);
    // f(x) = u . x - dist: the origin sits at margin `dist` on the -1 side.
    cs.emplace_back(u, -dist);
  }
  Vec z = rng.gaussian_vector(spec.m);
  Vec q = softmax_weights(z, spec.weight_temperature);
  return {Mixture<LinearClassifier>(std::move(cs), std::move(q)),
          LabeledPoint{Vec::Zero(spec.d), -1}};
}

}  // namespace mixattack
