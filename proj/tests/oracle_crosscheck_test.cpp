// Built with MIXATTACK_MEMBERSHIP_GRID_CROSSCHECK: every binary membership
// decision re-runs as a dense grid scan of the budget ball, and a region the
// search missed but the grid can reach raises NumericError. Completing this
// suite means the two routes agreed on every region visited.

#include <gtest/gtest.h>

#ifndef MIXATTACK_MEMBERSHIP_GRID_CROSSCHECK
#error "this suite must be compiled with the grid crosscheck enabled"
#endif

#include "mixattack/oracle.hpp"
#include "mixattack/synth.hpp"
#include "test_support.hpp"

using namespace mixattack;

namespace {

TEST(GridCrosscheck, CanonicalFixtures) {
  for (char config : {'a', 'b', 'c', 'd'}) {
    mixtest::Fixture fx = mixtest::make_fixture(config);
    LatticeReport rep;
    ASSERT_NO_THROW(
        rep = enumerate_lattice(fx.mixture, fx.point, fx.budget))
        << "config " << config;
    EXPECT_TRUE(rep.oracle_grade);
  }
}

TEST(GridCrosscheck, AngleFamilyNearTheCriticalAngle) {
  AttackBudget budget{Norm::L2, 1.0};
  double theta_star = critical_angle(0.9, 1.0);
  for (double theta : {0.3, theta_star - 0.05, theta_star + 0.05, 2.0}) {
    AngleInstance inst = make_angle_instance(0.9, theta);
    ASSERT_NO_THROW(enumerate_lattice(inst.mixture, inst.point, budget))
        << "theta " << theta;
  }
}

TEST(GridCrosscheck, RandomPlanarMixtures) {
  RandomMixtureSpec spec;
  spec.d = 2;
  spec.m = 3;
  AttackBudget budget{Norm::L2, 1.0};
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    RandomInstance inst = sample_random_mixture(spec, seed);
    ASSERT_NO_THROW(enumerate_lattice(inst.mixture, inst.point, budget))
        << "seed " << seed;
  }
}

TEST(GridCrosscheck, LinfBudgetsToo) {
  RandomMixtureSpec spec;
  spec.d = 2;
  spec.m = 2;
  AttackBudget budget{Norm::Linf, 0.7};
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    RandomInstance inst = sample_random_mixture(spec, seed);
    ASSERT_NO_THROW(enumerate_lattice(inst.mixture, inst.point, budget))
        << "seed " << seed;
  }
}

}  // namespace
