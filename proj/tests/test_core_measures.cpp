#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace ramified;

namespace {

Instance two_households(double d1, double d2) {
  Instance in;
  in.alpha = 0.5;
  in.factories = {Point{0, 0}};
  in.households = {{Point{1, 0}, d1}, {Point{0, 1}, d2}};
  return in;
}

}  // namespace

TEST(Normalize, UniformRescale) {
  const auto in = normalize(two_households(2, 2));
  EXPECT_EQ(in.n(0), 0.5);
  EXPECT_EQ(in.n(1), 0.5);
}

TEST(Normalize, AlreadyNormalizedIsUnchanged) {
  Instance in;
  in.factories = {Point{0, 0}};
  in.households = {{Point{1, 0}, 1.0 / 3}, {Point{2, 0}, 1.0 / 3}, {Point{3, 0}, 1.0 / 3}};
  EXPECT_EQ(normalize(in), in);
}

TEST(Normalize, DividesBySum) {
  const auto in = normalize(two_households(1, 3));
  EXPECT_DOUBLE_EQ(in.n(0), 0.25);
  EXPECT_DOUBLE_EQ(in.n(1), 0.75);
  EXPECT_NEAR(in.total_demand(), 1.0, 1e-15);
  EXPECT_EQ(in.x(0), Point({0, 0}));
  EXPECT_EQ(in.y(1), Point({0, 1}));
}

TEST(Normalize, Idempotent) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int t = 0; t < 200; ++t) {
    Instance in;
    in.factories = {Point{0, 0}};
    for (int j = 0; j < 1 + t % 9; ++j) in.households.push_back({Point{double(j), 1}, u(g)});
    const auto once = normalize(in);
    EXPECT_EQ(normalize(once), once);
    EXPECT_NO_THROW(validate(once));
  }
}

TEST(Normalize, ZeroTotalRejected) {
  auto in = two_households(1, 1);
  in.households[0].demand = 0.0;
  in.households[1].demand = 0.0;
  EXPECT_THROW(normalize(in), InvalidInstance);
}

TEST(Mass, SingleAtom) { EXPECT_EQ(mass(AtomicMeasure::dirac(Point{1, 2}, 1.0)), 1.0); }

TEST(Mass, TwoAtoms) { EXPECT_EQ(mass(AtomicMeasure({{Point{0}, 0.25}, {Point{1}, 0.75}})), 1.0); }

TEST(Mass, FourPlanEntries) {
  AtomicMeasure m({{Point{0}, 1.0 / 8}, {Point{1}, 1.0 / 8}, {Point{2}, 1.0 / 2}, {Point{3}, 1.0 / 4}});
  EXPECT_EQ(mass(m), 1.0);
}

TEST(Mass, AdditiveOnDisjointSupports) {
  AtomicMeasure a({{Point{0, 0}, 0.3}, {Point{1, 0}, 0.2}});
  AtomicMeasure b({{Point{0, 1}, 0.4}});
  EXPECT_DOUBLE_EQ(mass(concatenate(a, b)), mass(a) + mass(b));
  EXPECT_EQ(concatenate(a, b).size(), 3u);
}

TEST(Measure, RejectsBadAtoms) {
  EXPECT_THROW(AtomicMeasure({{Point{0}, 0.0}}), InvalidInstance);
  EXPECT_THROW(AtomicMeasure({{Point{0}, -1.0}}), InvalidInstance);
  EXPECT_THROW(AtomicMeasure({{Point{0}, 1.0}, {Point{0}, 1.0}}), InvalidInstance);
}

TEST(Validate, RejectsAlphaOne) {
  auto in = normalize(two_households(1, 1));
  in.alpha = 1.0;
  EXPECT_THROW(validate(in), InvalidInstance);
  in.alpha = -0.1;
  EXPECT_THROW(validate(in), InvalidInstance);
}

TEST(Validate, RejectsUnnormalizedDemand) { EXPECT_THROW(validate(two_households(1, 1)), InvalidInstance); }

TEST(Validate, RejectsDuplicatesAndMixedDimensions) {
  auto in = normalize(two_households(1, 1));
  in.factories.push_back(Point{0, 0});
  EXPECT_THROW(validate(in), InvalidInstance);
  in = normalize(two_households(1, 1));
  in.households[1].position = Point{1, 0};
  EXPECT_THROW(validate(in), InvalidInstance);
  in = normalize(two_households(1, 1));
  in.households[1].position = Point{1, 0, 0};
  EXPECT_THROW(validate(in), InvalidInstance);
}

TEST(MergeDuplicates, SumsDemandsAndWarns) {
  Instance in;
  in.factories = {Point{0, 0}};
  in.households = {{Point{1, 0}, 0.25}, {Point{2, 0}, 0.25}, {Point{1, 0}, 0.5}};
  auto [merged, warnings] = merge_duplicate_households(in);
  ASSERT_EQ(merged.ell(), 2u);
  EXPECT_EQ(merged.n(0), 0.75);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_NO_THROW(validate(merged));
}
