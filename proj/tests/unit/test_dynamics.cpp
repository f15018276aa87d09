#include <gtest/gtest.h>

#include "holdlab/dynamics.hpp"

using namespace holdlab;

TEST(Dwell, BoardingDominated) { EXPECT_EQ(dwell_time(10, 5, 3.0, 1.8), 30.0); }
TEST(Dwell, Empty) { EXPECT_EQ(dwell_time(0, 0, 3.0, 1.8), 0.0); }
TEST(Dwell, AlightingDominated) { EXPECT_EQ(dwell_time(2, 20, 3.0, 1.8), 36.0); }

TEST(Boarding, CapacityBinds) { EXPECT_EQ(boarding_count(50, 120, 100, 10), (BoardingOutcome{30, 20})); }
TEST(Boarding, NobodyWaiting) { EXPECT_EQ(boarding_count(0, 120, 60, 3), (BoardingOutcome{0, 0})); }
TEST(Boarding, Slack) { EXPECT_EQ(boarding_count(30, 120, 40, 0), (BoardingOutcome{30, 0})); }
TEST(Boarding, IdentityHolds) {
  for (int w = 0; w < 60; w += 7)
    for (int n = 0; n <= 50; n += 5)
      for (int a = 0; a <= n; a += 3) {
        const auto r = boarding_count(w, 50, n, a);
        EXPECT_EQ(r.boarded + r.holdup, w);
        EXPECT_LE(n - a + r.boarded, 50);
      }
}
TEST(Boarding, OverloadedBusIsAnInvariantViolation) {
  EXPECT_THROW(boarding_count(1, 120, 121, 0), InvariantViolation);
}

TEST(Headways, ForwardOnLinearAxis) {
  const auto h = axis_headways(5000, 0, {{1, 6500}, {2, 2000}}, 20000, false);
  EXPECT_EQ(h.forward, 1500.0);
  EXPECT_EQ(h.backward, 3000.0);
}

TEST(Headways, CircularWrap) {
  const auto h = axis_headways(9990, 0, {{1, 666}}, 10656, true);
  EXPECT_EQ(h.forward, 1332.0);
  EXPECT_EQ(h.backward, 10656.0 - 1332.0);
}

TEST(Headways, MissingNeighbour) {
  const auto lin = axis_headways(4000, 0, {}, 10000, false);
  EXPECT_EQ(lin.forward, 6000.0);
  EXPECT_EQ(lin.backward, 4000.0);
  const auto circ = axis_headways(4000, 0, {{0, 4000}}, 10000, true);
  EXPECT_EQ(circ.forward, 10000.0);
  EXPECT_EQ(circ.backward, 10000.0);
}

TEST(Headways, EqualPositionLowerIdAhead) {
  const auto a = axis_headways(300, 2, {{1, 300}, {3, 300}}, 1000, true);
  EXPECT_EQ(a.forward, 0.0);
  EXPECT_EQ(a.backward, 0.0);
  const auto b = axis_headways(300, 1, {{3, 300}}, 1000, false);
  EXPECT_EQ(b.backward, 0.0);
  EXPECT_EQ(b.forward, 700.0);
}
