#include "smaprop/beam.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace smaprop::beam;

namespace {

constexpr double kPi = std::numbers::pi;
double deg(double d) { return d * kPi / 180.0; }

// Independent oracles: cantilever tip compliance by integrating the
// Euler-Bernoulli moment-curvature relation, and the tip position by
// integrating the arc's slope along its length.

double numeric_tip_compliance(const LimbParams& p) {
  // delta = int_0^L M(x) (L - x) / (E I) dx with M(x) = 1 N * (L - x); Simpson.
  const int n = 2000;
  const double h = p.length / n;
  const double ei = p.elastic_modulus * p.width * p.thickness * p.thickness * p.thickness / 12.0;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double f = (p.length - x) * (p.length - x) / ei;
    s += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return s * h / 3.0;
}

double numeric_arc_tip(double theta, double length) {
  // Integrate the heading phi(s) = theta s / L for the arc's axial reach, then
  // project by sin(theta) as the limb model does.
  const int n = 4000;
  double x = 0.0;
  for (int i = 0; i < n; ++i) x += std::cos(theta * (i + 0.5) / n) * length / n;
  return x * std::sin(theta);
}

double bisect(auto f, double lo, double hi) {
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Beam, ZetaFromPrototypeGeometry) {
  const double z = zeta_from_geometry(1.79, 60.0, 3.5, 105.0, 3.5);
  EXPECT_NEAR(z, 4.1767, 4.1767 * 1e-3);
  LimbParams p;
  EXPECT_DOUBLE_EQ(p.area_moment(), 214.375);
  EXPECT_NEAR(p.zeta(), z, 1e-12);
}

TEST(Beam, ForceAtFifteenDegrees) {
  const double z = zeta_from_geometry(1.79, 60.0, 3.5, 105.0, 3.5);
  const double t = deg(15.0);
  const double closed = z * std::sin(t) * std::sin(t) / t;
  const double f = sma_force_from_angle(t, z);
  EXPECT_NEAR(f, closed, closed * 1e-12);
  EXPECT_NEAR(f, 1.069, 1e-3);
  EXPECT_NEAR(f, 1.06, 0.106);
  EXPECT_DOUBLE_EQ(sma_force_from_angle(0.0, z), 0.0);
}

TEST(Beam, TipDisplacementMatchesIntegratedArc) {
  for (double d : {1.0, 10.0, 25.0, 45.0, 89.0}) {
    EXPECT_NEAR(tip_displacement(deg(d), 105.0), numeric_arc_tip(deg(d), 105.0), 1e-4) << d;
  }
}

TEST(Beam, AngleFromForceEdgesAndInverse) {
  const double z = LimbParams{}.zeta();
  EXPECT_DOUBLE_EQ(angle_from_force(0.0, z), 0.0);
  EXPECT_NEAR(angle_from_force(1.069, z) * 180.0 / kPi, 15.0, 0.01);
  EXPECT_THROW(angle_from_force(-0.1, z), std::range_error);
  EXPECT_THROW(angle_from_force(z * 2.0 / kPi + 1e-6, z), std::range_error);
  EXPECT_NEAR(angle_from_force(z * 2.0 / kPi, z), kPi / 2.0, 1e-9);
}

TEST(Beam, RoundTripRandomAngles) {
  const double z = LimbParams{}.zeta();
  std::mt19937_64 rng(42);
  // Below F(pi/2) the inverse lands on [0, pi/4]; the rising branch runs on to the peak.
  std::uniform_real_distribution<double> lower(0.0, kPi / 4.0), rising(0.0, kPeakBend);
  for (int i = 0; i < 100; ++i) {
    const double t = lower(rng);
    EXPECT_NEAR(angle_from_force(sma_force_from_angle(t, z), z), t, 1e-9);
    const double r = rising(rng);
    EXPECT_NEAR(bend_from_force(sma_force_from_angle(r, z), z), r, 1e-9);
  }
}

TEST(Beam, PeakBendMatchesStationaryPoint) {
  // d/dtheta sin^2/theta = 0  <=>  2 theta cos(theta) = sin(theta)
  const double peak = bisect([](double t) { return std::sin(t) - 2.0 * t * std::cos(t); }, 0.5, 1.5);
  EXPECT_NEAR(kPeakBend, peak, 1e-12);
  const double z = LimbParams{}.zeta();
  EXPECT_NEAR(sma_force_from_angle(kPi / 4.0, z), sma_force_from_angle(kPi / 2.0, z), 1e-12);
  EXPECT_THROW(bend_from_force(LimbParams{}.max_free_force() * 1.0001, z), std::range_error);
}

TEST(BeamProperty, ForceRisesToPeakThenFalls) {
  const double z = LimbParams{}.zeta();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-6, kPi / 2.0);
  std::vector<double> t(500);
  for (auto& x : t) x = u(rng);
  std::sort(t.begin(), t.end());
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) continue;
    const double a = sma_force_from_angle(t[i - 1], z), b = sma_force_from_angle(t[i], z);
    if (t[i] <= kPeakBend) {
      EXPECT_LT(a, b) << t[i];
    }
    if (t[i - 1] >= kPeakBend) {
      EXPECT_GT(a, b) << t[i];
    }
  }
}

TEST(BeamProperty, FreeDisplacementLinearInForce) {
  const LimbParams p;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, p.max_free_force());
  for (int i = 0; i < 100; ++i) {
    const double f = u(rng);
    const auto s = loaded_statics(f, std::nullopt, 0.0, p);
    EXPECT_NEAR(s.displacement, p.length / p.zeta() * f, 1e-9);
    EXPECT_NEAR(tip_displacement(s.theta, p.length), s.displacement, 1e-7);
  }
}

TEST(Beam, ComplianceMatchesNumericIntegration) {
  const LimbParams p;
  EXPECT_NEAR(p.tip_compliance(), numeric_tip_compliance(p), 1e-6 * p.tip_compliance());
  EXPECT_NEAR(p.tip_compliance(), 1005.59, 0.01);
}

TEST(Contact, NoContactWhenFreeTipShortOfPlate) {
  const LimbParams p;
  const auto s = contact_statics(0.5, 20.0, p);
  EXPECT_EQ(s.external_force, 0.0);
  EXPECT_FALSE(s.at_plate);
  EXPECT_NEAR(s.theta, angle_from_force(0.5, p.zeta()), 1e-9);
}

TEST(Contact, ExactTouchGivesZeroForce) {
  const LimbParams p;
  const double f = 20.0 * p.zeta() / p.length;  // delta_free == d
  const auto s = contact_statics(f, 20.0, p);
  EXPECT_NEAR(s.external_force, 0.0, 1e-12);
  EXPECT_NEAR(s.displacement, 20.0, 1e-9);
}

TEST(Contact, TwoNewtonsAtTwentyMillimetres) {
  const LimbParams p;
  const auto s = contact_statics(2.0, 20.0, p);

  // Oracle: find theta for the free tip by bisection on the arc relation,
  // integrate the arc for delta_free, then bisect on the tip load P that
  // brings the superposed tip back to the plate.
  const double z = 4.0 * p.elastic_modulus * p.area_moment() / (p.length * p.moment_arm);
  const double theta_free = bisect([&](double t) { return z * std::sin(t) * std::sin(t) / t - 2.0; }, 1e-9, kPi / 2);
  const double delta_free = numeric_arc_tip(theta_free, p.length);
  const double c = numeric_tip_compliance(p);
  const double load = bisect([&](double f) { return 20.0 - (delta_free - c * f); }, 0.0, 1.0);

  EXPECT_NEAR(delta_free, 50.28, 0.01);
  EXPECT_NEAR(s.external_force, load, 1e-6);
  EXPECT_NEAR(s.external_force, 0.0301, 1e-4);
  EXPECT_NEAR(s.displacement, 20.0, 1e-12);
  EXPECT_NEAR(tip_displacement(s.theta, p.length), 20.0, 1e-7);
  EXPECT_TRUE(s.at_plate);
}

TEST(Contact, PlateBeyondReachGivesFreeSolution) {
  const LimbParams p;
  const auto s = contact_statics(p.max_free_force(), 200.0, p);
  EXPECT_EQ(s.external_force, 0.0);
  EXPECT_NEAR(s.theta, kPeakBend, 1e-9);
}

TEST(BeamProperty, FreeBendIsContinuousAcrossTheStop) {
  const LimbParams p;
  double prev = 0.0;
  // The inverse has a square-root cusp at the peak, so steps there are larger
  // than elsewhere but still shrink with the force step.
  for (int i = 1; i <= 40000; ++i) {
    const double th = loaded_statics(2.0 * p.max_free_force() * i / 40000.0, std::nullopt, 0.0, p).theta;
    EXPECT_GE(th, prev);
    EXPECT_LT(th - prev, 0.02) << i;
    EXPECT_LE(th, kPeakBend);
    prev = th;
  }
}

TEST(Contact, DomainErrors) {
  const LimbParams p;
  EXPECT_THROW(contact_statics(-1.0, 20.0, p), std::domain_error);
  EXPECT_THROW(contact_statics(1.0, 0.0, p), std::domain_error);
  EXPECT_THROW(loaded_statics(1.0, std::nullopt, -0.1, p), std::domain_error);
}

TEST(ContactProperty, ContinuousAtOnsetAndNonDecreasing) {
  const LimbParams p;
  for (double d : {20.0, 30.0, 40.0, 50.0}) {
    const double onset = d * p.zeta() / p.length;
    const double step = 1e-7;
    double prev = contact_statics(onset - 50 * step, d, p).external_force;
    for (int i = -49; i <= 50; ++i) {
      const double f = contact_statics(onset + i * step, d, p).external_force;
      EXPECT_GE(f, 0.0);
      EXPECT_GE(f, prev);
      EXPECT_LT(f - prev, 1e-6);
      prev = f;
    }
    prev = 0.0;
    for (double f = 0.0; f < 20.0; f += 0.05) {
      const double fe = contact_statics(f, d, p).external_force;
      EXPECT_GE(fe, prev);
      prev = fe;
    }
  }
}

TEST(LoadedStatics, TipLoadPushesLimbBack) {
  const LimbParams p;
  const auto free = loaded_statics(2.0, std::nullopt, 0.0, p);
  const auto pushed = loaded_statics(2.0, std::nullopt, 0.02, p);
  EXPECT_LT(pushed.theta, free.theta);
  EXPECT_NEAR(pushed.displacement, free.displacement - p.tip_compliance() * 0.02, 1e-9);
  EXPECT_DOUBLE_EQ(pushed.external_force, 0.02);

  const auto flat = loaded_statics(0.5, std::nullopt, 0.3, p);
  EXPECT_EQ(flat.theta, 0.0);
  EXPECT_EQ(flat.displacement, 0.0);
  EXPECT_DOUBLE_EQ(flat.external_force, 0.3);
}

TEST(LoadedStatics, PlateAndTipLoadAdd) {
  const LimbParams p;
  const auto s = loaded_statics(4.0, 20.0, 0.01, p);
  const double unplated = p.length / p.zeta() * 4.0 - p.tip_compliance() * 0.01;
  EXPECT_NEAR(s.plate_force, (unplated - 20.0) / p.tip_compliance(), 1e-12);
  EXPECT_NEAR(s.external_force, s.plate_force + 0.01, 1e-12);
}
