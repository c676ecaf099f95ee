#include <doctest.h>

#include "pcd/error.hpp"
#include "pcd/simulator.hpp"
#include "support.hpp"

using namespace pcd;
using namespace pcd::test;

namespace {
const SystemParams kSystem;
const ActuatorLimits kLimits;
}  // namespace

TEST_CASE("zero control leaves the capsule at rest") {
  const ControlLaw law = law_from(0.0, {0.0, 0.0}, {0.0, 0.0});
  const auto r = simulate(law, kSystem, kLimits, 24 * 2 * kPi);
  CHECK(r.distance == 0.0);
  CHECK(r.final_state.z == 0.0);
  for (const auto& rec : r.trajectory) {
    CHECK(rec.mode == FrictionMode::stick);
    CHECK(rec.z == 0.0);
  }
  CHECK(r.report.feasible);
  CHECK(r.report.min_contact_load == 15.5);
}

TEST_CASE("optimized control") {
  const ControlLaw law = optimized_k3();
  const double horizon = 24 * law.period();
  const auto r = simulate(law, kSystem, kLimits, horizon);
  CHECK(r.distance > 3.21);
  const auto report = check_constraints(law, kLimits, kSystem, horizon);
  CHECK(report.feasible);
  CHECK(report.max_speed_excess <= 0.0);
  CHECK(report.max_torque_deficit <= 0.0);
  CHECK(report.min_contact_load > 0.0);
}

TEST_CASE("step refinement") {
  std::mt19937_64 rng(4);
  for (int n = 0; n < 4; ++n) {
    const auto p = random_params(rng, 3, true, true);
    const ControlLaw law = reconstruct(p);
    const double horizon = 2 * law.period();
    SimulationOptions coarse, fine;
    coarse.record = fine.record = false;
    coarse.step = 1e-3;
    fine.step = 1e-4;
    const double a = simulate(law, kSystem, kLimits, horizon, coarse).distance;
    const double b = simulate(law, kSystem, kLimits, horizon, fine).distance;
    if (std::abs(b) > 1e-3) CHECK(std::abs(a - b) <= 1e-3 * std::abs(b));
    else CHECK(std::abs(a - b) < 1e-6);
  }
}

TEST_CASE("table path and lifted law give identical doubles") {
  const ControlLaw law = optimized_k3();
  const double horizon = 4 * law.period();
  SimulationOptions options;
  options.record_stride = 7;
  const auto direct = simulate(law, kSystem, kLimits, horizon, options);
  const HarmonicTable table(law.harmonics(), law.omega(), options.step,
                            step_count(horizon, options.step));
  const auto tabled = simulate(law, table, kSystem, kLimits, options);
  const auto lifted = simulate(law.lifted(), kSystem, kLimits, horizon, options);
  CHECK(direct.distance == tabled.distance);
  CHECK(direct.distance == lifted.distance);
  REQUIRE(direct.trajectory.size() == tabled.trajectory.size());
  for (std::size_t i = 0; i < direct.trajectory.size(); ++i) {
    CHECK(direct.trajectory[i].z == tabled.trajectory[i].z);
    CHECK(direct.trajectory[i].z_dot == lifted.trajectory[i].z_dot);
  }
}

TEST_CASE("record stride keeps the final state") {
  const ControlLaw law = optimized_k3();
  SimulationOptions options;
  options.record_stride = 1000;
  const auto r = simulate(law, kSystem, kLimits, 3.3, options);
  REQUIRE(!r.trajectory.empty());
  CHECK(r.trajectory.front().tau == 0.0);
  CHECK(r.trajectory.back().tau == doctest::Approx(3.3));
  CHECK(r.trajectory.back().z == r.final_state.z);
}

TEST_CASE("single steps") {
  const double h = 1e-3;
  SUBCASE("small load stays stuck") {
    const PendulumSample s{0.0, 0.0, 0.5};
    const CapsuleState next = advance({1.0, 0.2, 0.0, FrictionMode::stick}, {s, s, s}, kSystem, h);
    CHECK(next.tau == 1.0 + h);
    CHECK(next.z == 0.2);
    CHECK(next.z_dot == 0.0);
    CHECK(next.mode == FrictionMode::stick);
  }
  SUBCASE("breakaway moves along the net force") {
    const PendulumSample s{0.0, 0.0, 5.0};
    const CapsuleState next = advance({0.0, 0.0, 0.0, FrictionMode::stick}, {s, s, s}, kSystem, h);
    CHECK(next.mode == FrictionMode::slip);
    const double expected = (5.0 - 0.17 * 15.5) / 15.5;
    CHECK(next.z_dot == doctest::Approx(expected * h));
    CHECK(next.z == doctest::Approx(0.5 * expected * h * h));

    const PendulumSample t{0.0, 0.0, -5.0};
    const CapsuleState back = advance({0.0, 0.0, 0.0, FrictionMode::stick}, {t, t, t}, kSystem, h);
    CHECK(back.z_dot == doctest::Approx(-expected * h));
  }
  SUBCASE("velocity reversal inside a step is clamped") {
    const PendulumSample s{0.0, 0.0, 0.0};
    const double decel = 0.17;
    const double v0 = 0.3 * decel * h;
    const CapsuleState next = advance({0.0, 0.0, v0, FrictionMode::slip}, {s, s, s}, kSystem, h);
    CHECK(next.z_dot == 0.0);
    CHECK(next.mode == FrictionMode::stick);
    CHECK(next.z == doctest::Approx(0.5 * v0 * (v0 / decel)).epsilon(1e-6));
  }
  SUBCASE("reversal under a strong pull slides back within the step") {
    const PendulumSample s{0.0, 0.0, -5.0};
    const double a = (-5.0 - 0.17 * 15.5) / 15.5;
    const double b = (-5.0 + 0.17 * 15.5) / 15.5;
    const double v0 = -0.25 * a * h;
    const CapsuleState next = advance({0.0, 0.0, v0, FrictionMode::slip}, {s, s, s}, kSystem, h);
    const double s0 = -v0 / a;
    CHECK(next.mode == FrictionMode::slip);
    CHECK(next.z_dot == doctest::Approx(b * (h - s0)));
    CHECK(next.z == doctest::Approx(-v0 * v0 / (2 * a) + 0.5 * b * (h - s0) * (h - s0)));
  }
  SUBCASE("breakaway inside a step starts at the cone crossing") {
    // r_z rises linearly through the friction bound 2.635 at a quarter step.
    const double bound = 0.17 * 15.5;
    const double slope = 4.0 * 0.01 / h;
    auto at = [&](double t) { return PendulumSample{0.0, 0.0, bound - 0.01 + slope * t}; };
    const CapsuleState next =
        advance({0.0, 0.0, 0.0, FrictionMode::stick}, {at(0), at(h / 2), at(h)}, kSystem, h);
    const double u = 0.75 * h;
    CHECK(next.mode == FrictionMode::slip);
    CHECK(next.z_dot == doctest::Approx(slope * u * u / 2 / 15.5).epsilon(1e-9));
    CHECK(next.z == doctest::Approx(slope * u * u * u / 6 / 15.5).epsilon(1e-9));
  }
  SUBCASE("slip without reversal keeps decelerating") {
    const PendulumSample s{0.0, 0.0, 0.0};
    const CapsuleState next = advance({0.0, 0.0, 1.0, FrictionMode::slip}, {s, s, s}, kSystem, h);
    CHECK(next.z_dot == doctest::Approx(1.0 - 0.17 * h));
    CHECK(next.mode == FrictionMode::slip);
  }
}

TEST_CASE("constraint arithmetic") {
  CHECK(leap_speed_bound(kSystem) == doctest::Approx(3.9370039370059056).epsilon(1e-15));
  CHECK(leap_speed_bound(kSystem) > kLimits.speed_max);

  ConstraintReport r;
  accumulate(r, {0.0, 3.4, 0.0}, kLimits, kSystem);
  r.finalize();
  CHECK(-r.max_torque_deficit == doctest::Approx(0.7 * std::abs(25 - 10.85 * 3.4)));
  CHECK(-r.max_torque_deficit == doctest::Approx(8.323));
  CHECK(r.feasible);

  SUBCASE("speed binds before leaping") {
    const ControlLaw law = law_from(0.0, {0.0}, {3.6});
    const auto rep = check_constraints(law, kLimits, kSystem, law.period());
    CHECK(rep.max_speed_excess == doctest::Approx(0.2));
    CHECK(rep.max_leap_excess < 0.0);
    CHECK_FALSE(rep.feasible);
  }
  SUBCASE("torque check rejects hard acceleration") {
    // Available torque vanishes at u = 25 / 10.85 while u' is still nonzero.
    const ControlLaw law = law_from(0.0, {0.0}, {2.5});
    const auto rep = check_constraints(law, kLimits, kSystem, law.period());
    CHECK(rep.max_speed_excess < 0.0);
    CHECK(rep.max_torque_deficit > 0.0);
    CHECK_FALSE(rep.feasible);
  }
  SUBCASE("zero control") {
    const ControlLaw law = law_from(0.0, {0.0}, {0.0});
    const auto rep = check_constraints(law, kLimits, kSystem, law.period());
    CHECK(rep.feasible);
    CHECK(rep.min_contact_load == 15.5);
  }
  SUBCASE("drift is extrapolated over the horizon") {
    const ControlLaw law = law_from(0.02, {0.0}, {0.1});
    const auto one = check_constraints(law, kLimits, kSystem, law.period());
    const auto many = check_constraints(law, kLimits, kSystem, 24 * law.period());
    CHECK(one.feasible);
    CHECK_FALSE(many.feasible);
    CHECK(many.theta_high == doctest::Approx(one.theta_high + 23 * law.per_period_drift()));
  }
}

TEST_CASE("step count") {
  CHECK(step_count(2 * kPi, 1e-3) == 6283);
  CHECK(step_count(1.0, 0.3) == 3);
  CHECK_THROWS_AS(step_count(1.0, 0.0), ConfigError);
  CHECK(node_time(2000, 1e-3) == 1.0);
}
