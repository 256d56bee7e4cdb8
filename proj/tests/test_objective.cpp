#include "doctest.h"
#include "sillopt/objective.hpp"

using namespace sill;

namespace {

// Anchors chosen so scaled values are easy to read: energies map 0..99 J -> 1..100.
ScalingReference unit_ref() { return {{0.0, 99.0}, {0.0, 99.0}, {0.0, 99.0}}; }

}  // namespace

TEST_SUITE("objective") {
  TEST_CASE("scale endpoints and midpoint") {
    const ScalingReference ref{{700, 900}, {500, 700}, {10, 20}};
    CHECK(scale(ref, Objective::EaSs, 700) == 1.0);
    CHECK(scale(ref, Objective::EaSs, 900) == 100.0);
    CHECK(scale(ref, Objective::EaSs, 800) == doctest::Approx(50.5));
    CHECK(scale(ref, Objective::Mass, 25) > 100.0);  // extrapolates
  }

  TEST_CASE("reward arithmetic") {
    // f1 = 150, M1 = 140, f2 = 50 -> R = -15
    const auto ref = unit_ref();
    TargetSpec target;
    target.ideal_ea_ss = 69.0;  // scaled 70
    target.ideal_ea_f = 69.0;   // scaled 70
    const ObjectiveTriple cur{74.0, 74.0, 49.0, std::nullopt};  // scaled 75 + 75, mass 50
    CHECK(reward(ref, target, cur) == doctest::Approx(-15.0));

    // Energies at the ideal, scaled mass 1 -> R = -0.5
    const ObjectiveTriple at_ideal{69.0, 69.0, 0.0, std::nullopt};
    CHECK(reward(ref, target, at_ideal) == doctest::Approx(-0.5));

    ObjectiveTriple more = at_ideal;
    more.ea_ss += 1.0;
    CHECK(reward(ref, target, more) > reward(ref, target, at_ideal));
  }

  TEST_CASE("O is the negative of R and has the right monotonicity") {
    const ScalingReference ref{{700, 900}, {500, 700}, {10, 20}};
    const TargetSpec target;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 100; ++i) {
      const ObjectiveTriple o{600 + 400 * u(rng), 400 + 400 * u(rng), 8 + 15 * u(rng), std::nullopt};
      CHECK(optimization_value(ref, target, o) + reward(ref, target, o) == 0.0);
      ObjectiveTriple heavier = o;
      heavier.mass += 0.5;
      CHECK(optimization_value(ref, target, heavier) > optimization_value(ref, target, o));
      ObjectiveTriple stronger = o;
      stronger.ea_f += 5;
      CHECK(optimization_value(ref, target, stronger) < optimization_value(ref, target, o));
    }
  }

  TEST_CASE("reward gradient matches finite differences") {
    const ScalingReference ref{{700, 900}, {500, 700}, {10, 20}};
    const TargetSpec target;
    const ObjectiveTriple o{800, 600, 13, std::nullopt};
    const Eigen::Vector3d g = reward_gradient(ref, target);
    const double h = 1e-3;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d p = o.as_vector();
      Eigen::Vector3d m = o.as_vector();
      p[k] += h;
      m[k] -= h;
      const double fd = (reward(ref, target, ObjectiveTriple::from_vector(p)) -
                         reward(ref, target, ObjectiveTriple::from_vector(m))) / (2 * h);
      CHECK(g[k] == doctest::Approx(fd).epsilon(1e-8));
    }
  }

  TEST_CASE("t2 uses a strict threshold on the mean scaled gap") {
    const auto ref = unit_ref();
    TargetSpec target;
    target.ideal_ea_ss = 50.0;
    target.ideal_ea_f = 50.0;
    CHECK(t2_satisfied(ref, target, {50.0, 50.0, 10.0, std::nullopt}));
    CHECK_FALSE(t2_satisfied(ref, target, {54.0, 44.0, 10.0, std::nullopt}));  // diffs 4 and 6
    CHECK(t2_satisfied(ref, target, {54.0, 46.0, 10.0, std::nullopt}));        // diffs 4 and 4
    CHECK(scaled_energy_gap(ref, target, {54.0, 44.0, 10.0, std::nullopt}) == doctest::Approx(5.0));
  }

  TEST_CASE("fit_scaling_reference") {
    const std::vector<ObjectiveTriple> two{{700, 500, 12, std::nullopt}, {900, 650, 15, std::nullopt}};
    const auto ref = fit_scaling_reference(two);
    CHECK(ref.ea_ss == Range{700, 900});
    CHECK(scale(ref, Objective::EaSs, 700) == 1.0);
    const std::vector<ObjectiveTriple> one{{700, 500, 12, std::nullopt}};
    CHECK_THROWS(fit_scaling_reference(one));
  }

  TEST_CASE("argmax of R is invariant under a common positive affine re-anchoring") {
    const ScalingReference ref{{700, 900}, {500, 700}, {10, 20}};
    // New anchors chosen so every scaled value s becomes a*s + b for all three objectives.
    const double a = 2.0, b = 3.0;
    const auto remap = [&](Range r) {
      const double w = r.max - r.min;
      const double lo = r.min + (1.0 - a - b) * w / (99.0 * a);
      return Range{lo, lo + w / a};
    };
    const ScalingReference ref2{remap(ref.ea_ss), remap(ref.ea_f), remap(ref.mass)};
    CHECK(scale(ref2, Objective::Mass, 13.0) == doctest::Approx(a * scale(ref, Objective::Mass, 13.0) + b));

    const TargetSpec target;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<ObjectiveTriple> designs;
    for (int i = 0; i < 50; ++i) designs.push_back({600 + 400 * u(rng), 400 + 400 * u(rng), 8 + 15 * u(rng), {}});
    const auto argmax = [&](const ScalingReference& r) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < designs.size(); ++i) {
        if (reward(r, target, designs[i]) > reward(r, target, designs[best])) best = i;
      }
      return best;
    };
    CHECK(argmax(ref) == argmax(ref2));
  }

  TEST_CASE("target parsing") {
    const auto t = TargetSpec::parse("800,600,13");
    CHECK(t.ideal_ea_ss == 800);
    CHECK(t.ideal_ea_f == 600);
    CHECK(t.mass_info == 13);
    CHECK(TargetSpec::parse(" 825, 625 ,14").ideal_ea_f == 625);
    try {
      TargetSpec::parse("800,600");
      FAIL("expected arity error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find('3') != std::string::npos);
    }
    CHECK_THROWS(TargetSpec::parse("800,abc,13"));
  }
}
