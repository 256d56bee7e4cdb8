#include <set>

#include "doctest.h"
#include "sillopt/design_space.hpp"

using namespace sill;

namespace {

ThicknessVector mid() { return DesignSpace::side_sill().midpoint(); }

DesignSpace reduced3() {
  return DesignSpace({{"a", 1.0, 2.0, 0.25}, {"b", 2.0, 4.0, 0.5}, {"c", 0.0, 0.4, 0.1}});
}

}  // namespace

TEST_SUITE("design_space") {
  TEST_CASE("side sill space has the expected level counts") {
    const auto s = DesignSpace::side_sill();
    REQUIRE(s.size() == 7);
    const Eigen::VectorXi expected = (Eigen::VectorXi(7) << 16, 11, 11, 21, 21, 11, 11).finished();
    CHECK(s.level_counts() == expected);
    CHECK(s.grid_size() == 16ull * 11 * 11 * 21 * 21 * 11 * 11);
  }

  TEST_CASE("constructor rejects malformed parameters") {
    CHECK_THROWS_AS(DesignSpace({{"x", 2.0, 1.0, 0.1}}), std::invalid_argument);
    CHECK_THROWS_AS(DesignSpace({{"x", 1.0, 2.0, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(DesignSpace({{"x", 1.0, 2.0, 0.3}}), std::invalid_argument);
  }

  TEST_CASE("validate") {
    const auto s = DesignSpace::side_sill();
    ThicknessVector t = mid();
    t[0] = 1.5;
    CHECK(validate(s, t));
    t[0] = 3.1;
    CHECK_FALSE(validate(s, t));
    CHECK(validate(s, s.upper()));
    CHECK_THROWS_AS(validate(s, ThicknessVector::Zero(3)), ArityError);
  }

  TEST_CASE("clamp") {
    const auto s = DesignSpace::side_sill();
    ThicknessVector t = mid();
    t[3] = 0.5;
    t[1] = 5.0;
    const auto c = clamp(s, t);
    CHECK(c[3] == 1.0);
    CHECK(c[1] == 4.0);
    CHECK(clamp(s, mid()) == mid());
  }

  TEST_CASE("random_grid_sample") {
    const auto s = DesignSpace::side_sill();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto t = random_grid_sample(s, seed);
      CHECK(validate(s, t));
      CHECK(is_grid_aligned(s, t));
    }
    CHECK(random_grid_sample(s, 42) == random_grid_sample(s, 42));

    std::mt19937_64 rng(7);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += random_grid_sample(s, rng)[0];
    CHECK(std::abs(sum / 10000 - 2.25) < 0.02 * 2.25);
  }

  TEST_CASE("apply_action moves one step and saturates at the bounds") {
    const auto s = DesignSpace::side_sill();
    ThicknessVector t = s.lower();
    const auto up = apply_action(s, t, {0, Direction::Increment});
    CHECK(up[0] == doctest::Approx(1.6));
    CHECK(apply_action(s, t, {3, Direction::Decrement}) == t);
    const ThicknessVector top = s.upper();
    CHECK(apply_action(s, top, {5, Direction::Increment}) == top);
  }

  TEST_CASE("apply_action followed by its opposite is the identity unless it saturated") {
    const auto s = DesignSpace::side_sill();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const GridIndex g = random_grid_index(s, rng);
      const auto a = DesignAction::from_index(static_cast<int>(rng() % 14), 7);
      const GridIndex moved = apply_action(s, g, a);
      if (moved == g) continue;
      CHECK(apply_action(s, moved, a.opposite()) == g);
    }
  }

  TEST_CASE("action index encoding") {
    for (int i = 0; i < 14; ++i) CHECK(DesignAction::from_index(i, 7).index() == i);
    CHECK(DesignAction::from_index(5, 7).param == 2);
    CHECK(DesignAction::from_index(5, 7).direction == Direction::Decrement);
    CHECK_THROWS(DesignAction::from_index(14, 7));
  }

  TEST_CASE("enumerate_grid") {
    const auto g = enumerate_grid(reduced3());
    CHECK(g.size() == 5u * 5u * 5u);
    std::set<std::vector<double>> distinct;
    for (const auto& t : g) distinct.insert({t.data(), t.data() + t.size()});
    CHECK(distinct.size() == g.size());
    CHECK(g.front() == reduced3().lower());
    CHECK(g[1][2] == doctest::Approx(0.1));  // last parameter varies fastest

    const auto one = enumerate_grid(DesignSpace({{"x", 1.0, 1.2, 0.1}}));
    REQUIRE(one.size() == 3);
    CHECK(one[0][0] == doctest::Approx(1.0));
    CHECK(one[1][0] == doctest::Approx(1.1));
    CHECK(one[2][0] == doctest::Approx(1.2));

    try {
      enumerate_grid(DesignSpace::side_sill());
      FAIL("expected refusal");
    } catch (const GridTooLarge& e) {
      CHECK(e.count() == DesignSpace::side_sill().grid_size());
    }
  }

  TEST_CASE("encode and decode are inverse on the grid") {
    const auto s = DesignSpace::side_sill();
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
      const GridIndex g = random_grid_index(s, rng);
      CHECK(s.encode(s.decode(g)) == g);
    }
    CHECK(snap_to_grid(s, mid() + ThicknessVector::Constant(7, 0.01)) == snap_to_grid(s, mid()));
  }

  TEST_CASE("json round trip keeps order") {
    const auto s = DesignSpace::side_sill();
    const nlohmann::json j = s;
    CHECK(j.at("parameters")[4].at("name") == "t5");
    CHECK(j.get<DesignSpace>() == s);
  }
}
