#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "replab/errors.hpp"
#include "replab/game.hpp"

using namespace replab;

namespace {

const PayoffMatrix kPd{{3, 0}, {5, 1}};
const PayoffMatrix kDominated{{2, 2, 2}, {4, 1, 1}, {1, 4, 4}};
const PayoffMatrix kAttrition1{{0.5, 0}, {1, -0.5}};

PayoffMatrix random_game(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
  return PayoffMatrix(m);
}

SimplexPoint random_interior(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector w(n);
  double s = 0.0;
  for (double& x : w) s += (x = e(rng) + 1e-3);
  for (double& x : w) x /= s;
  return SimplexPoint::interior(w);
}

}  // namespace

TEST_CASE("value types enforce their invariants") {
  CHECK_THROWS_AS(PayoffMatrix(Matrix{{1.0}}), PreconditionError);
  CHECK_THROWS_AS(PayoffMatrix(Matrix{{1, NAN}, {0, 0}}), PreconditionError);
  CHECK_THROWS_AS(SimplexPoint::interior({0.5, 0.6}), PreconditionError);
  CHECK_THROWS_AS(SimplexPoint::interior({0.0, 1.0}), PreconditionError);
  CHECK_THROWS_AS(SimplexPoint::closure({-0.1, 1.1}), PreconditionError);
  CHECK_NOTHROW(SimplexPoint::closure({0.0, 1.0}));
  CHECK_THROWS_AS(NoiseSpec({0.1, 0.0}), PreconditionError);
  CHECK_THROWS_AS(Region::ball(SimplexPoint::barycenter(2), 0.0), PreconditionError);
  CHECK_THROWS_AS(Region::any_vertex(1.0), PreconditionError);
  CHECK(SimplexPoint::vertex(3, 2).vertex_index() == 2u);
  CHECK_FALSE(SimplexPoint::barycenter(3).vertex_index());
}

TEST_CASE("regions") {
  const Vector x{0.95, 0.03, 0.02};
  CHECK(Region::vertex_neighborhood(0, 0.05).contains(x));
  CHECK_FALSE(Region::vertex_neighborhood(1, 0.05).contains(x));
  CHECK(Region::any_vertex(0.05).contains(x));
  CHECK(Region::ball(SimplexPoint::vertex(3, 0), 0.1).contains(x));
  CHECK_FALSE(Region::ball(SimplexPoint::barycenter(3), 0.1).contains(x));
  CHECK(Region::everything().contains(x));
  CHECK_FALSE(Region::empty().contains(x));
  CHECK(Region::coordinate_at_most(2, 0.05).contains(x));
}

TEST_CASE("centered symmetrization") {
  CHECK(max_abs_diff(centered_symmetrization(PayoffMatrix{{0, 0}, {0, 0}}), Matrix(2, 2)) == 0.0);
  CHECK(max_abs_diff(centered_symmetrization(PayoffMatrix{{-1, 0}, {0, -1}}), Matrix{{-0.5, 0.5}, {0.5, -0.5}}) <
        1e-15);
  const Matrix d = centered_symmetrization(kAttrition1);
  CHECK(max_abs_diff(d, Matrix{{-0.25, 0.25}, {0.25, -0.25}}) < 1e-15);
  const Vector y{1, -1};
  CHECK(oracle::quadratic_form(d, y) == doctest::Approx(kAttrition1.form(y, y)));
}

TEST_CASE("centered symmetrization annihilates the ones vector") {
  std::mt19937_64 rng(3);
  for (std::size_t n = 2; n <= 12; ++n) {
    const Matrix d = centered_symmetrization(random_game(n, rng));
    const Vector ones(n, 1.0);
    for (double v : d * ones) CHECK(std::abs(v) < 1e-12);
    CHECK(max_abs_diff(d, d.transpose()) == 0.0);
  }
}

TEST_CASE("lambda2 examples") {
  CHECK(lambda2(PayoffMatrix{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}) == doctest::Approx(0.0));
  CHECK(lambda2(PayoffMatrix{{-1, 0}, {0, -1}}) == doctest::Approx(-1.0));
  CHECK(lambda2(kAttrition1) == doctest::Approx(-0.5));
  CHECK(is_conditionally_negative_definite(PayoffMatrix{{-1, 0}, {0, -1}}));
  CHECK_FALSE(is_conditionally_negative_definite(PayoffMatrix{{1, 0}, {0, 1}}));
  CHECK(cnd_verdict(0.0) == CndVerdict::kBoundaryIndefinite);
  CHECK(cnd_verdict(-1e-9) == CndVerdict::kNegativeDefinite);
  CHECK(cnd_verdict(1e-9) == CndVerdict::kIndefinite);
}

TEST_CASE("zero-sum Rayleigh quotients never exceed lambda2 for CND matrices") {
  std::mt19937_64 rng(17);
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 40; ++trial) {
    const std::size_t n = 2 + trial % 7;
    Matrix m = random_game(n, rng).matrix();
    for (std::size_t i = 0; i < n; ++i) m(i, i) -= 4.0;  // tilt towards CND
    const PayoffMatrix a(m);
    const double l2 = lambda2(a);
    if (!is_conditionally_negative_definite(a)) continue;
    ++tested;
    const Matrix d = centered_symmetrization(a);
    const auto eig = jacobi_eigen(d);
    double best = -INFINITY;
    for (int s = 0; s < 1000; ++s) {
      const Vector y = oracle::zero_sum_direction(n, rng);
      const double q = a.form(y, y);
      CHECK(q <= l2 + 1e-9);
      best = std::max(best, q);
    }
    // The eigenvector achieving lambda2 is zero-sum whenever the ones vector
    // spans the eigenvalue-0 space; include it in the sample.
    for (std::size_t c = 0; c < n; ++c) {
      Vector y(n);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (y[i] = eig.vectors(i, c));
      if (std::abs(s) > 1e-8) continue;
      best = std::max(best, a.form(y, y));
    }
    CHECK(best >= l2 - 1e-3);
  }
  CHECK(tested >= 20);
}

TEST_CASE("CND verdict agrees with brute-force sign checks") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + trial % 7;
    Matrix m = random_game(n, rng).matrix();
    for (std::size_t i = 0; i < n; ++i) m(i, i) -= (trial % 3) * 2.0;
    const PayoffMatrix a(m);
    const double l2 = lambda2(a);
    if (std::abs(l2) < 1e-3) continue;  // too close to call by sampling
    bool any_nonneg = false;
    for (int s = 0; s < 10000 && !any_nonneg; ++s) {
      const Vector y = oracle::zero_sum_direction(n, rng);
      if (a.form(y, y) >= 0.0) any_nonneg = true;
    }
    if (is_conditionally_negative_definite(a)) CHECK_FALSE(any_nonneg);
    else if (n <= 4) CHECK(any_nonneg);  // in low dimension sampling finds the positive cone
  }
}

TEST_CASE("kl distance") {
  CHECK(kl_distance(SimplexPoint::interior({0.5, 0.5}), SimplexPoint::interior({0.5, 0.5})) == 0.0);
  CHECK(kl_distance(SimplexPoint::interior({0.25, 0.75}), SimplexPoint::interior({0.5, 0.5})) ==
        doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)));
  CHECK(kl_distance(SimplexPoint::interior({0.25, 0.75}), SimplexPoint::closure({0.0, 1.0})) ==
        doctest::Approx(std::log(4.0 / 3.0)));
  CHECK_THROWS_AS(kl_distance(SimplexPoint::closure({0.0, 1.0}), SimplexPoint::barycenter(2)), PreconditionError);

  const SimplexPoint p = SimplexPoint::interior({0.2, 0.3, 0.5});
  for (int i = 1; i < 20; ++i)
    for (int j = 1; i + j < 20; ++j) {
      const auto x = SimplexPoint::interior({i / 20.0, j / 20.0, (20 - i - j) / 20.0});
      const double d = kl_distance(x, p);
      CHECK(d >= 0.0);
      if (max_abs_diff(x.weights(), p.weights()) > 1e-12) CHECK(d > 0.0);
    }
}

TEST_CASE("kappa") {
  CHECK(kappa(SimplexPoint::barycenter(2), NoiseSpec({1, 1})) == doctest::Approx(0.5));
  CHECK(kappa(SimplexPoint::interior({0.3, 0.7}), NoiseSpec({2, 2})) == doctest::Approx(1.0));
  for (std::size_t n = 2; n <= 6; ++n) {
    const double s = 0.37;
    const double k = kappa(SimplexPoint::vertex(n, 0), NoiseSpec::uniform(n, s));
    CHECK(k * k == doctest::Approx(s * s * static_cast<double>(n - 1) / (2.0 * static_cast<double>(n))));
  }
}

TEST_CASE("interior condition") {
  const auto p = SimplexPoint::barycenter(2);
  CHECK(condition_2_2(p, NoiseSpec({1, 1}), -1.0));
  CHECK_FALSE(condition_2_2(p, NoiseSpec({4, 4}), -1.0));
  CHECK_FALSE(condition_2_2(SimplexPoint::closure({0.0, 1.0}), NoiseSpec({0.1, 0.1}), -1.0));
  CHECK_THROWS_AS(condition_2_2(p, NoiseSpec({1, 1}), 0.0), PreconditionError);
}

TEST_CASE("modified matrix") {
  const auto small = modified_matrix(kPd, NoiseSpec({1e-6, 1e-6}));
  // sigma^2 = 1e-12 exactly; allow the rounding of a_jj - 1e-12 near 3.
  CHECK(max_abs_diff(small.matrix(), kPd.matrix()) <= 1e-12 + 4 * 0x1p-52 * 3);
  CHECK(max_abs_diff(modified_matrix(PayoffMatrix{{1, 0}, {0, 1}}, NoiseSpec({1, 1})).matrix(), Matrix(2, 2)) ==
        0.0);
  CHECK(modified_matrix(kPd, NoiseSpec({1, 2})).matrix() == Matrix{{2, 0}, {5, -3}});
}

TEST_CASE("dominance") {
  const auto r = verify_dominance(kDominated, 0, SimplexPoint::closure({0, 0.5, 0.5}));
  CHECK(r.kind == Dominance::kStrict);
  CHECK(r.c1 == doctest::Approx(0.5));
  CHECK(verify_dominance(PayoffMatrix{{0, 0}, {0, 0}}, 0, SimplexPoint::vertex(2, 1)).kind == Dominance::kNone);
  const auto pd = verify_dominance(kPd, 0, SimplexPoint::vertex(2, 1));
  CHECK(pd.kind == Dominance::kStrict);
  CHECK(pd.c1 == doctest::Approx(1.0));
  CHECK_THROWS_AS(verify_dominance(kPd, 0, SimplexPoint::vertex(2, 0)), PreconditionError);
  // weak: ties against column 1, strictly better against column 2
  CHECK(verify_dominance(PayoffMatrix{{1, 0}, {1, 1}}, 0, SimplexPoint::vertex(2, 1)).kind == Dominance::kWeak);
}

TEST_CASE("dominance ignores constants added to a column") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 3;
    const PayoffMatrix a = random_game(n, rng);
    Matrix shifted = a.matrix();
    std::uniform_real_distribution<double> u(-5, 5);
    const std::size_t col = t % n;
    const double c = u(rng);
    for (std::size_t i = 0; i < n; ++i) shifted(i, col) += c;
    const auto p = random_interior(n, rng);
    const auto r1 = verify_dominance(a, 0, p);
    const auto r2 = verify_dominance(PayoffMatrix(shifted), 0, p);
    CHECK(r1.c1 == doctest::Approx(r2.c1).epsilon(1e-12));
  }
}

TEST_CASE("search for a dominating strategy") {
  const auto d = search_dominating_strategy(kDominated, 0);
  REQUIRE(d);
  CHECK(d->kind == Dominance::kStrict);
  CHECK(d->c1 >= 0.5 - 1e-12);
  CHECK(verify_dominance(kDominated, 0, d->p).c1 == doctest::Approx(d->c1));
  CHECK_FALSE(search_dominating_strategy(PayoffMatrix{{0, 0}, {0, 0}}, 0));
  const auto pd = search_dominating_strategy(kPd, 0);
  REQUIRE(pd);
  CHECK(pd->c1 == doctest::Approx(1.0));
  CHECK(pd->p[1] == doctest::Approx(1.0));
  CHECK_FALSE(search_dominating_strategy(kDominated, 1));
  const auto weak = search_dominating_strategy(PayoffMatrix{{1, 0}, {1, 1}}, 0);
  REQUIRE(weak);
  CHECK(weak->kind == Dominance::kWeak);
}

TEST_CASE("search result is optimal against random mixed strategies") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 3 + t % 3;
    const PayoffMatrix a = random_game(n, rng);
    const auto found = search_dominating_strategy(a, 0);
    const double best = found ? found->c1 : 0.0;
    for (int s = 0; s < 300; ++s) {
      const auto p = random_interior(n, rng);
      if (std::abs(p[0] - 1.0) < 1e-9) continue;
      const double c1 = verify_dominance(a, 0, p).c1;
      if (found) CHECK(c1 <= best + 1e-9);
      else CHECK(c1 <= 1e-9);
    }
  }
}

TEST_CASE("equilibrium classification") {
  CHECK(classify_equilibrium(kPd, SimplexPoint::vertex(2, 1)) == EquilibriumStatus::kStrictNash);
  CHECK(classify_equilibrium(kPd, SimplexPoint::vertex(2, 0)) == EquilibriumStatus::kNotNash);
  CHECK(classify_equilibrium(kAttrition1, SimplexPoint::barycenter(2)) == EquilibriumStatus::kEssCertified);
  CHECK(classify_equilibrium(PayoffMatrix{{1, 0}, {0, 1}}, SimplexPoint::barycenter(2)) ==
        EquilibriumStatus::kEssRefuted);
  CHECK(classify_equilibrium(kAttrition1, SimplexPoint::barycenter(2), {.check_ess = false}) ==
        EquilibriumStatus::kNash);
  // hawk-dove: interior ESS
  CHECK(classify_equilibrium(PayoffMatrix{{-1, 2}, {0, 1}}, SimplexPoint::barycenter(2)) ==
        EquilibriumStatus::kEssCertified);
}

TEST_CASE("classification ignores constants added to a column") {
  const std::vector<std::pair<PayoffMatrix, SimplexPoint>> cases{
      {kPd, SimplexPoint::vertex(2, 1)},
      {kAttrition1, SimplexPoint::barycenter(2)},
      {PayoffMatrix{{1, 0}, {0, 1}}, SimplexPoint::barycenter(2)},
      {PayoffMatrix{{1, 0}, {0, 1}}, SimplexPoint::vertex(2, 0)},
  };
  for (const auto& [a, p] : cases) {
    for (double c : {-3.0, 0.5, 7.0}) {
      Matrix m = a.matrix();
      for (std::size_t i = 0; i < m.rows(); ++i) m(i, 1) += c;
      CHECK(classify_equilibrium(PayoffMatrix(m), p) == classify_equilibrium(a, p));
    }
  }
}

TEST_CASE("noisy strict Nash condition and coordination games") {
  CHECK(strict_nash_condition_4_1(kPd, NoiseSpec({0.1, 0.5}), 1));
  CHECK_FALSE(strict_nash_condition_4_1(kPd, NoiseSpec({0.1, std::sqrt(1.5)}), 1));
  CHECK(strict_nash_condition_4_1(kPd, NoiseSpec({1e-6, 1e-6}), 1));
  CHECK_FALSE(strict_nash_condition_4_1(kPd, NoiseSpec({1e-6, 1e-6}), 0));
  const PayoffMatrix coord{{2, 0, 0}, {0, 2, 0}, {0, 0, 2}};
  CHECK(is_coordination_game(coord, NoiseSpec::uniform(3, 0.1)));
  CHECK_FALSE(is_coordination_game(kPd, NoiseSpec({0.1, 0.1})));
  CHECK_FALSE(is_coordination_game(coord, NoiseSpec({std::sqrt(3.0), 0.1, 0.1})));
}
