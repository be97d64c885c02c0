#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "replab/attrition.hpp"
#include "replab/errors.hpp"
#include "replab/ess.hpp"

using namespace replab;

namespace {

AttritionSpec random_spec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> step(0.1, 1.5), drop(0.0, 0.3), frac(0.0, 0.45);
  AttritionSpec s;
  s.n = n;
  s.costs.resize(n + 1);
  s.rewards.resize(n + 1);
  s.rho.resize(n + 1);
  s.costs[0] = step(rng) - 0.1;
  for (std::size_t j = 1; j <= n; ++j) s.costs[j] = s.costs[j - 1] + step(rng);
  s.rewards[n] = 0.5 + step(rng);
  for (std::size_t j = n; j-- > 0;) s.rewards[j] = s.rewards[j + 1] + drop(rng);
  for (std::size_t j = 0; j <= n; ++j) s.rho[j] = frac(rng) * s.rewards[j];
  return s;
}

}  // namespace

TEST_CASE("payoff construction") {
  const auto one = build_payoff_5_1(AttritionSpec::unperturbed({0, 1}, {1, 1}));
  CHECK(one.matrix() == Matrix{{0.5, 0}, {1, -0.5}});
  const auto two = build_payoff_5_1(AttritionSpec::unperturbed({0, 1, 2}, {1, 1, 1}));
  CHECK(two.matrix() == Matrix{{0.5, 0, 0}, {1, -0.5, -1}, {1, 0, -1.5}});
  CHECK(build_constant({2, 1.0, 0.0}).matrix() == two.matrix());

  AttritionSpec pert = AttritionSpec::unperturbed({0, 1}, {1, 1});
  pert.rho = {0.1, 0.2};
  CHECK(max_abs_diff(build_modified_5_3(pert).matrix(), Matrix{{0.4, 0}, {1, -0.7}}) < 1e-15);
  CHECK(build_modified_5_3(AttritionSpec::unperturbed({0, 1, 2}, {1, 1, 1})).matrix() == two.matrix());

  CHECK_THROWS_AS(AttritionSpec::unperturbed({0, 1, 1}, {1, 1, 1}), PreconditionError);
  CHECK_THROWS_AS(AttritionSpec::unperturbed({0, 1, 2}, {1, 2, 1}), PreconditionError);
  AttritionSpec bad = AttritionSpec::unperturbed({0, 1}, {1, 1});
  bad.rho = {0.1, 0.5};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  CHECK_THROWS_AS((ConstantAttritionSpec{2, 1.0, 0.5}.validate()), PreconditionError);
}

TEST_CASE("CND certificate") {
  const auto c = cnd_certificate(AttritionSpec::unperturbed({0, 1, 2, 3}, {1, 1, 1, 1}));
  for (double v : c) CHECK(v == -2.0);
  const auto d = cnd_certificate(AttritionSpec::unperturbed({0, 1}, {1, 0.9}));
  CHECK(d[0] == doctest::Approx(-2.1));

  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_spec(rng, 1 + t % 7);
    for (double v : cnd_certificate(s)) CHECK(v < 0.0);
    CHECK(max_abs_diff(certificate_reconstruction(s), certificate_closed_form(s)) < 1e-12);
    CHECK(max_abs_diff(2.0 * reduced_symmetric_form(s), certificate_closed_form(s)) < 1e-12);
    CHECK(lambda2(build_modified_5_3(s)) < 0.0);
    CHECK(lambda2(build_payoff_5_1(s)) < 0.0);

    // Independent check of the reduced form from the matrix entries.
    const auto a = build_payoff_5_1(s);
    const Matrix red = reduced_symmetric_form(s);
    for (std::size_t j = 1; j <= s.n; ++j)
      for (std::size_t k = 1; k <= s.n; ++k) {
        const double want = 0.5 * (a(j, k) + a(k, j)) - a(j, 0) - a(0, k) + a(0, 0);
        CHECK(std::abs(red(j - 1, k - 1) - want) < 1e-12);
      }
  }
}

TEST_CASE("s index") {
  CHECK(s_index_5_5({1, 1.0, 0.0}) == std::optional<std::size_t>(0));
  CHECK(s_index_5_5({2, 1.0, 0.0}) == std::optional<std::size_t>(1));
  CHECK_FALSE(s_index_5_5({2, 4.0, 0.0}));
  CHECK(is_large_reward({2, 4.0, 0.0}));
  // The boundary v = 2n + 2 rho is the vertex case.
  CHECK(is_large_reward({2, 4.4, 0.2}));
  CHECK_FALSE(s_index_5_5({2, 4.4, 0.2}));
}

TEST_CASE("Chebyshev recurrence") {
  CHECK(chebyshev_u(-1, 0.3, 0.5) == 0.0);
  CHECK(chebyshev_u(0, 0.3, 0.5) == 1.0);
  CHECK(chebyshev_u(1, 0.3, 0.5) == doctest::Approx(-1.6));
  CHECK(chebyshev_u(2, 0.0, 0.25) == doctest::Approx(1.25));
  CHECK(chebyshev_u(3, 0.0, 0.25) == doctest::Approx(-1.5));
  for (double rho : {0.0, 0.1, 0.7})
    for (double g2 : {0.05, 0.25, 2.0, 9.0}) {
      const Vector tab = chebyshev_u_table(12, rho, g2);
      for (long k = 0; k <= 12; ++k) {
        const double u = chebyshev_u(k, rho, g2);
        CHECK(tab[static_cast<std::size_t>(k + 1)] == u);
        CHECK(oracle::rel_err(u, oracle::chebyshev_u_complex(k, rho, g2)) < 1e-9);
        CHECK((k % 2 == 0 ? u : -u) > 0.0);
      }
    }
}

TEST_CASE("closed-form ESS examples") {
  const auto big = closed_form_ess({2, 4.0, 0.0});
  CHECK(big.p.vec() == Vector{0, 0, 1});
  CHECK_FALSE(big.s);

  const auto one = closed_form_ess({1, 1.0, 0.0});
  CHECK(max_abs_diff(one.p.weights(), Vector{0.5, 0.5}) < 1e-14);

  const auto two = closed_form_ess({2, 1.0, 0.0});
  CHECK(max_abs_diff(two.p.weights(), Vector{0.6, 0.2, 0.2}) < 1e-14);
  REQUIRE(two.s);
  CHECK(*two.s == 1);
  REQUIRE(two.c);
  CHECK(*two.c == doctest::Approx(1.25));
  CHECK(*two.c_check == doctest::Approx(1.25));
}

TEST_CASE("closed form matches support enumeration over a grid") {
  int checked = 0;
  for (std::size_t n = 1; n <= 6; ++n)
    for (double f : {0.0, 0.1, 0.2, 0.4})
      for (double v = 0.25; v <= (2.0 * n + 1.0) / (1.0 - 2.0 * f) + 1e-12; v += 0.25) {
        ConstantAttritionSpec spec{n, v, f * v};
        if (f * v >= v / 2) continue;
        const auto s = s_index_5_5(spec);
        // Skip the degenerate left-equality points; the sweep nudges those.
        if (s && std::abs(static_cast<double>(n) - 1.0 + spec.rho - v / 2.0 - static_cast<double>(*s)) < 1e-12)
          continue;
        const auto closed = closed_form_ess(spec);
        const auto a = build_constant(spec);
        const auto enumerated = unique_ess_under_cnd(a);
        CHECK(max_abs_diff(closed.p.weights(), enumerated.strategy.weights()) < 1e-9);
        CHECK(closed.p[n] > 0.0);

        // Equal payoffs on the support, no better reply off it.
        const Vector bp = a.apply(closed.p.weights());
        const double c = enumerated.common_payoff;
        for (std::size_t j = 0; j <= n; ++j) {
          if (closed.p[j] > 0.0) CHECK(std::abs(bp[j] - c) < 1e-9);
          else CHECK(bp[j] <= c + 1e-9);
        }

        // Zeros forced by the support threshold.
        for (std::size_t j : support_threshold_5_2(spec.general())) CHECK(closed.p[j] == 0.0);

        // Sign lattice of t and c.
        if (s) {
          for (std::size_t j = 1; j <= *s + 2; ++j) {
            const double t = t_sequence(j, *s, spec);
            CHECK((j % 2 == 0 ? t : -t) > 0.0);
          }
          CHECK(((*s + 1) % 2 == 0 ? *closed.c : -*closed.c) > 0.0);
        }
        ++checked;
      }
  CHECK(checked > 100);
}

TEST_CASE("support threshold") {
  CHECK(support_threshold_5_2(AttritionSpec::unperturbed({0, 1, 2}, {1, 1, 1})).empty());
  CHECK(support_threshold_5_2(AttritionSpec::unperturbed({0, 1.8, 2}, {1, 1, 1})) == std::vector<std::size_t>{1});
}

TEST_CASE("determinant identities") {
  const auto s1 = AttritionSpec::unperturbed({0, 1}, {1, 1});
  CHECK(det_column_replaced_5_3(s1, 1) == doctest::Approx(-0.5));
  CHECK(det_B_5_4({1, 1.0, 0.0}) == doctest::Approx(-0.25));
  CHECK(det_B_5_4({2, 1.0, 0.0}) == doctest::Approx(0.375));

  std::mt19937_64 rng(19);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_spec(rng, 1 + t % 8);
    const auto b = build_modified_5_3(s);
    for (std::size_t k = 0; k <= s.n; ++k) {
      const double want = oracle::cofactor_det(column_replaced(b, k));
      CHECK(oracle::rel_err(det_column_replaced_5_3(s, k), want) < 1e-9);
    }
  }
  for (std::size_t n = 1; n <= 10; ++n)
    for (double v : {0.5, 1.0, 3.3})
      for (double f : {0.0, 0.15, 0.4}) {
        const ConstantAttritionSpec spec{n, v, f * v};
        const double got = det_B_5_4(spec);
        CHECK(oracle::rel_err(got, oracle::cofactor_det(build_constant(spec).matrix())) < 1e-9);
      }

  CHECK(tridiag_det_A1(2.5, 1.0, 3.0, 1) == 2.5);
  CHECK(tridiag_det_A1(2.5, 1.0, 3.0, 2) == doctest::Approx(2.5 * 2.5 + 3.0));
  CHECK(tridiag_det_A1(1.0, 1.0, 1.0, 3) == doctest::Approx(3.0));
  for (std::size_t n = 1; n <= 10; ++n) {
    const double got = tridiag_det_A1(-0.7, 0.4, 1.3, n);
    CHECK(oracle::rel_err(got, oracle::cofactor_det(tridiag_matrix_A1(-0.7, 0.4, 1.3, n))) < 1e-9);
  }
}

TEST_CASE("ESS sweep") {
  SweepGrid grid;
  grid.n_max = 3;
  const auto sweep = ess_sweep(grid);
  CHECK(sweep.rows.size() > 50);
  std::size_t nudged = 0;
  for (const auto& row : sweep.rows) {
    if (row.perturbed) ++nudged;
    const auto enumerated = unique_ess_under_cnd(build_constant(row.spec));
    CHECK(max_abs_diff(row.ess.p.weights(), enumerated.strategy.weights()) < 1e-9);
  }
  CHECK(nudged == sweep.perturbed);
}

TEST_CASE("persistence experiment runs in and out of the small-noise regime") {
  CampaignOptions opt;
  opt.cfg.h = 1e-2;
  opt.cfg.horizon = 40.0;
  opt.cfg.seed = 8;
  opt.n_paths = 40;
  const auto quiet = persistence_experiment({2, 1.0, 0.0}, NoiseSpec::uniform(3, 0.05), SimplexPoint::barycenter(3), opt);
  CHECK(quiet.verdict != Verdict::kViolated);
  CHECK(quiet.detail("p_n") == doctest::Approx(0.2));
  const auto loud = persistence_experiment({2, 1.0, 0.0}, NoiseSpec::uniform(3, 1.5), SimplexPoint::barycenter(3), opt);
  CHECK(loud.detail("noise_regime") == 0.0);
  CHECK(loud.verdict != Verdict::kViolated);
}
