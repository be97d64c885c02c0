#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracles.hpp"
#include "replab/attrition.hpp"
#include "replab/bounds.hpp"
#include "replab/errors.hpp"
#include "replab/ess.hpp"

using namespace replab;

namespace {

const PayoffMatrix kPd{{3, 0}, {5, 1}};
const PayoffMatrix kTestbed{{0.5, 0, 0}, {1, -0.5, -1}, {1, 0, -1.5}};
const PayoffMatrix kDominated{{2, 2, 2}, {4, 1, 1}, {1, 4, 4}};

CampaignOptions campaign(double h, double horizon, std::uint64_t seed, std::size_t paths) {
  CampaignOptions o;
  o.cfg.h = h;
  o.cfg.horizon = horizon;
  o.cfg.seed = seed;
  o.n_paths = paths;
  return o;
}

}  // namespace

TEST_CASE("normal distribution function against quadrature") {
  for (int i = 0; i < 20; ++i) {
    const double v = -6.0 + 12.0 * i / 19.0;
    CHECK(std::abs(normal_cdf(v) - oracle::normal_cdf_quadrature(v)) < 1e-10);
    CHECK(std::abs(normal_sf(v) - (1.0 - oracle::normal_cdf_quadrature(v))) < 1e-10);
  }
  CHECK(normal_cdf(0.0) == 0.5);
  // Far tail keeps relative accuracy: 1 - Phi(10) = 7.6198530241605e-24.
  CHECK(normal_sf(10.0) == doctest::Approx(7.6198530241605e-24).epsilon(1e-10));
}

TEST_CASE("verdict rule") {
  CHECK(upper_bound_verdict(1.0, 0.1, 0.8, 0.0) == Verdict::kConsistent);
  CHECK(upper_bound_verdict(1.2, 0.1, 0.8, 0.0) == Verdict::kViolated);
  CHECK(upper_bound_verdict(1.2, 0.1, 0.8, 0.2) == Verdict::kConsistent);
  CHECK(lower_bound_verdict(0.6, 0.1, 0.8, 0.0) == Verdict::kConsistent);
  CHECK(lower_bound_verdict(0.4, 0.1, 0.8, 0.0) == Verdict::kViolated);
  SdeConfig cfg;
  cfg.h = 1e-2;
  CHECK(discretization_slack(cfg, NoiseSpec({0.5, 2.0})) == doctest::Approx(0.2));
  CHECK(discretization_slack(cfg, NoiseSpec({0.01, 0.01})) == doctest::Approx(0.01));
}

TEST_CASE("occupation and hitting bounds") {
  CHECK(stationary_mass_bound(1.0, 0.5, -1.0) == doctest::Approx(0.75));
  CHECK(stationary_mass_bound(1e8, 0.5, -1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(stationary_mass_bound(0.5, 0.5, -1.0), PreconditionError);
  CHECK_THROWS_AS(stationary_mass_bound(1.0, 0.5, 0.0), PreconditionError);
  double prev = 0.0;
  for (double d = 0.6; d < 5.0; d += 0.1) {
    const double b = stationary_mass_bound(d, 0.5, -1.0);
    CHECK(b > prev);
    prev = b;
  }

  const auto x = SimplexPoint::interior({0.25, 0.75});
  const auto p = SimplexPoint::interior({0.5, 0.5});
  CHECK(hitting_time_bound(p, p, 1.0, 0.5, -1.0) == 0.0);
  CHECK(hitting_time_bound(x, p, 1.0, 0.5, -1.0) == doctest::Approx(0.1918).epsilon(1e-3));
  CHECK_THROWS_AS(hitting_time_bound(0.1, 0.5, 0.5, -1.0), PreconditionError);
  prev = -1.0;
  for (double d = 0.0; d < 2.0; d += 0.1) {
    const double b = hitting_time_bound(d, 1.0, 0.5, -1.0);
    CHECK(b > prev);
    prev = b;
  }

  CHECK(time_avg_bound_2_4(x, p, 10.0, 0.5, -1.0) == doctest::Approx(0.26438).epsilon(1e-4));
  CHECK(time_avg_bound_2_4(p, p, 1e12, 0.5, -2.0) == doctest::Approx(0.125));
}

TEST_CASE("noise-adjusted time average bound") {
  // Vertex ESS: the noise term vanishes.
  const NoiseSpec s({0.1, 0.1});
  const auto x = SimplexPoint::interior({0.5, 0.5});
  const auto b = time_avg_bound_2_8(kPd, s, SimplexPoint::vertex(2, 1), x, 10.0);
  CHECK(b.noise_term == 0.0);
  CHECK(b.value == doctest::Approx(std::log(2.0) / (std::abs(b.lam2_prime) * 10.0)));
  CHECK(b.lam2_prime == doctest::Approx(lambda2_prime(kPd, s)));
  CHECK_THROWS_AS(time_avg_bound_2_8(PayoffMatrix{{1, 0}, {0, 1}}, s, SimplexPoint::vertex(2, 0), x, 1.0),
                  PreconditionError);
}

TEST_CASE("noise comparison on attrition matrices") {
  for (std::size_t n = 1; n <= 6; ++n)
    for (double v : {0.5, 1.0, 3.0})
      for (double sig : {0.01, 0.1, 0.3}) {
        const ConstantAttritionSpec spec{n, v, 0.0};
        const auto a = build_constant(spec);
        const auto sigma = NoiseSpec::uniform(n + 1, sig);
        const auto p = unique_ess_under_cnd(modified_matrix(a, sigma)).strategy;
        const auto cmp = remark_2_3_compare(a, sigma, p);
        CHECK(cmp.lam2_gap);
        CHECK(cmp.rhs_inequality);
      }
  // A shrinking sigma leaves |lam2'| strictly above |lam2|.
  const auto small = remark_2_3_compare(kTestbed, NoiseSpec::uniform(3, 1e-4), SimplexPoint::interior({0.6, 0.2, 0.2}));
  CHECK(std::abs(small.lam2_prime) > std::abs(small.lam2));
  CHECK(std::abs(small.lam2_prime) - std::abs(small.lam2) < 1e-6);
}

TEST_CASE("extinction constants and tail bound") {
  const auto p = SimplexPoint::closure({0, 0.5, 0.5});
  const auto sigma = NoiseSpec::uniform(3, 0.3);
  const auto x = SimplexPoint::barycenter(3);
  const auto c = extinction_constants(kDominated, 0, p, sigma, x);
  CHECK(c.c1 == doctest::Approx(0.5));
  CHECK(std::abs(c.c2) < 1e-15);
  CHECK(std::abs(c.c3_of_x) < 1e-15);
  CHECK(c.sigma_max == 0.3);
  CHECK(c.sigma_tilde <= std::sqrt(2.0) * c.sigma_max);
  CHECK(c.decay_condition);

  const auto tb = extinction_tail_bound(c, 0.05, 20.0);
  CHECK(tb.argument == doctest::Approx((std::log(0.05) + 10.0) / (0.3 * std::sqrt(40.0))));
  CHECK(tb.argument == doctest::Approx(3.692).epsilon(1e-3));
  CHECK(tb.displayed == doctest::Approx(1.1e-4).epsilon(0.05));
  CHECK(tb.proof_tight <= tb.displayed);
  CHECK(extinction_tail_bound(c, 0.05, 1e6).displayed < 1e-300);

  // Decreasing in t past the threshold where the argument turns positive.
  const double tstar = -(c.c3_of_x + std::log(0.05)) / (c.c1 - c.c2);
  double prev = 1.0;
  for (double t = tstar; t < tstar + 40; t += 1.0) {
    const double b = extinction_tail_bound(c, 0.05, t).displayed;
    CHECK(b < prev);
    prev = b;
  }

  CHECK(extinction_rate_bound(c) == doctest::Approx(0.25 / 0.36));

  CHECK_THROWS_AS(extinction_constants(kDominated, 1, SimplexPoint::closure({0, 0, 1}), sigma, x), PreconditionError);

  // Equal noise and any dominator: c2 is zero.
  const auto eq = extinction_constants(kPd, 0, SimplexPoint::vertex(2, 1), NoiseSpec::uniform(2, 0.7),
                                       SimplexPoint::interior({0.3, 0.7}));
  CHECK(std::abs(eq.c2) < 1e-15);

  // Weak dominance with the dominated strategy the noisiest one still decays.
  const PayoffMatrix weak{{1, 1}, {1, 2}};
  const auto w = extinction_constants(weak, 0, SimplexPoint::vertex(2, 1), NoiseSpec({0.5, 0.1}),
                                      SimplexPoint::interior({0.5, 0.5}));
  CHECK(w.dominance == Dominance::kWeak);
  CHECK(w.c1 == 0.0);
  CHECK(w.decay_condition);
}

TEST_CASE("vertex hitting construction") {
  for (double eps : {0.01, 0.1, 0.4}) {
    const auto v = vertex_hitting_construction(kPd, NoiseSpec({0.1, 0.3}), eps);
    CHECK(v.alpha > 0.0);
    CHECK(v.beta == doctest::Approx(10.0));
    CHECK(v.min_cubic == doctest::Approx(std::min(0.5 * 0.25, (1 - eps) * eps * eps)));
    CHECK(std::isfinite(v.log_bound));
    CHECK(v.log_bound == doctest::Approx(std::log(4.0) + v.alpha - std::log(v.alpha)));
  }
  // The cubic's interior critical point lies in the interval for n = 4.
  const auto four = vertex_hitting_construction(PayoffMatrix(Matrix::identity(4)), NoiseSpec::uniform(4, 1.0), 0.05);
  CHECK(four.min_cubic == doctest::Approx(std::min(0.25 * 0.5625, 0.95 * 0.0025)));
  CHECK_THROWS_AS(vertex_hitting_construction(kPd, NoiseSpec({0.1, 0.1}), 0.6), PreconditionError);
}

TEST_CASE("small campaigns do not report violations") {
  const auto p = SimplexPoint::interior({0.6, 0.2, 0.2});
  const auto sigma = NoiseSpec::uniform(3, 0.05);
  const auto x0 = SimplexPoint::barycenter(3);

  const double k = kappa(p, sigma), l2 = lambda2(kTestbed);
  const auto mass = verify_stationary_mass(kTestbed, sigma, p, x0, 2.0 * k / std::sqrt(-l2), 4.0,
                                           campaign(1e-2, 20.0, 1, 40));
  CHECK(mass.verdict != Verdict::kViolated);
  CHECK(mass.analytic_value == doctest::Approx(0.75));
  CHECK(mass.per_path.size() == 40);

  const auto avg = verify_time_average(kTestbed, sigma, p, x0, campaign(1e-2, 20.0, 2, 40));
  CHECK(avg.verdict == Verdict::kConsistent);

  const auto tail = verify_extinction_tail(kDominated, 0, SimplexPoint::closure({0, 0.5, 0.5}), NoiseSpec::uniform(3, 0.3),
                                           x0, 0.05, campaign(1e-2, 20.0, 3, 50));
  CHECK(tail.verdict == Verdict::kConsistent);

  CHECK_THROWS_AS(stability_basin_probe(kPd, NoiseSpec({0.1, 1.5}), 1, 0.05, campaign(1e-2, 5.0, 4, 10)),
                  PreconditionError);
  CHECK_THROWS_AS(coordination_absorption(kPd, NoiseSpec({0.1, 0.1}), x0, 0.01, campaign(1e-2, 5.0, 4, 10)),
                  PreconditionError);

  // Starting next to a vertex of a coordination game, it is absorbed quickly.
  const auto near = coordination_absorption(PayoffMatrix{{2, 0, 0}, {0, 2, 0}, {0, 0, 2}}, NoiseSpec::uniform(3, 0.1),
                                            SimplexPoint::interior({0.995, 0.0025, 0.0025}), 0.01,
                                            campaign(1e-2, 5.0, 5, 40));
  CHECK(near.empirical_value == doctest::Approx(1.0));
  CHECK(near.detail("share_1") == doctest::Approx(1.0));
}

TEST_CASE("campaigns are reproducible across worker counts") {
  auto a = campaign(1e-2, 10.0, 9, 24);
  auto b = a;
  a.batch.workers = 1;
  b.batch.workers = 5;
  const auto p = SimplexPoint::interior({0.6, 0.2, 0.2});
  const auto sigma = NoiseSpec::uniform(3, 0.2);
  const auto x0 = SimplexPoint::barycenter(3);
  const auto r1 = verify_hitting_time(kTestbed, sigma, p, x0, 0.3, a);
  const auto r2 = verify_hitting_time(kTestbed, sigma, p, x0, 0.3, b);
  CHECK(r1.empirical_value == r2.empirical_value);
  CHECK(r1.standard_error == r2.standard_error);
  CHECK(r1.per_path == r2.per_path);
}
