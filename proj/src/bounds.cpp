#include "replab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "replab/errors.hpp"

namespace replab {

double normal_cdf(double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); }
double normal_sf(double v) { return 0.5 * std::erfc(v / std::sqrt(2.0)); }

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kConsistent: return "consistent";
    case Verdict::kViolated: return "violated";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double BoundReport::detail(const std::string& key) const {
  for (const auto& [k, v] : details)
    if (k == key) return v;
  throw std::out_of_range("BoundReport: no detail named " + key);
}

double discretization_slack(const SdeConfig& cfg, const NoiseSpec& sigma) {
  return std::max(cfg.h, std::sqrt(cfg.h) * sigma.max());
}

Verdict upper_bound_verdict(double estimate, double se, double bound, double slack) {
  if (!std::isfinite(estimate)) return Verdict::kInconclusive;
  return estimate > bound + 3.0 * se + slack ? Verdict::kViolated : Verdict::kConsistent;
}

Verdict lower_bound_verdict(double estimate, double se, double bound, double slack) {
  if (!std::isfinite(estimate)) return Verdict::kInconclusive;
  return estimate < bound - 3.0 * se - slack ? Verdict::kViolated : Verdict::kConsistent;
}

double stationary_mass_bound(double delta, double kap, double lam2) {
  if (!(lam2 < 0.0)) throw PreconditionError("stationary_mass_bound: lambda_2 must be negative");
  if (!(delta > kap / std::sqrt(-lam2)))
    throw PreconditionError("stationary_mass_bound: bound vacuous (delta <= kappa / sqrt|lambda_2|)");
  return 1.0 - kap * kap / (-lam2 * delta * delta);
}

double hitting_time_bound(double d, double delta, double kap, double lam2) {
  const double gap = -lam2 * delta * delta - kap * kap;
  if (!(lam2 < 0.0) || !(gap > 0.0))
    throw PreconditionError("hitting_time_bound: bound vacuous (|lambda_2| delta^2 <= kappa^2)");
  return d / gap;
}

double hitting_time_bound(const SimplexPoint& x, const SimplexPoint& p, double delta, double kap,
                          double lam2) {
  return hitting_time_bound(kl_distance(x, p), delta, kap, lam2);
}

double time_avg_bound_2_4(double d, double t, double kap, double lam2) {
  if (!(t > 0.0)) throw PreconditionError("time_avg_bound_2_4: t must be positive");
  if (!(lam2 < 0.0)) throw PreconditionError("time_avg_bound_2_4: lambda_2 must be negative");
  return (d / t + kap * kap) / -lam2;
}

double time_avg_bound_2_4(const SimplexPoint& x, const SimplexPoint& p, double t, double kap,
                          double lam2) {
  return time_avg_bound_2_4(kl_distance(x, p), t, kap, lam2);
}

namespace {

Matrix half_noise_shift(const PayoffMatrix& a, const NoiseSpec& sigma) {
  if (sigma.size() != a.size()) throw PreconditionError("noise dimension does not match the game");
  Matrix m = a.matrix();
  for (std::size_t j = 0; j < a.size(); ++j) m(j, j) -= 0.5 * sigma[j] * sigma[j];
  return m;
}

double noise_term(const SimplexPoint& p, const NoiseSpec& sigma) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) s += p[j] * (1.0 - p[j]) * sigma[j] * sigma[j];
  return 0.5 * s;
}

}  // namespace

double lambda2_prime(const PayoffMatrix& a, const NoiseSpec& sigma) {
  return lambda2(half_noise_shift(a, sigma));
}

NoiseAdjustedAverageBound time_avg_bound_2_8(const PayoffMatrix& a, const NoiseSpec& sigma,
                                             const SimplexPoint& p, const SimplexPoint& x, double t) {
  if (!(t > 0.0)) throw PreconditionError("time_avg_bound_2_8: t must be positive");
  const double l2p = lambda2_prime(a, sigma);
  if (cnd_verdict(l2p) != CndVerdict::kNegativeDefinite)
    throw PreconditionError(
        "time_avg_bound_2_8: A - diag(sigma^2)/2 is not conditionally negative definite");
  const double nt = noise_term(p, sigma);
  return {(kl_distance(x, p) / t + nt) / -l2p, l2p, nt};
}

NoiseComparison remark_2_3_compare(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p) {
  NoiseComparison r{};
  r.lam2 = lambda2(a);
  r.lam2_prime = lambda2_prime(a, sigma);
  if (!(r.lam2 < 0.0)) throw PreconditionError("remark_2_3_compare: lambda_2 must be negative");
  r.noise_term = noise_term(p, sigma);
  const double k = kappa(p, sigma);
  r.kappa_sq = k * k;
  r.lam2_gap = std::abs(r.lam2_prime) > std::abs(r.lam2);
  r.rhs_inequality = r.noise_term <= r.kappa_sq * (1.0 + 1e-12) + 1e-15;
  return r;
}

ExtinctionConstants extinction_constants(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p,
                                         const NoiseSpec& sigma, const SimplexPoint& x) {
  const std::size_t n = a.size();
  if (sigma.size() != n || p.size() != n || x.size() != n)
    throw PreconditionError("extinction_constants: dimension mismatch");
  if (!x.is_interior()) throw PreconditionError("extinction_constants: x must be interior");
  const auto dom = verify_dominance(a, k, p);
  if (dom.kind == Dominance::kNone)
    throw PreconditionError("extinction_constants: strategy " + std::to_string(k + 1) +
                            " is not dominated by the given mixed strategy");
  ExtinctionConstants c{};
  c.c1 = dom.c1;
  c.dominance = dom.kind;
  double mix = 0.0;
  for (std::size_t j = 0; j < n; ++j) mix += p[j] * sigma[j] * sigma[j];
  c.c2 = -0.5 * sigma[k] * sigma[k] + 0.5 * mix;
  c.c3_of_x = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (p[j] > 0.0) c.c3_of_x += p[j] * std::log(x[j] / x[k]);
  c.sigma_max = sigma.max();
  double tilde = (1.0 - p[k]) * (1.0 - p[k]) * sigma[k] * sigma[k];
  for (std::size_t j = 0; j < n; ++j)
    if (j != k) tilde += p[j] * p[j] * sigma[j] * sigma[j];
  c.sigma_tilde = std::sqrt(tilde);
  c.decay_condition = c.c2 < c.c1;
  return c;
}

TailBound extinction_tail_bound(const ExtinctionConstants& c, double eps, double t) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("extinction_tail_bound: eps must lie in (0, 1)");
  if (!(t > 0.0)) throw PreconditionError("extinction_tail_bound: t must be positive");
  if (!c.decay_condition) throw PreconditionError("extinction_tail_bound: requires c2 < c1");
  const double num = c.c3_of_x + std::log(eps) + (c.c1 - c.c2) * t;
  TailBound b{};
  b.argument = num / (c.sigma_max * std::sqrt(2.0 * t));
  b.displayed = normal_sf(b.argument);
  b.proof_tight = normal_sf(num / (c.sigma_tilde * std::sqrt(t)));
  return b;
}

double extinction_rate_bound(const ExtinctionConstants& c) {
  if (!c.decay_condition) throw PreconditionError("extinction_rate_bound: requires c2 < c1");
  const double g = c.c1 - c.c2;
  return g * g / (4.0 * c.sigma_max * c.sigma_max);
}

VertexHittingConstruction vertex_hitting_construction(const PayoffMatrix& a, const NoiseSpec& sigma,
                                                      double eps) {
  const std::size_t n = a.size();
  const double nd = static_cast<double>(n);
  if (!(eps > 0.0 && eps < 1.0 - 1.0 / nd))
    throw PreconditionError("vertex_hitting_construction: eps must lie in (0, 1 - 1/n)");
  const PayoffMatrix b = modified_matrix(a, sigma);
  double big = 0.0;
  for (double e : b.matrix().data()) big = std::max(big, std::abs(e));
  VertexHittingConstruction out{};
  out.beta = 2.0 * big;
  // y(1-y)^2 has its interior critical points at 1/3 (a maximum) and 1, so on
  // [1/n, 1-eps] the minimum sits at an endpoint.
  auto cubic = [](double y) { return y * (1.0 - y) * (1.0 - y); };
  out.min_cubic = std::min(cubic(1.0 / nd), cubic(1.0 - eps));
  const double smin = sigma.min();
  out.alpha = 2.0 * (nd * out.beta + 1.0) / (smin * smin * out.min_cubic);
  out.log_bound = 2.0 * std::log(nd) + out.alpha - std::log(out.alpha);
  out.bound = out.log_bound < std::log(std::numeric_limits<double>::max())
                  ? std::exp(out.log_bound)
                  : std::numeric_limits<double>::infinity();
  return out;
}

namespace {

void require_ess(const PayoffMatrix& m, const SimplexPoint& p, const char* who, const char* which) {
  const auto st = classify_equilibrium(m, p);
  if (st != EquilibriumStatus::kEssCertified && st != EquilibriumStatus::kStrictNash)
    throw PreconditionError(std::string(who) + ": p is not a certified ESS of " + which + " (status " +
                            std::string(to_string(st)) + ")");
}

double require_cnd(const PayoffMatrix& a, const char* who) {
  const double l2 = lambda2(a);
  if (cnd_verdict(l2) != CndVerdict::kNegativeDefinite)
    throw PreconditionError(std::string(who) + ": payoff matrix is not conditionally negative definite");
  return l2;
}

NamedValues config_inputs(const CampaignOptions& opt) {
  return {{"h", opt.cfg.h},
          {"horizon", opt.cfg.horizon},
          {"seed", static_cast<double>(opt.cfg.seed)},
          {"n_paths", static_cast<double>(opt.n_paths)}};
}

void fill_from_batch(BoundReport& r, const BatchResult& b) {
  r.empirical_value = b.mean;
  r.standard_error = b.std_error;
  r.per_path = b.per_path;
  r.details.emplace_back("failed_paths", static_cast<double>(b.n_failed));
  for (const auto& f : b.failures) r.notes.push_back(f);
}

Verdict with_failures(Verdict v, const BatchResult& b) {
  return (v == Verdict::kConsistent && b.n_failed > 0) ? Verdict::kInconclusive : v;
}

}  // namespace

BoundReport verify_stationary_mass(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p,
                                   const SimplexPoint& x0, double delta, double burn_in,
                                   const CampaignOptions& opt) {
  const double l2 = require_cnd(a, "verify_stationary_mass");
  require_ess(a, p, "verify_stationary_mass", "A");
  const double kap = kappa(p, sigma);
  BoundReport r;
  r.name = "stationary_mass";
  r.analytic_value = stationary_mass_bound(delta, kap, l2);
  r.inputs = config_inputs(opt);
  r.inputs.emplace_back("delta", delta);
  r.inputs.emplace_back("burn_in", burn_in);
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths,
                           NamedStatistic::occupation(Region::ball(p, delta), burn_in), opt.batch);
  fill_from_batch(r, b);
  r.details.emplace_back("lambda2", l2);
  r.details.emplace_back("kappa", kap);
  r.details.emplace_back("interior_condition", p.is_interior() && condition_2_2(p, sigma, l2) ? 1.0 : 0.0);
  r.verdict = with_failures(
      lower_bound_verdict(b.mean, b.std_error, r.analytic_value, discretization_slack(opt.cfg, sigma)), b);
  r.notes.push_back("occupation fraction after burn-in stands in for the stationary mass");
  return r;
}

BoundReport verify_hitting_time(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p,
                                const SimplexPoint& x0, double delta, const CampaignOptions& opt) {
  const double l2 = require_cnd(a, "verify_hitting_time");
  require_ess(a, p, "verify_hitting_time", "A");
  const double kap = kappa(p, sigma);
  BoundReport r;
  r.name = "hitting_time";
  r.analytic_value = hitting_time_bound(x0, p, delta, kap, l2);
  r.inputs = config_inputs(opt);
  r.inputs.emplace_back("delta", delta);
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths,
                           NamedStatistic::hitting(Region::ball(p, delta)), opt.batch);
  fill_from_batch(r, b);
  std::size_t misses = 0;
  for (double v : b.per_path)
    if (std::isfinite(v) && v >= opt.cfg.horizon) ++misses;
  r.details.emplace_back("lambda2", l2);
  r.details.emplace_back("kappa", kap);
  r.details.emplace_back("paths_not_hit", static_cast<double>(misses));
  Verdict v = upper_bound_verdict(b.mean, b.std_error, r.analytic_value, opt.cfg.h);
  // A path that never hits contributes the horizon, which understates its time.
  if (v == Verdict::kConsistent && misses > 0) v = Verdict::kInconclusive;
  r.verdict = with_failures(v, b);
  return r;
}

BoundReport verify_time_average(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p,
                                const SimplexPoint& x0, const CampaignOptions& opt) {
  const double l2 = require_cnd(a, "verify_time_average");
  require_ess(a, p, "verify_time_average", "A");
  const double kap = kappa(p, sigma);
  BoundReport r;
  r.name = "time_average";
  r.analytic_value = time_avg_bound_2_4(x0, p, opt.cfg.horizon, kap, l2);
  r.inputs = config_inputs(opt);
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths, NamedStatistic::time_avg_sq_distance(p),
                           opt.batch);
  fill_from_batch(r, b);
  r.details.emplace_back("lambda2", l2);
  r.details.emplace_back("kappa", kap);
  r.verdict = with_failures(
      upper_bound_verdict(b.mean, b.std_error, r.analytic_value, discretization_slack(opt.cfg, sigma)), b);
  return r;
}

BoundReport verify_time_average_adjusted(const PayoffMatrix& a, const NoiseSpec& sigma,
                                         const SimplexPoint& p, const SimplexPoint& x0,
                                         const CampaignOptions& opt) {
  require_ess(modified_matrix(a, sigma), p, "verify_time_average_adjusted", "A - diag(sigma^2)");
  const auto bound = time_avg_bound_2_8(a, sigma, p, x0, opt.cfg.horizon);
  BoundReport r;
  r.name = "time_average_noise_adjusted";
  r.analytic_value = bound.value;
  r.inputs = config_inputs(opt);
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths, NamedStatistic::time_avg_sq_distance(p),
                           opt.batch);
  fill_from_batch(r, b);
  r.details.emplace_back("lambda2_prime", bound.lam2_prime);
  r.details.emplace_back("noise_term", bound.noise_term);
  r.verdict = with_failures(
      upper_bound_verdict(b.mean, b.std_error, r.analytic_value, discretization_slack(opt.cfg, sigma)), b);
  return r;
}

BoundReport verify_extinction_tail(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p,
                                   const NoiseSpec& sigma, const SimplexPoint& x0, double eps,
                                   const CampaignOptions& opt) {
  const auto c = extinction_constants(a, k, p, sigma, x0);
  if (!c.decay_condition)
    throw PreconditionError("verify_extinction_tail: noise condition c2 < c1 fails");
  const auto tail = extinction_tail_bound(c, eps, opt.cfg.horizon);
  BoundReport r;
  r.name = "extinction_tail";
  r.analytic_value = tail.displayed;
  r.inputs = config_inputs(opt);
  r.inputs.emplace_back("k", static_cast<double>(k + 1));
  r.inputs.emplace_back("eps", eps);
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths, NamedStatistic::final_above(k, eps), opt.batch);
  fill_from_batch(r, b);
  double exceed = 0.0;
  for (double v : b.per_path)
    if (v == 1.0) exceed += 1.0;
  r.details.emplace_back("c1", c.c1);
  r.details.emplace_back("c2", c.c2);
  r.details.emplace_back("c3", c.c3_of_x);
  r.details.emplace_back("sigma_max", c.sigma_max);
  r.details.emplace_back("sigma_tilde", c.sigma_tilde);
  r.details.emplace_back("argument", tail.argument);
  r.details.emplace_back("proof_tight_bound", tail.proof_tight);
  r.details.emplace_back("rate_bound", extinction_rate_bound(c));
  r.details.emplace_back("exceedances", exceed);
  r.verdict = with_failures(
      upper_bound_verdict(b.mean, b.std_error, r.analytic_value, discretization_slack(opt.cfg, sigma)), b);
  return r;
}

BoundReport almost_sure_decay_check(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p,
                                    const NoiseSpec& sigma, const SimplexPoint& x0,
                                    const CampaignOptions& opt) {
  const auto c = extinction_constants(a, k, p, sigma, x0);
  if (!c.decay_condition)
    throw PreconditionError("almost_sure_decay_check: noise condition c2 < c1 fails");
  BoundReport r;
  r.name = "almost_sure_decay";
  r.analytic_value = 0.95;
  r.inputs = config_inputs(opt);
  r.inputs.emplace_back("k", static_cast<double>(k + 1));
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths,
                           NamedStatistic::envelope_decay(k, c.c1 - c.c2, 3.0 * c.sigma_max), opt.batch);
  fill_from_batch(r, b);
  r.details.emplace_back("c1", c.c1);
  r.details.emplace_back("c2", c.c2);
  r.details.emplace_back("sigma_max", c.sigma_max);
  r.verdict = with_failures(b.mean >= 0.95 ? Verdict::kConsistent : Verdict::kViolated, b);
  r.notes.push_back("decay proxy: late-window envelope maximum below the early-window maximum");
  return r;
}

BoundReport verify_vertex_hitting(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                                  double eps, const CampaignOptions& opt) {
  const auto con = vertex_hitting_construction(a, sigma, eps);
  BoundReport r;
  r.name = "vertex_hitting";
  r.analytic_value = con.bound;
  r.inputs = config_inputs(opt);
  r.inputs.emplace_back("eps", eps);
  const auto b =
      batch_run(a, sigma, x0, opt.cfg, opt.n_paths, NamedStatistic::hitting(Region::any_vertex(eps)), opt.batch);
  fill_from_batch(r, b);
  std::size_t hits = 0, valid = 0;
  for (double v : b.per_path) {
    if (!std::isfinite(v)) continue;
    ++valid;
    if (v < opt.cfg.horizon) ++hits;
  }
  const double hit_fraction = valid ? static_cast<double>(hits) / static_cast<double>(valid) : 0.0;
  r.details.emplace_back("alpha", con.alpha);
  r.details.emplace_back("beta", con.beta);
  r.details.emplace_back("min_cubic", con.min_cubic);
  r.details.emplace_back("log_bound", con.log_bound);
  r.details.emplace_back("hit_fraction", hit_fraction);
  Verdict v;
  if (b.mean > 0.0 && std::log(b.mean + 3.0 * b.std_error) > con.log_bound && hit_fraction == 1.0)
    v = Verdict::kViolated;
  else if (hit_fraction >= 0.99)
    v = Verdict::kConsistent;
  else
    v = Verdict::kInconclusive;
  r.verdict = with_failures(v, b);
  r.notes.push_back("bound compared in log space; it overflows double precision for small noise");
  return r;
}

BoundReport stability_basin_probe(const PayoffMatrix& a, const NoiseSpec& sigma, std::size_t k,
                                  double radius, const CampaignOptions& opt) {
  const std::size_t n = a.size();
  if (k >= n) throw PreconditionError("stability_basin_probe: strategy index out of range");
  if (!strict_nash_condition_4_1(a, sigma, k))
    throw PreconditionError("stability_basin_probe: condition a_kk > a_jk + sigma_k^2 fails for strategy " +
                            std::to_string(k + 1));
  const double nd = static_cast<double>(n);
  const double scale = std::sqrt(nd / (nd - 1.0));
  if (!(radius > 0.0) || 4.0 * radius / scale >= 1.0)
    throw PreconditionError("stability_basin_probe: radius ladder leaves the simplex");

  BoundReport r;
  r.name = "stability_basin";
  r.analytic_value = 1.0;
  r.inputs = config_inputs(opt);
  r.inputs.emplace_back("k", static_cast<double>(k + 1));
  r.inputs.emplace_back("radius", radius);

  const double ladder[3] = {4.0 * radius, 2.0 * radius, radius};
  double est[3], se[3];
  std::size_t failed = 0;
  for (int i = 0; i < 3; ++i) {
    const double step = ladder[i] / scale;  // Euclidean distance ladder[i] from e_k
    Vector w(n, step / (nd - 1.0));
    w[k] = 1.0 - step;
    const auto x0 = SimplexPoint::interior(w);
    const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths,
                             NamedStatistic::stays_and_ends(Region::ball(SimplexPoint::vertex(n, k), 2.0 * ladder[i]),
                                                            k, 1.0 - 1e-3),
                             opt.batch);
    est[i] = b.mean;
    if (i == 2) r.per_path = b.per_path;
    se[i] = b.std_error;
    failed += b.n_failed;
    r.details.emplace_back("estimate_r" + std::to_string(i), b.mean);
    r.details.emplace_back("se_r" + std::to_string(i), b.std_error);
  }
  r.empirical_value = est[2];
  r.standard_error = se[2];
  r.details.emplace_back("failed_paths", static_cast<double>(failed));
  bool monotone = true;
  for (int i = 0; i + 1 < 3; ++i)
    if (est[i + 1] < est[i] - 2.0 * std::hypot(se[i], se[i + 1])) monotone = false;
  r.verdict = (monotone && failed == 0) ? Verdict::kConsistent : Verdict::kInconclusive;
  r.notes.push_back("ladder radii 4r, 2r, r; success = stays within 2r and ends with x_k > 1 - 1e-3");
  return r;
}

BoundReport coordination_absorption(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                                    double eps, const CampaignOptions& opt) {
  if (!is_coordination_game(a, sigma))
    throw PreconditionError("coordination_absorption: not a coordination game at this noise level");
  const std::size_t n = a.size();
  BoundReport r;
  r.name = "coordination_absorption";
  r.analytic_value = 1.0 - 0.01;
  r.inputs = config_inputs(opt);
  r.inputs.emplace_back("eps", eps);
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths, NamedStatistic::final_vertex(eps), opt.batch);
  std::vector<std::size_t> counts(n, 0);
  std::size_t valid = 0, absorbed = 0;
  for (double v : b.per_path) {
    if (!std::isfinite(v)) continue;
    ++valid;
    if (v >= 0.0) {
      ++absorbed;
      ++counts[static_cast<std::size_t>(v)];
    }
  }
  const double m = static_cast<double>(valid);
  const double frac = valid ? static_cast<double>(absorbed) / m : std::nan("");
  r.empirical_value = frac;
  r.per_path = b.per_path;
  r.standard_error = valid ? std::sqrt(frac * (1.0 - frac) / m) : std::nan("");
  r.details.emplace_back("failed_paths", static_cast<double>(b.n_failed));
  for (std::size_t j = 0; j < n; ++j) {
    const double share = valid ? static_cast<double>(counts[j]) / m : std::nan("");
    r.details.emplace_back("share_" + std::to_string(j + 1), share);
    r.details.emplace_back("share_se_" + std::to_string(j + 1), std::sqrt(share * (1.0 - share) / m));
  }
  for (const auto& f : b.failures) r.notes.push_back(f);
  r.verdict = with_failures(lower_bound_verdict(frac, r.standard_error, r.analytic_value, 0.0), b);
  return r;
}

}  // namespace replab
