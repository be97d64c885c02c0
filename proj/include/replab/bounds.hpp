#pragma once

// Closed-form bounds on the long-run behaviour of the stochastic replicator
// dynamics, and Monte Carlo campaigns that hold each bound against simulated
// paths. Campaign verdicts use one rule throughout: an upper bound is violated
// only when the estimate exceeds it by more than 3 standard errors plus a
// discretization allowance max(h, sqrt(h) * sigma_max); lower bounds mirror it.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "replab/game.hpp"
#include "replab/sde.hpp"

namespace replab {

double normal_cdf(double v);
// 1 - normal_cdf(v), accurate far into the upper tail.
double normal_sf(double v);

enum class Verdict { kConsistent, kViolated, kInconclusive };
std::string_view to_string(Verdict v);

using NamedValues = std::vector<std::pair<std::string, double>>;

struct BoundReport {
  std::string name;
  double analytic_value = 0.0;
  double empirical_value = 0.0;
  double standard_error = 0.0;
  Verdict verdict = Verdict::kInconclusive;
  NamedValues inputs;
  NamedValues details;
  std::vector<std::string> notes;
  Vector per_path;  // per-path statistic of the main batch, NaN for aborted paths

  // Looks up a detail by name; throws std::out_of_range if absent.
  double detail(const std::string& key) const;
};

double discretization_slack(const SdeConfig& cfg, const NoiseSpec& sigma);
Verdict upper_bound_verdict(double estimate, double se, double bound, double slack);
Verdict lower_bound_verdict(double estimate, double se, double bound, double slack);

// 1 - kappa^2 / (|lam2| delta^2). Requires lam2 < 0 and delta > kappa/sqrt|lam2|.
double stationary_mass_bound(double delta, double kap, double lam2);

// d(x, p) / (|lam2| delta^2 - kappa^2). Requires |lam2| delta^2 > kappa^2.
double hitting_time_bound(double d, double delta, double kap, double lam2);
double hitting_time_bound(const SimplexPoint& x, const SimplexPoint& p, double delta, double kap,
                          double lam2);

// (1/|lam2|) (d(x, p)/t + kappa^2).
double time_avg_bound_2_4(double d, double t, double kap, double lam2);
double time_avg_bound_2_4(const SimplexPoint& x, const SimplexPoint& p, double t, double kap,
                          double lam2);

// Second largest eigenvalue of the centered symmetrization of
// (1/2)[A + A^T - diag(sigma^2)], i.e. of A - diag(sigma^2)/2.
double lambda2_prime(const PayoffMatrix& a, const NoiseSpec& sigma);

struct NoiseAdjustedAverageBound {
  double value;
  double lam2_prime;
  double noise_term;  // (1/2) sum p_j (1 - p_j) sigma_j^2
};

// (1/|lam2'|) (d(x, p)/t + noise_term) for p an ESS of A - diag(sigma^2).
// Requires A - diag(sigma^2)/2 to be conditionally negative definite.
NoiseAdjustedAverageBound time_avg_bound_2_8(const PayoffMatrix& a, const NoiseSpec& sigma,
                                             const SimplexPoint& p, const SimplexPoint& x, double t);

struct NoiseComparison {
  bool lam2_gap;        // |lam2'| > |lam2|
  bool rhs_inequality;  // noise term of the adjusted bound <= kappa^2
  double lam2;
  double lam2_prime;
  double noise_term;
  double kappa_sq;
};
NoiseComparison remark_2_3_compare(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p);

struct ExtinctionConstants {
  double c1;
  double c2;
  double c3_of_x;
  double sigma_max;
  // [(1 - p_k)^2 sigma_k^2 + sum_{j != k} p_j^2 sigma_j^2]^{1/2}; never exceeds sqrt(2) sigma_max.
  double sigma_tilde;
  Dominance dominance;
  bool decay_condition;  // c2 < c1
};

// Throws PreconditionError when p does not dominate strategy k.
ExtinctionConstants extinction_constants(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p,
                                         const NoiseSpec& sigma, const SimplexPoint& x);

struct TailBound {
  double argument;     // (c3 + log eps + (c1 - c2) t) / (sigma_max sqrt(2t))
  double displayed;    // 1 - Phi(argument)
  double proof_tight;  // same with sigma_tilde sqrt(t) in place of sigma_max sqrt(2t)
};
// Upper bound on P{X_k(t) > eps}. Requires 0 < eps < 1, t > 0 and c1 > c2.
TailBound extinction_tail_bound(const ExtinctionConstants& consts, double eps, double t);

// Supremum of the admissible exponential rates, (c1 - c2)^2 / (4 sigma_max^2).
double extinction_rate_bound(const ExtinctionConstants& consts);

struct VertexHittingConstruction {
  double alpha;
  double beta;       // 2 max |b_jk|, a uniform majorant of |(e_k - y)^T B y|
  double min_cubic;  // min of y (1 - y)^2 over [1/n, 1 - eps]
  double bound;      // n^2 e^alpha / alpha; +inf when it overflows
  double log_bound;  // log of the same, always finite
};
// Requires 0 < eps < 1 - 1/n.
VertexHittingConstruction vertex_hitting_construction(const PayoffMatrix& a, const NoiseSpec& sigma,
                                                      double eps);

// Campaigns. Each runs batched SDE paths through batch_run and inherits its
// determinism contract.

struct CampaignOptions {
  SdeConfig cfg;
  std::size_t n_paths = 200;
  BatchOptions batch;
};

// Long-run occupation fraction of U_delta(p) after burn_in against the lower
// bound 1 - kappa^2/(|lam2| delta^2). p must be an ESS of a CND matrix A.
BoundReport verify_stationary_mass(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p,
                                   const SimplexPoint& x0, double delta, double burn_in,
                                   const CampaignOptions& opt);

// Mean hitting time of U_delta(p) from x0 against d(x0, p)/(|lam2| delta^2 - kappa^2).
BoundReport verify_hitting_time(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p,
                                const SimplexPoint& x0, double delta, const CampaignOptions& opt);

// Mean of (1/T) int |X - p|^2 against the kappa-based bound; p an ESS of A.
BoundReport verify_time_average(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& p,
                                const SimplexPoint& x0, const CampaignOptions& opt);

// Same statistic against the noise-adjusted bound; p an ESS of A - diag(sigma^2).
BoundReport verify_time_average_adjusted(const PayoffMatrix& a, const NoiseSpec& sigma,
                                         const SimplexPoint& p, const SimplexPoint& x0,
                                         const CampaignOptions& opt);

// Exceedance probability P{X_k(T) > eps} against the Gaussian tail bound.
BoundReport verify_extinction_tail(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p,
                                   const NoiseSpec& sigma, const SimplexPoint& x0, double eps,
                                   const CampaignOptions& opt);

// Per path, the envelope X_k(t) exp[(c1 - c2)t - 3 sigma_max sqrt(t log log t)]
// must have a smaller maximum over [T/2, T] than over (e, T/2). Consistent
// when that holds on at least 95% of paths.
BoundReport almost_sure_decay_check(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p,
                                    const NoiseSpec& sigma, const SimplexPoint& x0,
                                    const CampaignOptions& opt);

// Mean of tau_eps = first time some X_k >= 1 - eps against n^2 e^alpha/alpha
// (compared in log space), and the fraction of paths that hit before T.
BoundReport verify_vertex_hitting(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                                  double eps, const CampaignOptions& opt);

// Starts at Euclidean distance r from e_k, toward the barycenter of the other
// vertices, for r in {4 radius, 2 radius, radius}. Success means the path never
// leaves U_{2r}(e_k) and ends with x_k > 1 - 1e-3. Consistent when the success
// estimates are nondecreasing (within 2 SE) as r shrinks.
BoundReport stability_basin_probe(const PayoffMatrix& a, const NoiseSpec& sigma, std::size_t k,
                                  double radius, const CampaignOptions& opt);

// Fraction of paths with max_k X_k(T) > 1 - eps, plus the share ending near each vertex.
BoundReport coordination_absorption(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                                    double eps, const CampaignOptions& opt);

}  // namespace replab
