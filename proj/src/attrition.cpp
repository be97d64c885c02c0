#include "replab/attrition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "replab/errors.hpp"

namespace replab {

namespace {

bool finite_all(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void AttritionSpec::validate() const {
  if (n < 1) throw PreconditionError("attrition spec: n must be at least 1");
  const std::size_t m = n + 1;
  if (costs.size() != m || rewards.size() != m || rho.size() != m)
    throw PreconditionError("attrition spec: costs, rewards and rho need n + 1 entries each");
  if (!finite_all(costs) || !finite_all(rewards) || !finite_all(rho))
    throw PreconditionError("attrition spec: entries must be finite");
  if (costs[0] < 0.0) throw PreconditionError("attrition spec: costs[0] must be nonnegative");
  for (std::size_t j = 1; j < m; ++j) {
    if (!(costs[j] > costs[j - 1])) throw PreconditionError("attrition spec: costs must be strictly increasing");
    if (rewards[j] > rewards[j - 1]) throw PreconditionError("attrition spec: rewards must be nonincreasing");
  }
  if (!(rewards[n] > 0.0)) throw PreconditionError("attrition spec: rewards must be positive");
  for (std::size_t k = 0; k < m; ++k)
    if (!(rho[k] >= 0.0 && rho[k] < rewards[k] / 2.0))
      throw PreconditionError("attrition spec: rho_k must satisfy 0 <= rho_k < v_k/2");
}

AttritionSpec AttritionSpec::unperturbed(Vector costs, Vector rewards) {
  AttritionSpec s;
  s.n = costs.empty() ? 0 : costs.size() - 1;
  s.rho.assign(costs.size(), 0.0);
  s.costs = std::move(costs);
  s.rewards = std::move(rewards);
  s.validate();
  return s;
}

void ConstantAttritionSpec::validate() const {
  if (n < 1) throw PreconditionError("attrition spec: n must be at least 1");
  if (!(v > 0.0) || !std::isfinite(v)) throw PreconditionError("attrition spec: v must be positive");
  if (!(rho >= 0.0 && rho < v / 2.0)) throw PreconditionError("attrition spec: rho must satisfy 0 <= rho < v/2");
}

AttritionSpec ConstantAttritionSpec::general() const {
  validate();
  AttritionSpec s;
  s.n = n;
  for (std::size_t j = 0; j <= n; ++j) {
    s.costs.push_back(static_cast<double>(j));
    s.rewards.push_back(v);
    s.rho.push_back(rho);
  }
  return s;
}

namespace {

PayoffMatrix build(const AttritionSpec& spec, bool with_rho) {
  spec.validate();
  const std::size_t m = spec.n + 1;
  Matrix b(m, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      if (j > k) b(j, k) = spec.rewards[k] - spec.costs[k];
      else if (j == k) b(j, k) = spec.rewards[k] / 2.0 - spec.costs[k] - (with_rho ? spec.rho[k] : 0.0);
      else b(j, k) = -spec.costs[j];
    }
  return PayoffMatrix(std::move(b));
}

}  // namespace

PayoffMatrix build_payoff_5_1(const AttritionSpec& spec) { return build(spec, false); }
PayoffMatrix build_modified_5_3(const AttritionSpec& spec) { return build(spec, true); }
PayoffMatrix build_constant(const ConstantAttritionSpec& spec) { return build(spec.general(), true); }

Vector cnd_certificate(const AttritionSpec& spec) {
  spec.validate();
  Vector coef(spec.n);
  for (std::size_t k = 1; k <= spec.n; ++k)
    coef[k - 1] = spec.rewards[k] - spec.rewards[k - 1] - 2.0 * (spec.costs[k] - spec.costs[k - 1]);
  return coef;
}

Matrix certificate_reconstruction(const AttritionSpec& spec) {
  const Vector coef = cnd_certificate(spec);
  const std::size_t n = spec.n;
  Matrix d(n, n);
  // f_k f_k^T is the indicator of the trailing block {k-1..n-1}^2 (0-based).
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = k; i < n; ++i)
      for (std::size_t j = k; j < n; ++j) d(i, j) += coef[k];
  return d;
}

Matrix certificate_closed_form(const AttritionSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  Matrix d(n, n);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t m = std::min(i, j);
      d(i - 1, j - 1) = spec.rewards[m] - 2.0 * spec.costs[m] - spec.rewards[0] + 2.0 * spec.costs[0];
    }
  return d;
}

Matrix reduced_symmetric_form(const AttritionSpec& spec) {
  const PayoffMatrix a = build_payoff_5_1(spec);
  const std::size_t n = spec.n;
  Matrix d(n, n);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      d(i - 1, j - 1) = 0.5 * (a(i, j) + a(j, i)) - a(i, 0) - a(0, j) + a(0, 0);
  return d;
}

bool is_large_reward(const ConstantAttritionSpec& spec) {
  spec.validate();
  const double edge = 2.0 * static_cast<double>(spec.n) + 2.0 * spec.rho;
  return spec.v >= edge - 1e-12 * std::max(1.0, edge);
}

std::optional<std::size_t> s_index_5_5(const ConstantAttritionSpec& spec) {
  if (is_large_reward(spec)) return std::nullopt;
  const double n = static_cast<double>(spec.n);
  const double half = spec.v / 2.0;
  double s = std::ceil(n - 1.0 + spec.rho - half);
  if (s < 0.0) s = 0.0;
  // Pin s to the half-open interval against rounding in the ceiling.
  while (s > 0.0 && half + s >= n + spec.rho) s -= 1.0;
  while (half + s < n - 1.0 + spec.rho && s < n - 1.0) s += 1.0;
  return static_cast<std::size_t>(s);
}

double chebyshev_u(long k, double rho, double gamma_sq) {
  if (k < -1) throw PreconditionError("chebyshev_u: k must be at least -1");
  if (!(gamma_sq > 0.0)) throw PreconditionError("chebyshev_u: gamma^2 must be positive");
  if (k == -1) return 0.0;
  double prev = 0.0, cur = 1.0;
  for (long i = 1; i <= k; ++i) {
    const double next = -(2.0 * rho + 1.0) * cur + gamma_sq * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Vector chebyshev_u_table(long kmax, double rho, double gamma_sq) {
  if (kmax < -1) throw PreconditionError("chebyshev_u_table: kmax must be at least -1");
  if (!(gamma_sq > 0.0)) throw PreconditionError("chebyshev_u_table: gamma^2 must be positive");
  Vector u(static_cast<std::size_t>(kmax + 2));
  u[0] = 0.0;
  if (kmax >= 0) u[1] = 1.0;
  for (std::size_t i = 2; i < u.size(); ++i) u[i] = -(2.0 * rho + 1.0) * u[i - 1] + gamma_sq * u[i - 2];
  return u;
}

namespace {

// u_k from a table built by chebyshev_u_table, for k >= -1.
struct UTable {
  Vector u;
  double operator()(long k) const { return k < -1 ? 0.0 : u[static_cast<std::size_t>(k + 1)]; }
};

}  // namespace

double t_sequence(std::size_t j, std::size_t s, const ConstantAttritionSpec& spec) {
  if (j < 1) throw PreconditionError("t_sequence: j must be at least 1");
  const UTable u{chebyshev_u_table(static_cast<long>(j), spec.rho, spec.gamma_sq())};
  const double a = static_cast<double>(s) + 1.0 - static_cast<double>(spec.n);
  const double w = spec.v / 2.0 + spec.rho;
  const long jj = static_cast<long>(j);
  return u(jj) + (a + w) * u(jj - 1) + a * w * u(jj - 2);
}

ClosedFormEss closed_form_ess(const ConstantAttritionSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const auto s_opt = s_index_5_5(spec);
  if (!s_opt) return {SimplexPoint::vertex(n + 1, n), std::nullopt, std::nullopt, std::nullopt};

  const std::size_t s = *s_opt;
  const long sl = static_cast<long>(s);
  const double rho = spec.rho, g2 = spec.gamma_sq();
  const double w = spec.v / 2.0 + rho;
  const double m = static_cast<double>(n - s - 1);  // n - s - 1
  const UTable u{chebyshev_u_table(sl + 2, rho, g2)};

  const double c = -u(sl + 2) + (m - 2.0 * rho) * u(sl + 1) + (2.0 * rho * m + g2) * u(sl) - m * g2 * u(sl - 1);

  auto t = [&](long j) {
    const double a = -m;  // s + 1 - n
    return u(j) + (a + w) * u(j - 1) + a * w * u(j - 2);
  };
  const double c_check = -t(sl + 2) + (spec.v / 2.0 - rho) * t(sl + 1);
  if (!(std::abs(c - c_check) <= 1e-9 * std::max(std::abs(c), std::abs(c_check)))) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "closed_form_ess: normalizing constant self-check failed (c = " << c << ", t-form = " << c_check
        << ") for n = " << n << ", v = " << spec.v << ", rho = " << rho;
    throw NumericalError(msg.str());
  }

  Vector p(n + 1, 0.0);
  double power = 1.0;  // (-v/2 - rho)^k
  for (std::size_t k = 0; k <= s; ++k) {
    const long kl = static_cast<long>(k);
    p[k] = power * t(sl - kl + 1) / c;
    power *= -w;
  }
  p[n] = power / c;  // power is now (-w)^{s+1}

  double total = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    if (p[k] < 0.0) {
      if (p[k] < -1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "closed_form_ess: weight " << k << " is negative (" << p[k] << ") for n = " << n
            << ", v = " << spec.v << ", rho = " << rho;
        throw NumericalError(msg.str());
      }
      p[k] = 0.0;
    }
    total += p[k];
  }
  if (std::abs(total - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "closed_form_ess: weights sum to " << total << " for n = " << n << ", v = " << spec.v
        << ", rho = " << rho;
    throw NumericalError(msg.str());
  }
  if (std::abs(total - 1.0) > 1e-13)
    for (double& x : p) x /= total;
  return {SimplexPoint::closure(std::move(p)), s, c, c_check};
}

std::vector<std::size_t> support_threshold_5_2(const AttritionSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const double level = spec.costs[n] + spec.rho[n] - spec.rewards[n] / 2.0;
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n; ++j)
    if (spec.costs[j] >= level) out.push_back(j);
  return out;
}

Matrix column_replaced(const PayoffMatrix& b, std::size_t k) {
  Matrix m = b.matrix();
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, k) = 1.0;
  return m;
}

double det_column_replaced_5_3(const AttritionSpec& spec, std::size_t k) {
  spec.validate();
  const std::size_t n = spec.n;
  if (k > n) throw PreconditionError("det_column_replaced_5_3: column index out of range");
  double prod = 1.0;
  for (std::size_t j = 0; j < k; ++j) prod *= -spec.rewards[j] / 2.0 - spec.rho[j];
  if (k == n) return prod;
  const PayoffMatrix b = build_modified_5_3(spec);
  const std::size_t m = n - k;
  Matrix block(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) block(i, j) = b(k + 1 + i, k + 1 + j) + spec.costs[k];
  return determinant(block) * prod;
}

double det_B_5_4(const ConstantAttritionSpec& spec) {
  spec.validate();
  const long n = static_cast<long>(spec.n);
  const UTable u{chebyshev_u_table(n, spec.rho, spec.gamma_sq())};
  return (spec.v / 2.0 - spec.rho) * (u(n) + (spec.v / 2.0 + spec.rho) * u(n - 1));
}

double tridiag_det_A1(double x, double gamma1, double gamma2, std::size_t n) {
  if (n < 1) throw PreconditionError("tridiag_det_A1: n must be at least 1");
  if (!(gamma1 > 0.0 && gamma2 > 0.0)) throw PreconditionError("tridiag_det_A1: gammas must be positive");
  const double g = gamma1 * gamma2;
  double prev = 1.0, cur = x;  // D_0 = 1 makes D_2 = x^2 + g come out of the recurrence
  for (std::size_t i = 2; i <= n; ++i) {
    const double next = x * cur + g * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Matrix tridiag_matrix_A1(double x, double gamma1, double gamma2, std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = x;
    if (i + 1 < n) {
      m(i, i + 1) = gamma1;
      m(i + 1, i) = -gamma2;
    }
  }
  return m;
}

SweepResult ess_sweep(const SweepGrid& grid) {
  if (!(grid.v_step > 0.0)) throw PreconditionError("ess_sweep: v_step must be positive");
  if (grid.n_min < 1 || grid.n_max < grid.n_min) throw PreconditionError("ess_sweep: bad n range");
  for (double f : grid.rho_fractions)
    if (!(f >= 0.0 && f < 0.5)) throw PreconditionError("ess_sweep: rho fractions must lie in [0, 1/2)");
  SweepResult out;
  for (std::size_t n = grid.n_min; n <= grid.n_max; ++n) {
    for (double f : grid.rho_fractions) {
      // v runs over multiples of v_step up to 2n + 2 rho + 1 with rho = f v,
      // i.e. v <= (2n + 1)/(1 - 2f).
      const double vmax = grid.v_max ? *grid.v_max : (2.0 * static_cast<double>(n) + 1.0) / (1.0 - 2.0 * f);
      for (long i = 1;; ++i) {
        double v = grid.v_step * static_cast<double>(i);
        if (v > vmax + 1e-12) break;
        ConstantAttritionSpec spec{n, v, f * v};
        bool nudged = false;
        if (const auto s = s_index_5_5(spec)) {
          const double gap = spec.v / 2.0 + static_cast<double>(*s) - (static_cast<double>(n) - 1.0 + spec.rho);
          if (std::abs(gap) < 1e-12) {
            v += 1e-9;
            spec = {n, v, f * v};
            nudged = true;
          }
        }
        out.rows.push_back({spec, closed_form_ess(spec), nudged});
        if (nudged) ++out.perturbed;
      }
    }
  }
  return out;
}

BoundReport persistence_experiment(const ConstantAttritionSpec& spec, const NoiseSpec& sigma,
                                   const SimplexPoint& x0, const CampaignOptions& opt, double eps_target) {
  if (!(eps_target > 0.0 && eps_target < 1.0))
    throw PreconditionError("persistence_experiment: eps_target must lie in (0, 1)");
  const PayoffMatrix a = build_constant(spec);
  if (sigma.size() != a.size()) throw PreconditionError("persistence_experiment: noise dimension mismatch");
  const auto ess = closed_form_ess(spec);
  const std::size_t n = spec.n;
  const double pn = ess.p[n];
  const double l2 = lambda2(a);
  const double t_window = 0.75 * opt.cfg.horizon;

  BoundReport r;
  r.name = "persistence";
  r.analytic_value = 1.0 - eps_target;
  r.inputs = {{"h", opt.cfg.h},
              {"horizon", opt.cfg.horizon},
              {"seed", static_cast<double>(opt.cfg.seed)},
              {"n_paths", static_cast<double>(opt.n_paths)},
              {"n", static_cast<double>(n)},
              {"v", spec.v},
              {"rho", spec.rho},
              {"eps_target", eps_target}};
  const auto b = batch_run(a, sigma, x0, opt.cfg, opt.n_paths,
                           NamedStatistic::exceeds_in_window(n, pn / 2.0, t_window), opt.batch);
  r.empirical_value = b.mean;
  r.standard_error = b.std_error;
  r.per_path = b.per_path;
  for (const auto& f : b.failures) r.notes.push_back(f);

  const double smax = sigma.max();
  const bool noise_ok = l2 < 0.0 && smax * smax / -l2 < pn * pn * eps_target / 8.0;
  const double t0 = l2 < 0.0 ? 16.0 * kl_distance(x0, ess.p) / (-l2 * pn * pn * eps_target) : INFINITY;
  const bool window_ok = t_window >= t0 + 1.0;
  r.details = {{"p_n", pn},
               {"level", pn / 2.0},
               {"lambda2", l2},
               {"t0", t0},
               {"noise_regime", noise_ok ? 1.0 : 0.0},
               {"window_after_t0", window_ok ? 1.0 : 0.0},
               {"failed_paths", static_cast<double>(b.n_failed)}};

  const Verdict v = lower_bound_verdict(b.mean, b.std_error, r.analytic_value, 0.0);
  if (b.n_failed > 0 && v == Verdict::kConsistent) r.verdict = Verdict::kInconclusive;
  else if (v == Verdict::kViolated && !(noise_ok && window_ok)) r.verdict = Verdict::kInconclusive;
  else r.verdict = v;
  r.notes.push_back("finite-horizon proxy for persistence of the maximum-effort strategy");
  if (!noise_ok) r.notes.push_back("noise is outside the sufficient small-noise regime");
  return r;
}

}  // namespace replab
