#include "replab/ess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "replab/errors.hpp"

namespace replab {

namespace {

constexpr double kSolveResidual = 1e-10;
constexpr double kReportResidual = 1e-9;
constexpr double kDedupDistance = 1e-8;

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

bool canonical_less(const EquilibriumReport& x, const EquilibriumReport& y) {
  if (x.support.size() != y.support.size()) return x.support.size() < y.support.size();
  if (x.support != y.support) return x.support < y.support;
  return std::lexicographical_compare(x.strategy.weights().begin(), x.strategy.weights().end(),
                                      y.strategy.weights().begin(), y.strategy.weights().end());
}

}  // namespace

EqualizeOutcome equalize_on_support(const PayoffMatrix& a, const std::vector<std::size_t>& support) {
  const std::size_t n = a.size();
  const std::size_t s = support.size();
  if (s == 0) throw PreconditionError("equalize_on_support: support must be nonempty");
  for (std::size_t j : support)
    if (j >= n) throw PreconditionError("equalize_on_support: index out of range");

  // [A_SS  -1] [p_S]   [0]
  // [1^T    0] [ c ] = [1]
  Matrix m(s + 1, s + 1);
  Vector rhs(s + 1, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) m(i, j) = a(support[i], support[j]);
    m(i, s) = -1.0;
    m(s, i) = 1.0;
  }
  rhs[s] = 1.0;
  const auto sol = solve_linear(m, rhs);
  if (!sol) return {std::nullopt, true};

  Vector p(n, 0.0);
  for (std::size_t i = 0; i < s; ++i) {
    if (!std::isfinite((*sol)[i]) || (*sol)[i] < 0.0) return {};
    p[support[i]] = (*sol)[i];
  }
  double total = 0.0;
  for (double w : p) total += w;
  for (double& w : p) w /= total;
  const double c = (*sol)[s];

  const Vector ap = a.apply(p);
  for (std::size_t j : support)
    if (std::abs(ap[j] - c) > kSolveResidual) return {};
  return {EqualizedSupport{SimplexPoint::closure(std::move(p)), c}, false};
}

EquilibriumSet solve_all_equilibria(const PayoffMatrix& a) {
  const std::size_t n = a.size();
  if (n > kMaxEnumerationStrategies)
    throw PreconditionError("solve_all_equilibria: support enumeration is limited to " +
                            std::to_string(kMaxEnumerationStrategies) + " strategies, got " +
                            std::to_string(n));

  const bool cnd = is_conditionally_negative_definite(a);
  EquilibriumSet out;

  std::vector<unsigned> masks;
  masks.reserve((1u << n) - 1);
  for (unsigned mask = 1; mask < (1u << n); ++mask) masks.push_back(mask);
  std::stable_sort(masks.begin(), masks.end(), [](unsigned x, unsigned y) {
    const int px = __builtin_popcount(x), py = __builtin_popcount(y);
    if (px != py) return px < py;
    // Lexicographic on the sorted index list equals reverse-bit order here:
    // the set with the smaller lowest differing index comes first.
    const unsigned diff = x ^ y;
    const unsigned low = diff & (~diff + 1u);
    return (x & low) != 0;
  });

  std::vector<std::size_t> support;
  for (unsigned mask : masks) {
    support.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (1u << j)) support.push_back(j);

    const auto eq = equalize_on_support(a, support);
    if (eq.degenerate) {
      ++out.degenerate_supports;
      continue;
    }
    if (!eq.value) continue;
    const auto& p = eq.value->p;
    const double c = eq.value->c;
    const Vector ap = a.apply(p.weights());

    double equal_res = 0.0, ineq_res = 0.0;
    bool zero_weight = false;
    for (std::size_t j = 0; j < n; ++j) {
      const bool on = (mask & (1u << j)) != 0;
      if (on) {
        equal_res = std::max(equal_res, std::abs(ap[j] - c));
        if (p[j] == 0.0) zero_weight = true;
      } else {
        ineq_res = std::max(ineq_res, ap[j] - c);
      }
    }
    if (equal_res > kReportResidual || ineq_res > kReportResidual) continue;

    bool duplicate = false;
    for (const auto& r : out.equilibria)
      if (distance(r.strategy.weights(), p.weights()) < kDedupDistance) duplicate = true;
    if (duplicate) continue;

    EquilibriumReport rep{p, {}, c, EquilibriumStatus::kUndetermined, equal_res, std::max(0.0, ineq_res)};
    // A weight that is exactly zero means the true support is smaller; the
    // smaller support was visited earlier, so this only happens in degenerate games.
    rep.support = zero_weight ? p.support() : support;
    ClassifyOptions opts;
    opts.cnd = cnd;
    rep.status = classify_equilibrium(a, p, opts);
    out.equilibria.push_back(std::move(rep));
  }
  std::sort(out.equilibria.begin(), out.equilibria.end(), canonical_less);
  return out;
}

EquilibriumReport unique_ess_under_cnd(const PayoffMatrix& a) {
  if (!is_conditionally_negative_definite(a))
    throw PreconditionError("unique_ess_under_cnd: payoff matrix is not conditionally negative definite");
  auto all = solve_all_equilibria(a);
  std::vector<EquilibriumReport> ess;
  for (auto& r : all.equilibria)
    if (r.status == EquilibriumStatus::kEssCertified || r.status == EquilibriumStatus::kStrictNash)
      ess.push_back(std::move(r));
  if (ess.size() != 1)
    throw NumericalError("unique_ess_under_cnd: expected exactly one ESS, found " +
                         std::to_string(ess.size()));
  return std::move(ess.front());
}

}  // namespace replab
