#include "replab/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "replab/errors.hpp"

namespace replab {

namespace {

constexpr double kSumTolerance = 1e-12;

void require_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw PreconditionError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
}

// Calls fn(subset) for every subset of {0..n-1} of the given size, in
// lexicographic order.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t size, Fn&& fn) {
  if (size > n) return;
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(static_cast<const std::vector<std::size_t>&>(idx));
    std::size_t i = size;
    while (i > 0 && idx[i - 1] == n - size + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Column values (p - e_k)^T A e_r for every r.
Vector dominance_margins(const PayoffMatrix& a, std::size_t k, std::span<const double> p) {
  const std::size_t n = a.size();
  Vector out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double s = -a(k, r);
    for (std::size_t j = 0; j < n; ++j) s += p[j] * a(j, r);
    out[r] = s;
  }
  return out;
}

// Projects a nearly-feasible basic solution onto the closed simplex.
std::optional<Vector> to_simplex(const std::vector<std::size_t>& support, std::span<const double> sol,
                                 std::size_t n) {
  Vector p(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!std::isfinite(sol[i]) || sol[i] < -1e-12) return std::nullopt;
    p[support[i]] = std::max(0.0, sol[i]);
    total += p[support[i]];
  }
  if (total <= 0.0) return std::nullopt;
  for (double& w : p) w /= total;
  return p;
}

}  // namespace

PayoffMatrix::PayoffMatrix(Matrix entries) : m_(std::move(entries)) {
  if (!m_.square()) throw PreconditionError("PayoffMatrix: matrix must be square");
  if (m_.rows() < 2) throw PreconditionError("PayoffMatrix: need at least 2 strategies");
  for (double x : m_.data())
    if (!std::isfinite(x)) throw PreconditionError("PayoffMatrix: entries must be finite");
}

double PayoffMatrix::form(std::span<const double> x, std::span<const double> y) const {
  require_dims(x.size(), size(), "PayoffMatrix::form");
  require_dims(y.size(), size(), "PayoffMatrix::form");
  double s = 0.0;
  for (std::size_t j = 0; j < size(); ++j) s += x[j] * dot(m_.row(j), y);
  return s;
}

SimplexPoint SimplexPoint::interior(Vector weights) {
  auto p = closure(std::move(weights));
  for (double w : p.w_)
    if (!(w > 0.0)) throw PreconditionError("SimplexPoint: interior point needs positive weights");
  p.kind_ = Interiority::kInterior;
  return p;
}

SimplexPoint SimplexPoint::closure(Vector weights) {
  if (weights.empty()) throw PreconditionError("SimplexPoint: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw PreconditionError("SimplexPoint: weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > kSumTolerance)
    throw PreconditionError("SimplexPoint: weights must sum to 1 (got " + std::to_string(total) + ")");
  return SimplexPoint(std::move(weights), Interiority::kClosure);
}

SimplexPoint SimplexPoint::vertex(std::size_t n, std::size_t k) {
  if (k >= n) throw PreconditionError("SimplexPoint::vertex: index out of range");
  Vector w(n, 0.0);
  w[k] = 1.0;
  return SimplexPoint(std::move(w), Interiority::kClosure);
}

SimplexPoint SimplexPoint::barycenter(std::size_t n) {
  if (n == 0) throw PreconditionError("SimplexPoint::barycenter: n must be positive");
  return SimplexPoint(Vector(n, 1.0 / static_cast<double>(n)), Interiority::kInterior);
}

std::optional<std::size_t> SimplexPoint::vertex_index() const {
  for (std::size_t k = 0; k < w_.size(); ++k)
    if (std::abs(w_[k] - 1.0) <= kSumTolerance) return k;
  return std::nullopt;
}

std::vector<std::size_t> SimplexPoint::support(double threshold) const {
  std::vector<std::size_t> s;
  for (std::size_t j = 0; j < w_.size(); ++j)
    if (w_[j] > threshold) s.push_back(j);
  return s;
}

NoiseSpec::NoiseSpec(Vector sigmas) : s_(std::move(sigmas)) {
  if (s_.empty()) throw PreconditionError("NoiseSpec: empty");
  for (double s : s_)
    if (!std::isfinite(s) || !(s > 0.0))
      throw PreconditionError("NoiseSpec: coefficients must be finite and positive");
}

NoiseSpec NoiseSpec::uniform(std::size_t n, double sigma) { return NoiseSpec(Vector(n, sigma)); }

double NoiseSpec::max() const { return *std::max_element(s_.begin(), s_.end()); }
double NoiseSpec::min() const { return *std::min_element(s_.begin(), s_.end()); }

Region Region::ball(SimplexPoint center, double radius) {
  if (!(radius > 0.0)) throw PreconditionError("Region::ball: radius must be positive");
  return Region(Kind::kBall, radius, 0, center.vec());
}

Region Region::vertex_neighborhood(std::size_t k, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("Region: eps must lie in (0, 1)");
  return Region(Kind::kVertexNeighborhood, eps, k, {});
}

Region Region::any_vertex(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("Region: eps must lie in (0, 1)");
  return Region(Kind::kAnyVertex, eps, 0, {});
}

Region Region::coordinate_at_most(std::size_t k, double level) {
  return Region(Kind::kCoordinateAtMost, level, k, {});
}

Region Region::everything() { return Region(Kind::kEverything, 0.0, 0, {}); }
Region Region::empty() { return Region(Kind::kEmpty, 0.0, 0, {}); }

bool Region::contains(std::span<const double> x) const {
  switch (kind_) {
    case Kind::kBall: {
      require_dims(x.size(), center_.size(), "Region::contains");
      double d2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) d2 += (x[j] - center_[j]) * (x[j] - center_[j]);
      return d2 < param_ * param_;
    }
    case Kind::kVertexNeighborhood:
      return x[index_] >= 1.0 - param_;
    case Kind::kAnyVertex:
      return *std::max_element(x.begin(), x.end()) >= 1.0 - param_;
    case Kind::kCoordinateAtMost:
      return x[index_] <= param_;
    case Kind::kEverything:
      return true;
    case Kind::kEmpty:
      return false;
  }
  return false;
}

Matrix centered_symmetrization(const Matrix& a) {
  if (!a.square()) throw PreconditionError("centered_symmetrization: matrix must be square");
  const std::size_t n = a.rows();
  const double nn = static_cast<double>(n);
  Matrix sym(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) sym(j, k) = 0.5 * (a(j, k) + a(k, j));
  Vector row_sum(n, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) row_sum[j] += sym(j, k);
    total += row_sum[j];
  }
  Matrix d(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      d(j, k) = sym(j, k) - row_sum[j] / nn - row_sum[k] / nn + total / (nn * nn);
  // Enforce exact symmetry against rounding in the row sums.
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j + 1; k < n; ++k) d(k, j) = d(j, k);
  return d;
}

double lambda2(const Matrix& a) {
  const auto eig = jacobi_eigen(centered_symmetrization(a));
  return eig.values.at(1);
}

double lambda2(const PayoffMatrix& a) { return lambda2(a.matrix()); }

CndVerdict cnd_verdict(double lam2) {
  if (lam2 < -kCndTolerance) return CndVerdict::kNegativeDefinite;
  if (lam2 <= kCndTolerance) return CndVerdict::kBoundaryIndefinite;
  return CndVerdict::kIndefinite;
}

bool is_conditionally_negative_definite(const PayoffMatrix& a) {
  return cnd_verdict(lambda2(a)) == CndVerdict::kNegativeDefinite;
}

double kl_distance(const SimplexPoint& x, const SimplexPoint& p) {
  require_dims(x.size(), p.size(), "kl_distance");
  if (!x.is_interior()) throw PreconditionError("kl_distance: x must be an interior point");
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (p[j] > 0.0) d += p[j] * std::log(p[j] / x[j]);
  return d;
}

double kappa(const SimplexPoint& p, const NoiseSpec& sigma) {
  require_dims(p.size(), sigma.size(), "kappa");
  double weighted = 0.0, inv = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    weighted += p[j] * sigma[j] * sigma[j];
    inv += 1.0 / (sigma[j] * sigma[j]);
  }
  const double k2 = 0.5 * weighted - 1.0 / (2.0 * inv);
  return std::sqrt(std::max(0.0, k2));
}

bool condition_2_2(const SimplexPoint& p, const NoiseSpec& sigma, double lam2) {
  if (!(lam2 < 0.0)) throw PreconditionError("condition_2_2: requires lambda_2 < 0");
  const double n = static_cast<double>(p.size());
  const double min_p = *std::min_element(p.weights().begin(), p.weights().end());
  return kappa(p, sigma) < n / (n - 1.0) * std::sqrt(-lam2) * min_p;
}

PayoffMatrix modified_matrix(const PayoffMatrix& a, const NoiseSpec& sigma) {
  require_dims(a.size(), sigma.size(), "modified_matrix");
  Matrix b = a.matrix();
  for (std::size_t j = 0; j < a.size(); ++j) b(j, j) -= sigma[j] * sigma[j];
  return PayoffMatrix(std::move(b));
}

DominanceResult verify_dominance(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p) {
  require_dims(p.size(), a.size(), "verify_dominance");
  if (k >= a.size()) throw PreconditionError("verify_dominance: strategy index out of range");
  if (std::abs(p[k] - 1.0) <= kSumTolerance)
    throw PreconditionError("verify_dominance: p must differ from e_k");
  const Vector margins = dominance_margins(a, k, p.weights());
  const double c1 = *std::min_element(margins.begin(), margins.end());
  const double best = *std::max_element(margins.begin(), margins.end());
  Dominance kind = Dominance::kNone;
  if (c1 > kDominanceTolerance)
    kind = Dominance::kStrict;
  else if (c1 >= -kDominanceTolerance && best > kDominanceTolerance)
    kind = Dominance::kWeak;
  return {kind, c1};
}

std::optional<DominatingStrategy> search_dominating_strategy(const PayoffMatrix& a, std::size_t k) {
  const std::size_t n = a.size();
  if (k >= n) throw PreconditionError("search_dominating_strategy: strategy index out of range");
  if (n > 12) throw PreconditionError("search_dominating_strategy: supports at most 12 strategies");

  // Stage 1: max over p of min_r margin_r(p). Basic solutions pick a support S
  // and |S| tight columns T; unknowns are p_S and the level t.
  double best_c1 = -std::numeric_limits<double>::infinity();
  Vector best_p;
  for (std::size_t s = 1; s <= n; ++s) {
    for_each_combination(n, s, [&](const std::vector<std::size_t>& support) {
      for_each_combination(n, s, [&](const std::vector<std::size_t>& tight) {
        Matrix m(s + 1, s + 1);
        Vector rhs(s + 1, 0.0);
        for (std::size_t i = 0; i < s; ++i) {
          for (std::size_t j = 0; j < s; ++j) m(i, j) = a(support[j], tight[i]) - a(k, tight[i]);
          m(i, s) = -1.0;
        }
        for (std::size_t j = 0; j < s; ++j) m(s, j) = 1.0;
        rhs[s] = 1.0;
        auto sol = solve_linear(std::move(m), std::move(rhs));
        if (!sol) return;
        auto p = to_simplex(support, *sol, n);
        if (!p || std::abs((*p)[k] - 1.0) <= kSumTolerance) return;
        const Vector margins = dominance_margins(a, k, *p);
        const double c1 = *std::min_element(margins.begin(), margins.end());
        if (c1 > best_c1 + 1e-15) {
          best_c1 = c1;
          best_p = std::move(*p);
        }
      });
    });
  }
  if (best_c1 > kDominanceTolerance) {
    return DominatingStrategy{SimplexPoint::closure(best_p), best_c1, Dominance::kStrict};
  }
  if (best_c1 < -kDominanceTolerance) return std::nullopt;

  // Stage 2: the best level is zero. Maximize the total margin over
  // {p : every margin >= 0}; a positive optimum is a weak dominator.
  double best_total = kDominanceTolerance;
  std::optional<DominatingStrategy> weak;
  for (std::size_t s = 1; s <= n; ++s) {
    for_each_combination(n, s - 1, [&](const std::vector<std::size_t>& tight) {
      for_each_combination(n, s, [&](const std::vector<std::size_t>& support) {
        Matrix m(s, s);
        Vector rhs(s, 0.0);
        for (std::size_t i = 0; i + 1 < s; ++i)
          for (std::size_t j = 0; j < s; ++j) m(i, j) = a(support[j], tight[i]) - a(k, tight[i]);
        for (std::size_t j = 0; j < s; ++j) m(s - 1, j) = 1.0;
        rhs[s - 1] = 1.0;
        auto sol = solve_linear(std::move(m), std::move(rhs));
        if (!sol) return;
        auto p = to_simplex(support, *sol, n);
        if (!p || std::abs((*p)[k] - 1.0) <= kSumTolerance) return;
        const Vector margins = dominance_margins(a, k, *p);
        const double c1 = *std::min_element(margins.begin(), margins.end());
        if (c1 < -kDominanceTolerance) return;
        const double total = std::accumulate(margins.begin(), margins.end(), 0.0);
        if (total > best_total + 1e-15) {
          best_total = total;
          weak = DominatingStrategy{SimplexPoint::closure(*p), std::max(0.0, c1), Dominance::kWeak};
        }
      });
    });
  }
  return weak;
}

std::string_view to_string(EquilibriumStatus s) {
  switch (s) {
    case EquilibriumStatus::kNotNash: return "NotNash";
    case EquilibriumStatus::kNash: return "Nash";
    case EquilibriumStatus::kStrictNash: return "StrictNash";
    case EquilibriumStatus::kEssCertified: return "ESS-certified";
    case EquilibriumStatus::kEssRefuted: return "ESS-refuted";
    case EquilibriumStatus::kUndetermined: return "Undetermined";
  }
  return "?";
}

EquilibriumStatus classify_equilibrium(const PayoffMatrix& a, const SimplexPoint& p,
                                       const ClassifyOptions& opts) {
  const std::size_t n = a.size();
  require_dims(p.size(), n, "classify_equilibrium");
  const Vector ap = a.apply(p.weights());
  const double ppay = dot(p.weights(), ap);

  std::vector<std::size_t> best_replies;
  for (std::size_t j = 0; j < n; ++j) {
    if (ap[j] > ppay + kEquilibriumTolerance) return EquilibriumStatus::kNotNash;
    if (ap[j] >= ppay - kEquilibriumTolerance) best_replies.push_back(j);
  }

  if (const auto k = p.vertex_index()) {
    bool strict = true;
    for (std::size_t j = 0; j < n; ++j)
      if (j != *k && !(a(*k, *k) > a(j, *k) + kDominanceTolerance)) strict = false;
    if (strict) return EquilibriumStatus::kStrictNash;
  }
  if (!opts.check_ess) return EquilibriumStatus::kNash;

  const bool cnd = opts.cnd ? *opts.cnd : is_conditionally_negative_definite(a);
  if (cnd) return EquilibriumStatus::kEssCertified;

  // Condition (ii) only concerns alternative best replies q, i.e. q supported
  // on best_replies. With y = q - p this reads y^T A y < 0 on the cone
  // {y : y_j = 0 off best_replies, sum y = 0, y_j >= 0 off supp(p)}.
  const std::size_t m = best_replies.size();
  if (m < 2) return EquilibriumStatus::kEssCertified;  // no alternative best reply

  // Orthonormal Helmert basis of the zero-sum subspace on best_replies.
  const std::size_t dim = m - 1;
  Matrix basis(n, dim);
  for (std::size_t i = 1; i <= dim; ++i) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(i) * static_cast<double>(i + 1));
    for (std::size_t t = 0; t < i; ++t) basis(best_replies[t], i - 1) = scale;
    basis(best_replies[i], i - 1) = -static_cast<double>(i) * scale;
  }
  Matrix sym(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) sym(j, k) = 0.5 * (a(j, k) + a(k, j));
  const Matrix restricted = basis.transpose() * sym * basis;
  const auto eig = jacobi_eigen(restricted);
  if (eig.values.front() < -kCndTolerance) return EquilibriumStatus::kEssCertified;

  auto in_cone = [&](std::span<const double> y) {
    for (std::size_t j : best_replies)
      if (p[j] <= 0.0 && y[j] < -1e-12) return false;
    return true;
  };
  auto violates = [&](std::span<const double> y) {
    const double yy = dot(y, y);
    return yy > 1e-24 && a.form(y, y) >= -1e-12 * yy;
  };

  for (std::size_t c = 0; c < dim; ++c) {
    Vector y(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < dim; ++i) y[j] += basis(j, i) * eig.vectors(i, c);
    Vector neg(y);
    for (double& v : neg) v = -v;
    if ((in_cone(y) && violates(y)) || (in_cone(neg) && violates(neg)))
      return EquilibriumStatus::kEssRefuted;
  }

  std::mt19937_64 gen(0x5eed5eedULL);
  std::exponential_distribution<double> expo(1.0);
  Vector y(n);
  for (std::size_t s = 0; s < opts.cone_samples; ++s) {
    double total = 0.0;
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t j : best_replies) total += (y[j] = expo(gen));
    for (std::size_t j = 0; j < n; ++j) y[j] = y[j] / total - p[j];
    if (violates(y)) return EquilibriumStatus::kEssRefuted;
  }
  return EquilibriumStatus::kUndetermined;
}

bool strict_nash_condition_4_1(const PayoffMatrix& a, const NoiseSpec& sigma, std::size_t k) {
  require_dims(a.size(), sigma.size(), "strict_nash_condition_4_1");
  if (k >= a.size()) throw PreconditionError("strict_nash_condition_4_1: index out of range");
  const double s2 = sigma[k] * sigma[k];
  for (std::size_t j = 0; j < a.size(); ++j)
    if (j != k && !(a(k, k) > a(j, k) + s2)) return false;
  return true;
}

bool is_coordination_game(const PayoffMatrix& a, const NoiseSpec& sigma) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!strict_nash_condition_4_1(a, sigma, k)) return false;
  return true;
}

}  // namespace replab
