#pragma once

// Statics of symmetric matrix games: payoff matrices, simplex points, noise
// coefficients, and the analytic constants (lambda_2, kappa, KL distance) that
// control the long-run behaviour of the stochastic replicator dynamics.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "replab/linalg.hpp"

namespace replab {

// Tolerance band around zero for lambda_2 inside which a matrix is reported
// "boundary-indefinite" rather than conditionally negative definite.
inline constexpr double kCndTolerance = 1e-10;
// Ties in dominance comparisons.
inline constexpr double kDominanceTolerance = 1e-12;
// Best-reply comparisons when classifying equilibria.
inline constexpr double kEquilibriumTolerance = 1e-9;

class PayoffMatrix {
 public:
  explicit PayoffMatrix(Matrix entries);
  PayoffMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : PayoffMatrix(Matrix(rows)) {}

  std::size_t size() const { return m_.rows(); }
  double operator()(std::size_t j, std::size_t k) const { return m_(j, k); }
  const Matrix& matrix() const { return m_; }

  // {A x}_j for every row j.
  Vector apply(std::span<const double> x) const { return m_ * x; }
  // x^T A y
  double form(std::span<const double> x, std::span<const double> y) const;

 private:
  Matrix m_;
};

enum class Interiority { kInterior, kClosure };

// A probability vector. Interior points have every weight > 0; closure points
// allow zeros. Weights sum to 1 within 1e-12.
class SimplexPoint {
 public:
  static SimplexPoint interior(Vector weights);
  static SimplexPoint closure(Vector weights);
  static SimplexPoint vertex(std::size_t n, std::size_t k);
  static SimplexPoint barycenter(std::size_t n);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t j) const { return w_[j]; }
  std::span<const double> weights() const { return w_; }
  const Vector& vec() const { return w_; }
  Interiority interiority() const { return kind_; }
  bool is_interior() const { return kind_ == Interiority::kInterior; }

  // Index k with weight 1 (within 1e-12), if this point is a vertex.
  std::optional<std::size_t> vertex_index() const;
  std::vector<std::size_t> support(double threshold = 0.0) const;

 private:
  SimplexPoint(Vector w, Interiority kind) : w_(std::move(w)), kind_(kind) {}
  Vector w_;
  Interiority kind_;
};

class NoiseSpec {
 public:
  explicit NoiseSpec(Vector sigmas);
  static NoiseSpec uniform(std::size_t n, double sigma);

  std::size_t size() const { return s_.size(); }
  double operator[](std::size_t j) const { return s_[j]; }
  std::span<const double> sigmas() const { return s_; }
  double max() const;
  double min() const;

 private:
  Vector s_;
};

// Target sets for hitting times and occupation fractions.
class Region {
 public:
  enum class Kind {
    kBall,            // {x : |x - center| < radius}
    kVertexNeighborhood,  // {x : x_k >= 1 - eps}
    kAnyVertex,       // {x : max_k x_k >= 1 - eps}
    kCoordinateAtMost,  // {x : x_k <= level}
    kEverything,
    kEmpty,
  };

  static Region ball(SimplexPoint center, double radius);
  static Region vertex_neighborhood(std::size_t k, double eps);
  static Region any_vertex(double eps);
  static Region coordinate_at_most(std::size_t k, double level);
  static Region everything();
  static Region empty();

  bool contains(std::span<const double> x) const;
  Kind kind() const { return kind_; }
  double radius() const { return param_; }
  std::size_t index() const { return index_; }
  const Vector& center() const { return center_; }

 private:
  Region(Kind kind, double param, std::size_t index, Vector center)
      : kind_(kind), param_(param), index_(index), center_(std::move(center)) {}
  Kind kind_;
  double param_;
  std::size_t index_;
  Vector center_;
};

// D = Abar - (1/n) Abar 1 1^T - (1/n) 1 1^T Abar + (1^T A 1 / n^2) 1 1^T with
// Abar = (A + A^T)/2. Symmetric, D 1 = 0, and y^T D y = y^T A y whenever
// 1^T y = 0.
Matrix centered_symmetrization(const Matrix& a);
inline Matrix centered_symmetrization(const PayoffMatrix& a) {
  return centered_symmetrization(a.matrix());
}

// Second largest eigenvalue (with multiplicity) of centered_symmetrization(A).
double lambda2(const PayoffMatrix& a);
double lambda2(const Matrix& a);

enum class CndVerdict { kNegativeDefinite, kBoundaryIndefinite, kIndefinite };
CndVerdict cnd_verdict(double lam2);
// True iff lambda2(A) < -kCndTolerance.
bool is_conditionally_negative_definite(const PayoffMatrix& a);

// Kullback-Leibler distance d(x, p) = sum_{p_j > 0} p_j log(p_j / x_j).
double kl_distance(const SimplexPoint& x, const SimplexPoint& p);

// kappa^2 = (1/2) sum p_j sigma_j^2 - 1 / (2 sum sigma_j^-2); returns kappa.
double kappa(const SimplexPoint& p, const NoiseSpec& sigma);

// kappa < n/(n-1) sqrt|lam2| min_j p_j. Requires lam2 < 0.
bool condition_2_2(const SimplexPoint& p, const NoiseSpec& sigma, double lam2);

// A - diag(sigma_1^2, ..., sigma_n^2).
PayoffMatrix modified_matrix(const PayoffMatrix& a, const NoiseSpec& sigma);

enum class Dominance { kNone, kWeak, kStrict };
struct DominanceResult {
  Dominance kind;
  double c1;  // min over vertices r of (p - e_k)^T A e_r
};

// Whether pure strategy k is dominated by the mixed strategy p.
DominanceResult verify_dominance(const PayoffMatrix& a, std::size_t k, const SimplexPoint& p);

struct DominatingStrategy {
  SimplexPoint p;
  double c1;
  Dominance kind;
};

// Finds p maximizing min_r (p - e_k)^T A e_r by enumerating the basic
// solutions of that linear program. Returns a strict dominator when the
// optimum is positive, a weak one when the optimum is zero but some column
// can be made strictly better, and nothing otherwise. n <= 12.
std::optional<DominatingStrategy> search_dominating_strategy(const PayoffMatrix& a, std::size_t k);

enum class EquilibriumStatus {
  kNotNash,
  kNash,  // Nash; ESS certification not attempted
  kStrictNash,
  kEssCertified,
  kEssRefuted,
  kUndetermined,  // Nash; certification neither succeeded nor found a violation
};
std::string_view to_string(EquilibriumStatus s);

struct ClassifyOptions {
  bool check_ess = true;
  // Precomputed answer to is_conditionally_negative_definite(A), if known.
  std::optional<bool> cnd;
  std::size_t cone_samples = 10000;
};

EquilibriumStatus classify_equilibrium(const PayoffMatrix& a, const SimplexPoint& p,
                                       const ClassifyOptions& opts = {});

// a_kk > a_jk + sigma_k^2 for all j != k.
bool strict_nash_condition_4_1(const PayoffMatrix& a, const NoiseSpec& sigma, std::size_t k);
// strict_nash_condition_4_1 for every k.
bool is_coordination_game(const PayoffMatrix& a, const NoiseSpec& sigma);

}  // namespace replab
