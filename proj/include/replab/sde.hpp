#pragma once

// Numerical integration of the stochastic replicator dynamics
//
//   dX = b(X) dt + C(X) dW,   b(x) = [diag(x) - x x^T][A - diag(sigma^2)] x,
//                             C(x) = [diag(x) - x x^T] diag(sigma),
//
// the deterministic replicator ODE and the raw-size process dZ_j = Z_j[{AX}_j dt
// + sigma_j dW_j]. All three are integrated in log-ratio coordinates
// Y_j = log(x_j / x_r) against a fixed reference strategy r. In Y the noise is
// additive, so Euler-Maruyama is strong order 1 there, and every state mapped
// back to the simplex is positive and normalized by construction.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replab/game.hpp"

namespace replab {

inline constexpr double kDefaultStep = 1e-3;
inline constexpr double kDefaultYCap = 500.0;
inline constexpr std::size_t kMaxRecordedPoints = 100000;
inline constexpr double kExtinctionThreshold = 1e-12;

struct SdeConfig {
  double h = kDefaultStep;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  double y_cap = kDefaultYCap;
  std::size_t record_stride = 0;  // 0: smallest stride keeping <= kMaxRecordedPoints points

  void validate() const;
  // Number of integration steps. The last step is shortened so the grid ends
  // exactly at the horizon.
  std::uint64_t steps() const;
  double step_length(std::uint64_t k) const;
  std::size_t effective_stride() const;
};

class Trajectory {
 public:
  Trajectory(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {}

  std::size_t dimension() const { return n_; }
  std::size_t size() const { return times_.size(); }
  const Vector& times() const { return times_; }
  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> state(std::size_t i) const {
    return {states_.data() + i * n_, n_};
  }
  SimplexPoint point(std::size_t i) const;
  std::span<const double> final_state() const { return state(size() - 1); }

  bool clamped() const { return clamped_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t reference_index() const { return reference_; }

  void push(double t, std::span<const double> x);
  void set_clamped(bool c) { clamped_ = c; }
  void set_reference_index(std::size_t r) { reference_ = r; }

  bool operator==(const Trajectory&) const = default;

 private:
  std::size_t n_;
  std::uint64_t seed_;
  Vector times_;
  Vector states_;
  bool clamped_ = false;
  std::size_t reference_ = 0;
};

struct HittingTimeResult {
  bool hit = false;
  double time = 0.0;
};

// Supplies the Brownian increment dW over step k (already scaled by the step
// length). Lets callers couple several integrators or refine a fixed path.
using IncrementSource = std::function<void(std::uint64_t step, std::span<double> dw)>;

// Default increments: sqrt(dt) times the counter-based normals for (seed, path).
IncrementSource seeded_increments(const SdeConfig& cfg, std::uint64_t path = 0);

Vector drift(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> x);
Matrix diffusion_matrix(const NoiseSpec& sigma, std::span<const double> x);

// Reference coordinate for the log-ratio map: the last one, unless it is
// below 1e-6 of the largest weight, in which case the largest.
std::size_t choose_reference(std::span<const double> x0);

Trajectory simulate_sde(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                        const SdeConfig& cfg, std::uint64_t path = 0);
Trajectory simulate_sde(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                        const SdeConfig& cfg, const IncrementSource& dw);

// Classic fourth-order Runge-Kutta in log-ratio coordinates. cfg.seed is echoed only.
Trajectory simulate_ode(const PayoffMatrix& a, const SimplexPoint& x0, const SdeConfig& cfg);

// Euler-Maruyama on log Z_j; the recorded states are Z / sum Z.
Trajectory simulate_sizes(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> z0,
                          const SdeConfig& cfg, std::uint64_t path = 0);
Trajectory simulate_sizes(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> z0,
                          const SdeConfig& cfg, const IncrementSource& dw);

// First grid time (every integration step is checked, not only recorded
// points) at which the path lies in the region. Resolution is one step.
HittingTimeResult hitting_time(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                               const SdeConfig& cfg, const Region& region, std::uint64_t path = 0);

// Fraction of recorded points with t >= t_start that lie in the region.
double occupation_fraction(const Trajectory& traj, const Region& region, double t_start);

// (1/T) * integral_0^T |X(s) - p|^2 ds by the trapezoidal rule on the recorded grid.
double time_avg_sq_distance(const Trajectory& traj, const SimplexPoint& p);

// Scalar per-path diagnostics evaluated on the full integration grid while the
// path is generated, so nothing is stored.
class NamedStatistic {
 public:
  enum class Kind {
    kFinalCoordinate,      // X_k(T)
    kFinalAbove,           // 1{X_k(T) > level}
    kFinalInRegion,        // 1{X(T) in region}
    kHittingTime,          // tau (horizon if not hit)
    kHitBefore,            // 1{tau <= level}
    kOccupation,           // fraction of grid times t >= t_start in region
    kTimeAvgSqDistance,    // (1/T) int |X - p|^2
    kLogCoordinateRate,    // log X_k(T) / T
    kExceedsInWindow,      // 1{X_k(t) > level for some grid t >= t_start}
    kStaysAndEnds,         // 1{X(t) in region for every grid t, and X_k(T) > level}
    kFinalVertex,          // k if X_k(T) > 1 - level for some k (0-based), else -1
    kEnvelopeDecay,        // 1{max_[T/2,T] env < max_(e,T/2) env}, env = log X_k + rate t - spread sqrt(t log log t)
  };

  static NamedStatistic final_coordinate(std::size_t k);
  static NamedStatistic final_above(std::size_t k, double level);
  static NamedStatistic final_in_region(Region region);
  static NamedStatistic hitting(Region region);
  static NamedStatistic hit_before(Region region, double t);
  static NamedStatistic occupation(Region region, double t_start);
  static NamedStatistic time_avg_sq_distance(SimplexPoint p);
  static NamedStatistic log_coordinate_rate(std::size_t k);
  static NamedStatistic exceeds_in_window(std::size_t k, double level, double t_start);
  static NamedStatistic stays_and_ends(Region stay, std::size_t k, double level);
  static NamedStatistic final_vertex(double eps);
  static NamedStatistic envelope_decay(std::size_t k, double rate, double spread);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::size_t index() const { return index_; }
  double level() const { return level_; }
  double t_start() const { return t_start_; }
  const std::optional<Region>& region() const { return region_; }
  const Vector& target() const { return target_; }
  double rate() const { return rate_; }
  double spread() const { return spread_; }

 private:
  NamedStatistic(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}
  Kind kind_;
  std::string name_;
  std::size_t index_ = 0;
  double level_ = 0.0;
  double t_start_ = 0.0;
  std::optional<Region> region_;
  Vector target_;
  double rate_ = 0.0;
  double spread_ = 0.0;
};

// One path's value of the statistic under the seeded increments (seed, path).
double evaluate_statistic(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                          const SdeConfig& cfg, const NamedStatistic& stat, std::uint64_t path);

struct BatchOptions {
  // 0: REPLAB_WORKERS if set, otherwise the hardware concurrency.
  unsigned workers = 0;
};

struct BatchResult {
  std::string statistic;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::size_t n_failed = 0;
  std::uint64_t seed = 0;
  Vector per_path;            // NaN where the path aborted
  std::vector<std::string> failures;  // diagnostic per aborted path
};

BatchResult batch_run(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                      const SdeConfig& cfg, std::size_t n_paths, const NamedStatistic& stat,
                      const BatchOptions& opts = {});

unsigned resolve_workers(unsigned requested);

}  // namespace replab
