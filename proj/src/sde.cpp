#include "replab/sde.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "replab/errors.hpp"
#include "replab/rng.hpp"

namespace replab {

void SdeConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("SdeConfig: step h must be positive");
  if (!(horizon >= h) || !std::isfinite(horizon))
    throw PreconditionError("SdeConfig: horizon must be finite and at least one step");
  if (!(y_cap >= 50.0)) throw PreconditionError("SdeConfig: y_cap must be at least 50");
}

std::uint64_t SdeConfig::steps() const {
  const double q = horizon / h;
  auto n = static_cast<std::uint64_t>(std::ceil(q - 1e-9));
  return std::max<std::uint64_t>(n, 1);
}

double SdeConfig::step_length(std::uint64_t k) const {
  const std::uint64_t n = steps();
  if (k + 1 < n) return h;
  return horizon - static_cast<double>(n - 1) * h;
}

std::size_t SdeConfig::effective_stride() const {
  if (record_stride > 0) return record_stride;
  const std::uint64_t n = steps();
  const std::uint64_t slots = kMaxRecordedPoints - 2;  // initial and final points are extra
  return static_cast<std::size_t>(std::max<std::uint64_t>(1, (n + slots - 1) / slots));
}

SimplexPoint Trajectory::point(std::size_t i) const {
  auto s = state(i);
  return SimplexPoint::interior(Vector(s.begin(), s.end()));
}

void Trajectory::push(double t, std::span<const double> x) {
  times_.push_back(t);
  states_.insert(states_.end(), x.begin(), x.end());
}

IncrementSource seeded_increments(const SdeConfig& cfg, std::uint64_t path) {
  return [cfg, stream = GaussianStream(cfg.seed, path)](std::uint64_t k, std::span<double> dw) {
    stream.fill(k, dw);
    const double s = std::sqrt(cfg.step_length(k));
    for (double& v : dw) v *= s;
  };
}

Vector drift(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> x) {
  const std::size_t n = a.size();
  if (x.size() != n || sigma.size() != n) throw PreconditionError("drift: dimension mismatch");
  // B x with B = A - diag(sigma^2)
  Vector bx = a.apply(x);
  for (std::size_t j = 0; j < n; ++j) bx[j] -= sigma[j] * sigma[j] * x[j];
  const double mean = dot(x, bx);
  Vector out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = x[j] * (bx[j] - mean);
  return out;
}

Matrix diffusion_matrix(const NoiseSpec& sigma, std::span<const double> x) {
  const std::size_t n = sigma.size();
  if (x.size() != n) throw PreconditionError("diffusion_matrix: dimension mismatch");
  Matrix c(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) c(j, k) = ((j == k ? x[j] : 0.0) - x[j] * x[k]) * sigma[k];
  return c;
}

std::size_t choose_reference(std::span<const double> x0) {
  const std::size_t n = x0.size();
  const auto big = std::max_element(x0.begin(), x0.end());
  if (x0[n - 1] < 1e-6 * *big) return static_cast<std::size_t>(big - x0.begin());
  return n - 1;
}

namespace {

// Log-ratio coordinates against reference r, with y[r] = 0 kept explicitly.
struct LogRatio {
  std::size_t n;
  std::size_t r;
  double cap;
  Vector y;
  Vector x;
  bool clamped = false;

  LogRatio(std::span<const double> x0, double y_cap)
      : n(x0.size()), r(choose_reference(x0)), cap(y_cap), y(n), x(x0.begin(), x0.end()) {
    for (std::size_t j = 0; j < n; ++j) y[j] = std::log(x0[j] / x0[r]);
    y[r] = 0.0;
    clamp();
    to_simplex(y, x);
  }

  void clamp() {
    for (double& v : y) {
      if (v > cap) {
        v = cap;
        clamped = true;
      } else if (v < -cap) {
        v = -cap;
        clamped = true;
      }
    }
  }

  // Inverse of the log-ratio map via log-sum-exp. Components that underflow
  // are floored at the smallest normal double so states stay positive.
  static void to_simplex(std::span<const double> ys, std::span<double> out) {
    const double m = *std::max_element(ys.begin(), ys.end());
    double s = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) s += (out[j] = std::exp(ys[j] - m));
    for (double& v : out) v = std::max(v / s, DBL_MIN);
  }
};

void check_finite(std::span<const double> v, std::uint64_t k, const char* who) {
  for (double e : v)
    if (!std::isfinite(e)) {
      std::ostringstream msg;
      msg << who << ": non-finite state at step " << k;
      throw NumericalError(msg.str());
    }
}

inline double grid_time(const SdeConfig& cfg, std::uint64_t k, std::uint64_t n) {
  return k == n ? cfg.horizon : static_cast<double>(k) * cfg.h;
}

// Drives Euler-Maruyama in log-ratio coordinates. fill(k, dw) writes step k's
// increments; obs(k, t, x) sees every grid point (k = 0..N) and may stop the
// run early by returning false. Returns whether the cap was ever hit.
template <class Fill, class Observer>
bool run_sde(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> x0,
             const SdeConfig& cfg, Fill&& fill, Observer&& obs, std::size_t* ref_out = nullptr) {
  cfg.validate();
  const std::size_t n = a.size();
  if (x0.size() != n || sigma.size() != n) throw PreconditionError("simulate_sde: dimension mismatch");
  LogRatio s(x0, cfg.y_cap);
  if (ref_out) *ref_out = s.r;
  const std::size_t r = s.r;
  Vector ito(n);
  for (std::size_t j = 0; j < n; ++j) ito[j] = -0.5 * (sigma[j] * sigma[j] - sigma[r] * sigma[r]);

  const std::uint64_t steps = cfg.steps();
  Vector dw(n), ax(n);
  if (!obs(std::uint64_t{0}, 0.0, std::span<const double>(s.x))) return s.clamped;
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double dt = cfg.step_length(k);
    fill(k, std::span<double>(dw));
    const Matrix& m = a.matrix();
    for (std::size_t j = 0; j < n; ++j) ax[j] = dot(m.row(j), s.x);
    const double noise_r = sigma[r] * dw[r];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == r) continue;
      s.y[j] += (ax[j] - ax[r] + ito[j]) * dt + sigma[j] * dw[j] - noise_r;
    }
    check_finite(s.y, k + 1, "simulate_sde");
    s.clamp();
    LogRatio::to_simplex(s.y, s.x);
    if (!obs(k + 1, grid_time(cfg, k + 1, steps), std::span<const double>(s.x))) break;
  }
  return s.clamped;
}

template <class Fill, class Observer>
void run_sizes(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> z0,
               const SdeConfig& cfg, Fill&& fill, Observer&& obs) {
  cfg.validate();
  const std::size_t n = a.size();
  if (z0.size() != n || sigma.size() != n) throw PreconditionError("simulate_sizes: dimension mismatch");
  Vector logz(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(z0[j] > 0.0) || !std::isfinite(z0[j]))
      throw PreconditionError("simulate_sizes: initial sizes must be positive and finite");
    logz[j] = std::log(z0[j]);
  }
  // Total size is carried as a running log offset so it cannot overflow.
  double log_total_shift = 0.0;
  Vector x(n), dw(n), ax(n);
  LogRatio::to_simplex(logz, x);
  const std::uint64_t steps = cfg.steps();
  if (!obs(std::uint64_t{0}, 0.0, std::span<const double>(x))) return;
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double dt = cfg.step_length(k);
    fill(k, std::span<double>(dw));
    const Matrix& m = a.matrix();
    for (std::size_t j = 0; j < n; ++j) ax[j] = dot(m.row(j), x);
    for (std::size_t j = 0; j < n; ++j)
      logz[j] += (ax[j] - 0.5 * sigma[j] * sigma[j]) * dt + sigma[j] * dw[j];
    check_finite(logz, k + 1, "simulate_sizes");
    const double top = *std::max_element(logz.begin(), logz.end());
    for (double& v : logz) v -= top;
    log_total_shift += top;
    if (!std::isfinite(log_total_shift))
      throw NumericalError("simulate_sizes: total population size overflowed");
    LogRatio::to_simplex(logz, x);
    if (!obs(k + 1, grid_time(cfg, k + 1, steps), std::span<const double>(x))) break;
  }
}

struct Recorder {
  Trajectory* traj;
  std::size_t stride;
  std::uint64_t last;
  bool operator()(std::uint64_t k, double t, std::span<const double> x) const {
    if (k % stride == 0 || k == last) traj->push(t, x);
    return true;
  }
};

void require_interior(const SimplexPoint& x0, const char* who) {
  if (!x0.is_interior()) throw PreconditionError(std::string(who) + ": initial state must be interior");
}

struct SeededFill {
  GaussianStream stream;
  const SdeConfig* cfg;
  void operator()(std::uint64_t k, std::span<double> dw) const {
    stream.fill(k, dw);
    const double s = std::sqrt(cfg->step_length(k));
    for (double& v : dw) v *= s;
  }
};

struct SourceFill {
  const IncrementSource* src;
  void operator()(std::uint64_t k, std::span<double> dw) const { (*src)(k, dw); }
};

template <class Fill>
Trajectory record_sde(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                      const SdeConfig& cfg, Fill&& fill) {
  require_interior(x0, "simulate_sde");
  cfg.validate();
  Trajectory traj(a.size(), cfg.seed);
  std::size_t ref = 0;
  const bool clamped =
      run_sde(a, sigma, x0.weights(), cfg, fill, Recorder{&traj, cfg.effective_stride(), cfg.steps()}, &ref);
  traj.set_clamped(clamped);
  traj.set_reference_index(ref);
  return traj;
}

template <class Fill>
Trajectory record_sizes(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> z0,
                        const SdeConfig& cfg, Fill&& fill) {
  cfg.validate();
  Trajectory traj(a.size(), cfg.seed);
  run_sizes(a, sigma, z0, cfg, fill, Recorder{&traj, cfg.effective_stride(), cfg.steps()});
  return traj;
}

}  // namespace

Trajectory simulate_sde(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                        const SdeConfig& cfg, std::uint64_t path) {
  return record_sde(a, sigma, x0, cfg, SeededFill{GaussianStream(cfg.seed, path), &cfg});
}

Trajectory simulate_sde(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                        const SdeConfig& cfg, const IncrementSource& dw) {
  return record_sde(a, sigma, x0, cfg, SourceFill{&dw});
}

Trajectory simulate_sizes(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> z0,
                          const SdeConfig& cfg, std::uint64_t path) {
  return record_sizes(a, sigma, z0, cfg, SeededFill{GaussianStream(cfg.seed, path), &cfg});
}

Trajectory simulate_sizes(const PayoffMatrix& a, const NoiseSpec& sigma, std::span<const double> z0,
                          const SdeConfig& cfg, const IncrementSource& dw) {
  return record_sizes(a, sigma, z0, cfg, SourceFill{&dw});
}

Trajectory simulate_ode(const PayoffMatrix& a, const SimplexPoint& x0, const SdeConfig& cfg) {
  require_interior(x0, "simulate_ode");
  cfg.validate();
  const std::size_t n = a.size();
  if (x0.size() != n) throw PreconditionError("simulate_ode: dimension mismatch");
  LogRatio s(x0.weights(), cfg.y_cap);
  const std::size_t r = s.r;
  Trajectory traj(n, cfg.seed);
  traj.set_reference_index(r);

  Vector xs(n), ax(n);
  auto field = [&](const Vector& y, Vector& out) {
    LogRatio::to_simplex(y, xs);
    for (std::size_t j = 0; j < n; ++j) ax[j] = dot(a.matrix().row(j), xs);
    for (std::size_t j = 0; j < n; ++j) out[j] = (j == r) ? 0.0 : ax[j] - ax[r];
  };

  const std::uint64_t steps = cfg.steps();
  Recorder rec{&traj, cfg.effective_stride(), steps};
  rec(0, 0.0, s.x);
  Vector k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double dt = cfg.step_length(k);
    field(s.y, k1);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = s.y[j] + 0.5 * dt * k1[j];
    field(tmp, k2);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = s.y[j] + 0.5 * dt * k2[j];
    field(tmp, k3);
    for (std::size_t j = 0; j < n; ++j) tmp[j] = s.y[j] + dt * k3[j];
    field(tmp, k4);
    for (std::size_t j = 0; j < n; ++j) s.y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    check_finite(s.y, k + 1, "simulate_ode");
    s.clamp();
    LogRatio::to_simplex(s.y, s.x);
    rec(k + 1, grid_time(cfg, k + 1, steps), s.x);
  }
  traj.set_clamped(s.clamped);
  return traj;
}

HittingTimeResult hitting_time(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                               const SdeConfig& cfg, const Region& region, std::uint64_t path) {
  require_interior(x0, "hitting_time");
  HittingTimeResult res{false, cfg.horizon};
  run_sde(a, sigma, x0.weights(), cfg, SeededFill{GaussianStream(cfg.seed, path), &cfg},
          [&](std::uint64_t, double t, std::span<const double> x) {
            if (region.contains(x)) {
              res = {true, t};
              return false;
            }
            return true;
          });
  return res;
}

double occupation_fraction(const Trajectory& traj, const Region& region, double t_start) {
  if (traj.size() == 0) throw PreconditionError("occupation_fraction: empty trajectory");
  if (!(t_start < traj.times().back()))
    throw PreconditionError("occupation_fraction: t_start must precede the horizon");
  std::size_t total = 0, inside = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.time(i) < t_start) continue;
    ++total;
    if (region.contains(traj.state(i))) ++inside;
  }
  return total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
}

namespace {
double sq_dist(std::span<const double> x, std::span<const double> p) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - p[j]) * (x[j] - p[j]);
  return s;
}
}  // namespace

double time_avg_sq_distance(const Trajectory& traj, const SimplexPoint& p) {
  if (traj.size() == 0) throw PreconditionError("time_avg_sq_distance: empty trajectory");
  if (p.size() != traj.dimension()) throw PreconditionError("time_avg_sq_distance: dimension mismatch");
  if (traj.size() == 1) return sq_dist(traj.state(0), p.weights());
  double integral = 0.0;
  double prev = sq_dist(traj.state(0), p.weights());
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double cur = sq_dist(traj.state(i), p.weights());
    integral += 0.5 * (prev + cur) * (traj.time(i) - traj.time(i - 1));
    prev = cur;
  }
  return integral / (traj.times().back() - traj.times().front());
}

NamedStatistic NamedStatistic::final_coordinate(std::size_t k) {
  NamedStatistic s(Kind::kFinalCoordinate, "final_x_" + std::to_string(k + 1));
  s.index_ = k;
  return s;
}

NamedStatistic NamedStatistic::final_above(std::size_t k, double level) {
  NamedStatistic s(Kind::kFinalAbove, "final_x_" + std::to_string(k + 1) + "_above");
  s.index_ = k;
  s.level_ = level;
  return s;
}

NamedStatistic NamedStatistic::final_in_region(Region region) {
  NamedStatistic s(Kind::kFinalInRegion, "final_in_region");
  s.region_ = std::move(region);
  return s;
}

NamedStatistic NamedStatistic::hitting(Region region) {
  NamedStatistic s(Kind::kHittingTime, "hitting_time");
  s.region_ = std::move(region);
  return s;
}

NamedStatistic NamedStatistic::hit_before(Region region, double t) {
  NamedStatistic s(Kind::kHitBefore, "hit_before");
  s.region_ = std::move(region);
  s.level_ = t;
  return s;
}

NamedStatistic NamedStatistic::occupation(Region region, double t_start) {
  NamedStatistic s(Kind::kOccupation, "occupation_fraction");
  s.region_ = std::move(region);
  s.t_start_ = t_start;
  return s;
}

NamedStatistic NamedStatistic::time_avg_sq_distance(SimplexPoint p) {
  NamedStatistic s(Kind::kTimeAvgSqDistance, "time_avg_sq_distance");
  s.target_ = p.vec();
  return s;
}

NamedStatistic NamedStatistic::log_coordinate_rate(std::size_t k) {
  NamedStatistic s(Kind::kLogCoordinateRate, "log_x_" + std::to_string(k + 1) + "_rate");
  s.index_ = k;
  return s;
}

NamedStatistic NamedStatistic::exceeds_in_window(std::size_t k, double level, double t_start) {
  NamedStatistic s(Kind::kExceedsInWindow, "x_" + std::to_string(k + 1) + "_exceeds_in_window");
  s.index_ = k;
  s.level_ = level;
  s.t_start_ = t_start;
  return s;
}

NamedStatistic NamedStatistic::stays_and_ends(Region stay, std::size_t k, double level) {
  NamedStatistic s(Kind::kStaysAndEnds, "stays_and_ends_near_x_" + std::to_string(k + 1));
  s.region_ = std::move(stay);
  s.index_ = k;
  s.level_ = level;
  return s;
}

NamedStatistic NamedStatistic::final_vertex(double eps) {
  NamedStatistic s(Kind::kFinalVertex, "final_vertex");
  s.level_ = eps;
  return s;
}

NamedStatistic NamedStatistic::envelope_decay(std::size_t k, double rate, double spread) {
  NamedStatistic s(Kind::kEnvelopeDecay, "x_" + std::to_string(k + 1) + "_envelope_decay");
  s.index_ = k;
  s.rate_ = rate;
  s.spread_ = spread;
  return s;
}

double evaluate_statistic(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                          const SdeConfig& cfg, const NamedStatistic& stat, std::uint64_t path) {
  require_interior(x0, "evaluate_statistic");
  using K = NamedStatistic::Kind;
  const std::size_t n = a.size();
  if ((stat.kind() == K::kFinalCoordinate || stat.kind() == K::kFinalAbove ||
       stat.kind() == K::kLogCoordinateRate || stat.kind() == K::kExceedsInWindow ||
       stat.kind() == K::kStaysAndEnds || stat.kind() == K::kEnvelopeDecay) &&
      stat.index() >= n)
    throw PreconditionError("evaluate_statistic: coordinate index out of range");
  if (stat.kind() == K::kTimeAvgSqDistance && stat.target().size() != n)
    throw PreconditionError("evaluate_statistic: target dimension mismatch");
  if (stat.kind() == K::kEnvelopeDecay && !(cfg.horizon / 2.0 > std::exp(1.0)))
    throw PreconditionError("evaluate_statistic: envelope decay needs a horizon above 2e");

  const std::uint64_t last = cfg.steps();
  SeededFill fill{GaussianStream(cfg.seed, path), &cfg};
  const Region* region = stat.region() ? &*stat.region() : nullptr;

  double value = 0.0;
  switch (stat.kind()) {
    case K::kFinalCoordinate:
    case K::kFinalAbove:
    case K::kLogCoordinateRate:
    case K::kFinalInRegion: {
      Vector final_x;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t k, double, std::span<const double> x) {
        if (k == last) final_x.assign(x.begin(), x.end());
        return true;
      });
      const double xk = final_x[stat.index()];
      if (stat.kind() == K::kFinalCoordinate) value = xk;
      else if (stat.kind() == K::kFinalAbove) value = xk > stat.level() ? 1.0 : 0.0;
      else if (stat.kind() == K::kLogCoordinateRate) value = std::log(xk) / cfg.horizon;
      else value = region->contains(final_x) ? 1.0 : 0.0;
      break;
    }
    case K::kHittingTime:
    case K::kHitBefore: {
      double tau = cfg.horizon;
      bool hit = false;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t, double t, std::span<const double> x) {
        if (region->contains(x)) {
          tau = t;
          hit = true;
          return false;
        }
        return true;
      });
      if (stat.kind() == K::kHittingTime) value = tau;
      else value = (hit && tau <= stat.level()) ? 1.0 : 0.0;
      break;
    }
    case K::kOccupation: {
      std::uint64_t total = 0, inside = 0;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t, double t, std::span<const double> x) {
        if (t >= stat.t_start()) {
          ++total;
          if (region->contains(x)) ++inside;
        }
        return true;
      });
      value = total == 0 ? 0.0 : static_cast<double>(inside) / static_cast<double>(total);
      break;
    }
    case K::kTimeAvgSqDistance: {
      double integral = 0.0, prev = 0.0, prev_t = 0.0;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t k, double t, std::span<const double> x) {
        const double cur = sq_dist(x, stat.target());
        if (k > 0) integral += 0.5 * (prev + cur) * (t - prev_t);
        prev = cur;
        prev_t = t;
        return true;
      });
      value = integral / cfg.horizon;
      break;
    }
    case K::kExceedsInWindow: {
      bool seen = false;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t, double t, std::span<const double> x) {
        if (t >= stat.t_start() && x[stat.index()] > stat.level()) {
          seen = true;
          return false;
        }
        return true;
      });
      value = seen ? 1.0 : 0.0;
      break;
    }
    case K::kStaysAndEnds: {
      bool stayed = true;
      double xk = 0.0;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t k, double, std::span<const double> x) {
        if (!region->contains(x)) {
          stayed = false;
          return false;
        }
        if (k == last) xk = x[stat.index()];
        return true;
      });
      value = (stayed && xk > stat.level()) ? 1.0 : 0.0;
      break;
    }
    case K::kFinalVertex: {
      value = -1.0;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t k, double, std::span<const double> x) {
        if (k == last) {
          const auto top = std::max_element(x.begin(), x.end());
          if (*top > 1.0 - stat.level()) value = static_cast<double>(top - x.begin());
        }
        return true;
      });
      break;
    }
    case K::kEnvelopeDecay: {
      // log log t is only defined for t > e, so the early window starts there.
      const double half = cfg.horizon / 2.0;
      const double e = std::exp(1.0);
      double early = -INFINITY, late = -INFINITY;
      run_sde(a, sigma, x0.weights(), cfg, fill, [&](std::uint64_t, double t, std::span<const double> x) {
        if (t <= e) return true;
        const double env =
            std::log(x[stat.index()]) + stat.rate() * t - stat.spread() * std::sqrt(t * std::log(std::log(t)));
        if (t < half) early = std::max(early, env);
        else late = std::max(late, env);
        return true;
      });
      value = late < early ? 1.0 : 0.0;
      break;
    }
  }
  return value;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("REPLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

BatchResult batch_run(const PayoffMatrix& a, const NoiseSpec& sigma, const SimplexPoint& x0,
                      const SdeConfig& cfg, std::size_t n_paths, const NamedStatistic& stat,
                      const BatchOptions& opts) {
  if (n_paths == 0) throw PreconditionError("batch_run: n_paths must be at least 1");
  cfg.validate();
  require_interior(x0, "batch_run");

  BatchResult res;
  res.statistic = stat.name();
  res.n_paths = n_paths;
  res.seed = cfg.seed;
  res.per_path.assign(n_paths, 0.0);
  std::vector<std::string> errors(n_paths);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        res.per_path[i] = evaluate_statistic(a, sigma, x0, cfg, stat, i);
      } catch (const NumericalError& e) {
        res.per_path[i] = std::nan("");
        errors[i] = e.what();
      }
    }
  };

  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_workers(opts.workers), n_paths));
  if (workers <= 1) {
    work(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n_paths, b + chunk);
      if (b >= e) break;
      pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    if (!errors[i].empty()) {
      ++res.n_failed;
      res.failures.push_back("path " + std::to_string(i) + ": " + errors[i]);
      continue;
    }
    sum += res.per_path[i];
    ++m;
  }
  if (m > 0) {
    res.mean = sum / static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i)
      if (errors[i].empty()) ss += (res.per_path[i] - res.mean) * (res.per_path[i] - res.mean);
    res.std_error = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
  } else {
    res.mean = std::nan("");
    res.std_error = std::nan("");
  }
  return res;
}

}  // namespace replab
