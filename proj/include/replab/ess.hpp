#pragma once

// All Nash equilibria of a symmetric matrix game by support enumeration, with
// each equilibrium's ESS status assigned by classify_equilibrium.

#include <cstddef>
#include <optional>
#include <vector>

#include "replab/game.hpp"

namespace replab {

inline constexpr std::size_t kMaxEnumerationStrategies = 20;

struct EquilibriumReport {
  SimplexPoint strategy;
  std::vector<std::size_t> support;
  double common_payoff = 0.0;  // c with {Ap}_j = c on the support
  EquilibriumStatus status = EquilibriumStatus::kUndetermined;
  double equal_payoff_residual = 0.0;  // max_{j in support} |{Ap}_j - c|
  double inequality_residual = 0.0;    // max(0, max_{j off support} {Ap}_j - c)
};

struct EqualizedSupport {
  SimplexPoint p;
  double c;
};

struct EqualizeOutcome {
  std::optional<EqualizedSupport> value;
  bool degenerate = false;  // the equal-payoff system on the support is singular
};

// Solves {A p}_j = c for j in support with sum p = 1 and p = 0 off support.
// Empty when the system is singular (flagged degenerate), when a weight comes
// out negative, or when the post-solve residual exceeds 1e-10.
EqualizeOutcome equalize_on_support(const PayoffMatrix& a, const std::vector<std::size_t>& support);

struct EquilibriumSet {
  std::vector<EquilibriumReport> equilibria;  // canonical order
  std::size_t degenerate_supports = 0;
};

// Enumerates the 2^n - 1 supports in order of increasing size, lexicographic
// within a size. n <= 20.
EquilibriumSet solve_all_equilibria(const PayoffMatrix& a);

// The unique ESS of a conditionally negative definite game. Throws
// PreconditionError when A is not CND and NumericalError if enumeration
// produces anything other than exactly one certified ESS.
EquilibriumReport unique_ess_under_cnd(const PayoffMatrix& a);

}  // namespace replab
