#pragma once

// File formats: game and attrition parameter JSON in, CSV/JSON reports out. All
// emitters return strings so callers decide where bytes go; write_file_atomic
// never leaves a partial file behind.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/attrition.hpp"
#include "replab/bounds.hpp"
#include "replab/ess.hpp"
#include "replab/game.hpp"
#include "replab/sde.hpp"

namespace replab {

// Malformed input files. Distinct from PreconditionError, which flags inputs
// that parse but violate a mathematical requirement.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GameFile {
  PayoffMatrix a;
  std::optional<NoiseSpec> sigma;
  std::vector<std::string> labels;  // empty when the file has none
};

// {"n": int, "A": [[real]], "sigma": [real], "labels": [string]}; sigma may
// be omitted, in which case simulate and verify need --sigma.
GameFile parse_game(const std::string& text);

struct AttritionFile {
  std::optional<AttritionSpec> general;
  std::optional<ConstantAttritionSpec> constant;
};

// {"n", "mode": "general", "costs", "rewards", "rho"} or {"n", "v", "rho"}
// (mode "constant" optional). rho may be a scalar in general mode.
AttritionFile parse_attrition(const std::string& text);

// Statistic by name, strategy indices 1-based: final:K, above:K:LEVEL,
// vertex:EPS, hit_vertex:EPS, log_rate:K.
NamedStatistic parse_statistic(const std::string& spec, std::size_t n);

std::string read_file(const std::string& path);
// Writes to path + ".tmp" and renames over path.
void write_file_atomic(const std::string& path, const std::string& content);

// %.17g
std::string format_g17(double v);
// Shortest decimal that round-trips.
std::string format_shortest(double v);

std::string trajectory_csv(const Trajectory& traj);
std::string batch_json(const BatchResult& b);
std::string bound_report_json(const BoundReport& r);
// "path,value" with one row per path; aborted paths have an empty value.
std::string per_path_csv(const Vector& per_path);

// "n,v,rho,s,p_0,...,p_width,c". Rows with n < width leave the missing p
// columns empty so c stays aligned.
std::string sweep_csv_header(std::size_t width);
std::string sweep_csv_row(const ConstantAttritionSpec& spec, const ClosedFormEss& ess, std::size_t width);
std::string sweep_csv(const SweepResult& sweep);

// Static analysis of a game: lambda2, CND verdict, equilibria with kappa and
// the interior condition per ESS, and the dominance table. Strategy indices
// are 1-based.
std::string analysis_json(const GameFile& game);

}  // namespace replab
