#include "replab/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "replab/errors.hpp"

namespace replab {

using ojson = nlohmann::ordered_json;

namespace {

ojson parse_json(const std::string& text) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

const ojson& field(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(std::string("missing field \"") + key + "\"");
  return *it;
}

double number(const ojson& v, const char* what) {
  if (!v.is_number()) throw FormatError(std::string(what) + " must be a number");
  return v.get<double>();
}

Vector number_array(const ojson& v, const char* what) {
  if (!v.is_array()) throw FormatError(std::string(what) + " must be an array");
  Vector out;
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

std::size_t count(const ojson& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw FormatError(std::string(what) + " must be a positive integer");
  return static_cast<std::size_t>(v.get<long long>());
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson values(const NamedValues& nv) {
  ojson o = ojson::object();
  for (const auto& [k, v] : nv) o[k] = number_or_null(v);
  return o;
}

ojson vec(std::span<const double> v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

ojson one_based(const std::vector<std::size_t>& idx) {
  ojson a = ojson::array();
  for (std::size_t i : idx) a.push_back(i + 1);
  return a;
}

std::string_view to_string(CndVerdict v) {
  switch (v) {
    case CndVerdict::kNegativeDefinite: return "negative_definite";
    case CndVerdict::kBoundaryIndefinite: return "boundary";
    case CndVerdict::kIndefinite: return "indefinite";
  }
  return "?";
}

std::string_view to_string(Dominance d) {
  switch (d) {
    case Dominance::kNone: return "none";
    case Dominance::kWeak: return "weak";
    case Dominance::kStrict: return "strict";
  }
  return "?";
}

std::size_t one_based_index(double k, std::size_t n) {
  if (k != std::floor(k) || k < 1.0 || k > static_cast<double>(n)) throw FormatError("strategy index must lie in 1..n");
  return static_cast<std::size_t>(k) - 1;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw FormatError("not a number: \"" + s + "\"");
  return v;
}

}  // namespace

// final:K | above:K:LEVEL | vertex:EPS | hit_vertex:EPS | log_rate:K, K 1-based.
NamedStatistic parse_statistic(const std::string& spec, std::size_t n) {
  const auto parts = split(spec, ':');
  const std::string& kind = parts.empty() ? spec : parts[0];
  auto k_at = [&](std::size_t i) { return one_based_index(to_double(parts.at(i)), n); };
  try {
    if (kind == "final" && parts.size() == 2) return NamedStatistic::final_coordinate(k_at(1));
    if (kind == "above" && parts.size() == 3) return NamedStatistic::final_above(k_at(1), to_double(parts[2]));
    if (kind == "vertex" && parts.size() == 2) return NamedStatistic::final_vertex(to_double(parts[1]));
    if (kind == "hit_vertex" && parts.size() == 2)
      return NamedStatistic::hitting(Region::any_vertex(to_double(parts[1])));
    if (kind == "log_rate" && parts.size() == 2) return NamedStatistic::log_coordinate_rate(k_at(1));
  } catch (const std::out_of_range&) {
  }
  throw FormatError("unknown --statistic \"" + spec + "\"");
}

GameFile parse_game(const std::string& text) {
  const ojson j = parse_json(text);
  if (!j.is_object()) throw FormatError("game file must be a JSON object");
  const std::size_t n = count(field(j, "n"), "n");
  const ojson& rows = field(j, "A");
  if (!rows.is_array() || rows.size() != n) throw FormatError("A must have n rows");
  Matrix a(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const Vector row = number_array(rows[r], "A row");
    if (row.size() != n) throw FormatError("A must be n x n");
    for (std::size_t c = 0; c < n; ++c) a(r, c) = row[c];
  }
  GameFile g{PayoffMatrix(std::move(a)), std::nullopt, {}};
  if (auto it = j.find("sigma"); it != j.end()) {
    Vector s = number_array(*it, "sigma");
    if (s.size() != n) throw FormatError("sigma must have n entries");
    g.sigma = NoiseSpec(std::move(s));
  }
  if (auto it = j.find("labels"); it != j.end()) {
    if (!it->is_array() || it->size() != n) throw FormatError("labels must be an array of n strings");
    for (const auto& l : *it) {
      if (!l.is_string()) throw FormatError("labels must be strings");
      g.labels.push_back(l.get<std::string>());
    }
  }
  return g;
}

AttritionFile parse_attrition(const std::string& text) {
  const ojson j = parse_json(text);
  if (!j.is_object()) throw FormatError("attrition file must be a JSON object");
  const std::size_t n = count(field(j, "n"), "n");
  std::string mode = "constant";
  if (auto it = j.find("mode"); it != j.end()) {
    if (!it->is_string()) throw FormatError("mode must be a string");
    mode = it->get<std::string>();
  } else if (j.contains("costs")) {
    mode = "general";
  }
  AttritionFile out;
  if (mode == "constant") {
    ConstantAttritionSpec s{n, number(field(j, "v"), "v"), 0.0};
    if (auto it = j.find("rho"); it != j.end()) s.rho = number(*it, "rho");
    s.validate();
    out.constant = s;
  } else if (mode == "general") {
    AttritionSpec s;
    s.n = n;
    s.costs = number_array(field(j, "costs"), "costs");
    s.rewards = number_array(field(j, "rewards"), "rewards");
    if (auto it = j.find("rho"); it == j.end()) s.rho.assign(n + 1, 0.0);
    else if (it->is_number()) s.rho.assign(n + 1, it->get<double>());
    else s.rho = number_array(*it, "rho");
    s.validate();
    out.general = std::move(s);
  } else {
    throw FormatError("mode must be \"general\" or \"constant\"");
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot rename onto " + path);
  }
}

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  for (std::size_t j = 1; j <= traj.dimension(); ++j) out += ",x_" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out += format_g17(traj.time(i));
    for (double x : traj.state(i)) {
      out += ',';
      out += format_g17(x);
    }
    out += '\n';
  }
  return out;
}

std::string batch_json(const BatchResult& b) {
  ojson j;
  j["statistic"] = b.statistic;
  j["mean"] = number_or_null(b.mean);
  j["std_error"] = number_or_null(b.std_error);
  j["n_paths"] = b.n_paths;
  j["seed"] = b.seed;
  j["per_path"] = vec(b.per_path);
  if (b.n_failed > 0) {
    j["n_failed"] = b.n_failed;
    j["failures"] = b.failures;
  }
  return j.dump(2) + "\n";
}

std::string bound_report_json(const BoundReport& r) {
  ojson j;
  j["name"] = r.name;
  j["analytic_value"] = number_or_null(r.analytic_value);
  j["empirical_value"] = number_or_null(r.empirical_value);
  j["standard_error"] = number_or_null(r.standard_error);
  j["verdict"] = std::string(to_string(r.verdict));
  j["inputs"] = values(r.inputs);
  j["details"] = values(r.details);
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

std::string per_path_csv(const Vector& per_path) {
  std::string out = "path,value\n";
  for (std::size_t i = 0; i < per_path.size(); ++i) {
    out += std::to_string(i) + ',';
    if (std::isfinite(per_path[i])) out += format_g17(per_path[i]);
    out += '\n';
  }
  return out;
}

std::string sweep_csv_header(std::size_t width) {
  std::string out = "n,v,rho,s";
  for (std::size_t k = 0; k <= width; ++k) out += ",p_" + std::to_string(k);
  return out + ",c\n";
}

std::string sweep_csv_row(const ConstantAttritionSpec& spec, const ClosedFormEss& ess, std::size_t width) {
  if (spec.n > width) throw PreconditionError("sweep_csv_row: row wider than the header");
  std::string out = std::to_string(spec.n) + ',' + format_shortest(spec.v) + ',' + format_shortest(spec.rho) + ',';
  if (ess.s) out += std::to_string(*ess.s);
  for (std::size_t k = 0; k <= width; ++k) {
    out += ',';
    if (k <= spec.n) out += format_shortest(ess.p[k]);
  }
  out += ',';
  if (ess.c) out += format_shortest(*ess.c);
  return out + '\n';
}

std::string sweep_csv(const SweepResult& sweep) {
  std::size_t width = 0;
  for (const auto& row : sweep.rows) width = std::max(width, row.spec.n);
  std::string out = sweep_csv_header(width);
  for (const auto& row : sweep.rows) out += sweep_csv_row(row.spec, row.ess, width);
  return out;
}

std::string analysis_json(const GameFile& game) {
  const PayoffMatrix& a = game.a;
  const std::size_t n = a.size();
  ojson j;
  j["n"] = n;
  if (!game.labels.empty()) j["labels"] = game.labels;
  if (n < 2) throw PreconditionError("analysis needs at least two strategies");
  const double l2 = lambda2(a);
  j["lambda2"] = l2;
  j["cnd"] = std::string(to_string(cnd_verdict(l2)));

  if (n <= kMaxEnumerationStrategies) {
    const auto set = solve_all_equilibria(a);
    ojson eqs = ojson::array();
    for (const auto& e : set.equilibria) {
      ojson q;
      q["strategy"] = vec(e.strategy.weights());
      q["support"] = one_based(e.support);
      q["payoff"] = e.common_payoff;
      q["status"] = std::string(to_string(e.status));
      q["equal_payoff_residual"] = e.equal_payoff_residual;
      const bool ess = e.status == EquilibriumStatus::kEssCertified || e.status == EquilibriumStatus::kStrictNash;
      if (ess && game.sigma) {
        q["kappa"] = kappa(e.strategy, *game.sigma);
        q["interior_condition"] =
            l2 < 0.0 ? ojson(e.strategy.is_interior() && condition_2_2(e.strategy, *game.sigma, l2)) : ojson(nullptr);
      }
      eqs.push_back(std::move(q));
    }
    j["equilibria"] = std::move(eqs);
    j["degenerate_supports"] = set.degenerate_supports;
    j["degenerate"] = set.degenerate_supports > 0;
  } else {
    j["equilibria"] = nullptr;
  }

  if (n <= 12) {
    ojson dom = ojson::array();
    for (std::size_t k = 0; k < n; ++k) {
      ojson d;
      d["strategy"] = k + 1;
      const auto found = search_dominating_strategy(a, k);
      d["dominated"] = std::string(to_string(found ? found->kind : Dominance::kNone));
      if (found) {
        d["by"] = vec(found->p.weights());
        d["c1"] = found->c1;
      }
      dom.push_back(std::move(d));
    }
    j["dominance"] = std::move(dom);
  } else {
    j["dominance"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace replab
