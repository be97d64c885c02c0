#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "replab/io.hpp"

using namespace replab;

TEST_CASE("game files") {
  const GameFile g = parse_game(R"({"n": 2, "A": [[3, 0], [5, 1]], "sigma": [0.1, 0.2], "labels": ["c", "d"]})");
  CHECK(g.a.matrix() == Matrix{{3, 0}, {5, 1}});
  REQUIRE(g.sigma);
  CHECK((*g.sigma)[1] == 0.2);
  CHECK(g.labels == std::vector<std::string>{"c", "d"});

  const GameFile bare = parse_game(R"({"n": 2, "A": [[1, 0], [0, 1]]})");
  CHECK_FALSE(bare.sigma);
  CHECK(bare.labels.empty());

  CHECK_THROWS_AS(parse_game("{"), FormatError);
  CHECK_THROWS_AS(parse_game(R"({"A": [[1, 0], [0, 1]]})"), FormatError);
  CHECK_THROWS_AS(parse_game(R"({"n": 2, "A": [[1, 0], [0]]})"), FormatError);
  CHECK_THROWS_AS(parse_game(R"({"n": 3, "A": [[1, 0], [0, 1]]})"), FormatError);
  CHECK_THROWS_AS(parse_game(R"({"n": 2, "A": [[1, 0], [0, 1]], "sigma": [1]})"), FormatError);
  CHECK_THROWS_AS(parse_game(R"({"n": 2, "A": [[1, "x"], [0, 1]]})"), FormatError);
}

TEST_CASE("attrition files") {
  const auto c = parse_attrition(R"({"n": 2, "v": 1, "rho": 0})");
  REQUIRE(c.constant);
  CHECK(c.constant->n == 2);
  CHECK_FALSE(c.general);

  const auto g = parse_attrition(R"({"n": 1, "mode": "general", "costs": [0, 1], "rewards": [1, 0.9], "rho": 0.1})");
  REQUIRE(g.general);
  CHECK(g.general->rho == Vector{0.1, 0.1});
  CHECK(g.general->rewards[1] == 0.9);

  CHECK_THROWS(parse_attrition(R"({"n": 1, "costs": [0, 1], "rewards": [1]})"));
  CHECK_THROWS_AS(parse_attrition(R"({"n": 2, "mode": "unknown", "v": 1})"), FormatError);
}

TEST_CASE("statistic specs") {
  CHECK(parse_statistic("final:2", 3).kind() == NamedStatistic::Kind::kFinalCoordinate);
  CHECK(parse_statistic("final:2", 3).index() == 1);
  const auto above = parse_statistic("above:1:0.9", 2);
  CHECK(above.kind() == NamedStatistic::Kind::kFinalAbove);
  CHECK(above.level() == 0.9);
  CHECK(parse_statistic("hit_vertex:0.01", 3).kind() == NamedStatistic::Kind::kHittingTime);
  CHECK_THROWS_AS(parse_statistic("final:4", 3), FormatError);
  CHECK_THROWS_AS(parse_statistic("final:0", 3), FormatError);
  CHECK_THROWS_AS(parse_statistic("median:1", 3), FormatError);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_g17(v)) == v);
    CHECK(std::stod(format_shortest(v)) == v);
  }
  CHECK(format_shortest(0.6) == "0.6");
}

TEST_CASE("trajectory and batch exports") {
  Trajectory t(2, 5);
  t.push(0.0, Vector{0.5, 0.5});
  t.push(0.1, Vector{0.4, 0.6});
  const std::string csv = trajectory_csv(t);
  CHECK(csv.rfind("t,x_1,x_2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  BatchResult b;
  b.statistic = "final:1";
  b.mean = 0.25;
  b.std_error = 0.01;
  b.n_paths = 2;
  b.seed = 9;
  b.per_path = {0.2, std::numeric_limits<double>::quiet_NaN()};
  const auto j = nlohmann::json::parse(batch_json(b));
  for (const char* key : {"statistic", "mean", "std_error", "n_paths", "seed", "per_path"}) CHECK(j.contains(key));
  CHECK(j["per_path"][1].is_null());
  CHECK(per_path_csv(b.per_path).rfind("path,value\n", 0) == 0);
}

TEST_CASE("bound report export") {
  BoundReport r;
  r.name = "2.3a";
  r.analytic_value = 0.75;
  r.verdict = Verdict::kConsistent;
  r.inputs = {{"delta", 0.1}};
  r.details = {{"kappa", 0.02}};
  const auto j = nlohmann::json::parse(bound_report_json(r));
  CHECK(j["verdict"] == "consistent");
  CHECK(j["inputs"]["delta"] == 0.1);
  CHECK(j["details"]["kappa"] == 0.02);
}

TEST_CASE("analysis report") {
  GameFile g = parse_game(R"({"n": 2, "A": [[3, 0], [5, 1]], "sigma": [0.1, 0.1]})");
  const auto j = nlohmann::json::parse(analysis_json(g));
  CHECK(j["n"] == 2);
  CHECK(j["cnd"] == "negative_definite");
  bool strict_defect = false;
  for (const auto& e : j["equilibria"])
    if (e["support"] == nlohmann::json::array({2}) && e["status"] == "StrictNash") strict_defect = true;
  CHECK(strict_defect);
  CHECK(j["dominance"][0]["dominated"] == "strict");
}

TEST_CASE("atomic writes leave no temporary files") {
  const auto dir = std::filesystem::temp_directory_path() / "replab_io_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.txt").string();
  write_file_atomic(path, "hello\n");
  write_file_atomic(path, "again\n");
  CHECK(read_file(path) == "again\n");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  CHECK_THROWS_AS(read_file((dir / "missing.json").string()), FormatError);
  CHECK_THROWS(write_file_atomic((dir / "no" / "such" / "dir.txt").string(), "x"));
  std::filesystem::remove_all(dir);
}
