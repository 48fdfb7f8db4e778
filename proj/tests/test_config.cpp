#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dysonlab/config.hpp"
#include "dysonlab/experiments.hpp"
#include "dysonlab/report.hpp"

using namespace dysonlab;

TEST_CASE("every kind round-trips bit-exactly") {
  for (const auto& schema : experiment_schemas()) {
    const auto c = default_config(schema.kind);
    const std::string text = dump_config(c);
    const auto back = parse_config(text);
    CHECK(back == c);
    CHECK(dump_config(back) == text);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
  }
}

TEST_CASE("awkward reals survive the round trip") {
  auto c = default_config("dbm-simulate").with("horizon", 0.1 + 0.2).with("dt_min", 1e-13 / 3.0);
  const auto back = parse_config(dump_config(c));
  CHECK(back.real("horizon") == 0.1 + 0.2);
  CHECK(back.real("dt_min") == 1e-13 / 3.0);
  CHECK(parse_config(R"({"schema_version":1,"kind":"dbm-simulate","params":{"horizon":2}})").real("horizon") == 2.0);
}

TEST_CASE("schema rejections") {
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"kind":"moment-check","params":{"beta":1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"kind":"moment-check","params":{"betta":2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"kind":"moment-check","extra":1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":2,"kind":"moment-check"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"kind":"moment-check"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"kind":"no-such-kind"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"kind":"moment-check","params":{"n_particles":2.5}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"schema_version":1,"kind":"moment-check","params":{"n_replicas":0}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(default_config("moment-check").with("horizon", -1.0), ConfigError);
}

TEST_CASE("defaults fill missing parameters") {
  const auto c = parse_config(R"({"schema_version":1,"kind":"moment-check"})");
  CHECK(c.real("beta") == 2.0);
  CHECK(c.integer("n_particles") == 4);
  CHECK(c.reals("p_values") == std::vector<double>{1.0, 2.0, 4.0});
  CHECK_FALSE(describe_schema("moment-check").empty());
}

TEST_CASE("full precision formatting") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
  CsvTable t("x", {"a", "b"});
  t.row({"1", "2"});
  CHECK(t.to_string() == "a,b\n1,2\n");
  CHECK_THROWS_AS(t.row({"1"}), std::invalid_argument);
}

TEST_CASE("experiment outputs do not depend on worker count") {
  auto dbm = default_config("dbm-simulate").with("n_replicas", 300);
  auto oy = default_config("oy-suite").with("n_replicas", 200).with("dp_draws", 5);
  for (auto c : {dbm, oy}) {
    c.master_seed = 77;
    c.n_workers = 1;
    const auto one = run_experiment(c);
    c.n_workers = 3;
    const auto three = run_experiment(c);
    REQUIRE(one.tables.size() == three.tables.size());
    for (std::size_t i = 0; i < one.tables.size(); ++i) CHECK(one.tables[i].csv == three.tables[i].csv);
    CHECK(summary_json(c, one).dump() == summary_json(c, three).dump());
  }
}

TEST_CASE("artifacts on disk") {
  auto c = default_config("dbm-simulate").with("n_replicas", 100);
  c.master_seed = 5;
  const auto dir = std::filesystem::temp_directory_path() / "dysonlab_artifact_test";
  std::filesystem::remove_all(dir);
  const auto result = run_experiment(c);
  const auto files = write_artifacts(c, result, dir);
  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  std::ifstream in(dir / "manifest.json");
  const Json manifest = Json::parse(in);
  CHECK(manifest.at("master_seed") == 5);
  CHECK(manifest.at("config_hash").get<std::string>().find(config_hash(c)) != std::string::npos);
  const Json summary = summary_json(c, result);
  for (const auto& v : summary.at("verdicts")) {
    CHECK(v.contains("clause"));
    CHECK(v.contains("lhs"));
    CHECK(v.contains("rhs"));
    CHECK(v.contains("std_error"));
    CHECK(v.contains("verdict"));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("parameter combinations outside the schema are config errors") {
  auto c = default_config("dbm-simulate").with("x_start", Json::array({1.0, 0.0}));
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
}
