#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <string>

#include "biasforge/dataset_io.hpp"
#include "biasforge/error.hpp"
#include "biasforge/json_io.hpp"
#include "biasforge/params_io.hpp"
#include "biasforge/world_sim.hpp"

using namespace biasforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("biasforge_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

FullSampleDataset small_dataset(std::size_t n = 300) {
  WorldConfig w = default_world_config();
  w.n_applicants = n;
  w.seed = 17;
  return simulate_full_sample(w);
}

void expect_data_error(const std::function<void()>& fn, const std::string& fragment) {
  try {
    fn();
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("csv parsing") {
  const auto t = parse_csv("a,b,c\n1,\"x,y\",\"he said \"\"hi\"\"\"\r\n2,,3\n", "mem");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[0][2] == "he said \"hi\"");
  CHECK(t.rows[1][1].empty());
  CHECK(t.lines[1] == 3);
  CHECK(t.column("c") == 2);
  CHECK_THROWS_AS(t.column("zzz"), Error);
  expect_data_error([] { parse_csv("a,b\n1,2,3\n", "mem"); }, "mem:2");
  expect_data_error([] { parse_csv("a\n\"open\n", "mem"); }, "mem");

  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("number formatting round-trips") {
  const CsvTable dummy = parse_csv("x\n1\n", "mem");
  for (double v : {0.1, 1.0 / 3.0, -460.0, 32.2, 1e-300, 123456789.125}) {
    const std::string s = format_number(v);
    CHECK(parse_number(s, dummy, 0) == v);
  }
  expect_data_error([&] { parse_number("1.5x", dummy, 0); }, "mem:2");
}

TEST_CASE("full sample round trip") {
  const auto ds = small_dataset();
  const auto dir = scratch_dir("roundtrip");
  write_full_sample(dir, ds);
  for (const char* f : {"applicants.csv", "loans.csv", "signals.csv", "outcomes.csv"})
    CHECK(fs::exists(dir / f));
  const std::string text = read_text_file(dir / "applicants.csv");
  CHECK(text.substr(0, text.find('\n')) == "id,gender,first_app_month,housing,education,income,dpi");

  const auto back = read_full_sample(dir);
  REQUIRE(back.applicant_count() == ds.applicant_count());
  CHECK(back.application_count() == ds.application_count());
  for (std::size_t i = 0; i < ds.applicant_count(); ++i) {
    CHECK(back.profiles[i].id == ds.profiles[i].id);
    CHECK(back.profiles[i].gender == ds.profiles[i].gender);
    CHECK(back.profiles[i].covariates == ds.profiles[i].covariates);
    for (std::size_t k = 0; k < ds.histories[i].size(); ++k) {
      const auto& a = ds.histories[i][k];
      const auto& b = back.histories[i][k];
      CHECK(a.terms.gain_if_repaid == b.terms.gain_if_repaid);
      CHECK(a.signals.overdue_days == b.signals.overdue_days);
      CHECK(a.signals.help_frac == b.signals.help_frac);
      CHECK(a.outcome == b.outcome);
      CHECK(a.realized_profit == b.realized_profit);
    }
  }
  write_full_sample(dir / "again", back);
  CHECK(read_text_file(dir / "again" / "loans.csv") == read_text_file(dir / "loans.csv"));
}

TEST_CASE("decision log") {
  const auto ds = small_dataset();
  const auto records = simulate_decisions(ds, table2_preset(), DecisionMode::SampleDecisions, 3);
  const auto dir = scratch_dir("decisions");
  write_full_sample(dir, ds);
  write_decisions(dir / "decisions.csv", ds, records);
  const auto log = read_decision_log(dir);
  const auto direct = make_decision_log(ds, records);
  REQUIRE(log.application_count() == direct.application_count());
  for (std::size_t i = 0; i < log.histories.size(); ++i)
    for (std::size_t k = 0; k < log.histories[i].size(); ++k) {
      CHECK(log.histories[i][k].approved == direct.histories[i][k].approved);
      CHECK(log.histories[i][k].signals.has_value() == direct.histories[i][k].approved);
    }

  SUBCASE("empty") {
    write_text_file(dir / "decisions.csv", "applicant_id,t,approved\n");
    expect_data_error([&] { read_decision_log(dir); }, "empty");
  }
  SUBCASE("bad flag") {
    write_text_file(dir / "decisions.csv", "applicant_id,t,approved\n1,1,yes\n");
    expect_data_error([&] { read_decision_log(dir); }, "decisions.csv:2");
  }
}

TEST_CASE("loan index gaps are rejected") {
  const auto ds = small_dataset(50);
  const auto dir = scratch_dir("gaps");
  write_full_sample(dir, ds);
  std::string loans = read_text_file(dir / "loans.csv");
  const std::size_t pos = loans.find("\n1,1,");
  REQUIRE(pos != std::string::npos);
  loans.replace(pos, 5, "\n1,2,");
  write_text_file(dir / "loans.csv", loans);
  expect_data_error([&] { read_full_sample(dir); }, "loans.csv");
}

TEST_CASE("params json") {
  const ModelParams p = table2_preset();
  CHECK(params_from_json(params_to_json(p)) == p);
  CHECK(params_from_json(Json("table2")) == p);
  CHECK(params_from_json(Json{{"preset", "table2-v1"}}) == p);
  CHECK(params_from_json(Json{{"estimates", params_to_json(p)}}) == p);
  CHECK_THROWS_AS(preset_by_name("table3"), Error);

  Json broken = params_to_json(p);
  broken.erase("z");
  try {
    params_from_json(broken);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("z") != std::string::npos);
  }

  const fs::path shipped = fs::path(BIASFORGE_SOURCE_DIR) / "data" / "params" / "table2-v1.json";
  CHECK(load_params(shipped) == p);
}

TEST_CASE("json files") {
  const auto dir = scratch_dir("json");
  write_json_file(dir / "x.json", Json{{"b", 1}, {"a", 2}});
  const std::string text = read_text_file(dir / "x.json");
  CHECK(text.find("\"a\"") < text.find("\"b\""));
  CHECK(text.back() == '\n');
  write_text_file(dir / "bad.json", "{nope");
  CHECK_THROWS_AS(read_json_file(dir / "bad.json"), Error);
  try {
    read_text_file(dir / "missing.json");
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
