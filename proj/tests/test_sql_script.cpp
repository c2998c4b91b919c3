#include <etl/db.hpp>
#include <etl/sql_script.hpp>

#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace etl;

TEST_CASE("split on top-level semicolons") {
  auto stmts = split_statements("CREATE TABLE a(x INT); INSERT INTO a VALUES (1);");
  REQUIRE(stmts.size() == 2);
  CHECK(stmts[0] == "CREATE TABLE a(x INT)");
  CHECK(stmts[1] == "INSERT INTO a VALUES (1)");
}

TEST_CASE("semicolon inside a string literal does not split") {
  auto stmts = split_statements("INSERT INTO t VALUES ('a;b');");
  REQUIRE(stmts.size() == 1);
  CHECK(stmts[0] == "INSERT INTO t VALUES ('a;b')");
}

TEST_CASE("semicolon inside a comment does not split") {
  auto stmts = split_statements("-- c;\nSELECT 1;");
  REQUIRE(stmts.size() == 1);
  CHECK(stmts[0].find("SELECT 1") != std::string::npos);
}

TEST_CASE("block comments, doubled quotes, trailing comment residue") {
  auto stmts = split_statements(
      "/* header; with ; semicolons */\n"
      "CREATE TABLE \"odd;name\" (x INT);\n"
      "INSERT INTO \"odd;name\" VALUES ('it''s; fine');\n"
      "-- done\n");
  REQUIRE(stmts.size() == 2);
  CHECK(stmts[1].find("it''s; fine") != std::string::npos);
}

TEST_CASE("empty script splits to nothing") {
  CHECK(split_statements("").empty());
  CHECK(split_statements(" \n\t ").empty());
  CHECK(split_statements(";;;").empty());
  CHECK(split_statements("-- only a comment\n").empty());
}

TEST_CASE("inserting line comments between statements never changes the count") {
  std::vector<std::string> base = {
      "CREATE TABLE t1 (a INT)", "INSERT INTO t1 VALUES (1)", "CREATE TABLE t2 (b TEXT)",
      "INSERT INTO t2 VALUES ('x;y')", "DROP TABLE t2"};
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::string script;
    for (const auto& stmt : base) {
      if (coin(rng)) script += "-- noise; with semicolons\n";
      script += stmt + ";\n";
      if (coin(rng)) script += "-- more; noise\n";
    }
    CHECK(split_statements(script).size() == base.size());
  }
}

TEST_CASE("run_script executes everything inside one transaction") {
  testsupport::TempDir dir;
  auto db = connect(ConnectionProfile::embedded(dir / "t.sqlite3"));

  CHECK(run_script(*db, "CREATE TABLE a(x INT);\nCREATE TABLE b(y INT);\nINSERT INTO a VALUES (7);") == 3);
  CHECK(db->list_tables() == std::vector<std::string>{"a", "b"});

  CHECK(run_script(*db, "") == 0);
}

TEST_CASE("run_script rolls everything back on the failing statement") {
  testsupport::TempDir dir;
  auto db = connect(ConnectionProfile::embedded(dir / "t.sqlite3"));
  run_script(*db, "CREATE TABLE keep(x INT);");
  auto before = db->list_tables();

  try {
    run_script(*db, "CREATE TABLE t1(x INT); CREATE TABLE nope(; CREATE TABLE t2(x INT);");
    FAIL("expected ScriptError");
  } catch (const ScriptError& e) {
    CHECK(e.statement_index() == 2);
  }
  CHECK(db->list_tables() == before);
}

TEST_CASE("wipe drops every table") {
  testsupport::TempDir dir;
  auto db = connect(ConnectionProfile::embedded(dir / "t.sqlite3"));
  run_script(*db, "CREATE TABLE a(x INT); CREATE TABLE b(x INT); CREATE TABLE c(x INT);");
  CHECK(wipe(*db) == 3);
  CHECK(db->list_tables().empty());
  CHECK(wipe(*db) == 0);
}
