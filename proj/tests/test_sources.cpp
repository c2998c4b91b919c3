#include <etl/etl.hpp>

#include <doctest.h>

#include <random>

#include "fixture_server.hpp"
#include "support.hpp"

using namespace etl;
namespace ts = testsupport;

namespace {

int name_counter = 0;

std::string fresh_name(const std::string& tag) {
  return tag + "-" + std::to_string(getpid()) + "-" + std::to_string(name_counter++);
}

/// Registers a descriptor under a unique name and builds a pipeline on it.
EtlContext pipeline_for(SourceDescriptor desc, const fs::path& dir) {
  register_source(desc);
  EtlContext ctx = new_pipeline(desc.name, std::nullopt, dir);
  ctx.notice_sink = nullptr;
  return ctx;
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

TEST_CASE("register and resolve round-trips the descriptor") {
  std::string name = fresh_name("src");
  SourceDescriptor desc;
  desc.name = name;
  desc.url_template = "http://example.com/{year}{month:02}.csv";
  desc.filename_pattern = R"(^(\d{6}))";
  register_source(desc);
  const SourceDescriptor& found = resolve_source(name);
  CHECK(found.declarative_equals(desc));
}

TEST_CASE("duplicate registration is an error") {
  std::string name = fresh_name("dup");
  SourceDescriptor desc;
  desc.name = name;
  register_source(desc);
  try {
    register_source(desc);
    FAIL("expected DuplicateSource");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateSource);
  }
}

TEST_CASE("resolving an unknown source names it in the message") {
  try {
    resolve_source("foo-definitely-unknown");
    FAIL("expected UnknownSource");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSource);
    CHECK(std::string(e.what()).find("Please make sure that the 'foo-definitely-unknown' source") !=
          std::string::npos);
  }
}

TEST_CASE("registration validates the descriptor") {
  SourceDescriptor no_name;
  CHECK_THROWS_AS(register_source(no_name), Error);

  SourceDescriptor bad_url;
  bad_url.name = fresh_name("bad-url");
  bad_url.url_template = "not a url at all";
  CHECK_THROWS_AS(register_source(bad_url), Error);

  SourceDescriptor bad_pattern;
  bad_pattern.name = fresh_name("bad-pat");
  bad_pattern.filename_pattern = R"(\d{6})";  // no capture group
  CHECK_THROWS_AS(register_source(bad_pattern), Error);
}

// ---------------------------------------------------------------------------
// URL templates
// ---------------------------------------------------------------------------

TEST_CASE("url template expansion") {
  CHECK(expand_url_template("http://h/{year}/{month:02}-x.zip", {2013, 7}) ==
        "http://h/2013/07-x.zip");
  CHECK(expand_url_template("http://h/{year}-{month}.csv", {2013, 7}) == "http://h/2013-7.csv");
  CHECK(template_has_placeholders("http://h/{year}.csv"));
  CHECK_FALSE(template_has_placeholders("http://h/static.csv"));
}

// ---------------------------------------------------------------------------
// Default hooks
// ---------------------------------------------------------------------------

TEST_CASE("default_extract writes bundled payloads with provenance") {
  ts::TempDir dir;
  ensure_builtin_sources();
  EtlContext ctx = new_pipeline("demo-cars", std::nullopt, dir.path());
  ctx.notice_sink = nullptr;

  auto report = default_extract(ctx, std::nullopt);
  REQUIRE(report.fetched.size() == 1);
  CHECK(ts::read_file(ctx.raw_dir / "mtcars.csv") == demo_cars_csv());
  CHECK(report.fetched[0].sha256 == sha256_hex(demo_cars_csv()));
  CHECK(report.fetched[0].url == "bundled:mtcars");

  // idempotent: a second extract skips the existing file
  auto again = default_extract(ctx, std::nullopt);
  CHECK(again.fetched.empty());
  CHECK(again.skipped.size() == 1);
}

TEST_CASE("default_extract expands templates over the selector") {
  ts::FixtureServer server;
  ts::TempDir dir;
  SourceDescriptor desc;
  desc.name = fresh_name("fixture");
  desc.url_template = server.base_url() + "/csv/{year}{month:02}-data.csv";
  EtlContext ctx = pipeline_for(desc, dir.path());

  auto report = default_extract(ctx, Selector::of({2013}, {1, 2, 3}));
  CHECK(report.fetched.size() == 3);
  CHECK(server.total_requests() == 3);

  // no selector on a placeholder template: nothing sensible to fetch
  try {
    default_extract(ctx, std::nullopt);
    FAIL("expected NothingToExtract");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NothingToExtract);
  }
}

TEST_CASE("a two-year seven-month selector requests fourteen files") {
  ts::FixtureServer server;
  ts::TempDir dir;
  SourceDescriptor desc;
  desc.name = fresh_name("fourteen");
  desc.url_template = server.base_url() + "/csv/{year}{month:02}-data.csv";
  EtlContext ctx = pipeline_for(desc, dir.path());

  auto report = default_extract(ctx, Selector::of({1996, 1997}, {1, 2, 3, 4, 5, 6, 9}));
  CHECK(report.fetched.size() == 14);
  CHECK(server.total_requests() == 14);
}

TEST_CASE("default_extract with a placeholder-free template fetches one file") {
  ts::FixtureServer server;
  ts::TempDir dir;
  SourceDescriptor desc;
  desc.name = fresh_name("single");
  desc.url_template = server.base_url() + "/HoustonChronicle.csv";
  EtlContext ctx = pipeline_for(desc, dir.path());

  auto report = default_extract(ctx, std::nullopt);
  CHECK(report.fetched.size() == 1);
  CHECK(fs::exists(ctx.raw_dir / "HoustonChronicle.csv"));
}

TEST_CASE("default_extract requires something to extract") {
  ts::TempDir dir;
  SourceDescriptor desc;
  desc.name = fresh_name("hollow");
  EtlContext ctx = pipeline_for(desc, dir.path());
  try {
    default_extract(ctx, std::nullopt);
    FAIL("expected NothingToExtract");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NothingToExtract);
  }
}

TEST_CASE("default_transform copies CSVs and unpacks zip members") {
  ts::TempDir dir;
  SourceDescriptor desc;
  desc.name = fresh_name("tf");
  EtlContext ctx = pipeline_for(desc, dir.path());

  ts::write_file(ctx.raw_dir / "a.csv", "h\n1\n");
  ts::write_file(ctx.raw_dir / "201307-x.zip", ts::make_zip({{"x.csv", "h\n2\n"}}));
  ts::write_file(ctx.raw_dir / "notes.txt", "ignored");

  auto produced = default_transform(ctx, std::nullopt);
  CHECK(produced.size() == 2);
  CHECK(sha256_hex_of_file(ctx.load_dir / "a.csv") == sha256_hex_of_file(ctx.raw_dir / "a.csv"));
  CHECK(ts::read_file(ctx.load_dir / "x.csv") == "h\n2\n");
  CHECK_FALSE(fs::exists(ctx.load_dir / "notes.txt"));
}

TEST_CASE("default_transform honors the selector through the filename pattern") {
  ts::TempDir dir;
  SourceDescriptor desc;
  desc.name = fresh_name("tf-sel");
  desc.filename_pattern = R"(^(\d{6})-)";
  EtlContext ctx = pipeline_for(desc, dir.path());

  for (int m = 1; m <= 4; ++m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "2013%02d-d.csv", m);
    ts::write_file(ctx.raw_dir / buf, "h\n1\n");
  }
  auto produced = default_transform(ctx, Selector::of({2013}, {2, 3}));
  CHECK(produced.size() == 2);
  CHECK(fs::exists(ctx.load_dir / "201302-d.csv"));
  CHECK_FALSE(fs::exists(ctx.load_dir / "201301-d.csv"));

  // a selected month whose raw file is absent is an error
  try {
    default_transform(ctx, Selector::of({2013}, {11}));
    FAIL("expected MissingRawFile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingRawFile);
  }

  // an empty expansion is a silent no-op
  CHECK(default_transform(ctx, Selector::of({})).empty());
}

TEST_CASE("default_load imports eponymous tables and reports the notice") {
  ts::TempDir dir;
  SourceDescriptor desc;
  desc.name = fresh_name("ld");
  EtlContext ctx = pipeline_for(desc, dir.path());
  std::vector<std::string> notices;
  ctx.notice_sink = [&](const std::string& msg) { notices.push_back(msg); };

  for (const char* name : {"atmos", "borders", "elev", "glaciers", "storms"})
    ts::write_file(ctx.load_dir / (std::string(name) + ".csv"), "v\n1\n2\n");

  auto loaded = default_load(ctx, std::nullopt);
  CHECK(loaded.size() == 5);
  CHECK(loaded.at("atmos") == 2);
  CHECK(ctx.db->list_tables() ==
        std::vector<std::string>{"atmos", "borders", "elev", "glaciers", "storms"});
  REQUIRE(notices.size() == 1);
  CHECK(notices[0] == "Loading 5 file(s) into the database...");

  // empty load dir: an empty map
  ts::TempDir dir2;
  SourceDescriptor desc2;
  desc2.name = fresh_name("ld-empty");
  EtlContext ctx2 = pipeline_for(desc2, dir2.path());
  CHECK(default_load(ctx2, std::nullopt).empty());
}

// ---------------------------------------------------------------------------
// TOML documents
// ---------------------------------------------------------------------------

TEST_CASE("toml subset parses strings, arrays, and comments") {
  auto doc = toml::parse(
      "# a descriptor\n"
      "name = \"demo\"   # trailing comment\n"
      "pattern = '^(\\d{6})-'\n"
      "files = [\n"
      "  \"a.csv\",  # one\n"
      "  \"b.csv\",\n"
      "]\n"
      "script = \"\"\"\n"
      "CREATE TABLE t (x INT);\n"
      "-- done\n"
      "\"\"\"\n"
      "esc = \"tab\\there \\u00e9\"\n");
  CHECK(*doc.find_string("name") == "demo");
  CHECK(*doc.find_string("pattern") == "^(\\d{6})-");  // literal strings keep backslashes
  CHECK(*doc.find_array("files") == std::vector<std::string>{"a.csv", "b.csv"});
  CHECK(*doc.find_string("script") == "CREATE TABLE t (x INT);\n-- done\n");
  CHECK(*doc.find_string("esc") == "tab\there \xc3\xa9");
}

TEST_CASE("toml subset rejects what descriptors do not use") {
  CHECK_THROWS_AS(toml::parse("a = 5\n"), Error);
  CHECK_THROWS_AS(toml::parse("a = \"x\"\na = \"y\"\n"), Error);
  CHECK_THROWS_AS(toml::parse("[table]\n"), Error);
  CHECK_THROWS_AS(toml::parse("a = \"unterminated\n"), Error);
  CHECK_THROWS_AS(toml::parse("a = \"x\" junk\n"), Error);
}

// ---------------------------------------------------------------------------
// Declarative descriptors
// ---------------------------------------------------------------------------

TEST_CASE("load_declarative_source registers a fully populated descriptor") {
  ts::TempDir dir;
  std::string name = fresh_name("decl");
  ts::write_file(dir / "data" / "cities.csv", "city,pop\nParis,2100000\n");
  ts::write_file(dir / "init.sql", "DROP TABLE IF EXISTS cities;\n");
  ts::write_file(dir / "source.toml",
                 "name = \"" + name + "\"\n" +
                     "url_template = \"http://example.com/{year}{month:02}.zip\"\n"
                     "filename_pattern = '^(\\d{6})'\n"
                     "cleanup_pattern = '\\.tmp$'\n"
                     "init_script = \"init.sql\"\n"
                     "files = [\"data/cities.csv\"]\n");

  SourceDescriptor desc = load_declarative_source(dir / "source.toml");
  CHECK(desc.name == name);
  CHECK(*desc.url_template == "http://example.com/{year}{month:02}.zip");
  CHECK(*desc.filename_pattern == "^(\\d{6})");
  CHECK(desc.init_script_path == dir / "init.sql");
  REQUIRE(desc.bundled_data.size() == 1);
  CHECK(desc.bundled_data[0].first == "cities");
  CHECK(desc.bundled_data[0].second.find("Paris") != std::string::npos);
  CHECK(resolve_source(name).declarative_equals(desc));
}

TEST_CASE("descriptor parse failures carry the reason") {
  ts::TempDir dir;
  ts::write_file(dir / "noname.toml", "url_template = \"http://x/{year}.csv\"\n");
  try {
    load_declarative_source(dir / "noname.toml");
    FAIL("expected DescriptorParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DescriptorParse);
    CHECK(std::string(e.what()).find("name") != std::string::npos);
  }

  ts::write_file(dir / "unknown.toml", "name = \"x1\"\nurl_templte = \"http://x/a.csv\"\n");
  try {
    load_declarative_source(dir / "unknown.toml");
    FAIL("expected DescriptorParseError");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("url_templte") != std::string::npos);
  }

  ts::write_file(dir / "nofile.toml", "name = \"x2\"\nfiles = [\"gone.csv\"]\n");
  CHECK_THROWS_AS(load_declarative_source(dir / "nofile.toml"), Error);

  ts::write_file(dir / "noscript.toml", "name = \"x3\"\ninit_script = \"gone.sql\"\n");
  CHECK_THROWS_AS(load_declarative_source(dir / "noscript.toml"), Error);
}

TEST_CASE("descriptor with an inline init script feeds etl_init") {
  ts::TempDir dir;
  std::string name = fresh_name("inline-init");
  ts::write_file(dir / "source.toml",
                 "name = \"" + name + "\"\n" +
                     "init_script = \"\"\"\n"
                     "DROP TABLE IF EXISTS sightings;\n"
                     "CREATE TABLE sightings (station TEXT, n INTEGER);\n"
                     "\"\"\"\n");
  load_declarative_source(dir / "source.toml");
  EtlContext ctx = new_pipeline(name, std::nullopt, dir / "work");
  ctx.notice_sink = nullptr;
  etl_init(ctx);
  CHECK(ctx.db->list_tables() == std::vector<std::string>{"sightings"});
  CHECK(std::get<std::int64_t>(ctx.db->query("SELECT COUNT(*) FROM sightings").rows[0][0]) == 0);
}

TEST_CASE("serialize/parse round-trips every declarative field") {
  std::mt19937 rng(31337);
  const std::string alphabet = "abz 019_-./\\\"'\n\t{}$^";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 18);
  std::uniform_int_distribution<int> coin(0, 1);
  auto random_text = [&]() {
    std::string out;
    int n = len(rng);
    for (int i = 0; i < n; ++i) out.push_back(alphabet[pick(rng)]);
    return out;
  };

  ts::TempDir dir;
  for (int trial = 0; trial < 60; ++trial) {
    SourceDescriptor desc;
    desc.name = "rt" + std::to_string(trial);
    if (coin(rng)) desc.url_template = "http://example.com/" + std::to_string(trial) + "/{year}";
    if (coin(rng)) desc.filename_pattern = "^(\\d{6})" + std::to_string(trial);
    if (coin(rng)) desc.cleanup_pattern = random_text();
    if (coin(rng)) desc.init_script = "-- " + random_text() + "\n" + random_text();

    fs::path file = dir / ("rt" + std::to_string(trial) + ".toml");
    ts::write_file(file, serialize_source(desc));
    SourceDescriptor parsed = parse_declarative_source(file);
    CHECK(parsed.declarative_equals(desc));
  }
}

// ---------------------------------------------------------------------------
// Scaffolder
// ---------------------------------------------------------------------------

TEST_CASE("scaffold_source writes a loadable package") {
  ts::TempDir dir;
  auto created = scaffold_source("newpkg", dir.path(), "http://example.com/sample.csv");
  REQUIRE(created.size() == 2);
  CHECK(created[0].filename() == "source.toml");
  CHECK(created[1].filename() == "hooks.example.cpp");

  SourceDescriptor desc = parse_declarative_source(dir / "newpkg" / "source.toml");
  CHECK(desc.name == "newpkg");
  CHECK(*desc.url_template == "http://example.com/sample.csv");
}

TEST_CASE("scaffold_source refuses to clobber") {
  ts::TempDir dir;
  ts::write_file(dir / "taken" / "something.txt", "already here");
  try {
    scaffold_source("taken", dir.path());
    FAIL("expected TargetExists");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TargetExists);
  }
}

TEST_CASE("scaffold_source validates the name") {
  ts::TempDir dir;
  CHECK_THROWS_AS(scaffold_source("", dir.path()), Error);
  CHECK_THROWS_AS(scaffold_source("9lives", dir.path()), Error);
  CHECK_THROWS_AS(scaffold_source("has space", dir.path()), Error);
}

TEST_CASE("a scaffolded source runs the full verb cycle unedited") {
  ts::FixtureServer server;
  ts::TempDir dir;
  std::string name = fresh_name("scaf");
  scaffold_source(name, dir.path(), server.base_url() + "/HoustonChronicle.csv");
  load_declarative_source(dir / name / "source.toml");

  EtlContext ctx = new_pipeline(name, std::nullopt, dir / "work");
  ctx.notice_sink = nullptr;
  etl_create(ctx);
  CHECK(ctx.db->list_tables() == std::vector<std::string>{"HoustonChronicle"});
  auto r = ctx.db->query("SELECT COUNT(*) FROM \"HoustonChronicle\"");
  CHECK(std::get<std::int64_t>(r.rows[0][0]) == 6);
}
