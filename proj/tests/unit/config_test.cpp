// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/config.hpp>
#include <claimcheck/error.hpp>

#include <doctest.h>
#include <test_support.hpp>

using namespace claimcheck;
using claimcheck::testing::fixture;
using claimcheck::testing::read_file;

namespace
{

std::vector<std::string> names(const std::vector<ToolDecl>& tools)
{
    auto out = std::vector<std::string> {};
    for (const auto& t: tools)
        out.push_back(t.name);
    return out;
}

const char* minimal = R"(sources:
  local:
    kind: sqlite
    path: local.db
tools:
  local_sql:
    kind: execute-sql
    source: local
toolsets:
  sql:
    - local_sql
)";

} // namespace

TEST_CASE("tools fragment yields three execute-sql tools over two dialects")
{
    auto config = load_config(fixture("toolbox/west_coast_tools.yaml"));
    REQUIRE(config.tools.size() == 3);
    CHECK(names(config.tools) == std::vector<std::string> { "seattle_sql", "portland_sql", "los_angeles_sql" });
    for (const auto& tool: config.tools)
        CHECK(tool.kind == ToolKind::ExecuteSql);
    CHECK(config.find_source("seattle")->kind == Dialect::Postgres);
    CHECK(config.find_source("portland")->kind == Dialect::Postgres);
    CHECK(config.find_source("los_angeles")->kind == Dialect::Mysql);
    CHECK(config.tools[2].declared_dialect == Dialect::Mysql);
    CHECK(config.toolsets.empty());
}

TEST_CASE("combined document resolves toolsets in declaration order")
{
    auto config = load_config(fixture("toolbox/west_coast.yaml"));
    CHECK(validate(config).empty());
    CHECK(names(resolve_toolset(config, "west-coast-sql"))
          == std::vector<std::string> { "seattle_sql", "portland_sql", "los_angeles_sql" });
    CHECK(names(resolve_toolset(config, "west-coast-schema"))
          == std::vector<std::string> { "seattle_schema", "portland_schema", "los_angeles_schema" });
    CHECK(names(resolve_toolset(config, "washington-state-schema")) == std::vector<std::string> { "seattle_sql" });
    CHECK_THROWS_AS((void)resolve_toolset(config, "east-coast"), ConfigError);
}

TEST_CASE("resolve_toolset follows tool declaration order, not listing order")
{
    auto config = parse_config(R"(sources:
  a:
    kind: sqlite
    path: a.db
tools:
  first:
    kind: execute-sql
    source: a
  second:
    kind: list-tables
    source: a
  third:
    kind: describe-table
    source: a
toolsets:
  mixed:
    - third
    - first
)");
    CHECK(names(resolve_toolset(config, "mixed")) == std::vector<std::string> { "first", "third" });
}

TEST_CASE("singleton toolset and empty toolsets map")
{
    auto config = parse_config(minimal);
    CHECK(names(resolve_toolset(config, "sql")) == std::vector<std::string> { "local_sql" });

    auto empty = parse_config(R"(sources:
  local:
    kind: sqlite
    path: local.db
tools: {}
toolsets:
)");
    CHECK(empty.toolsets.empty());
    CHECK(empty.tools.empty());
}

TEST_CASE("dangling toolset member names the tool")
{
    auto text = read_file(fixture("toolbox/west_coast.yaml")) + "  west-coast-extra:\n    - boise_sql\n";
    try
    {
        (void)parse_config(text);
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.identifier() == "boise_sql");
        CHECK(std::string(e.what()).find("boise_sql") != std::string::npos);
        CHECK(e.line() > 0);
    }
}

TEST_CASE("dangling source reference names the source")
{
    try
    {
        (void)parse_config("tools:\n  t:\n    kind: execute-sql\n    source: nowhere\n");
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.identifier() == "nowhere");
        CHECK(e.line() == 4);
    }
}

TEST_CASE("unknown kind and malformed YAML carry positions")
{
    try
    {
        (void)parse_config("tools:\n  t:\n    kind: oracle-execute-sql\n    source: x\n");
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.identifier() == "oracle-execute-sql");
        CHECK(e.line() == 3);
    }
    try
    {
        (void)parse_config("sources:\n  a: [unterminated\n");
        FAIL("expected ConfigError");
    }
    catch (const ConfigError& e)
    {
        CHECK(e.line() > 0);
        CHECK(e.column() > 0);
    }
}

TEST_CASE("prefixed kind must agree with the bound source")
{
    CHECK_THROWS_AS((void)parse_config(R"(sources:
  la:
    kind: mysql
    host: h
    database: d
tools:
  la_sql:
    kind: postgres-execute-sql
    source: la
)"),
                    ConfigError);
}

TEST_CASE("validate reports duplicates and empty toolsets")
{
    auto config = parse_config(minimal);
    config.sources.push_back(config.sources.front());
    auto diagnostics = validate(config);
    REQUIRE(diagnostics.size() == 1);
    CHECK(diagnostics[0].severity == Severity::Error);
    CHECK(diagnostics[0].subject == "local");
    CHECK(diagnostics[0].path == "sources.local");

    auto withEmpty = parse_config(minimal);
    withEmpty.toolsets.push_back({ .name = "later" });
    diagnostics = validate(withEmpty);
    REQUIRE(diagnostics.size() == 1);
    CHECK(diagnostics[0].severity == Severity::Warning);
    CHECK(diagnostics[0].subject == "later");

    // An empty toolset in a document parses: warnings do not fail the load.
    auto parsed = parse_config(std::string(minimal) + "  later:\n");
    CHECK(parsed.find_toolset("later")->tools.empty());
}

TEST_CASE("inline secrets are rejected")
{
    CHECK_THROWS_AS((void)parse_config(R"(sources:
  pg:
    kind: postgres
    host: h
    database: d
    password: hunter2
)"),
                    ConfigError);
}

TEST_CASE("network sources need host and database; sqlite needs a path")
{
    CHECK_THROWS_AS((void)parse_config("sources:\n  pg:\n    kind: postgres\n    database: d\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("sources:\n  f:\n    kind: sqlite\n"), ConfigError);
}

TEST_CASE("round trip through serialize_config")
{
    for (const auto* path: { "toolbox/west_coast.yaml", "toolbox/west_coast_tools.yaml", "crime/toolbox.yaml" })
    {
        CAPTURE(path);
        auto config = load_config(fixture(path));
        auto again = parse_config(serialize_config(config));
        CHECK(again == config);
    }

    auto custom = parse_config(std::string(minimal) + R"(settings:
  verifier_model: big
  row_cap: 25
  pricing:
    big:
      input_per_mtok: 1.25
      output_per_mtok: 10
)");
    CHECK(custom.settings.row_cap == 25);
    CHECK(custom.settings.pricing.at("big").output_per_mtok == 10);
    CHECK(parse_config(serialize_config(custom)) == custom);
}

TEST_CASE("removing a tool and its references keeps the config valid")
{
    auto config = load_config(fixture("toolbox/west_coast.yaml"));
    auto trimmed = without_tool(config, "portland_sql");
    CHECK(validate(trimmed).empty());
    CHECK(names(resolve_toolset(trimmed, "west-coast-sql")) == std::vector<std::string> { "seattle_sql", "los_angeles_sql" });

    auto extended = config;
    extended.tools.push_back({ .name = "seattle_sql_2", .kind = ToolKind::ExecuteSql, .source = "seattle" });
    CHECK(validate(extended).empty());
    CHECK(resolve_toolset(extended, "west-coast-schema") == resolve_toolset(config, "west-coast-schema"));
}

TEST_CASE("unknown top-level and tool fields are rejected")
{
    CHECK_THROWS_AS((void)parse_config(std::string(minimal) + "extras: 1\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("tools:\n  t:\n    kind: execute-sql\n    sorce: x\n"), ConfigError);
}
