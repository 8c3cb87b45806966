// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/config.hpp>
#include <claimcheck/datasource.hpp>
#include <claimcheck/error.hpp>
#include <claimcheck/hash.hpp>

#include <doctest.h>
#include <test_support.hpp>

#include <sqlite3.h>

#include <filesystem>

using namespace claimcheck;
using namespace claimcheck::testing;

namespace
{

SourceDecl crime_source(const std::string& path = fixture("crime/crime.db"))
{
    return { .name = "seattle", .kind = Dialect::Sqlite, .connection = { { "path", path }, { "compat", "postgres" } } };
}

void run_sql(const std::string& path, const char* sql)
{
    sqlite3* db = nullptr;
    REQUIRE(sqlite3_open(path.c_str(), &db) == SQLITE_OK);
    char* error = nullptr;
    auto rc = sqlite3_exec(db, sql, nullptr, nullptr, &error);
    sqlite3_free(error);
    sqlite3_close(db);
    REQUIRE(rc == SQLITE_OK);
}

} // namespace

TEST_CASE("year/category grouping query matches the CSV oracle")
{
    auto handle = SourceHandle(crime_source());
    auto result = handle.execute_sql(read_file(fixture("crime/year_category.sql")), default_row_cap);
    CHECK(result.columns == std::vector<std::string> { "year", "offense_category", "incident_count" });
    REQUIRE(result.rows.size() == 4);
    CHECK_FALSE(result.truncated);
    for (std::size_t i = 0; i < 4; ++i)
    {
        const auto& expected = year_category_oracle[i];
        CHECK(std::get<std::int64_t>(result.rows[i][0]) == expected.year);
        CHECK(std::get<std::string>(result.rows[i][1]) == expected.category);
        CHECK(std::get<std::int64_t>(result.rows[i][2]) == expected.incidents);
    }
}

TEST_CASE("constant query and scalar kinds")
{
    auto handle = SourceHandle(crime_source());
    auto result = handle.execute_sql("SELECT 1 AS x", 50);
    CHECK(result.columns == std::vector<std::string> { "x" });
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0][0] == Value { std::int64_t { 1 } });
    CHECK_FALSE(result.truncated);

    auto mixed = handle.execute_sql("SELECT NULL AS n, 2.5 AS d, 'txt' AS s, 0.1 + 0.2 AS f", 50);
    CHECK(std::holds_alternative<std::monostate>(mixed.rows[0][0]));
    CHECK(mixed.rows[0][1] == Value { Decimal { "2.5" } });
    CHECK(mixed.rows[0][2] == Value { std::string("txt") });
    CHECK(render_value(mixed.rows[0][3]) == "0.30000000000000004");
    CHECK(render_value(mixed.rows[0][0]) == "NULL");
}

TEST_CASE("mutations are rejected before any connection")
{
    auto handle = SourceHandle(crime_source("/nonexistent/never.db"));
    CHECK_THROWS_AS(handle.execute_sql("DELETE FROM crime_data", 50), ReadOnlyViolation);
    CHECK_FALSE(handle.connected());
}

TEST_CASE("row cap truncates")
{
    auto handle = SourceHandle(crime_source());
    auto result = handle.execute_sql("SELECT report_number FROM crime_data ORDER BY 1", 50);
    CHECK(result.rows.size() == 50);
    CHECK(result.row_count == 50);
    CHECK(result.truncated);

    auto exact = handle.execute_sql("SELECT report_number FROM crime_data ORDER BY 1 LIMIT 50", 50);
    CHECK_FALSE(exact.truncated);
    CHECK_THROWS_AS(handle.execute_sql("SELECT 1", 0), Error);
}

TEST_CASE("engine errors are verbatim with the dialect attached")
{
    auto handle = SourceHandle(crime_source());
    try
    {
        (void)handle.execute_sql("SELECT no_such_column FROM crime_data", 50);
        FAIL("expected SqlError");
    }
    catch (const SqlError& e)
    {
        CHECK(e.dialect() == "sqlite");
        CHECK(std::string(e.what()) == "error (sqlite): no such column: no_such_column");
    }
}

TEST_CASE("list and describe tables")
{
    auto handle = SourceHandle(crime_source());
    CHECK(handle.list_tables() == std::vector<std::string> { "crime_data" });

    auto schema = handle.describe_table("crime_data");
    CHECK(schema.source == "seattle");
    CHECK(schema.table == "crime_data");
    REQUIRE(schema.columns.size() == 9);
    CHECK(schema.columns[0].name == "report_number");
    CHECK(schema.columns[0].is_primary_key);
    CHECK(schema.columns[1] == ColumnInfo { "offense_date", "DATE", true, false });
    CHECK(schema.columns[2] == ColumnInfo { "offense_category", "TEXT", false, false });
    CHECK(schema.foreign_keys.empty());
    CHECK(handle.describe_table("public.crime_data").columns == schema.columns);

    try
    {
        (void)handle.describe_table("nope");
        FAIL("expected UnknownTable");
    }
    catch (const UnknownTable& e)
    {
        CHECK(std::string(e.what()) == "unknown table: nope");
    }
}

TEST_CASE("foreign keys are reported and empty databases list nothing")
{
    auto dir = TempDir();
    auto path = dir.file("fk.db");
    run_sql(path, "CREATE TABLE precinct (code TEXT PRIMARY KEY);"
                  "CREATE TABLE incident (id INTEGER PRIMARY KEY, precinct TEXT REFERENCES precinct(code));");
    auto handle = SourceHandle({ .name = "fk", .kind = Dialect::Sqlite, .connection = { { "path", path } } });
    CHECK(handle.list_tables() == std::vector<std::string> { "incident", "precinct" });
    auto schema = handle.describe_table("incident");
    REQUIRE(schema.foreign_keys.size() == 1);
    CHECK(schema.foreign_keys[0] == ForeignKey { "precinct", "precinct", "code" });

    auto emptyPath = dir.file("empty.db");
    run_sql(emptyPath, "PRAGMA user_version = 1");
    auto empty = SourceHandle({ .name = "empty", .kind = Dialect::Sqlite, .connection = { { "path", emptyPath } } });
    CHECK(empty.list_tables().empty());
}

TEST_CASE("closed handles and unknown sources fail with connection errors")
{
    auto handle = SourceHandle(crime_source());
    handle.close();
    CHECK_THROWS_AS(handle.list_tables(), ConnectionError);

    auto pool = SourcePool({ crime_source() });
    CHECK(pool.contains("seattle"));
    CHECK_FALSE(pool.handle("seattle").connected());
    (void)pool.handle("seattle").list_tables();
    CHECK(pool.handle("seattle").connected());
    try
    {
        (void)pool.handle("tacoma");
        FAIL("expected ConnectionError");
    }
    catch (const ConnectionError& e)
    {
        CHECK(std::string(e.what()) == "unknown source: tacoma");
    }
}

TEST_CASE("sqlite backend refuses writes even if the classifier were bypassed")
{
    auto dir = TempDir();
    auto path = dir.file("copy.db");
    std::filesystem::copy_file(fixture("crime/crime.db"), path);
    auto before = file_sha256(path);
    auto connection = open_connection(crime_source(path));
    CHECK_THROWS(connection->query("DELETE FROM crime_data", 50));
    CHECK_THROWS(connection->query("SELECT 1; DELETE FROM crime_data", 50));
    CHECK_THROWS(connection->query("CREATE TABLE x (a)", 50));
    connection.reset();
    CHECK(file_sha256(path) == before);
}

TEST_CASE("compare_results is order-insensitive and reports diffs")
{
    auto a = QueryResult { .columns = { "k", "n" },
                           .rows = { { std::string("a"), std::int64_t { 1 } }, { std::string("b"), std::int64_t { 2 } } },
                           .row_count = 2 };
    auto b = a;
    std::swap(b.rows[0], b.rows[1]);
    CHECK(compare_results(a, b).match);

    auto c = a;
    c.rows[1][1] = std::int64_t { 3 };
    auto diff = compare_results(a, c);
    CHECK_FALSE(diff.match);
    CHECK(diff.diff == "row count 2 vs 2; only in captured: (b, 2); only in current: (b, 3)");

    auto d = a;
    d.rows[0][1] = Decimal { "1.0" };
    CHECK_FALSE(compare_results(a, d).match);
}

TEST_CASE("postgres compatibility functions")
{
    auto handle = SourceHandle(crime_source());
    auto r = handle.execute_sql("SELECT EXTRACT(MONTH FROM '2024-06-15 10:30:00'::timestamp) AS m, "
                                "EXTRACT(DOW FROM DATE '2024-06-15') AS dow, '2024-06-15 10:30:00'::date AS d",
                                50);
    CHECK(r.rows[0][0] == Value { std::int64_t { 6 } });
    CHECK(r.rows[0][1] == Value { std::int64_t { 6 } });
    CHECK(r.rows[0][2] == Value { std::string("2024-06-15") });
    CHECK_THROWS_AS(handle.execute_sql("SELECT 'garbage'::date", 50), SqlError);
}
