// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/sql.hpp>

#include <doctest.h>

using namespace claimcheck;
using namespace claimcheck::sql;

TEST_CASE("classifier basics")
{
    CHECK(classify_statement("WITH t AS (SELECT 1) SELECT * FROM t") == StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT 1; DROP TABLE x") == StatementClass::MultiStatement);
    CHECK(classify_statement("UPDATE t SET a=1") == StatementClass::Mutating);
    CHECK(classify_statement("SELECT 1;") == StatementClass::ReadOnly);
    CHECK(classify_statement("  select 1 ;  ; ") == StatementClass::ReadOnly);
    CHECK(classify_statement("VALUES (1), (2)") == StatementClass::ReadOnly);
    CHECK(classify_statement("(SELECT 1) UNION (SELECT 2)") == StatementClass::ReadOnly);
    CHECK(classify_statement("") == StatementClass::Unparseable);
    CHECK(classify_statement("-- nothing") == StatementClass::Unparseable);
    CHECK(classify_statement("EXPLAIN SELECT 1") == StatementClass::Unparseable);
}

TEST_CASE("mutations hidden inside read-looking statements")
{
    CHECK(classify_statement("WITH d AS (DELETE FROM t RETURNING *) SELECT * FROM d") == StatementClass::Mutating);
    CHECK(classify_statement("SELECT * INTO backup FROM t") == StatementClass::Mutating);
    CHECK(classify_statement("SELECT * FROM t FOR UPDATE") == StatementClass::Mutating);
    CHECK(classify_statement("SELECT nextval('s')") == StatementClass::Mutating);
    CHECK(classify_statement("SELECT pg_catalog.set_config('a', 'b', false)") == StatementClass::Mutating);
    CHECK(classify_statement("SELECT load_extension('x')") == StatementClass::Mutating);
    CHECK(classify_statement("PRAGMA writable_schema = 1") == StatementClass::Mutating);
    CHECK(classify_statement("ATTACH DATABASE 'x.db' AS x") == StatementClass::Mutating);
    CHECK(classify_statement("REPLACE INTO t VALUES (1)") == StatementClass::Mutating);
}

TEST_CASE("keywords inside literals and comments are inert")
{
    CHECK(classify_statement("SELECT 'DROP TABLE x; DELETE' AS s") == StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT \"delete\" FROM t") == StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT 1 -- ; DROP TABLE t") == StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT /* ; UPDATE */ 1") == StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT replace(name, 'a', 'b') FROM t") == StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT count(*) AS updates FROM t") == StatementClass::ReadOnly);
}

TEST_CASE("dialect lexing disagreements are rejected")
{
    // Backslash escapes end the literal early for MySQL only.
    CHECK(classify_statement("SELECT 'a\\'; DROP TABLE t; -- '") != StatementClass::ReadOnly);
    // Dollar quoting hides a statement from Postgres only.
    CHECK(classify_statement("SELECT $$; DROP TABLE t; $$") != StatementClass::ReadOnly);
    // MySQL executes the body of /*! ... */ comments.
    CHECK(classify_statement("SELECT 1 /*! ; DROP TABLE t */") != StatementClass::ReadOnly);
    // Nested comments close differently under Postgres.
    CHECK(classify_statement("SELECT 1 /* /* */ ; DROP TABLE t; */") != StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT 1 # ; DROP TABLE t") != StatementClass::ReadOnly);
    CHECK(classify_statement("SELECT 'unterminated") == StatementClass::Unparseable);
}

TEST_CASE("require_read_only names the classification")
{
    try
    {
        require_read_only("DELETE FROM crime_data");
        FAIL("expected ReadOnlyViolation");
    }
    catch (const ReadOnlyViolation& e)
    {
        CHECK(std::string(e.what()).find("mutating") != std::string::npos);
    }
    CHECK_NOTHROW(require_read_only("SELECT 1 AS x"));
}

TEST_CASE("normalize_whitespace collapses layout")
{
    CHECK(normalize_whitespace("SELECT\n  a ,\tb\nFROM t ;") == normalize_whitespace("SELECT a , b FROM t"));
    CHECK(normalize_whitespace("SELECT 'a  b'") == "SELECT 'a  b'");
    CHECK(normalize_whitespace("SELECT 1 -- note\n") == "SELECT 1");
    CHECK(normalize_whitespace("SELECT 1") != normalize_whitespace("SELECT 2"));
}

TEST_CASE("postgres spellings rewrite to sqlite")
{
    CHECK(rewrite_postgres_for_sqlite("SELECT x::int FROM public.t") == "SELECT CAST(x AS INTEGER) FROM main.t");
    CHECK(rewrite_postgres_for_sqlite("SELECT EXTRACT(YEAR FROM d) FROM t") == "SELECT pg_extract('year', d) FROM t");
    CHECK(rewrite_postgres_for_sqlite("WHERE d >= '2023-01-01'::date") == "WHERE d >= pg_date('2023-01-01')");
    CHECK(rewrite_postgres_for_sqlite("WHERE n ILIKE '%a%'") == "WHERE n LIKE '%a%'");
    CHECK(rewrite_postgres_for_sqlite("SELECT 'a::int'") == "SELECT 'a::int'");
    CHECK(rewrite_postgres_for_sqlite("SELECT DATE '2024-06-01'") == "SELECT pg_date('2024-06-01')");
}
