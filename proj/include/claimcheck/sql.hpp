// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace claimcheck::sql
{

enum class StatementClass
{
    ReadOnly,
    Mutating,
    MultiStatement,
    Unparseable,
};

[[nodiscard]] std::string_view to_string(StatementClass value);

/// Lexical conventions differ in ways that matter for a safety gate
/// (backslash escapes, dollar quoting, nested or executable comments), so the
/// classifier lexes under every convention and only accepts a statement that
/// all of them agree is a single read-only query.
enum class LexMode
{
    Standard,
    Postgres,
    Mysql,
};

struct Token
{
    enum class Kind
    {
        Word,
        QuotedIdentifier,
        String,
        Number,
        Punct,
        Space,
        Comment,
    };

    Kind kind;
    std::string_view text;
};

struct LexResult
{
    std::vector<Token> tokens;
    bool ok = true;
    std::string error;
};

[[nodiscard]] LexResult lex(std::string_view sql, LexMode mode);

/// Conservative: anything not provably a single SELECT / WITH ... SELECT /
/// VALUES statement is reported as non-read-only.
[[nodiscard]] StatementClass classify_statement(std::string_view sql);
[[nodiscard]] StatementClass classify_statement(std::string_view sql, LexMode mode);

/// Throws ReadOnlyViolation naming the classification when sql is not read-only.
void require_read_only(std::string_view sql);

/// Collapses whitespace and comments outside literals to single spaces and
/// drops trailing semicolons. Two queries that differ only in layout map to
/// the same string.
[[nodiscard]] std::string normalize_whitespace(std::string_view sql);

/// Rewrites the Postgres spellings agents commonly use into SQLite:
/// `expr::type` casts, EXTRACT(field FROM expr), the `public.` schema
/// qualifier and ILIKE. The extract/date helpers are registered as SQLite
/// functions by the sqlite backend.
[[nodiscard]] std::string rewrite_postgres_for_sqlite(std::string_view sql);

} // namespace claimcheck::sql
