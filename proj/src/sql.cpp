// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/sql.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

namespace claimcheck::sql
{

std::string_view to_string(StatementClass value)
{
    switch (value)
    {
        case StatementClass::ReadOnly: return "read_only";
        case StatementClass::Mutating: return "mutating";
        case StatementClass::MultiStatement: return "multi_statement";
        case StatementClass::Unparseable: return "unparseable";
    }
    return "?";
}

namespace
{

    bool is_space(char c)
    {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    }

    bool is_ident_start(char c)
    {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
    }

    bool is_ident_char(char c)
    {
        return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$';
    }

    std::string upper(std::string_view text)
    {
        auto out = std::string(text);
        std::ranges::transform(out, out.begin(), [](unsigned char c) { return std::toupper(c); });
        return out;
    }

    bool iequals(std::string_view a, std::string_view b)
    {
        return a.size() == b.size()
               && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                      return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
                  });
    }

    class Lexer
    {
      public:
        Lexer(std::string_view sql, LexMode mode): _sql(sql), _mode(mode) {}

        LexResult run()
        {
            auto result = LexResult {};
            while (_pos < _sql.size())
            {
                auto start = _pos;
                auto kind = next();
                if (!_error.empty())
                {
                    result.ok = false;
                    result.error = _error;
                    return result;
                }
                result.tokens.push_back({ kind, _sql.substr(start, _pos - start) });
            }
            if (_inExecutableComment)
            {
                result.ok = false;
                result.error = "unterminated comment";
            }
            return result;
        }

      private:
        [[nodiscard]] char peek(std::size_t ahead = 0) const
        {
            return _pos + ahead < _sql.size() ? _sql[_pos + ahead] : '\0';
        }

        Token::Kind fail(std::string message)
        {
            _error = std::move(message);
            _pos = _sql.size();
            return Token::Kind::Punct;
        }

        Token::Kind next()
        {
            auto c = peek();
            if (is_space(c))
            {
                while (_pos < _sql.size() && is_space(peek()))
                    ++_pos;
                return Token::Kind::Space;
            }
            if (c == '-' && peek(1) == '-'
                && (_mode != LexMode::Mysql || is_space(peek(2)) || peek(2) == '\0'))
                return line_comment();
            if (c == '#' && _mode == LexMode::Mysql)
                return line_comment();
            if (c == '/' && peek(1) == '*')
                return block_comment();
            if (c == '*' && peek(1) == '/' && _inExecutableComment)
            {
                _inExecutableComment = false;
                _pos += 2;
                return Token::Kind::Space;
            }
            if (c == '\'')
                return quoted('\'', Token::Kind::String, _mode == LexMode::Mysql);
            if (c == '"')
            {
                if (_mode == LexMode::Mysql)
                    return quoted('"', Token::Kind::String, true);
                return quoted('"', Token::Kind::QuotedIdentifier, false);
            }
            if (c == '`' && _mode != LexMode::Postgres)
                return quoted('`', Token::Kind::QuotedIdentifier, false);
            if (c == '[' && _mode == LexMode::Standard)
                return bracketed();
            if (c == '$' && _mode == LexMode::Postgres)
                if (auto kind = dollar_quoted())
                    return *kind;
            if ((c == 'E' || c == 'e') && peek(1) == '\'' && _mode == LexMode::Postgres)
            {
                ++_pos;
                return quoted('\'', Token::Kind::String, true);
            }
            if (std::isdigit(static_cast<unsigned char>(c))
                || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))))
                return number();
            if (is_ident_start(c))
            {
                while (_pos < _sql.size() && is_ident_char(peek()))
                    ++_pos;
                return Token::Kind::Word;
            }
            static constexpr auto twoChar = std::array<std::string_view, 7> { "::", "<=", ">=", "<>", "!=", "||", "->" };
            for (auto op: twoChar)
                if (_sql.substr(_pos, 2) == op)
                {
                    _pos += 2;
                    return Token::Kind::Punct;
                }
            ++_pos;
            return Token::Kind::Punct;
        }

        Token::Kind line_comment()
        {
            while (_pos < _sql.size() && peek() != '\n')
                ++_pos;
            return Token::Kind::Comment;
        }

        Token::Kind block_comment()
        {
            if (_mode == LexMode::Mysql && peek(2) == '!')
            {
                // MySQL executes the body of /*! ... */ as ordinary SQL.
                _pos += 3;
                while (std::isdigit(static_cast<unsigned char>(peek())))
                    ++_pos;
                _inExecutableComment = true;
                return Token::Kind::Space;
            }
            auto depth = 0;
            while (_pos < _sql.size())
            {
                if (peek() == '/' && peek(1) == '*')
                {
                    if (depth == 0 || _mode == LexMode::Postgres)
                        ++depth;
                    _pos += 2;
                }
                else if (peek() == '*' && peek(1) == '/')
                {
                    --depth;
                    _pos += 2;
                    if (depth == 0)
                        return Token::Kind::Comment;
                }
                else
                    ++_pos;
            }
            return fail("unterminated comment");
        }

        Token::Kind quoted(char quote, Token::Kind kind, bool backslashEscapes)
        {
            ++_pos;
            while (_pos < _sql.size())
            {
                auto c = peek();
                if (backslashEscapes && c == '\\')
                {
                    _pos += 2;
                    continue;
                }
                if (c == quote)
                {
                    if (peek(1) == quote)
                    {
                        _pos += 2;
                        continue;
                    }
                    ++_pos;
                    return kind;
                }
                ++_pos;
            }
            return fail(kind == Token::Kind::String ? "unterminated string literal" : "unterminated quoted identifier");
        }

        Token::Kind bracketed()
        {
            auto close = _sql.find(']', _pos);
            if (close == std::string_view::npos)
                return fail("unterminated quoted identifier");
            _pos = close + 1;
            return Token::Kind::QuotedIdentifier;
        }

        std::optional<Token::Kind> dollar_quoted()
        {
            auto end = _pos + 1;
            while (end < _sql.size() && (is_ident_start(_sql[end]) || std::isdigit(static_cast<unsigned char>(_sql[end]))))
                ++end;
            if (end >= _sql.size() || _sql[end] != '$')
                return std::nullopt;
            auto tag = _sql.substr(_pos, end - _pos + 1);
            if (tag.size() > 2 && std::isdigit(static_cast<unsigned char>(tag[1])))
                return std::nullopt; // positional parameter such as $1
            auto close = _sql.find(tag, end + 1);
            if (close == std::string_view::npos)
                return fail("unterminated dollar-quoted string");
            _pos = close + tag.size();
            return Token::Kind::String;
        }

        Token::Kind number()
        {
            while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')
                ++_pos;
            if ((peek() == 'e' || peek() == 'E')
                && (std::isdigit(static_cast<unsigned char>(peek(1)))
                    || ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2))))))
            {
                _pos += 2;
                while (std::isdigit(static_cast<unsigned char>(peek())))
                    ++_pos;
            }
            return Token::Kind::Number;
        }

        std::string_view _sql;
        LexMode _mode;
        std::size_t _pos = 0;
        bool _inExecutableComment = false;
        std::string _error;
    };

    bool significant(const Token& token)
    {
        return token.kind != Token::Kind::Space && token.kind != Token::Kind::Comment;
    }

    // Leading keywords of statements that change data, schema, or session
    // state. Anything else that is not SELECT/WITH/VALUES is unparseable.
    constexpr auto mutatingStatements = std::array<std::string_view, 35> {
        "INSERT",   "UPDATE",  "DELETE",  "MERGE",   "UPSERT",   "REPLACE",  "DROP",     "CREATE",  "ALTER",
        "TRUNCATE", "RENAME",  "GRANT",   "REVOKE",  "ATTACH",   "DETACH",   "PRAGMA",   "VACUUM",  "REINDEX",
        "ANALYZE",  "COPY",    "CALL",    "DO",      "EXEC",     "EXECUTE",  "SET",      "RESET",   "BEGIN",
        "START",    "COMMIT",  "ROLLBACK", "SAVEPOINT", "RELEASE", "LOCK",   "LOAD",     "HANDLER",
    };

    // Keywords that, anywhere inside a SELECT, indicate a write or lock
    // (data-modifying CTEs, SELECT INTO, INTO OUTFILE, ...).
    constexpr auto mutatingKeywords = std::array<std::string_view, 16> {
        "INSERT", "UPDATE", "DELETE",   "MERGE",  "UPSERT", "DROP",   "CREATE", "ALTER",
        "TRUNCATE", "GRANT", "REVOKE",  "INTO",   "ATTACH", "DETACH", "PRAGMA", "VACUUM",
    };

    // Functions with side effects that a SELECT can call.
    constexpr auto mutatingFunctions = std::array<std::string_view, 17> {
        "NEXTVAL",         "SETVAL",          "SET_CONFIG",     "PG_ADVISORY_LOCK", "PG_ADVISORY_XACT_LOCK",
        "LO_IMPORT",       "LO_EXPORT",       "LO_UNLINK",      "LO_CREATE",        "PG_TERMINATE_BACKEND",
        "PG_CANCEL_BACKEND", "PG_RELOAD_CONF", "DBLINK_EXEC",    "LOAD_EXTENSION",   "WRITEFILE",
        "PG_READ_FILE",    "PG_READ_BINARY_FILE",
    };

    template <std::size_t N>
    bool contains(const std::array<std::string_view, N>& words, std::string_view word)
    {
        return std::ranges::find(words, word) != words.end();
    }

    StatementClass classify_tokens(const std::vector<Token>& all)
    {
        auto statements = std::vector<std::vector<Token>> { {} };
        for (const auto& token: all)
        {
            if (!significant(token))
                continue;
            if (token.kind == Token::Kind::Punct && token.text == ";")
                statements.emplace_back();
            else
                statements.back().push_back(token);
        }
        std::erase_if(statements, [](const auto& s) { return s.empty(); });
        if (statements.empty())
            return StatementClass::Unparseable;
        if (statements.size() > 1)
            return StatementClass::MultiStatement;

        const auto& tokens = statements.front();
        auto first = std::ranges::find_if(tokens, [](const Token& t) { return !(t.kind == Token::Kind::Punct && t.text == "("); });
        if (first == tokens.end() || first->kind != Token::Kind::Word)
            return StatementClass::Unparseable;

        auto head = upper(first->text);
        if (head != "SELECT" && head != "WITH" && head != "VALUES")
            return contains(mutatingStatements, head) ? StatementClass::Mutating : StatementClass::Unparseable;

        auto depth = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i)
        {
            const auto& token = tokens[i];
            if (token.kind == Token::Kind::Punct)
            {
                if (token.text == "(")
                    ++depth;
                else if (token.text == ")" && --depth < 0)
                    return StatementClass::Unparseable;
                continue;
            }
            if (token.kind != Token::Kind::Word)
                continue;
            auto word = upper(token.text);
            auto nextIsParen = i + 1 < tokens.size() && tokens[i + 1].text == "(";
            if (contains(mutatingKeywords, word))
                return StatementClass::Mutating;
            if (nextIsParen && contains(mutatingFunctions, word))
                return StatementClass::Mutating;
            if (word == "REPLACE" && !nextIsParen)
                return StatementClass::Mutating;
            if (word == "FOR" && i + 1 < tokens.size())
            {
                auto after = upper(tokens[i + 1].text);
                if (after == "SHARE" || after == "KEY" || after == "NO")
                    return StatementClass::Mutating;
            }
        }
        if (depth != 0)
            return StatementClass::Unparseable;
        return StatementClass::ReadOnly;
    }

} // namespace

LexResult lex(std::string_view sql, LexMode mode)
{
    return Lexer(sql, mode).run();
}

StatementClass classify_statement(std::string_view sql, LexMode mode)
{
    auto lexed = lex(sql, mode);
    if (!lexed.ok)
        return StatementClass::Unparseable;
    return classify_tokens(lexed.tokens);
}

StatementClass classify_statement(std::string_view sql)
{
    auto standard = classify_statement(sql, LexMode::Standard);
    if (standard != StatementClass::ReadOnly)
        return standard;
    for (auto mode: { LexMode::Postgres, LexMode::Mysql })
        if (auto other = classify_statement(sql, mode); other != StatementClass::ReadOnly)
            return other;
    return StatementClass::ReadOnly;
}

void require_read_only(std::string_view sql)
{
    auto cls = classify_statement(sql);
    if (cls == StatementClass::ReadOnly)
        return;
    auto reason = std::string {};
    switch (cls)
    {
        case StatementClass::Mutating: reason = "the statement modifies data, schema, or session state"; break;
        case StatementClass::MultiStatement: reason = "only a single statement is allowed"; break;
        default: reason = "the statement is not a recognizable single SELECT query"; break;
    }
    throw ReadOnlyViolation("read-only violation (" + std::string(to_string(cls)) + "): " + reason
                            + "; only single SELECT or WITH ... SELECT queries are permitted");
}

std::string normalize_whitespace(std::string_view sql)
{
    auto lexed = lex(sql, LexMode::Postgres);
    if (!lexed.ok)
        return std::string(sql);
    auto out = std::string {};
    auto pendingSpace = false;
    for (const auto& token: lexed.tokens)
    {
        if (!significant(token))
        {
            pendingSpace = true;
            continue;
        }
        if (pendingSpace && !out.empty())
            out += ' ';
        pendingSpace = false;
        out += token.text;
    }
    while (!out.empty() && (out.back() == ';' || out.back() == ' '))
        out.pop_back();
    return out;
}

namespace
{

    struct Piece
    {
        std::string text;
        Token::Kind kind;
        bool parenthesized = false;
    };

    std::size_t skip_space(const std::vector<Token>& tokens, std::size_t i)
    {
        while (i < tokens.size() && !significant(tokens[i]))
            ++i;
        return i;
    }

    std::optional<std::size_t> matching_paren(const std::vector<Token>& tokens, std::size_t open)
    {
        auto depth = 0;
        for (auto i = open; i < tokens.size(); ++i)
        {
            if (tokens[i].kind != Token::Kind::Punct)
                continue;
            if (tokens[i].text == "(")
                ++depth;
            else if (tokens[i].text == ")" && --depth == 0)
                return i;
        }
        return std::nullopt;
    }

    std::string cast_expression(const std::string& operand, const std::string& type)
    {
        static constexpr auto integers = std::array<std::string_view, 9> {
            "INT", "INTEGER", "INT2", "INT4", "INT8", "SMALLINT", "BIGINT", "BOOL", "BOOLEAN",
        };
        static constexpr auto reals = std::array<std::string_view, 8> {
            "NUMERIC", "DECIMAL", "REAL", "FLOAT", "FLOAT4", "FLOAT8", "DOUBLE PRECISION", "DOUBLE",
        };
        static constexpr auto texts = std::array<std::string_view, 6> {
            "TEXT", "VARCHAR", "CHAR", "CHARACTER", "CHARACTER VARYING", "BPCHAR",
        };
        auto base = upper(type);
        if (contains(integers, base))
            return "CAST(" + operand + " AS INTEGER)";
        if (contains(reals, base))
            return "CAST(" + operand + " AS REAL)";
        if (contains(texts, base))
            return "CAST(" + operand + " AS TEXT)";
        if (base == "DATE")
            return "pg_date(" + operand + ")";
        if (base.starts_with("TIMESTAMP"))
            return "pg_timestamp(" + operand + ")";
        return "CAST(" + operand + " AS " + type + ")";
    }

    std::string rewrite_range(const std::vector<Token>& tokens, std::size_t begin, std::size_t end);

    std::string join(const std::vector<Piece>& pieces)
    {
        auto out = std::string {};
        for (const auto& piece: pieces)
            out += piece.text;
        return out;
    }

    // Parses the type name after `::`; returns the index one past the type.
    std::size_t parse_type(const std::vector<Token>& tokens, std::size_t i, std::size_t end, std::string& type)
    {
        i = skip_space(tokens, i);
        if (i >= end || tokens[i].kind != Token::Kind::Word)
            return i;
        type = std::string(tokens[i].text);
        ++i;
        // Multi-word type names.
        auto follow = [&](std::string_view word) {
            auto j = skip_space(tokens, i);
            if (j < end && tokens[j].kind == Token::Kind::Word && iequals(tokens[j].text, word))
            {
                i = j + 1;
                return true;
            }
            return false;
        };
        if (iequals(type, "double") && follow("precision"))
            type = "double precision";
        else if (iequals(type, "character") && follow("varying"))
            type = "character varying";
        else if (iequals(type, "timestamp") || iequals(type, "time"))
        {
            auto save = i;
            if ((follow("with") || follow("without")) && follow("time") && follow("zone"))
                type += " zone";
            else
                i = save;
        }
        // Type modifiers such as numeric(10, 2) or varchar(20).
        auto j = skip_space(tokens, i);
        if (j < end && tokens[j].text == "(")
            if (auto close = matching_paren(tokens, j); close && *close < end)
                i = *close + 1;
        return i;
    }

    std::string rewrite_range(const std::vector<Token>& tokens, std::size_t begin, std::size_t end)
    {
        auto pieces = std::vector<Piece> {};
        auto i = begin;
        while (i < end)
        {
            const auto& token = tokens[i];

            if (token.kind == Token::Kind::Word && (iequals(token.text, "EXTRACT")))
            {
                auto open = skip_space(tokens, i + 1);
                if (open < end && tokens[open].text == "(")
                {
                    auto close = matching_paren(tokens, open);
                    auto field = skip_space(tokens, open + 1);
                    auto from = skip_space(tokens, field + 1);
                    if (close && *close < end && field < *close && from < *close
                        && (tokens[field].kind == Token::Kind::Word || tokens[field].kind == Token::Kind::String)
                        && iequals(tokens[from].text, "FROM"))
                    {
                        auto name = std::string(tokens[field].text);
                        if (tokens[field].kind == Token::Kind::String)
                            name = name.substr(1, name.size() - 2);
                        std::ranges::transform(name, name.begin(), [](unsigned char c) { return std::tolower(c); });
                        auto inner = rewrite_range(tokens, skip_space(tokens, from + 1), *close);
                        pieces.push_back({ "pg_extract('" + name + "', " + inner + ")", Token::Kind::Word, true });
                        i = *close + 1;
                        continue;
                    }
                }
            }

            if (token.kind == Token::Kind::Word && iequals(token.text, "DATE"))
            {
                auto literal = skip_space(tokens, i + 1);
                if (literal < end && tokens[literal].kind == Token::Kind::String)
                {
                    pieces.push_back({ "pg_date(" + std::string(tokens[literal].text) + ")", Token::Kind::Word, true });
                    i = literal + 1;
                    continue;
                }
            }

            if (token.kind == Token::Kind::Punct && token.text == "(")
            {
                if (auto close = matching_paren(tokens, i); close && *close < end)
                {
                    pieces.push_back({ "(" + rewrite_range(tokens, i + 1, *close) + ")", Token::Kind::Punct, true });
                    i = *close + 1;
                    continue;
                }
            }

            if (token.kind == Token::Kind::Punct && token.text == "::")
            {
                auto type = std::string {};
                auto after = parse_type(tokens, i + 1, end, type);
                // Operand: trailing primary, with a function name or a
                // qualified-name chain attached.
                auto trailing = std::string {};
                while (!pieces.empty() && (pieces.back().kind == Token::Kind::Space || pieces.back().kind == Token::Kind::Comment))
                {
                    trailing = pieces.back().text + trailing;
                    pieces.pop_back();
                }
                if (!type.empty() && !pieces.empty())
                {
                    auto operand = pieces.back().text;
                    auto wasParen = pieces.back().parenthesized && pieces.back().kind == Token::Kind::Punct;
                    pieces.pop_back();
                    if (wasParen && !pieces.empty() && pieces.back().kind == Token::Kind::Word)
                    {
                        operand = pieces.back().text + operand;
                        pieces.pop_back();
                    }
                    while (pieces.size() >= 2 && pieces.back().text == "."
                           && (pieces[pieces.size() - 2].kind == Token::Kind::Word
                               || pieces[pieces.size() - 2].kind == Token::Kind::QuotedIdentifier))
                    {
                        operand = pieces[pieces.size() - 2].text + "." + operand;
                        pieces.pop_back();
                        pieces.pop_back();
                    }
                    pieces.push_back({ cast_expression(operand, type), Token::Kind::Word, true });
                    i = after;
                    continue;
                }
                pieces.push_back({ trailing, Token::Kind::Space });
            }

            if (token.kind == Token::Kind::Word && iequals(token.text, "ILIKE"))
            {
                pieces.push_back({ "LIKE", Token::Kind::Word });
                ++i;
                continue;
            }

            if (token.kind == Token::Kind::Word && iequals(token.text, "public") && i + 1 < end
                && tokens[i + 1].text == ".")
            {
                pieces.push_back({ "main", Token::Kind::Word });
                ++i;
                continue;
            }

            pieces.push_back({ std::string(token.text), token.kind });
            ++i;
        }
        return join(pieces);
    }

} // namespace

std::string rewrite_postgres_for_sqlite(std::string_view sql)
{
    auto lexed = lex(sql, LexMode::Postgres);
    if (!lexed.ok)
        return std::string(sql);
    return rewrite_range(lexed.tokens, 0, lexed.tokens.size());
}

} // namespace claimcheck::sql
