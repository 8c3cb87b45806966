// SPDX-License-Identifier: Apache-2.0
#include "backends.hpp"

#include <claimcheck/error.hpp>
#include <claimcheck/sql.hpp>

#include <sqlite3.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

namespace claimcheck::detail
{

namespace
{

    struct CivilTime
    {
        int year = 0, month = 0, day = 0, hour = 0, minute = 0;
        double second = 0;
    };

    int digits(std::string_view text, std::size_t pos, std::size_t count)
    {
        if (pos + count > text.size())
            return -1;
        auto value = 0;
        for (auto i = pos; i < pos + count; ++i)
        {
            if (!std::isdigit(static_cast<unsigned char>(text[i])))
                return -1;
            value = value * 10 + (text[i] - '0');
        }
        return value;
    }

    // Accepts YYYY-MM-DD with an optional [ T]HH:MM[:SS[.fff]] suffix.
    std::optional<CivilTime> parse_civil(std::string_view text)
    {
        auto t = CivilTime {};
        t.year = digits(text, 0, 4);
        t.month = digits(text, 5, 2);
        t.day = digits(text, 8, 2);
        if (t.year < 0 || t.month < 1 || t.month > 12 || t.day < 1 || t.day > 31 || text[4] != '-' || text[7] != '-')
            return std::nullopt;
        if (text.size() == 10)
            return t;
        if (text[10] != ' ' && text[10] != 'T')
            return std::nullopt;
        t.hour = digits(text, 11, 2);
        t.minute = digits(text, 14, 2);
        if (t.hour < 0 || t.minute < 0 || text.size() < 16 || text[13] != ':')
            return std::nullopt;
        if (text.size() > 16)
        {
            if (text[16] != ':')
                return std::nullopt;
            auto sec = digits(text, 17, 2);
            if (sec < 0)
                return std::nullopt;
            t.second = sec;
            if (text.size() > 19 && text[19] == '.')
            {
                auto scale = 0.1;
                for (auto i = std::size_t { 20 }; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i)
                {
                    t.second += (text[i] - '0') * scale;
                    scale /= 10;
                }
            }
        }
        return t;
    }

    // Days since 1970-01-01 in the proleptic Gregorian calendar.
    long days_from_civil(int y, int m, int d)
    {
        y -= m <= 2;
        const long era = (y >= 0 ? y : y - 399) / 400;
        const long yoe = y - era * 400;
        const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + doe - 719468;
    }

    std::optional<CivilTime> civil_argument(sqlite3_context* ctx, sqlite3_value* value, const char* type)
    {
        if (sqlite3_value_type(value) == SQLITE_NULL)
        {
            sqlite3_result_null(ctx);
            return std::nullopt;
        }
        auto text = std::string(reinterpret_cast<const char*>(sqlite3_value_text(value)));
        auto parsed = parse_civil(text);
        if (!parsed)
        {
            auto message = std::string("invalid input syntax for type ") + type + ": \"" + text + "\"";
            sqlite3_result_error(ctx, message.c_str(), -1);
        }
        return parsed;
    }

    void pg_extract(sqlite3_context* ctx, int, sqlite3_value** argv)
    {
        auto field = std::string(reinterpret_cast<const char*>(sqlite3_value_text(argv[0]) ? sqlite3_value_text(argv[0]) : reinterpret_cast<const unsigned char*>("")));
        std::ranges::transform(field, field.begin(), [](unsigned char c) { return std::tolower(c); });
        auto t = civil_argument(ctx, argv[1], "timestamp");
        if (!t)
            return;
        auto days = days_from_civil(t->year, t->month, t->day);
        if (field == "year")
            sqlite3_result_int(ctx, t->year);
        else if (field == "month")
            sqlite3_result_int(ctx, t->month);
        else if (field == "day")
            sqlite3_result_int(ctx, t->day);
        else if (field == "hour")
            sqlite3_result_int(ctx, t->hour);
        else if (field == "minute")
            sqlite3_result_int(ctx, t->minute);
        else if (field == "second")
        {
            if (t->second == static_cast<int>(t->second))
                sqlite3_result_int(ctx, static_cast<int>(t->second));
            else
                sqlite3_result_double(ctx, t->second);
        }
        else if (field == "quarter")
            sqlite3_result_int(ctx, (t->month - 1) / 3 + 1);
        else if (field == "dow")
            sqlite3_result_int(ctx, static_cast<int>(((days % 7) + 11) % 7)); // 1970-01-01 was a Thursday
        else if (field == "isodow")
        {
            auto dow = static_cast<int>(((days % 7) + 11) % 7);
            sqlite3_result_int(ctx, dow == 0 ? 7 : dow);
        }
        else if (field == "doy")
            sqlite3_result_int(ctx, static_cast<int>(days - days_from_civil(t->year, 1, 1) + 1));
        else if (field == "epoch")
            sqlite3_result_int64(ctx, days * 86400 + t->hour * 3600 + t->minute * 60 + static_cast<long>(t->second));
        else
        {
            auto message = "unit \"" + field + "\" not supported for type timestamp";
            sqlite3_result_error(ctx, message.c_str(), -1);
        }
    }

    void pg_date(sqlite3_context* ctx, int, sqlite3_value** argv)
    {
        auto t = civil_argument(ctx, argv[0], "date");
        if (!t)
            return;
        char buffer[16];
        std::snprintf(buffer, sizeof buffer, "%04d-%02d-%02d", t->year, t->month, t->day);
        sqlite3_result_text(ctx, buffer, -1, SQLITE_TRANSIENT);
    }

    void pg_timestamp(sqlite3_context* ctx, int, sqlite3_value** argv)
    {
        auto t = civil_argument(ctx, argv[0], "timestamp");
        if (!t)
            return;
        char buffer[32];
        std::snprintf(buffer, sizeof buffer, "%04d-%02d-%02d %02d:%02d:%02d", t->year, t->month, t->day, t->hour,
                      t->minute, static_cast<int>(t->second));
        sqlite3_result_text(ctx, buffer, -1, SQLITE_TRANSIENT);
    }

    class Statement
    {
      public:
        Statement(sqlite3* db, std::string_view sql)
        {
            const char* tail = nullptr;
            if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &_stmt, &tail) != SQLITE_OK)
                throw SqlError("sqlite", sqlite3_errmsg(db));
            if (!_stmt)
                throw SqlError("sqlite", "empty statement");
            for (auto rest = std::string_view(tail, sql.data() + sql.size() - tail); !rest.empty(); rest.remove_prefix(1))
                if (!std::isspace(static_cast<unsigned char>(rest.front())) && rest.front() != ';')
                    throw ReadOnlyViolation("read-only violation (multi_statement): only a single statement is allowed");
        }

        ~Statement() { sqlite3_finalize(_stmt); }

        Statement(const Statement&) = delete;
        Statement& operator=(const Statement&) = delete;

        sqlite3_stmt* get() const noexcept { return _stmt; }

        void bind(int index, std::string_view text)
        {
            sqlite3_bind_text(_stmt, index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
        }

      private:
        sqlite3_stmt* _stmt = nullptr;
    };

    Value column_value(sqlite3_stmt* stmt, int i)
    {
        switch (sqlite3_column_type(stmt, i))
        {
            case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, i));
            case SQLITE_FLOAT: return Decimal { format_double(sqlite3_column_double(stmt, i)) };
            case SQLITE_TEXT:
                return std::string(reinterpret_cast<const char*>(sqlite3_column_text(stmt, i)),
                                   static_cast<std::size_t>(sqlite3_column_bytes(stmt, i)));
            case SQLITE_BLOB:
            {
                static constexpr char hex[] = "0123456789ABCDEF";
                auto bytes = static_cast<const unsigned char*>(sqlite3_column_blob(stmt, i));
                auto out = std::string("x'");
                for (int k = 0; k < sqlite3_column_bytes(stmt, i); ++k)
                {
                    out += hex[bytes[k] >> 4];
                    out += hex[bytes[k] & 0xF];
                }
                return out + "'";
            }
            default: return std::monostate {};
        }
    }

    class SqliteConnection final: public Connection
    {
      public:
        explicit SqliteConnection(const SourceDecl& decl): _postgresCompat(decl.param("compat") == "postgres")
        {
            auto path = decl.param("path");
            if (sqlite3_open_v2(path.c_str(), &_db, SQLITE_OPEN_READONLY | SQLITE_OPEN_FULLMUTEX, nullptr) != SQLITE_OK)
            {
                auto message = std::string(_db ? sqlite3_errmsg(_db) : "out of memory");
                sqlite3_close(_db);
                throw ConnectionError("source `" + decl.name + "`: cannot open sqlite database " + path + ": " + message);
            }
            exec("PRAGMA query_only = ON");
            // Fails early when the file is not a database.
            exec("SELECT count(*) FROM sqlite_master");
            if (_postgresCompat)
            {
                sqlite3_create_function(_db, "pg_extract", 2, SQLITE_UTF8 | SQLITE_DETERMINISTIC, nullptr, pg_extract, nullptr, nullptr);
                sqlite3_create_function(_db, "date_part", 2, SQLITE_UTF8 | SQLITE_DETERMINISTIC, nullptr, pg_extract, nullptr, nullptr);
                sqlite3_create_function(_db, "pg_date", 1, SQLITE_UTF8 | SQLITE_DETERMINISTIC, nullptr, pg_date, nullptr, nullptr);
                sqlite3_create_function(_db, "pg_timestamp", 1, SQLITE_UTF8 | SQLITE_DETERMINISTIC, nullptr, pg_timestamp, nullptr, nullptr);
            }
        }

        ~SqliteConnection() override { sqlite3_close_v2(_db); }

        Dialect dialect() const override { return Dialect::Sqlite; }

        QueryResult query(std::string_view text, std::size_t row_cap) override
        {
            auto rewritten = _postgresCompat ? sql::rewrite_postgres_for_sqlite(text) : std::string(text);
            auto stmt = Statement(_db, rewritten);
            if (!sqlite3_stmt_readonly(stmt.get()))
                throw ReadOnlyViolation("read-only violation (mutating): statement would modify the database");

            auto result = QueryResult {};
            auto columns = sqlite3_column_count(stmt.get());
            for (int i = 0; i < columns; ++i)
                result.columns.emplace_back(sqlite3_column_name(stmt.get(), i));

            while (true)
            {
                auto rc = sqlite3_step(stmt.get());
                if (rc == SQLITE_DONE)
                    break;
                if (rc != SQLITE_ROW)
                    throw SqlError("sqlite", sqlite3_errmsg(_db));
                if (result.rows.size() == row_cap)
                {
                    result.truncated = true;
                    break;
                }
                auto row = Row {};
                row.reserve(static_cast<std::size_t>(columns));
                for (int i = 0; i < columns; ++i)
                    row.push_back(column_value(stmt.get(), i));
                result.rows.push_back(std::move(row));
            }
            result.row_count = result.rows.size();
            return result;
        }

        std::vector<std::string> list_tables() override
        {
            auto stmt = Statement(_db, "SELECT name FROM sqlite_master WHERE type IN ('table', 'view') "
                                       "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\'");
            auto tables = std::vector<std::string> {};
            while (sqlite3_step(stmt.get()) == SQLITE_ROW)
                tables.emplace_back(reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), 0)));
            return tables;
        }

        TableSchema describe_table(std::string_view table) override
        {
            auto [schema, name] = split_qualified(table);
            if (!schema.empty() && schema != "main" && !(_postgresCompat && schema == "public"))
                throw UnknownTable(std::string(table));

            auto schemaResult = TableSchema { .table = name };
            {
                auto stmt = Statement(_db, "SELECT name FROM sqlite_master WHERE type IN ('table', 'view') "
                                           "AND name = ?1 COLLATE NOCASE");
                stmt.bind(1, name);
                if (sqlite3_step(stmt.get()) != SQLITE_ROW)
                    throw UnknownTable(std::string(table));
                schemaResult.table = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), 0));
            }
            {
                auto stmt = Statement(_db, "SELECT name, type, \"notnull\", pk FROM pragma_table_info(?1) ORDER BY cid");
                stmt.bind(1, schemaResult.table);
                while (sqlite3_step(stmt.get()) == SQLITE_ROW)
                {
                    auto column = ColumnInfo {};
                    column.name = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), 0));
                    if (auto type = sqlite3_column_text(stmt.get(), 1))
                        column.declared_type = reinterpret_cast<const char*>(type);
                    column.is_primary_key = sqlite3_column_int(stmt.get(), 3) > 0;
                    column.nullable = sqlite3_column_int(stmt.get(), 2) == 0 && !column.is_primary_key;
                    schemaResult.columns.push_back(std::move(column));
                }
            }
            {
                auto stmt = Statement(_db, "SELECT \"from\", \"table\", \"to\" FROM pragma_foreign_key_list(?1) ORDER BY id, seq");
                stmt.bind(1, schemaResult.table);
                while (sqlite3_step(stmt.get()) == SQLITE_ROW)
                {
                    auto text = [&](int i) {
                        auto p = sqlite3_column_text(stmt.get(), i);
                        return p ? std::string(reinterpret_cast<const char*>(p)) : std::string {};
                    };
                    schemaResult.foreign_keys.push_back({ text(0), text(1), text(2) });
                }
            }
            return schemaResult;
        }

      private:
        void exec(const char* sql)
        {
            char* message = nullptr;
            if (sqlite3_exec(_db, sql, nullptr, nullptr, &message) != SQLITE_OK)
            {
                auto text = std::string(message ? message : "unknown error");
                sqlite3_free(message);
                throw ConnectionError("sqlite: " + text);
            }
        }

        sqlite3* _db = nullptr;
        bool _postgresCompat;
    };

} // namespace

std::unique_ptr<Connection> open_sqlite(const SourceDecl& decl)
{
    return std::make_unique<SqliteConnection>(decl);
}

} // namespace claimcheck::detail
