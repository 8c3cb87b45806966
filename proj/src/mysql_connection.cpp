// SPDX-License-Identifier: Apache-2.0
// libmysqlclient is loaded at runtime. MYSQL_FIELD below mirrors the 8.0
// client ABI; only the fields up to `type` are read.
#include "backends.hpp"

#include <claimcheck/error.hpp>

#include <algorithm>
#include <charconv>

namespace claimcheck::detail
{

namespace
{

    struct MYSQL;
    struct MYSQL_RES;
    using MYSQL_ROW = char**;

    struct MYSQL_FIELD
    {
        char* name;
        char* org_name;
        char* table;
        char* org_table;
        char* db;
        char* catalog;
        char* def;
        unsigned long length;
        unsigned long max_length;
        unsigned int name_length;
        unsigned int org_name_length;
        unsigned int table_length;
        unsigned int org_table_length;
        unsigned int db_length;
        unsigned int catalog_length;
        unsigned int def_length;
        unsigned int flags;
        unsigned int decimals;
        unsigned int charsetnr;
        int type;
        void* extension;
    };

    constexpr unsigned int binary_charset = 63;

    struct LibMysql
    {
        SharedLibrary lib { { "libmysqlclient.so.21", "libmysqlclient.so" }, "CLAIMCHECK_LIBMYSQLCLIENT" };

        MYSQL* (*init)(MYSQL*) = nullptr;
        MYSQL* (*realConnect)(MYSQL*, const char*, const char*, const char*, const char*, unsigned int, const char*,
                              unsigned long) = nullptr;
        const char* (*error)(MYSQL*) = nullptr;
        void (*close)(MYSQL*) = nullptr;
        int (*realQuery)(MYSQL*, const char*, unsigned long) = nullptr;
        MYSQL_RES* (*useResult)(MYSQL*) = nullptr;
        unsigned int (*fieldCount)(MYSQL*) = nullptr;
        unsigned int (*numFields)(MYSQL_RES*) = nullptr;
        MYSQL_FIELD* (*fetchFields)(MYSQL_RES*) = nullptr;
        MYSQL_ROW (*fetchRow)(MYSQL_RES*) = nullptr;
        unsigned long* (*fetchLengths)(MYSQL_RES*) = nullptr;
        void (*freeResult)(MYSQL_RES*) = nullptr;
        int (*setCharacterSet)(MYSQL*, const char*) = nullptr;
        unsigned long (*escapeString)(MYSQL*, char*, const char*, unsigned long) = nullptr;

        LibMysql()
        {
            if (!lib.loaded())
                throw ConnectionError("mysql client library (libmysqlclient) is not available: " + lib.error());
            init = lib.symbol<decltype(init)>("mysql_init");
            realConnect = lib.symbol<decltype(realConnect)>("mysql_real_connect");
            error = lib.symbol<decltype(error)>("mysql_error");
            close = lib.symbol<decltype(close)>("mysql_close");
            realQuery = lib.symbol<decltype(realQuery)>("mysql_real_query");
            useResult = lib.symbol<decltype(useResult)>("mysql_use_result");
            fieldCount = lib.symbol<decltype(fieldCount)>("mysql_field_count");
            numFields = lib.symbol<decltype(numFields)>("mysql_num_fields");
            fetchFields = lib.symbol<decltype(fetchFields)>("mysql_fetch_fields");
            fetchRow = lib.symbol<decltype(fetchRow)>("mysql_fetch_row");
            fetchLengths = lib.symbol<decltype(fetchLengths)>("mysql_fetch_lengths");
            freeResult = lib.symbol<decltype(freeResult)>("mysql_free_result");
            setCharacterSet = lib.symbol<decltype(setCharacterSet)>("mysql_set_character_set");
            escapeString = lib.symbol<decltype(escapeString)>("mysql_real_escape_string");
        }
    };

    const LibMysql& libmysql()
    {
        static const LibMysql instance;
        return instance;
    }

    Value decode(const MYSQL_FIELD& field, const char* data, unsigned long length)
    {
        auto text = std::string_view(data, length);
        switch (field.type)
        {
            case 1: // TINY
            case 2: // SHORT
            case 3: // LONG
            case 8: // LONGLONG
            case 9: // INT24
            case 13: // YEAR
            {
                auto value = std::int64_t {};
                auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
                if (ec == std::errc {} && end == text.data() + text.size())
                    return value;
                return Decimal { std::string(text) }; // unsigned BIGINT beyond int64
            }
            case 0: // DECIMAL
            case 4: // FLOAT
            case 5: // DOUBLE
            case 246: // NEWDECIMAL
                return Decimal { std::string(text) };
            case 16: // BIT
            case 249:
            case 250:
            case 251:
            case 252:
            {
                if (field.charsetnr != binary_charset)
                    return std::string(text);
                static constexpr char hex[] = "0123456789ABCDEF";
                auto out = std::string("x'");
                for (unsigned char c: text)
                {
                    out += hex[c >> 4];
                    out += hex[c & 0xF];
                }
                return out + "'";
            }
            default: return std::string(text);
        }
    }

    class MysqlConnection final: public Connection
    {
      public:
        explicit MysqlConnection(const SourceDecl& decl)
        {
            const auto& my = libmysql();
            auto password = secret_from_env(decl);
            _conn = my.init(nullptr);
            if (!_conn)
                throw ConnectionError("source `" + decl.name + "`: out of memory");
            auto portText = decl.param("port");
            auto port = portText.empty() ? 0u : static_cast<unsigned int>(std::stoul(portText));
            auto host = decl.param("host");
            auto user = decl.param("user");
            auto database = decl.param("database");
            // Client flag 0: multi-statement execution stays disabled.
            if (!my.realConnect(_conn, host.c_str(), user.empty() ? nullptr : user.c_str(),
                                password.empty() ? nullptr : password.c_str(), database.c_str(), port, nullptr, 0))
            {
                auto message = std::string(my.error(_conn));
                my.close(_conn);
                throw ConnectionError("source `" + decl.name + "`: " + message);
            }
            my.setCharacterSet(_conn, "utf8mb4");
            run("SET SESSION TRANSACTION READ ONLY");
        }

        ~MysqlConnection() override { libmysql().close(_conn); }

        Dialect dialect() const override { return Dialect::Mysql; }

        QueryResult query(std::string_view sql, std::size_t row_cap) override
        {
            const auto& my = libmysql();
            if (my.realQuery(_conn, sql.data(), static_cast<unsigned long>(sql.size())) != 0)
                throw SqlError("mysql", my.error(_conn));
            auto* res = my.useResult(_conn);
            auto result = QueryResult {};
            if (!res)
            {
                if (my.fieldCount(_conn) != 0)
                    throw SqlError("mysql", my.error(_conn));
                return result;
            }
            auto fields = my.fetchFields(res);
            auto count = my.numFields(res);
            for (unsigned int i = 0; i < count; ++i)
                result.columns.emplace_back(fields[i].name);
            while (auto row = my.fetchRow(res))
            {
                if (result.rows.size() == row_cap)
                {
                    result.truncated = true;
                    break;
                }
                auto lengths = my.fetchLengths(res);
                auto decoded = Row {};
                for (unsigned int i = 0; i < count; ++i)
                {
                    if (!row[i])
                        decoded.emplace_back(std::monostate {});
                    else
                        decoded.push_back(decode(fields[i], row[i], lengths[i]));
                }
                result.rows.push_back(std::move(decoded));
            }
            // mysql_free_result drains any unread rows of an unbuffered result.
            my.freeResult(res);
            result.row_count = result.rows.size();
            return result;
        }

        std::vector<std::string> list_tables() override
        {
            auto rows = fetch("SELECT table_name FROM information_schema.tables WHERE table_schema = DATABASE() "
                              "AND table_type IN ('BASE TABLE', 'VIEW')");
            auto tables = std::vector<std::string> {};
            for (auto& row: rows)
                tables.push_back(row[0]);
            return tables;
        }

        TableSchema describe_table(std::string_view table) override
        {
            auto [schema, name] = split_qualified(table);
            auto schemaExpr = schema.empty() ? std::string("DATABASE()") : quote(schema);
            auto filter = " WHERE table_schema = " + schemaExpr + " AND table_name = " + quote(name);
            auto found = fetch("SELECT table_name FROM information_schema.tables" + filter);
            if (found.empty())
                throw UnknownTable(std::string(table));

            auto described = TableSchema { .table = schema.empty() ? found[0][0] : schema + "." + found[0][0] };
            auto columns = fetch("SELECT column_name, column_type, is_nullable, column_key FROM information_schema.columns"
                                 + filter + " ORDER BY ordinal_position");
            for (auto& row: columns)
                described.columns.push_back({ row[0], row[1], row[2] == "YES", row[3] == "PRI" });
            auto foreign = fetch("SELECT column_name, referenced_table_name, referenced_column_name "
                                 "FROM information_schema.key_column_usage"
                                 + filter + " AND referenced_table_name IS NOT NULL "
                                 "ORDER BY constraint_name, ordinal_position");
            for (auto& row: foreign)
                described.foreign_keys.push_back({ row[0], row[1], row[2] });
            return described;
        }

      private:
        std::string quote(const std::string& text)
        {
            auto buffer = std::string(text.size() * 2 + 1, '\0');
            auto length = libmysql().escapeString(_conn, buffer.data(), text.c_str(), static_cast<unsigned long>(text.size()));
            buffer.resize(length);
            return "'" + buffer + "'";
        }

        void run(const std::string& sql)
        {
            const auto& my = libmysql();
            if (my.realQuery(_conn, sql.c_str(), static_cast<unsigned long>(sql.size())) != 0)
                throw ConnectionError(std::string("mysql: ") + my.error(_conn));
        }

        std::vector<std::vector<std::string>> fetch(const std::string& sql)
        {
            auto result = query(sql, static_cast<std::size_t>(-1));
            auto rows = std::vector<std::vector<std::string>> {};
            for (auto& row: result.rows)
            {
                auto& out = rows.emplace_back();
                for (auto& value: row)
                    out.push_back(std::holds_alternative<std::monostate>(value) ? std::string {} : render_value(value));
            }
            return rows;
        }

        MYSQL* _conn = nullptr;
    };

} // namespace

std::unique_ptr<Connection> open_mysql(const SourceDecl& decl)
{
    return std::make_unique<MysqlConnection>(decl);
}

} // namespace claimcheck::detail
