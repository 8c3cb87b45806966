// SPDX-License-Identifier: Apache-2.0
// libpq is loaded at runtime so that builds without the client headers still
// produce a working binary; only the handful of entry points used below are
// declared.
#include "backends.hpp"

#include <claimcheck/error.hpp>

#include <algorithm>
#include <cctype>

namespace claimcheck::detail
{

namespace
{

    struct PGconn;
    struct PGresult;
    struct PGcancel;
    using Oid = unsigned int;

    constexpr int connection_ok = 0;

    enum ExecStatus
    {
        pgres_empty_query = 0,
        pgres_command_ok = 1,
        pgres_tuples_ok = 2,
        pgres_fatal_error = 7,
        pgres_single_tuple = 9,
    };

    constexpr int diag_message_primary = 'M';

    struct LibPq
    {
        SharedLibrary lib { { "libpq.so.5", "libpq.so" }, "CLAIMCHECK_LIBPQ" };

        PGconn* (*connectdbParams)(const char* const*, const char* const*, int) = nullptr;
        int (*status)(const PGconn*) = nullptr;
        char* (*errorMessage)(const PGconn*) = nullptr;
        void (*finish)(PGconn*) = nullptr;
        int (*sendQueryParams)(PGconn*, const char*, int, const Oid*, const char* const*, const int*, const int*, int) = nullptr;
        int (*setSingleRowMode)(PGconn*) = nullptr;
        PGresult* (*getResult)(PGconn*) = nullptr;
        PGresult* (*execParams)(PGconn*, const char*, int, const Oid*, const char* const*, const int*, const int*, int) = nullptr;
        int (*resultStatus)(const PGresult*) = nullptr;
        char* (*resultErrorField)(const PGresult*, int) = nullptr;
        char* (*resultErrorMessage)(const PGresult*) = nullptr;
        int (*ntuples)(const PGresult*) = nullptr;
        int (*nfields)(const PGresult*) = nullptr;
        char* (*fname)(const PGresult*, int) = nullptr;
        Oid (*ftype)(const PGresult*, int) = nullptr;
        int (*getisnull)(const PGresult*, int, int) = nullptr;
        char* (*getvalue)(const PGresult*, int, int) = nullptr;
        void (*clear)(PGresult*) = nullptr;
        PGcancel* (*getCancel)(PGconn*) = nullptr;
        int (*cancel)(PGcancel*, char*, int) = nullptr;
        void (*freeCancel)(PGcancel*) = nullptr;

        LibPq()
        {
            if (!lib.loaded())
                throw ConnectionError("postgres client library (libpq) is not available: " + lib.error());
            connectdbParams = lib.symbol<decltype(connectdbParams)>("PQconnectdbParams");
            status = lib.symbol<decltype(status)>("PQstatus");
            errorMessage = lib.symbol<decltype(errorMessage)>("PQerrorMessage");
            finish = lib.symbol<decltype(finish)>("PQfinish");
            sendQueryParams = lib.symbol<decltype(sendQueryParams)>("PQsendQueryParams");
            setSingleRowMode = lib.symbol<decltype(setSingleRowMode)>("PQsetSingleRowMode");
            getResult = lib.symbol<decltype(getResult)>("PQgetResult");
            execParams = lib.symbol<decltype(execParams)>("PQexecParams");
            resultStatus = lib.symbol<decltype(resultStatus)>("PQresultStatus");
            resultErrorField = lib.symbol<decltype(resultErrorField)>("PQresultErrorField");
            resultErrorMessage = lib.symbol<decltype(resultErrorMessage)>("PQresultErrorMessage");
            ntuples = lib.symbol<decltype(ntuples)>("PQntuples");
            nfields = lib.symbol<decltype(nfields)>("PQnfields");
            fname = lib.symbol<decltype(fname)>("PQfname");
            ftype = lib.symbol<decltype(ftype)>("PQftype");
            getisnull = lib.symbol<decltype(getisnull)>("PQgetisnull");
            getvalue = lib.symbol<decltype(getvalue)>("PQgetvalue");
            clear = lib.symbol<decltype(clear)>("PQclear");
            getCancel = lib.symbol<decltype(getCancel)>("PQgetCancel");
            cancel = lib.symbol<decltype(cancel)>("PQcancel");
            freeCancel = lib.symbol<decltype(freeCancel)>("PQfreeCancel");
        }
    };

    const LibPq& libpq()
    {
        static const LibPq instance;
        return instance;
    }

    std::string trimmed(std::string text)
    {
        while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
            text.pop_back();
        return text;
    }

    Value decode(Oid type, const char* text)
    {
        switch (type)
        {
            case 16: return text[0] == 't';
            case 20:
            case 21:
            case 23:
            case 26: return static_cast<std::int64_t>(std::stoll(text));
            case 700:
            case 701:
            case 1700: return Decimal { text };
            default: return std::string(text);
        }
    }

    class ResultGuard
    {
      public:
        explicit ResultGuard(PGresult* result): _result(result) {}
        ~ResultGuard()
        {
            if (_result)
                libpq().clear(_result);
        }
        ResultGuard(const ResultGuard&) = delete;
        ResultGuard& operator=(const ResultGuard&) = delete;

        PGresult* get() const noexcept { return _result; }

      private:
        PGresult* _result;
    };

    class PostgresConnection final: public Connection
    {
      public:
        explicit PostgresConnection(const SourceDecl& decl)
        {
            const auto& pq = libpq();
            auto password = secret_from_env(decl);
            auto keys = std::vector<std::string> {};
            auto values = std::vector<std::string> {};
            auto add = [&](const char* key, std::string value) {
                if (!value.empty())
                {
                    keys.emplace_back(key);
                    values.push_back(std::move(value));
                }
            };
            add("host", decl.param("host"));
            add("port", decl.param("port"));
            add("dbname", decl.param("database"));
            add("user", decl.param("user"));
            add("password", password);
            add("sslmode", decl.param("sslmode"));
            add("application_name", "claimcheck");
            add("connect_timeout", "10");
            add("options", "-c default_transaction_read_only=on -c statement_timeout=60000");

            auto keyPtrs = std::vector<const char*> {};
            auto valuePtrs = std::vector<const char*> {};
            for (std::size_t i = 0; i < keys.size(); ++i)
            {
                keyPtrs.push_back(keys[i].c_str());
                valuePtrs.push_back(values[i].c_str());
            }
            keyPtrs.push_back(nullptr);
            valuePtrs.push_back(nullptr);

            _conn = pq.connectdbParams(keyPtrs.data(), valuePtrs.data(), 0);
            if (!_conn || pq.status(_conn) != connection_ok)
            {
                auto message = _conn ? trimmed(pq.errorMessage(_conn)) : std::string("out of memory");
                if (_conn)
                    pq.finish(_conn);
                throw ConnectionError("source `" + decl.name + "`: " + message);
            }
        }

        ~PostgresConnection() override { libpq().finish(_conn); }

        Dialect dialect() const override { return Dialect::Postgres; }

        QueryResult query(std::string_view text, std::size_t row_cap) override
        {
            const auto& pq = libpq();
            auto sql = std::string(text);
            if (!pq.sendQueryParams(_conn, sql.c_str(), 0, nullptr, nullptr, nullptr, nullptr, 0))
                throw SqlError("postgres", trimmed(pq.errorMessage(_conn)));
            pq.setSingleRowMode(_conn);

            auto result = QueryResult {};
            auto error = std::string {};
            auto haveColumns = false;
            auto cancelled = false;
            while (auto* raw = pq.getResult(_conn))
            {
                auto guard = ResultGuard(raw);
                auto status = pq.resultStatus(raw);
                if (status == pgres_fatal_error)
                {
                    if (cancelled)
                        continue;
                    auto primary = pq.resultErrorField(raw, diag_message_primary);
                    error = primary ? std::string(primary) : trimmed(pq.resultErrorMessage(raw));
                    continue;
                }
                if (status != pgres_single_tuple && status != pgres_tuples_ok)
                    continue;
                if (!haveColumns)
                {
                    for (int i = 0; i < pq.nfields(raw); ++i)
                        result.columns.emplace_back(pq.fname(raw, i));
                    haveColumns = true;
                }
                if (status != pgres_single_tuple || cancelled)
                    continue;
                if (result.rows.size() == row_cap)
                {
                    result.truncated = true;
                    cancel();
                    cancelled = true;
                    continue;
                }
                auto row = Row {};
                for (int i = 0; i < pq.nfields(raw); ++i)
                {
                    if (pq.getisnull(raw, 0, i))
                        row.emplace_back(std::monostate {});
                    else
                        row.push_back(decode(pq.ftype(raw, i), pq.getvalue(raw, 0, i)));
                }
                result.rows.push_back(std::move(row));
            }
            if (!error.empty())
                throw SqlError("postgres", error);
            result.row_count = result.rows.size();
            return result;
        }

        std::vector<std::string> list_tables() override
        {
            auto rows = catalog("SELECT table_schema, table_name FROM information_schema.tables "
                                "WHERE table_schema NOT IN ('pg_catalog', 'information_schema') "
                                "AND table_type IN ('BASE TABLE', 'VIEW')",
                                {});
            auto tables = std::vector<std::string> {};
            for (const auto& row: rows)
                tables.push_back(row[0] == "public" ? row[1] : row[0] + "." + row[1]);
            return tables;
        }

        TableSchema describe_table(std::string_view table) override
        {
            auto [schema, name] = split_qualified(table);
            if (schema.empty())
                schema = "public";
            if (!exists(schema, name))
            {
                auto lowered = name;
                std::ranges::transform(lowered, lowered.begin(), [](unsigned char c) { return std::tolower(c); });
                if (lowered == name || !exists(schema, lowered))
                    throw UnknownTable(std::string(table));
                name = lowered;
            }

            auto described = TableSchema { .table = schema == "public" ? name : schema + "." + name };
            auto keys = catalog("SELECT a.attname FROM pg_index i "
                                "JOIN pg_class c ON c.oid = i.indrelid "
                                "JOIN pg_namespace n ON n.oid = c.relnamespace "
                                "JOIN pg_attribute a ON a.attrelid = i.indrelid AND a.attnum = ANY(i.indkey) "
                                "WHERE i.indisprimary AND n.nspname = $1 AND c.relname = $2",
                                { schema, name });
            auto columns = catalog("SELECT a.attname, format_type(a.atttypid, a.atttypmod), "
                                   "CASE WHEN a.attnotnull THEN 'f' ELSE 't' END "
                                   "FROM pg_attribute a JOIN pg_class c ON c.oid = a.attrelid "
                                   "JOIN pg_namespace n ON n.oid = c.relnamespace "
                                   "WHERE n.nspname = $1 AND c.relname = $2 AND a.attnum > 0 AND NOT a.attisdropped "
                                   "ORDER BY a.attnum",
                                   { schema, name });
            for (auto& row: columns)
            {
                auto isKey = std::ranges::any_of(keys, [&](const auto& k) { return k[0] == row[0]; });
                described.columns.push_back({ row[0], row[1], row[2] == "t", isKey });
            }
            auto foreign = catalog("SELECT a.attname, rc.relname, ra.attname FROM pg_constraint k "
                                   "JOIN pg_class c ON c.oid = k.conrelid "
                                   "JOIN pg_namespace n ON n.oid = c.relnamespace "
                                   "JOIN pg_class rc ON rc.oid = k.confrelid "
                                   "CROSS JOIN LATERAL unnest(k.conkey, k.confkey) WITH ORDINALITY AS u(l, r, ord) "
                                   "JOIN pg_attribute a ON a.attrelid = k.conrelid AND a.attnum = u.l "
                                   "JOIN pg_attribute ra ON ra.attrelid = k.confrelid AND ra.attnum = u.r "
                                   "WHERE k.contype = 'f' AND n.nspname = $1 AND c.relname = $2 "
                                   "ORDER BY k.conname, u.ord",
                                   { schema, name });
            for (auto& row: foreign)
                described.foreign_keys.push_back({ row[0], row[1], row[2] });
            return described;
        }

      private:
        bool exists(const std::string& schema, const std::string& name)
        {
            return !catalog("SELECT 1 FROM pg_class c JOIN pg_namespace n ON n.oid = c.relnamespace "
                            "WHERE n.nspname = $1 AND c.relname = $2 AND c.relkind IN ('r', 'v', 'm', 'p', 'f')",
                            { schema, name })
                        .empty();
        }

        std::vector<std::vector<std::string>> catalog(const char* sql, const std::vector<std::string>& params)
        {
            const auto& pq = libpq();
            auto values = std::vector<const char*> {};
            for (const auto& p: params)
                values.push_back(p.c_str());
            auto guard = ResultGuard(pq.execParams(_conn, sql, static_cast<int>(values.size()), nullptr, values.data(),
                                                   nullptr, nullptr, 0));
            if (!guard.get() || pq.resultStatus(guard.get()) != pgres_tuples_ok)
                throw SqlError("postgres", guard.get() ? trimmed(pq.resultErrorMessage(guard.get()))
                                                       : trimmed(pq.errorMessage(_conn)));
            auto rows = std::vector<std::vector<std::string>> {};
            for (int r = 0; r < pq.ntuples(guard.get()); ++r)
            {
                auto& row = rows.emplace_back();
                for (int c = 0; c < pq.nfields(guard.get()); ++c)
                    row.emplace_back(pq.getvalue(guard.get(), r, c));
            }
            return rows;
        }

        void cancel()
        {
            const auto& pq = libpq();
            if (auto* handle = pq.getCancel(_conn))
            {
                char buffer[256];
                pq.cancel(handle, buffer, sizeof buffer);
                pq.freeCancel(handle);
            }
        }

        PGconn* _conn = nullptr;
    };

} // namespace

std::unique_ptr<Connection> open_postgres(const SourceDecl& decl)
{
    return std::make_unique<PostgresConnection>(decl);
}

} // namespace claimcheck::detail
