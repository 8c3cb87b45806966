// SPDX-License-Identifier: Apache-2.0
#include "backends.hpp"

#include <claimcheck/error.hpp>
#include <claimcheck/sql.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <dlfcn.h>

namespace claimcheck
{

std::string render_value(const Value& value)
{
    struct Visitor
    {
        std::string operator()(std::monostate) const { return "NULL"; }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(const Decimal& d) const { return d.text; }
        std::string operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor {}, value);
}

bool QueryResult::same_content(const QueryResult& other) const
{
    return columns == other.columns && rows == other.rows && row_count == other.row_count
           && truncated == other.truncated;
}

namespace
{

    std::string render_row(const Row& row)
    {
        auto out = std::string("(");
        for (std::size_t i = 0; i < row.size(); ++i)
        {
            if (i)
                out += ", ";
            out += render_value(row[i]);
        }
        return out + ")";
    }

    std::vector<Row> canonical(std::vector<Row> rows)
    {
        std::ranges::sort(rows);
        return rows;
    }

} // namespace

ResultComparison compare_results(const QueryResult& expected, const QueryResult& actual)
{
    auto diff = std::string {};
    if (expected.columns != actual.columns)
    {
        auto join = [](const std::vector<std::string>& names) {
            auto out = std::string {};
            for (const auto& n: names)
                out += (out.empty() ? "" : ", ") + n;
            return out;
        };
        return { false, "columns differ: [" + join(expected.columns) + "] vs [" + join(actual.columns) + "]" };
    }

    auto left = canonical(expected.rows);
    auto right = canonical(actual.rows);
    if (left == right && expected.truncated == actual.truncated)
        return { true, {} };

    auto onlyExpected = std::vector<Row> {};
    auto onlyActual = std::vector<Row> {};
    std::ranges::set_difference(left, right, std::back_inserter(onlyExpected));
    std::ranges::set_difference(right, left, std::back_inserter(onlyActual));

    diff = "row count " + std::to_string(expected.rows.size()) + " vs " + std::to_string(actual.rows.size());
    if (expected.truncated != actual.truncated)
        diff += "; truncation differs";
    constexpr std::size_t shown = 5;
    auto describe = [&](const char* label, const std::vector<Row>& rows) {
        if (rows.empty())
            return;
        diff += std::string("; ") + label + ":";
        for (std::size_t i = 0; i < std::min(rows.size(), shown); ++i)
            diff += " " + render_row(rows[i]);
        if (rows.size() > shown)
            diff += " ... (" + std::to_string(rows.size() - shown) + " more)";
    };
    describe("only in captured", onlyExpected);
    describe("only in current", onlyActual);
    return { false, diff };
}

std::unique_ptr<Connection> open_connection(const SourceDecl& decl)
{
    switch (decl.kind)
    {
        case Dialect::Sqlite: return detail::open_sqlite(decl);
        case Dialect::Postgres: return detail::open_postgres(decl);
        case Dialect::Mysql: return detail::open_mysql(decl);
    }
    throw ConnectionError("unsupported dialect");
}

SourceHandle::SourceHandle(SourceDecl decl): _decl(std::move(decl))
{
}

Connection& SourceHandle::connection()
{
    if (_closed)
        throw ConnectionError("connection to source `" + _decl.name + "` is closed");
    if (!_connection)
        _connection = open_connection(_decl);
    return *_connection;
}

QueryResult SourceHandle::execute_sql(std::string_view sql, std::size_t row_cap)
{
    if (row_cap == 0)
        throw Error("row cap must be positive");
    sql::require_read_only(sql);

    auto lock = std::scoped_lock(_mutex);
    auto start = std::chrono::steady_clock::now();
    auto result = connection().query(sql, row_cap);
    result.elapsed = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
    return result;
}

std::vector<std::string> SourceHandle::list_tables()
{
    auto lock = std::scoped_lock(_mutex);
    auto tables = connection().list_tables();
    std::ranges::sort(tables);
    return tables;
}

TableSchema SourceHandle::describe_table(std::string_view table)
{
    auto lock = std::scoped_lock(_mutex);
    auto schema = connection().describe_table(table);
    schema.source = _decl.name;
    return schema;
}

void SourceHandle::close()
{
    auto lock = std::scoped_lock(_mutex);
    _connection.reset();
    _closed = true;
}

bool SourceHandle::connected() const
{
    auto lock = std::scoped_lock(_mutex);
    return _connection != nullptr;
}

SourcePool::SourcePool(const std::vector<SourceDecl>& sources)
{
    for (const auto& decl: sources)
        _handles.emplace(decl.name, std::make_unique<SourceHandle>(decl));
}

SourceHandle& SourcePool::handle(std::string_view name) const
{
    auto it = _handles.find(name);
    if (it == _handles.end())
        throw ConnectionError("unknown source: " + std::string(name));
    return *it->second;
}

bool SourcePool::contains(std::string_view name) const
{
    return _handles.find(name) != _handles.end();
}

std::vector<std::string> SourcePool::names() const
{
    auto out = std::vector<std::string> {};
    for (const auto& [name, _]: _handles)
        out.push_back(name);
    return out;
}

void SourcePool::close_all()
{
    for (auto& [_, handle]: _handles)
        handle->close();
}

namespace detail
{

    std::string secret_from_env(const SourceDecl& decl)
    {
        auto variable = decl.param("password_env");
        if (variable.empty())
            return {};
        const char* value = std::getenv(variable.c_str());
        if (!value)
            throw ConnectionError("source `" + decl.name + "`: environment variable " + variable + " is not set");
        return value;
    }

    std::string format_double(double value)
    {
        char buffer[64];
        auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
        if (ec != std::errc {})
            return std::to_string(value);
        return std::string(buffer, end);
    }

    std::pair<std::string, std::string> split_qualified(std::string_view table)
    {
        auto unquote = [](std::string_view part) {
            if (part.size() >= 2 && (part.front() == '"' || part.front() == '`') && part.back() == part.front())
                part = part.substr(1, part.size() - 2);
            return std::string(part);
        };
        auto dot = table.find('.');
        if (dot == std::string_view::npos)
            return { {}, unquote(table) };
        return { unquote(table.substr(0, dot)), unquote(table.substr(dot + 1)) };
    }

    SharedLibrary::SharedLibrary(std::initializer_list<const char*> candidates, const char* envOverride)
    {
        if (const char* overridePath = envOverride ? std::getenv(envOverride) : nullptr)
        {
            _handle = dlopen(overridePath, RTLD_NOW | RTLD_LOCAL);
            if (!_handle)
                _error = dlerror();
            return;
        }
        for (const char* name: candidates)
        {
            _handle = dlopen(name, RTLD_NOW | RTLD_LOCAL);
            if (_handle)
                return;
            _error = dlerror();
        }
    }

    SharedLibrary::~SharedLibrary()
    {
        if (_handle)
            dlclose(_handle);
    }

    void* SharedLibrary::raw_symbol(const char* name) const
    {
        void* sym = _handle ? dlsym(_handle, name) : nullptr;
        if (!sym)
            throw ConnectionError(std::string("client library is missing symbol ") + name);
        return sym;
    }

} // namespace detail

} // namespace claimcheck
