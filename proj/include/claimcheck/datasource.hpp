// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/config.hpp>

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace claimcheck
{

/// Exact decimal rendered by the engine. Kept as text so that re-executed
/// evidence compares byte for byte.
struct Decimal
{
    std::string text;

    auto operator<=>(const Decimal&) const = default;
};

using Value = std::variant<std::monostate, bool, std::int64_t, Decimal, std::string>;
using Row = std::vector<Value>;

/// NULL, true/false, plain integers, decimal text, or the text itself. No
/// locale formatting.
[[nodiscard]] std::string render_value(const Value& value);

struct ColumnInfo
{
    std::string name;
    std::string declared_type;
    bool nullable = true;
    bool is_primary_key = false;

    bool operator==(const ColumnInfo&) const = default;
};

struct ForeignKey
{
    std::string column;
    std::string referenced_table;
    std::string referenced_column;

    bool operator==(const ForeignKey&) const = default;
};

struct TableSchema
{
    std::string source;
    std::string table;
    std::vector<ColumnInfo> columns;
    std::vector<ForeignKey> foreign_keys;

    bool operator==(const TableSchema&) const = default;
};

struct QueryResult
{
    std::vector<std::string> columns;
    std::vector<Row> rows;
    std::size_t row_count = 0;
    bool truncated = false;
    std::chrono::microseconds elapsed {};

    /// Equality over content; elapsed time is ignored.
    [[nodiscard]] bool same_content(const QueryResult& other) const;
};

struct ResultComparison
{
    bool match = false;
    std::string diff;
};

/// Order-insensitive comparison: rows are sorted canonically on both sides
/// and compared value by value, decimals by their exact text.
[[nodiscard]] ResultComparison compare_results(const QueryResult& expected, const QueryResult& actual);

/// One live session against a database. Implementations are not thread safe;
/// SourceHandle serializes access.
class Connection
{
  public:
    virtual ~Connection() = default;

    [[nodiscard]] virtual Dialect dialect() const = 0;
    virtual QueryResult query(std::string_view sql, std::size_t row_cap) = 0;
    virtual std::vector<std::string> list_tables() = 0;
    virtual TableSchema describe_table(std::string_view table) = 0;
};

/// Opens a session for the declared source in read-only mode. Secrets are
/// read from the environment variable named by `password_env`.
[[nodiscard]] std::unique_ptr<Connection> open_connection(const SourceDecl& decl);

class SourceHandle
{
  public:
    explicit SourceHandle(SourceDecl decl);

    SourceHandle(const SourceHandle&) = delete;
    SourceHandle& operator=(const SourceHandle&) = delete;

    [[nodiscard]] const SourceDecl& decl() const noexcept { return _decl; }

    /// Rejects anything but a single read-only statement before touching the
    /// connection. Engine errors surface as SqlError with the text verbatim.
    QueryResult execute_sql(std::string_view sql, std::size_t row_cap);
    std::vector<std::string> list_tables();
    TableSchema describe_table(std::string_view table);

    void close();
    [[nodiscard]] bool connected() const;

  private:
    Connection& connection();

    SourceDecl _decl;
    mutable std::mutex _mutex;
    std::unique_ptr<Connection> _connection;
    bool _closed = false;
};

/// One lazily connected handle per declared source.
class SourcePool
{
  public:
    explicit SourcePool(const std::vector<SourceDecl>& sources);

    [[nodiscard]] SourceHandle& handle(std::string_view name) const;
    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;

    void close_all();

  private:
    std::map<std::string, std::unique_ptr<SourceHandle>, std::less<>> _handles;
};

constexpr std::size_t default_row_cap = 50;

} // namespace claimcheck
