// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/config.hpp>
#include <claimcheck/datasource.hpp>

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace claimcheck
{

class RunTrace;

enum class ParamKind
{
    String,
    Integer,
    Number,
    Boolean,
};

[[nodiscard]] std::string_view to_string(ParamKind kind);

struct ParamSpec
{
    std::string name;
    ParamKind kind = ParamKind::String;
    bool required = true;
    std::string description;

    bool operator==(const ParamSpec&) const = default;
};

struct ToolSchema
{
    std::string name;
    std::string description;
    std::vector<ParamSpec> parameters;

    /// Function declaration in chat-completions form:
    /// {"type":"function","function":{"name","description","parameters"}}.
    [[nodiscard]] nlohmann::json to_json() const;

    bool operator==(const ToolSchema&) const = default;
};

struct ToolCall
{
    std::string id;
    std::string tool;
    // Normally an object. Models occasionally send something else; invoke
    // turns that into an error outcome.
    nlohmann::json arguments = nlohmann::json::object();

    bool operator==(const ToolCall&) const = default;
};

struct ToolOutcome
{
    std::string call_id;
    std::string content;
    bool is_error = false;

    bool operator==(const ToolOutcome&) const = default;
};

/// What an invoker hands back. Exceptions thrown by invokers become error
/// outcomes carrying what().
struct ToolResult
{
    std::string content;
    bool is_error = false;
};

/// Per-invocation state threaded from the calling agent into tools. Agent
/// tools record their nested runs into the trace.
struct InvocationContext
{
    RunTrace* trace = nullptr;
};

using ToolInvoker = std::function<ToolResult(const nlohmann::json& arguments, InvocationContext& context)>;

class ToolRegistry
{
  public:
    /// Throws Error on a duplicate name or duplicate parameter names.
    void register_tool(ToolSchema schema, ToolInvoker invoker);

    [[nodiscard]] bool contains(std::string_view name) const;
    [[nodiscard]] const ToolSchema* find(std::string_view name) const;
    /// In registration order.
    [[nodiscard]] std::vector<ToolSchema> schemas() const;
    [[nodiscard]] std::vector<std::string> names() const;
    [[nodiscard]] std::size_t size() const noexcept { return _order.size(); }

    /// Never throws. Unknown tools, malformed arguments and invoker failures
    /// all come back as is_error outcomes.
    ToolOutcome invoke(const ToolCall& call, InvocationContext& context) const noexcept;
    ToolOutcome invoke(const ToolCall& call) const noexcept;

  private:
    struct Entry
    {
        ToolSchema schema;
        ToolInvoker invoker;
    };

    std::map<std::string, Entry, std::less<>> _tools;
    std::vector<std::string> _order;
};

/// Markdown pipe table with a footer: "(N rows)", or "(truncated to N rows)"
/// when the cap cut the result.
[[nodiscard]] std::string render_result(const QueryResult& result, std::size_t row_cap);

[[nodiscard]] std::string render_schema(const TableSchema& schema);

/// Schema and invoker for one declared database tool, bound to its source in
/// the pool.
[[nodiscard]] ToolSchema database_tool_schema(const ToolDecl& tool, const SourceDecl& source, std::size_t row_cap);
[[nodiscard]] ToolInvoker database_tool_invoker(const ToolDecl& tool, const SourcePool& pool, std::size_t row_cap);

/// Registers every tool in `tools` against `pool`.
[[nodiscard]] std::shared_ptr<ToolRegistry>
make_database_registry(const ToolboxConfig& config, const std::vector<ToolDecl>& tools, const SourcePool& pool,
                       std::size_t row_cap);

} // namespace claimcheck
