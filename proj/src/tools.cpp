// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/tools.hpp>

#include <algorithm>
#include <set>

namespace claimcheck
{

std::string_view to_string(ParamKind kind)
{
    switch (kind)
    {
        case ParamKind::String: return "string";
        case ParamKind::Integer: return "integer";
        case ParamKind::Number: return "number";
        case ParamKind::Boolean: return "boolean";
    }
    return "string";
}

nlohmann::json ToolSchema::to_json() const
{
    auto properties = nlohmann::json::object();
    auto required = nlohmann::json::array();
    for (const auto& p: parameters)
    {
        properties[p.name] = { { "type", to_string(p.kind) }, { "description", p.description } };
        if (p.required)
            required.push_back(p.name);
    }
    return {
        { "type", "function" },
        { "function",
          { { "name", name },
            { "description", description },
            { "parameters",
              { { "type", "object" }, { "properties", properties }, { "required", required } } } } },
    };
}

void ToolRegistry::register_tool(ToolSchema schema, ToolInvoker invoker)
{
    if (schema.name.empty())
        throw Error("tool name must not be empty");
    if (_tools.contains(schema.name))
        throw Error("duplicate tool: " + schema.name);
    auto params = std::set<std::string> {};
    for (const auto& p: schema.parameters)
        if (!params.insert(p.name).second)
            throw Error("tool " + schema.name + " declares parameter `" + p.name + "` twice");
    auto name = schema.name;
    _tools.emplace(name, Entry { std::move(schema), std::move(invoker) });
    _order.push_back(std::move(name));
}

bool ToolRegistry::contains(std::string_view name) const
{
    return _tools.find(name) != _tools.end();
}

const ToolSchema* ToolRegistry::find(std::string_view name) const
{
    auto it = _tools.find(name);
    return it == _tools.end() ? nullptr : &it->second.schema;
}

std::vector<ToolSchema> ToolRegistry::schemas() const
{
    auto out = std::vector<ToolSchema> {};
    for (const auto& name: _order)
        out.push_back(_tools.find(name)->second.schema);
    return out;
}

std::vector<std::string> ToolRegistry::names() const
{
    return _order;
}

namespace
{

    bool kind_matches(ParamKind kind, const nlohmann::json& value)
    {
        switch (kind)
        {
            case ParamKind::String: return value.is_string();
            case ParamKind::Integer: return value.is_number_integer();
            case ParamKind::Number: return value.is_number();
            case ParamKind::Boolean: return value.is_boolean();
        }
        return false;
    }

    // Returns an error message, or empty when the arguments fit the schema.
    std::string check_arguments(const ToolSchema& schema, const nlohmann::json& args, std::vector<std::string>& extra)
    {
        if (!args.is_object())
            return "arguments for tool " + schema.name + " must be a JSON object";
        for (const auto& p: schema.parameters)
        {
            auto it = args.find(p.name);
            if (it == args.end() || it->is_null())
            {
                if (p.required)
                    return "missing required parameter `" + p.name + "` for tool " + schema.name;
                continue;
            }
            if (!kind_matches(p.kind, *it))
                return "parameter `" + p.name + "` of tool " + schema.name + " must be a " + std::string(to_string(p.kind));
            if (p.required && p.kind == ParamKind::String && it->get_ref<const std::string&>().find_first_not_of(" \t\r\n") == std::string::npos)
                return "parameter `" + p.name + "` of tool " + schema.name + " must not be empty";
        }
        for (const auto& [key, _]: args.items())
        {
            auto declared = std::ranges::any_of(schema.parameters, [&](const ParamSpec& p) { return p.name == key; });
            if (!declared)
                extra.push_back(key);
        }
        return {};
    }

} // namespace

ToolOutcome ToolRegistry::invoke(const ToolCall& call, InvocationContext& context) const noexcept
{
    auto outcome = ToolOutcome { .call_id = call.id };
    try
    {
        auto it = _tools.find(call.tool);
        if (it == _tools.end())
        {
            outcome.content = "unknown tool: " + call.tool;
            outcome.is_error = true;
            return outcome;
        }
        const auto& entry = it->second;
        auto extra = std::vector<std::string> {};
        auto arguments = call.arguments.is_null() ? nlohmann::json::object() : call.arguments;
        if (auto problem = check_arguments(entry.schema, arguments, extra); !problem.empty())
        {
            outcome.content = problem;
            outcome.is_error = true;
            return outcome;
        }
        for (const auto& key: extra)
            arguments.erase(key);

        auto result = entry.invoker(arguments, context);
        outcome.content = std::move(result.content);
        outcome.is_error = result.is_error;
        if (!extra.empty())
        {
            outcome.content += "\n(note: ignored unexpected argument";
            outcome.content += extra.size() > 1 ? "s " : " ";
            for (std::size_t i = 0; i < extra.size(); ++i)
                outcome.content += (i ? ", `" : "`") + extra[i] + "`";
            outcome.content += ")";
        }
    }
    catch (const std::exception& e)
    {
        outcome.content = e.what();
        outcome.is_error = true;
    }
    catch (...)
    {
        outcome.content = "tool " + call.tool + " failed";
        outcome.is_error = true;
    }
    if (outcome.content.empty())
        outcome.content = outcome.is_error ? "tool " + call.tool + " failed" : "(empty result)";
    return outcome;
}

ToolOutcome ToolRegistry::invoke(const ToolCall& call) const noexcept
{
    auto context = InvocationContext {};
    return invoke(call, context);
}

namespace
{

    std::string cell(std::string text)
    {
        auto out = std::string {};
        for (char c: text)
        {
            if (c == '|')
                out += "\\|";
            else if (c == '\n' || c == '\r')
                out += ' ';
            else
                out += c;
        }
        return out;
    }

    std::string table_line(const std::vector<std::string>& cells)
    {
        auto out = std::string("|");
        for (const auto& c: cells)
            out += " " + cell(c) + " |";
        return out + "\n";
    }

} // namespace

std::string render_result(const QueryResult& result, std::size_t row_cap)
{
    auto out = table_line(result.columns);
    out += table_line(std::vector<std::string>(result.columns.size(), "---"));
    for (const auto& row: result.rows)
    {
        auto cells = std::vector<std::string> {};
        for (const auto& value: row)
            cells.push_back(render_value(value));
        out += table_line(cells);
    }
    if (result.truncated)
        out += "(truncated to " + std::to_string(row_cap) + " rows)";
    else if (result.rows.size() == 1)
        out += "(1 row)";
    else
        out += "(" + std::to_string(result.rows.size()) + " rows)";
    return out;
}

std::string render_schema(const TableSchema& schema)
{
    auto out = "Table `" + schema.table + "`";
    if (!schema.source.empty())
        out += " (source `" + schema.source + "`)";
    out += "\n\n";
    out += table_line({ "column", "type", "nullable", "primary key" });
    out += table_line({ "---", "---", "---", "---" });
    for (const auto& c: schema.columns)
        out += table_line({ c.name, c.declared_type.empty() ? "-" : c.declared_type, c.nullable ? "yes" : "no",
                            c.is_primary_key ? "yes" : "no" });
    out += "\nForeign keys:";
    if (schema.foreign_keys.empty())
        out += " none";
    for (const auto& fk: schema.foreign_keys)
        out += "\n- " + fk.column + " -> " + fk.referenced_table + "." + fk.referenced_column;
    return out;
}

ToolSchema database_tool_schema(const ToolDecl& tool, const SourceDecl& source, std::size_t row_cap)
{
    auto dialect = std::string(to_string(source.kind));
    if (source.param("compat") == "postgres")
        dialect += ", accepts common PostgreSQL syntax";
    switch (tool.kind)
    {
        case ToolKind::ExecuteSql:
            return { tool.name,
                     "Run one read-only SQL query (SELECT or WITH) against source `" + source.name + "` (" + dialect
                         + "). At most " + std::to_string(row_cap) + " rows are returned.",
                     { { "sql", ParamKind::String, true, "A single read-only SQL statement." } } };
        case ToolKind::ListTables:
            return { tool.name, "List the tables in source `" + source.name + "` (" + dialect + ").", {} };
        case ToolKind::DescribeTable:
            return { tool.name,
                     "Describe one table in source `" + source.name + "` (" + dialect
                         + "): columns, types, nullability, primary and foreign keys.",
                     { { "table", ParamKind::String, true, "Table name, optionally schema-qualified." } } };
    }
    throw Error("unsupported tool kind");
}

ToolInvoker database_tool_invoker(const ToolDecl& tool, const SourcePool& pool, std::size_t row_cap)
{
    auto source = tool.source;
    switch (tool.kind)
    {
        case ToolKind::ExecuteSql:
            return [&pool, source, row_cap](const nlohmann::json& args, InvocationContext&) {
                auto result = pool.handle(source).execute_sql(args.at("sql").get<std::string>(), row_cap);
                return ToolResult { render_result(result, row_cap) };
            };
        case ToolKind::ListTables:
            return [&pool, source](const nlohmann::json&, InvocationContext&) {
                auto tables = pool.handle(source).list_tables();
                if (tables.empty())
                    return ToolResult { "Source `" + source + "` has no tables." };
                auto out = "Tables in source `" + source + "`:";
                for (const auto& t: tables)
                    out += "\n- " + t;
                return ToolResult { out };
            };
        case ToolKind::DescribeTable:
            return [&pool, source](const nlohmann::json& args, InvocationContext&) {
                return ToolResult { render_schema(pool.handle(source).describe_table(args.at("table").get<std::string>())) };
            };
    }
    throw Error("unsupported tool kind");
}

std::shared_ptr<ToolRegistry> make_database_registry(const ToolboxConfig& config, const std::vector<ToolDecl>& tools,
                                                     const SourcePool& pool, std::size_t row_cap)
{
    auto registry = std::make_shared<ToolRegistry>();
    for (const auto& tool: tools)
    {
        const auto* source = config.find_source(tool.source);
        if (!source)
            throw ConfigError("tool `" + tool.name + "` references undeclared source `" + tool.source + "`", 0, 0, tool.source);
        registry->register_tool(database_tool_schema(tool, *source, row_cap), database_tool_invoker(tool, pool, row_cap));
    }
    return registry;
}

} // namespace claimcheck
