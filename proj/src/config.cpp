// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/config.hpp>
#include <claimcheck/error.hpp>

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace claimcheck
{

ConfigError::ConfigError(std::string message, int line, int column, std::string identifier):
    Error(line > 0 ? message + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                   : message),
    _line(line),
    _column(column),
    _identifier(std::move(identifier))
{
}

std::string_view to_string(Dialect dialect)
{
    switch (dialect)
    {
        case Dialect::Postgres: return "postgres";
        case Dialect::Mysql: return "mysql";
        case Dialect::Sqlite: return "sqlite";
    }
    return "?";
}

std::string_view to_string(ToolKind kind)
{
    switch (kind)
    {
        case ToolKind::ExecuteSql: return "execute-sql";
        case ToolKind::ListTables: return "list-tables";
        case ToolKind::DescribeTable: return "describe-table";
    }
    return "?";
}

std::optional<Dialect> parse_dialect(std::string_view text)
{
    if (text == "postgres" || text == "postgresql")
        return Dialect::Postgres;
    if (text == "mysql")
        return Dialect::Mysql;
    if (text == "sqlite")
        return Dialect::Sqlite;
    return std::nullopt;
}

std::string SourceDecl::param(const std::string& key, std::string fallback) const
{
    auto it = connection.find(key);
    return it == connection.end() ? fallback : it->second;
}

const SourceDecl* ToolboxConfig::find_source(std::string_view name) const
{
    auto it = std::ranges::find(sources, name, &SourceDecl::name);
    return it == sources.end() ? nullptr : &*it;
}

const ToolDecl* ToolboxConfig::find_tool(std::string_view name) const
{
    auto it = std::ranges::find(tools, name, &ToolDecl::name);
    return it == tools.end() ? nullptr : &*it;
}

const ToolsetDecl* ToolboxConfig::find_toolset(std::string_view name) const
{
    auto it = std::ranges::find(toolsets, name, &ToolsetDecl::name);
    return it == toolsets.end() ? nullptr : &*it;
}

namespace
{

    struct ParsedKind
    {
        ToolKind kind;
        std::optional<Dialect> dialect;
    };

    std::optional<ToolKind> parse_tool_kind(std::string_view text)
    {
        if (text == "execute-sql")
            return ToolKind::ExecuteSql;
        if (text == "list-tables")
            return ToolKind::ListTables;
        if (text == "describe-table")
            return ToolKind::DescribeTable;
        return std::nullopt;
    }

    std::optional<ParsedKind> parse_kind_string(std::string_view text)
    {
        if (auto kind = parse_tool_kind(text))
            return ParsedKind { *kind, std::nullopt };
        auto dash = text.find('-');
        if (dash == std::string_view::npos)
            return std::nullopt;
        auto dialect = parse_dialect(text.substr(0, dash));
        auto kind = parse_tool_kind(text.substr(dash + 1));
        if (!dialect || !kind)
            return std::nullopt;
        return ParsedKind { *kind, dialect };
    }

    std::string kind_string(const ToolDecl& tool)
    {
        auto base = std::string(to_string(tool.kind));
        if (tool.declared_dialect)
            return std::string(to_string(*tool.declared_dialect)) + "-" + base;
        return base;
    }

    // Excerpted fragments elide entries with an indented `...` line. At
    // column 0 `...` is the YAML document-end marker and is left alone.
    std::string strip_elisions(std::string_view text)
    {
        auto out = std::string {};
        out.reserve(text.size());
        auto stream = std::istringstream(std::string(text));
        auto line = std::string {};
        while (std::getline(stream, line))
        {
            auto content = std::string_view(line);
            if (auto hash = content.find('#'); hash != std::string_view::npos)
                content = content.substr(0, hash);
            auto first = content.find_first_not_of(" \t");
            auto last = content.find_last_not_of(" \t\r");
            if (first != std::string_view::npos && first > 0
                && content.substr(first, last - first + 1) == "...")
                line.clear();
            out += line;
            out += '\n';
        }
        return out;
    }

    ConfigError error_at(const YAML::Node& node, const std::string& message, std::string identifier = {})
    {
        auto mark = node.Mark();
        if (mark.is_null())
            return ConfigError(message, 0, 0, std::move(identifier));
        return ConfigError(message, mark.line + 1, mark.column + 1, std::move(identifier));
    }

    std::string scalar(const YAML::Node& node, const std::string& what)
    {
        if (!node.IsScalar())
            throw error_at(node, what + " must be a scalar");
        return node.Scalar();
    }

    struct Marks
    {
        std::map<std::string, YAML::Mark> byPath;

        void note(const std::string& path, const YAML::Node& node) { byPath.emplace(path, node.Mark()); }

        [[nodiscard]] std::pair<int, int> find(const std::string& path) const
        {
            // Longest recorded prefix of the diagnostic path.
            auto best = std::pair { 0, 0 };
            auto bestLen = std::size_t { 0 };
            for (const auto& [p, mark]: byPath)
                if (path.starts_with(p) && p.size() >= bestLen && !mark.is_null())
                {
                    best = { mark.line + 1, mark.column + 1 };
                    bestLen = p.size();
                }
            return best;
        }
    };

    void parse_sources(const YAML::Node& node, ToolboxConfig& config, Marks& marks)
    {
        if (node.IsNull())
            return;
        if (!node.IsMap())
            throw error_at(node, "`sources` must be a mapping of source names");
        auto seen = std::set<std::string> {};
        for (const auto& entry: node)
        {
            auto name = scalar(entry.first, "source name");
            if (!seen.insert(name).second)
                throw error_at(entry.first, "duplicate source name `" + name + "`", name);
            marks.note("sources." + name, entry.first);
            const auto& body = entry.second;
            if (!body.IsMap())
                throw error_at(body, "source `" + name + "` must be a mapping", name);
            auto decl = SourceDecl { .name = name };
            auto haveKind = false;
            for (const auto& field: body)
            {
                auto key = scalar(field.first, "source field");
                auto value = field.second.IsNull() ? std::string {} : scalar(field.second, key);
                if (key == "kind")
                {
                    auto dialect = parse_dialect(value);
                    if (!dialect)
                        throw error_at(field.second, "unknown source kind `" + value + "`", value);
                    decl.kind = *dialect;
                    haveKind = true;
                }
                else
                {
                    decl.connection[key] = value;
                }
            }
            if (!haveKind)
                throw error_at(body, "source `" + name + "` is missing `kind`", name);
            config.sources.push_back(std::move(decl));
        }
    }

    void parse_tools(const YAML::Node& node, ToolboxConfig& config, Marks& marks)
    {
        if (node.IsNull())
            return;
        if (!node.IsMap())
            throw error_at(node, "`tools` must be a mapping of tool names");
        auto seen = std::set<std::string> {};
        for (const auto& entry: node)
        {
            auto name = scalar(entry.first, "tool name");
            if (!seen.insert(name).second)
                throw error_at(entry.first, "duplicate tool name `" + name + "`", name);
            marks.note("tools." + name, entry.first);
            const auto& body = entry.second;
            if (!body.IsMap())
                throw error_at(body, "tool `" + name + "` must be a mapping", name);
            auto decl = ToolDecl { .name = name };
            auto haveKind = false;
            for (const auto& field: body)
            {
                auto key = scalar(field.first, "tool field");
                if (key == "kind")
                {
                    auto text = scalar(field.second, "kind");
                    auto parsed = parse_kind_string(text);
                    if (!parsed)
                        throw error_at(field.second, "unknown tool kind `" + text + "`", text);
                    decl.kind = parsed->kind;
                    decl.declared_dialect = parsed->dialect;
                    haveKind = true;
                }
                else if (key == "source")
                {
                    decl.source = scalar(field.second, "source");
                    marks.note("tools." + name + ".source", field.second);
                }
                else if (key != "description")
                {
                    throw error_at(field.first, "unexpected field `" + key + "` in tool `" + name + "`", key);
                }
            }
            if (!haveKind)
                throw error_at(body, "tool `" + name + "` is missing `kind`", name);
            config.tools.push_back(std::move(decl));
        }
    }

    void parse_toolsets(const YAML::Node& node, ToolboxConfig& config, Marks& marks)
    {
        if (node.IsNull())
            return;
        if (!node.IsMap())
            throw error_at(node, "`toolsets` must be a mapping of toolset names");
        auto seen = std::set<std::string> {};
        for (const auto& entry: node)
        {
            auto name = scalar(entry.first, "toolset name");
            if (!seen.insert(name).second)
                throw error_at(entry.first, "duplicate toolset name `" + name + "`", name);
            marks.note("toolsets." + name, entry.first);
            auto decl = ToolsetDecl { .name = name };
            const auto& body = entry.second;
            if (!body.IsNull())
            {
                if (!body.IsSequence())
                    throw error_at(body, "toolset `" + name + "` must be a list of tool names", name);
                for (std::size_t i = 0; i < body.size(); ++i)
                {
                    marks.note("toolsets." + name + "[" + std::to_string(i) + "]", body[i]);
                    decl.tools.push_back(scalar(body[i], "tool name"));
                }
            }
            config.toolsets.push_back(std::move(decl));
        }
    }

    template <typename T>
    T as(const YAML::Node& node, const std::string& key)
    {
        try
        {
            return node.as<T>();
        }
        catch (const YAML::Exception&)
        {
            throw error_at(node, "invalid value for setting `" + key + "`", key);
        }
    }

    void parse_settings(const YAML::Node& node, Settings& settings)
    {
        if (node.IsNull())
            return;
        if (!node.IsMap())
            throw error_at(node, "`settings` must be a mapping");
        for (const auto& field: node)
        {
            auto key = scalar(field.first, "setting");
            const auto& value = field.second;
            if (key == "verifier_model")
                settings.verifier_model = scalar(value, key);
            else if (key == "expert_model")
                settings.expert_model = scalar(value, key);
            else if (key == "row_cap")
                settings.row_cap = as<int>(value, key);
            else if (key == "evidence_row_cap")
                settings.evidence_row_cap = as<int>(value, key);
            else if (key == "temperature")
                settings.temperature = as<double>(value, key);
            else if (key == "max_output_tokens")
                settings.max_output_tokens = as<int>(value, key);
            else if (key == "verifier_max_turns")
                settings.verifier_max_turns = as<int>(value, key);
            else if (key == "expert_max_turns")
                settings.expert_max_turns = as<int>(value, key);
            else if (key == "pricing")
            {
                if (!value.IsMap())
                    throw error_at(value, "`pricing` must map model ids to prices");
                for (const auto& model: value)
                {
                    auto price = Price {};
                    if (auto in = model.second["input_per_mtok"])
                        price.input_per_mtok = as<double>(in, "input_per_mtok");
                    if (auto out = model.second["output_per_mtok"])
                        price.output_per_mtok = as<double>(out, "output_per_mtok");
                    settings.pricing[scalar(model.first, "model id")] = price;
                }
            }
            else
                throw error_at(field.first, "unknown setting `" + key + "`", key);
        }
    }

} // namespace

ToolboxConfig parse_config(std::string_view text)
{
    auto root = YAML::Node {};
    try
    {
        root = YAML::Load(strip_elisions(text));
    }
    catch (const YAML::ParserException& e)
    {
        throw ConfigError("YAML parse error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
    }

    auto config = ToolboxConfig {};
    auto marks = Marks {};
    if (!root || root.IsNull())
        return config;
    if (!root.IsMap())
        throw error_at(root, "configuration must be a mapping with `sources`, `tools`, `toolsets`");

    try
    {
        for (const auto& entry: root)
        {
            auto key = scalar(entry.first, "top-level key");
            if (key == "sources")
                parse_sources(entry.second, config, marks);
            else if (key == "tools")
                parse_tools(entry.second, config, marks);
            else if (key == "toolsets")
                parse_toolsets(entry.second, config, marks);
            else if (key == "settings")
                parse_settings(entry.second, config.settings);
            else
                throw error_at(entry.first, "unknown top-level key `" + key + "`", key);
        }
    }
    catch (const YAML::Exception& e)
    {
        throw ConfigError("invalid configuration: " + e.msg, e.mark.line + 1, e.mark.column + 1);
    }

    for (const auto& diagnostic: validate(config))
    {
        if (diagnostic.severity != Severity::Error)
            continue;
        auto [line, column] = marks.find(diagnostic.path);
        throw ConfigError(diagnostic.path + ": " + diagnostic.message, line, column, diagnostic.subject);
    }
    return config;
}

ToolboxConfig load_config(const std::string& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw ConfigError("cannot read config file " + path);
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string serialize_config(const ToolboxConfig& config)
{
    auto out = YAML::Emitter {};
    out << YAML::BeginMap;

    out << YAML::Key << "sources" << YAML::Value << YAML::BeginMap;
    for (const auto& source: config.sources)
    {
        out << YAML::Key << source.name << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "kind" << YAML::Value << std::string(to_string(source.kind));
        for (const auto& [key, value]: source.connection)
            out << YAML::Key << key << YAML::Value << YAML::DoubleQuoted << value;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "tools" << YAML::Value << YAML::BeginMap;
    for (const auto& tool: config.tools)
    {
        out << YAML::Key << tool.name << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "kind" << YAML::Value << kind_string(tool);
        out << YAML::Key << "source" << YAML::Value << tool.source;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "toolsets" << YAML::Value << YAML::BeginMap;
    for (const auto& toolset: config.toolsets)
    {
        out << YAML::Key << toolset.name << YAML::Value << YAML::BeginSeq;
        for (const auto& tool: toolset.tools)
            out << tool;
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;

    const auto defaults = Settings {};
    const auto& s = config.settings;
    if (s != defaults)
    {
        out << YAML::Key << "settings" << YAML::Value << YAML::BeginMap;
        if (s.verifier_model != defaults.verifier_model)
            out << YAML::Key << "verifier_model" << YAML::Value << s.verifier_model;
        if (s.expert_model != defaults.expert_model)
            out << YAML::Key << "expert_model" << YAML::Value << s.expert_model;
        if (s.row_cap != defaults.row_cap)
            out << YAML::Key << "row_cap" << YAML::Value << s.row_cap;
        if (s.evidence_row_cap != defaults.evidence_row_cap)
            out << YAML::Key << "evidence_row_cap" << YAML::Value << s.evidence_row_cap;
        if (s.temperature != defaults.temperature)
            out << YAML::Key << "temperature" << YAML::Value << s.temperature;
        if (s.max_output_tokens != defaults.max_output_tokens)
            out << YAML::Key << "max_output_tokens" << YAML::Value << s.max_output_tokens;
        if (s.verifier_max_turns != defaults.verifier_max_turns)
            out << YAML::Key << "verifier_max_turns" << YAML::Value << s.verifier_max_turns;
        if (s.expert_max_turns != defaults.expert_max_turns)
            out << YAML::Key << "expert_max_turns" << YAML::Value << s.expert_max_turns;
        if (!s.pricing.empty())
        {
            out << YAML::Key << "pricing" << YAML::Value << YAML::BeginMap;
            for (const auto& [model, price]: s.pricing)
            {
                out << YAML::Key << model << YAML::Value << YAML::BeginMap;
                out << YAML::Key << "input_per_mtok" << YAML::Value << price.input_per_mtok;
                out << YAML::Key << "output_per_mtok" << YAML::Value << price.output_per_mtok;
                out << YAML::EndMap;
            }
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
    }

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::vector<Diagnostic> validate(const ToolboxConfig& config)
{
    auto diagnostics = std::vector<Diagnostic> {};
    auto error = [&](std::string path, std::string message, std::string subject = {}) {
        diagnostics.push_back({ Severity::Error, std::move(path), std::move(message), std::move(subject) });
    };

    auto sourceNames = std::set<std::string> {};
    for (const auto& source: config.sources)
    {
        auto path = "sources." + source.name;
        if (source.name.empty())
            error("sources", "source name must not be empty");
        else if (!sourceNames.insert(source.name).second)
            error(path, "duplicate source name `" + source.name + "`", source.name);

        for (const auto* secret: { "password", "secret", "api_key", "token" })
            if (source.connection.contains(secret))
                error(path + "." + secret,
                      "inline secret in source `" + source.name + "`; reference an environment variable via "
                          + secret + "_env",
                      source.name);

        if (source.kind == Dialect::Sqlite)
        {
            if (source.param("path").empty())
                error(path, "sqlite source `" + source.name + "` requires a `path`", source.name);
        }
        else
        {
            for (const auto* key: { "host", "database" })
                if (source.param(key).empty())
                    error(path,
                          std::string(to_string(source.kind)) + " source `" + source.name + "` requires `" + key
                              + "`",
                          source.name);
        }
        if (auto compat = source.param("compat"); !compat.empty())
        {
            if (compat != "postgres" || source.kind != Dialect::Sqlite)
                error(path + ".compat", "unsupported compat mode `" + compat + "`", compat);
        }
    }

    auto toolNames = std::set<std::string> {};
    for (const auto& tool: config.tools)
    {
        auto path = "tools." + tool.name;
        if (tool.name.empty())
            error("tools", "tool name must not be empty");
        else if (!toolNames.insert(tool.name).second)
            error(path, "duplicate tool name `" + tool.name + "`", tool.name);

        const auto* source = config.find_source(tool.source);
        if (!source)
            error(path + ".source",
                  "tool `" + tool.name + "` references undeclared source `" + tool.source + "`", tool.source);
        else if (tool.declared_dialect && *tool.declared_dialect != source->kind)
            error(path + ".kind",
                  "tool kind " + kind_string(tool) + " does not match " + std::string(to_string(source->kind))
                      + " source `" + source->name + "`",
                  tool.name);
    }

    auto toolsetNames = std::set<std::string> {};
    for (const auto& toolset: config.toolsets)
    {
        auto path = "toolsets." + toolset.name;
        if (!toolsetNames.insert(toolset.name).second)
            error(path, "duplicate toolset name `" + toolset.name + "`", toolset.name);
        if (toolset.tools.empty())
            diagnostics.push_back({ Severity::Warning, path, "toolset `" + toolset.name + "` is empty", toolset.name });

        auto members = std::set<std::string> {};
        for (std::size_t i = 0; i < toolset.tools.size(); ++i)
        {
            const auto& tool = toolset.tools[i];
            auto itemPath = path + "[" + std::to_string(i) + "]";
            if (!config.find_tool(tool))
                error(itemPath, "toolset `" + toolset.name + "` references undeclared tool `" + tool + "`", tool);
            if (!members.insert(tool).second)
                error(itemPath, "toolset `" + toolset.name + "` lists tool `" + tool + "` twice", tool);
        }
    }

    const auto& s = config.settings;
    if (s.row_cap < 1)
        error("settings.row_cap", "row_cap must be positive");
    if (s.evidence_row_cap < 1)
        error("settings.evidence_row_cap", "evidence_row_cap must be positive");
    if (s.verifier_max_turns < 1 || s.expert_max_turns < 1)
        error("settings", "max turns must be at least 1");
    if (s.max_output_tokens < 1)
        error("settings.max_output_tokens", "max_output_tokens must be positive");

    return diagnostics;
}

std::vector<ToolDecl> resolve_toolset(const ToolboxConfig& config, std::string_view name)
{
    const auto* toolset = config.find_toolset(name);
    if (!toolset)
        throw ConfigError("unknown toolset `" + std::string(name) + "`", 0, 0, std::string(name));

    auto members = std::set<std::string>(toolset->tools.begin(), toolset->tools.end());
    auto result = std::vector<ToolDecl> {};
    for (const auto& tool: config.tools)
        if (members.contains(tool.name))
            result.push_back(tool);
    return result;
}

std::vector<ToolDecl> tools_of_kind(const ToolboxConfig& config, ToolKind kind)
{
    auto result = std::vector<ToolDecl> {};
    std::ranges::copy_if(config.tools, std::back_inserter(result), [&](const auto& t) { return t.kind == kind; });
    return result;
}

ToolboxConfig without_tool(ToolboxConfig config, std::string_view name)
{
    std::erase_if(config.tools, [&](const auto& t) { return t.name == name; });
    for (auto& toolset: config.toolsets)
        std::erase(toolset.tools, std::string(name));
    return config;
}

} // namespace claimcheck
