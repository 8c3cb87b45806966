// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace claimcheck
{

enum class Dialect
{
    Postgres,
    Mysql,
    Sqlite,
};

enum class ToolKind
{
    ExecuteSql,
    ListTables,
    DescribeTable,
};

[[nodiscard]] std::string_view to_string(Dialect dialect);
[[nodiscard]] std::string_view to_string(ToolKind kind);
[[nodiscard]] std::optional<Dialect> parse_dialect(std::string_view text);

struct SourceDecl
{
    std::string name;
    Dialect kind = Dialect::Sqlite;
    // host, port, database, user, password_env, path, compat ...
    std::map<std::string, std::string> connection;

    [[nodiscard]] std::string param(const std::string& key, std::string fallback = {}) const;

    bool operator==(const SourceDecl&) const = default;
};

struct ToolDecl
{
    std::string name;
    ToolKind kind = ToolKind::ExecuteSql;
    std::string source;
    // Set when the document used a dialect-prefixed kind such as
    // `postgres-execute-sql`; must agree with the bound source.
    std::optional<Dialect> declared_dialect;

    bool operator==(const ToolDecl&) const = default;
};

struct ToolsetDecl
{
    std::string name;
    std::vector<std::string> tools;

    bool operator==(const ToolsetDecl&) const = default;
};

struct Price
{
    double input_per_mtok = 0;
    double output_per_mtok = 0;

    bool operator==(const Price&) const = default;
};

/// Runtime knobs carried alongside the toolbox declarations under the
/// optional `settings:` key.
struct Settings
{
    std::string verifier_model = "gpt-5";
    std::string expert_model = "gpt-5-mini";
    int row_cap = 50;
    int evidence_row_cap = 1000;
    double temperature = 0;
    int max_output_tokens = 4096;
    int verifier_max_turns = 40;
    int expert_max_turns = 15;
    std::map<std::string, Price> pricing;

    bool operator==(const Settings&) const = default;
};

struct ToolboxConfig
{
    std::vector<SourceDecl> sources;
    std::vector<ToolDecl> tools;
    std::vector<ToolsetDecl> toolsets;
    Settings settings;

    [[nodiscard]] const SourceDecl* find_source(std::string_view name) const;
    [[nodiscard]] const ToolDecl* find_tool(std::string_view name) const;
    [[nodiscard]] const ToolsetDecl* find_toolset(std::string_view name) const;

    bool operator==(const ToolboxConfig&) const = default;
};

enum class Severity
{
    Warning,
    Error,
};

struct Diagnostic
{
    Severity severity = Severity::Error;
    std::string path;
    std::string message;
    // The offending identifier, when there is one.
    std::string subject;

    bool operator==(const Diagnostic&) const = default;
};

/// Parses a toolbox YAML document and validates it. Accepts the
/// dialect-prefixed tool kinds (`postgres-execute-sql`, ...) and indented
/// `...` elision lines as they appear in excerpted configuration fragments.
/// Throws ConfigError on YAML errors (with position), unknown kinds, and any
/// error-severity diagnostic.
[[nodiscard]] ToolboxConfig parse_config(std::string_view text);
[[nodiscard]] ToolboxConfig load_config(const std::string& path);

[[nodiscard]] std::string serialize_config(const ToolboxConfig& config);

[[nodiscard]] std::vector<Diagnostic> validate(const ToolboxConfig& config);

/// Members of the named toolset, in tool declaration order.
[[nodiscard]] std::vector<ToolDecl> resolve_toolset(const ToolboxConfig& config, std::string_view name);

[[nodiscard]] std::vector<ToolDecl> tools_of_kind(const ToolboxConfig& config, ToolKind kind);

/// Drops a tool and every toolset reference to it.
[[nodiscard]] ToolboxConfig without_tool(ToolboxConfig config, std::string_view name);

} // namespace claimcheck
