// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/agent.hpp>
#include <claimcheck/config.hpp>
#include <claimcheck/datasource.hpp>

#include <optional>
#include <string>
#include <vector>

namespace claimcheck
{

struct EvidenceQuery
{
    std::string source;
    std::string sql;
    std::optional<QueryResult> captured_result;
    // Why capture failed, when it did.
    std::string capture_error;

    bool operator==(const EvidenceQuery& other) const;
};

/// Reads every fenced block whose info line is exactly `evidence source=NAME`,
/// in document order. Other fenced blocks are skipped. Throws EvidenceError on
/// an unterminated evidence fence, a missing source tag or an empty body, and
/// ReadOnlyViolation when a body is not a single read-only statement.
[[nodiscard]] std::vector<EvidenceQuery> extract_evidence(std::string_view text);

/// The fenced block extract_evidence reads back.
[[nodiscard]] std::string evidence_block(const EvidenceQuery& query);

struct ExpertSurfaces
{
    std::vector<ToolDecl> schema;
    std::vector<ToolDecl> sql;
};

/// Toolsets named `schema` and `sql` when declared, otherwise every tool of
/// the matching kinds. Throws ConfigError when a named toolset mixes in a tool
/// of the wrong kind.
[[nodiscard]] ExpertSurfaces expert_surfaces(const ToolboxConfig& config);

inline constexpr std::string_view data_expert_tool = "data_expert";
inline constexpr std::string_view schema_expert_tool = "schema_expert";
inline constexpr std::string_view sql_expert_tool = "sql_expert";

inline constexpr std::string_view no_sources_summary = "No data sources are available.";

struct ExpertBundle
{
    AgentSpec data_expert;
    AgentSpec schema_expert;
    AgentSpec sql_expert;
    ExpertSurfaces surfaces;
    std::vector<std::string> sources;
    // The three experts wrapped as tools; the lead agent's whole surface.
    std::shared_ptr<ToolRegistry> tools;
};

/// Model, sampling, row cap and turn budget come from config.settings.
[[nodiscard]] ExpertBundle make_expert_bundle(const ToolboxConfig& config, const SourcePool& pool,
                                              std::shared_ptr<ModelProvider> provider);

[[nodiscard]] ToolSchema data_expert_schema();
[[nodiscard]] ToolSchema schema_expert_schema();
[[nodiscard]] ToolSchema sql_expert_schema();

[[nodiscard]] ToolOutcome ask_data_expert(const ExpertBundle& bundle, RunTrace* trace = nullptr);
[[nodiscard]] ToolOutcome ask_schema_expert(const ExpertBundle& bundle, const std::string& question,
                                            const std::string& context_hint, RunTrace* trace = nullptr);

struct SqlAnswer
{
    ToolOutcome outcome;
    std::vector<EvidenceQuery> evidence;
};

[[nodiscard]] SqlAnswer ask_sql_expert(const ExpertBundle& bundle, const std::string& question,
                                       const std::string& schema_info, RunTrace* trace = nullptr);

} // namespace claimcheck
