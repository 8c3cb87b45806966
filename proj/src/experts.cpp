// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/experts.hpp>
#include <claimcheck/sql.hpp>

#include <algorithm>
#include <sstream>

namespace claimcheck
{

bool EvidenceQuery::operator==(const EvidenceQuery& other) const
{
    if (source != other.source || sql != other.sql || capture_error != other.capture_error)
        return false;
    if (captured_result.has_value() != other.captured_result.has_value())
        return false;
    return !captured_result || captured_result->same_content(*other.captured_result);
}

namespace
{

std::string trim(std::string_view text)
{
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos)
        return {};
    auto end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

std::size_t fence_length(std::string_view line)
{
    auto n = std::size_t { 0 };
    while (n < line.size() && line[n] == '`')
        ++n;
    return n >= 3 ? n : 0;
}

} // namespace

std::vector<EvidenceQuery> extract_evidence(std::string_view text)
{
    auto lines = std::vector<std::string> {};
    auto in = std::istringstream(std::string(text));
    for (std::string line; std::getline(in, line);)
        lines.push_back(line);

    auto evidence = std::vector<EvidenceQuery> {};
    for (std::size_t i = 0; i < lines.size(); ++i)
    {
        auto opener = trim(lines[i]);
        auto fence = fence_length(opener);
        if (!fence)
            continue;
        auto info = trim(std::string_view(opener).substr(fence));

        auto close = i + 1;
        for (; close < lines.size(); ++close)
        {
            auto candidate = trim(lines[close]);
            if (fence_length(candidate) >= fence && candidate.find_first_not_of('`') == std::string::npos)
                break;
        }

        auto isEvidence = info == "evidence" || info.rfind("evidence ", 0) == 0;
        if (!isEvidence)
        {
            i = close;
            continue;
        }
        if (close >= lines.size())
            throw EvidenceError("unterminated evidence block opened at line " + std::to_string(i + 1));

        auto tag = trim(std::string_view(info).substr(8));
        if (tag.rfind("source=", 0) != 0 || tag.size() == 7 || tag.find_first_of(" \t") != std::string::npos)
            throw EvidenceError("evidence block at line " + std::to_string(i + 1)
                                + " needs an info line of the form `evidence source=NAME`");

        auto body = std::string {};
        for (auto j = i + 1; j < close; ++j)
            body += lines[j] + "\n";
        auto query = EvidenceQuery { tag.substr(7), trim(body) };
        if (query.sql.empty())
            throw EvidenceError("evidence block at line " + std::to_string(i + 1) + " has no SQL");
        sql::require_read_only(query.sql);
        evidence.push_back(std::move(query));
        i = close;
    }
    return evidence;
}

std::string evidence_block(const EvidenceQuery& query)
{
    return "```evidence source=" + query.source + "\n" + query.sql + "\n```";
}

ExpertSurfaces expert_surfaces(const ToolboxConfig& config)
{
    auto surfaces = ExpertSurfaces {};
    auto pick = [&](std::string_view toolset, bool wantSql) {
        auto tools = std::vector<ToolDecl> {};
        if (config.find_toolset(toolset))
        {
            tools = resolve_toolset(config, toolset);
            for (const auto& tool: tools)
                if ((tool.kind == ToolKind::ExecuteSql) != wantSql)
                    throw ConfigError("toolset `" + std::string(toolset) + "` contains " + std::string(to_string(tool.kind))
                                          + " tool `" + tool.name + "`",
                                      0, 0, tool.name);
            return tools;
        }
        for (const auto& tool: config.tools)
            if ((tool.kind == ToolKind::ExecuteSql) == wantSql)
                tools.push_back(tool);
        return tools;
    };
    surfaces.schema = pick("schema", false);
    surfaces.sql = pick("sql", true);
    return surfaces;
}

ToolSchema data_expert_schema()
{
    return { std::string(data_expert_tool),
             "Surveys every connected data source and returns a one-paragraph summary of what each contains. Takes no input.",
             {} };
}

ToolSchema schema_expert_schema()
{
    return { std::string(schema_expert_tool),
             "Answers a question about database structure: which tables and columns exist, their types and relationships.",
             { { "question", ParamKind::String, true, "The schema question in natural language." },
               { "context_hint", ParamKind::String, true,
                 "A short hint about the place, period or topic the question concerns." } } };
}

ToolSchema sql_expert_schema()
{
    return { std::string(sql_expert_tool),
             "Answers a data question by writing and running read-only SQL. Returns the answer with the SQL evidence behind it.",
             { { "question", ParamKind::String, true, "The data question in natural language." },
               { "schema_info", ParamKind::String, true,
                 "The tables, columns and value conventions the queries should use." } } };
}

namespace
{

const char* data_expert_instructions = R"(You are the Data Expert. Your job is to find out what data is available.
Use the schema tools to list the tables of every connected source and to look at the tables that matter.
Do not try to answer questions about the values in the data, and do not guess at content you have not seen.)";

const char* data_expert_contract = R"(Reply with a single paragraph of plain text and no headings, lists or tables.
Name every source and say what its tables appear to record: the subject, the kind of entities or events,
and the time span or place if the table names or columns make that clear.)";

const char* data_expert_kickoff = "Survey every available data source and summarize what it contains.";

const char* schema_expert_instructions = R"(You are the Schema Expert. You receive a question about database structure
and a context hint naming the place, period or topic it concerns. Use the schema tools to find the relevant
tables and inspect their columns. Report exact table and column names as they appear in the database.
Point out columns whose names are opaque and what they appear to hold, and mention coded values where you see them.)";

const char* schema_expert_contract = R"(Answer in concise markdown. Qualify every table with its source name and list
the relevant columns with their types. If no table in any source matches the question, say plainly that
it was not found.)";

const char* sql_expert_instructions = R"(You are the SQL Expert. You receive a question in natural language and schema
information describing the tables to use. Write SQL in the dialect of the source, run it with the execute-sql
tools and check that the results make sense before answering. Only single read-only SELECT statements are
allowed. Explore as much as you need, but keep your final answer to what the results show.)";

const char* sql_expert_contract = R"(State the answer in a few sentences, including the numbers the results show.
Then give every query the answer relies on, each in its own fenced block whose info line is exactly
`evidence source=<source name>`, for example:

```evidence source=example
SELECT count(*) FROM incidents
```

Leave out exploratory queries that the answer does not depend on.)";

std::string first_paragraph(const std::string& text)
{
    auto in = std::istringstream(text);
    auto paragraph = std::string {};
    auto more = false;
    for (std::string line; std::getline(in, line);)
    {
        if (trim(line).empty())
        {
            if (!paragraph.empty())
            {
                for (; std::getline(in, line);)
                    if (!trim(line).empty())
                        more = true;
                break;
            }
            continue;
        }
        if (!paragraph.empty())
            paragraph += "\n";
        paragraph += line;
    }
    paragraph = trim(paragraph);
    if (more)
        paragraph += "\n\n(note: truncated to the first paragraph)";
    return paragraph;
}

AgentSpec expert_spec(std::string name, const char* instructions, const char* contract,
                      const std::vector<ToolDecl>& surface, const ToolboxConfig& config, const SourcePool& pool,
                      const std::shared_ptr<ModelProvider>& provider)
{
    auto spec = AgentSpec {};
    spec.name = std::move(name);
    spec.instructions = instructions;
    spec.output_contract = contract;
    spec.tools = make_database_registry(config, surface, pool, static_cast<std::size_t>(config.settings.row_cap));
    spec.provider = provider;
    spec.model_id = config.settings.expert_model;
    spec.sampling = { config.settings.temperature, config.settings.max_output_tokens };
    spec.max_turns = config.settings.expert_max_turns;
    return spec;
}

ToolOutcome call(const ExpertBundle& bundle, std::string_view tool, nlohmann::json arguments, RunTrace* trace)
{
    auto context = InvocationContext { trace };
    return bundle.tools->invoke({ "direct", std::string(tool), std::move(arguments) }, context);
}

} // namespace

ExpertBundle make_expert_bundle(const ToolboxConfig& config, const SourcePool& pool, std::shared_ptr<ModelProvider> provider)
{
    auto bundle = ExpertBundle {};
    bundle.surfaces = expert_surfaces(config);
    for (const auto& source: config.sources)
        bundle.sources.push_back(source.name);

    bundle.data_expert = expert_spec(std::string(data_expert_tool), data_expert_instructions, data_expert_contract,
                                     bundle.surfaces.schema, config, pool, provider);
    bundle.data_expert.allow_empty_input = true;
    bundle.data_expert.kickoff = data_expert_kickoff;
    bundle.schema_expert = expert_spec(std::string(schema_expert_tool), schema_expert_instructions,
                                       schema_expert_contract, bundle.surfaces.schema, config, pool, provider);
    bundle.sql_expert = expert_spec(std::string(sql_expert_tool), sql_expert_instructions, sql_expert_contract,
                                    bundle.surfaces.sql, config, pool, provider);

    bundle.tools = std::make_shared<ToolRegistry>();

    auto dataTool = as_tool(bundle.data_expert, data_expert_schema(),
                            [](const AgentRun& run) { return ToolResult { first_paragraph(run.final_text), false }; });
    if (bundle.sources.empty())
        dataTool = [](const nlohmann::json&, InvocationContext&) {
            return ToolResult { std::string(no_sources_summary), false };
        };
    bundle.tools->register_tool(data_expert_schema(), std::move(dataTool));

    bundle.tools->register_tool(schema_expert_schema(), as_tool(bundle.schema_expert, schema_expert_schema()));

    auto sources = bundle.sources;
    bundle.tools->register_tool(
        sql_expert_schema(), as_tool(bundle.sql_expert, sql_expert_schema(), [sources](const AgentRun& run) {
            auto fail = [&](const std::string& why) {
                return ToolResult { "error: " + why + "\n\nanswer:\n" + run.final_text, true };
            };
            try
            {
                auto evidence = extract_evidence(run.final_text);
                if (evidence.empty())
                    return fail("the answer has no `evidence source=NAME` block");
                for (const auto& query: evidence)
                    if (std::find(sources.begin(), sources.end(), query.source) == sources.end())
                        return fail("evidence names unknown source `" + query.source + "`");
            }
            catch (const std::exception& e)
            {
                return fail(e.what());
            }
            return ToolResult { run.final_text, false };
        }));
    return bundle;
}

ToolOutcome ask_data_expert(const ExpertBundle& bundle, RunTrace* trace)
{
    return call(bundle, data_expert_tool, nlohmann::json::object(), trace);
}

ToolOutcome ask_schema_expert(const ExpertBundle& bundle, const std::string& question, const std::string& context_hint,
                              RunTrace* trace)
{
    return call(bundle, schema_expert_tool, { { "question", question }, { "context_hint", context_hint } }, trace);
}

SqlAnswer ask_sql_expert(const ExpertBundle& bundle, const std::string& question, const std::string& schema_info,
                         RunTrace* trace)
{
    auto answer = SqlAnswer { call(bundle, sql_expert_tool, { { "question", question }, { "schema_info", schema_info } }, trace) };
    if (!answer.outcome.is_error)
        answer.evidence = extract_evidence(answer.outcome.content);
    return answer;
}

} // namespace claimcheck
