// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/error.hpp>
#include <claimcheck/sql.hpp>
#include <claimcheck/verifier.hpp>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace claimcheck
{

namespace
{

constexpr Verdict all_verdicts[] = { Verdict::Verified, Verdict::PartlyVerified, Verdict::PartlyInaccurate,
                                     Verdict::Inaccurate };

std::string trim(std::string_view text)
{
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos)
        return {};
    auto end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

std::string lower(std::string_view text)
{
    auto out = std::string(text);
    for (auto& c: out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Drops markdown emphasis, heading marks and blockquote markers around a line.
std::string strip_markup(std::string_view line)
{
    auto out = std::string {};
    for (char c: line)
        if (c != '*' && c != '_' && c != '`')
            out += c;
    out = trim(out);
    while (!out.empty() && (out.front() == '#' || out.front() == '>'))
        out.erase(0, 1);
    return trim(out);
}

std::vector<std::string> split_lines(std::string_view text)
{
    auto lines = std::vector<std::string> {};
    auto in = std::istringstream(std::string(text));
    for (std::string line; std::getline(in, line);)
    {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

bool is_fence(std::string_view line)
{
    auto t = trim(line);
    return t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
}

// "Verdict: X" → "X", or nullopt when the line is something else.
std::optional<std::string> verdict_label(std::string_view line)
{
    auto text = strip_markup(line);
    if (lower(text).rfind("verdict", 0) != 0)
        return std::nullopt;
    auto rest = trim(std::string_view(text).substr(7));
    if (rest.empty() || rest.front() != ':')
        return std::nullopt;
    auto label = trim(std::string_view(rest).substr(1));
    while (!label.empty() && (label.back() == '.' || label.back() == '!'))
        label.pop_back();
    if (label.empty())
        return std::nullopt;
    return label;
}

enum class Section
{
    None,
    Findings,
    Conclusion,
    Assumptions,
    Verdict,
    Evidence,
    Flags,
    Other,
};

std::optional<Section> heading(std::string_view line)
{
    auto t = trim(line);
    if (t.empty())
        return std::nullopt;
    auto marked = t.front() == '#' || (t.size() > 4 && t.rfind("**", 0) == 0 && t.substr(t.size() - 2) == "**");
    auto name = lower(strip_markup(t));
    while (!name.empty() && name.back() == ':')
    {
        name.pop_back();
        marked = true;
    }
    name = trim(name);
    if (!marked || name.find(':') != std::string::npos)
        return std::nullopt;
    if (name == "findings" || name == "key findings")
        return Section::Findings;
    if (name == "conclusion")
        return Section::Conclusion;
    if (name == "assumptions" || name == "assumptions and notes" || name == "notes")
        return Section::Assumptions;
    if (name == "verdict")
        return Section::Verdict;
    if (name == "evidence")
        return Section::Evidence;
    if (name == "flags")
        return Section::Flags;
    return t.front() == '#' ? std::optional(Section::Other) : std::nullopt;
}

// "- x", "* x", "+ x", "1. x", "1) x" → "x".
std::optional<std::string> bullet(std::string_view line)
{
    auto t = trim(line);
    if (t.size() >= 2 && (t[0] == '-' || t[0] == '*' || t[0] == '+') && t[1] == ' ')
        return trim(std::string_view(t).substr(2));
    auto digits = t.find_first_not_of("0123456789");
    if (digits != std::string::npos && digits > 0 && digits + 1 < t.size() && (t[digits] == '.' || t[digits] == ')')
        && t[digits + 1] == ' ')
        return trim(std::string_view(t).substr(digits + 2));
    return std::nullopt;
}

void add_list_line(std::vector<std::string>& items, const std::string& line)
{
    if (auto item = bullet(line))
        items.push_back(*item);
    else if (items.empty())
        items.push_back(trim(line));
    else
        items.back() += " " + trim(line);
}

nlohmann::json value_to_json(const Value& value)
{
    return std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return nullptr;
            else if constexpr (std::is_same_v<T, Decimal>)
                return { { "$decimal", v.text } };
            else
                return v;
        },
        value);
}

Value value_from_json(const nlohmann::json& json)
{
    if (json.is_null())
        return std::monostate {};
    if (json.is_boolean())
        return json.get<bool>();
    if (json.is_number_integer())
        return json.get<std::int64_t>();
    if (json.is_object() && json.contains("$decimal"))
        return Decimal { json["$decimal"].get<std::string>() };
    if (json.is_string())
        return json.get<std::string>();
    throw Error("unsupported value in report: " + json.dump());
}

nlohmann::json result_to_json(const QueryResult& result)
{
    auto rows = nlohmann::json::array();
    for (const auto& row: result.rows)
    {
        auto cells = nlohmann::json::array();
        for (const auto& value: row)
            cells.push_back(value_to_json(value));
        rows.push_back(std::move(cells));
    }
    return { { "columns", result.columns }, { "rows", std::move(rows) }, { "row_count", result.row_count },
             { "truncated", result.truncated } };
}

QueryResult result_from_json(const nlohmann::json& json)
{
    auto result = QueryResult {};
    result.columns = json.at("columns").get<std::vector<std::string>>();
    for (const auto& cells: json.at("rows"))
    {
        auto row = Row {};
        for (const auto& cell: cells)
            row.push_back(value_from_json(cell));
        result.rows.push_back(std::move(row));
    }
    result.row_count = json.at("row_count").get<std::size_t>();
    result.truncated = json.at("truncated").get<bool>();
    return result;
}

const char* verifier_instructions = R"(You are the Verifier. You decide whether a claim is supported by the connected
data sources. You never see the data yourself. You work through three experts that are available to you as tools:

- data_expert tells you what data is available. Start by asking it.
- schema_expert answers questions about tables and columns. Always give it a short context hint.
- sql_expert answers data questions with SQL evidence. Pass it the table and column details it needs.

Break the claim into the parts that can be checked against the data and consult the experts until every
part is settled. Be precise about the periods, places and categories the claim refers to. When the claim is
vague, choose the most reasonable reading and say which one you chose.)";

const char* verifier_contract = R"(Write the report in markdown with these sections, in this order:

## Findings
One bullet per checked part of the claim, with the numbers found.

## Conclusion
A short paragraph.

## Assumptions and notes
One bullet per interpretation or caveat. Leave the section out when there are none.

## Evidence
Every query the findings rely on, copied from the SQL Expert's answers, each in a fenced block whose info
line is exactly `evidence source=<source name>`.

Finish with a single line `Verdict: <label>` where the label is one of Verified, Partly Verified,
Partly Inaccurate or Inaccurate. Use Verified when every part of the claim holds, Partly Verified when the
main point holds but a detail does not, Partly Inaccurate when the main point fails but a detail holds,
and Inaccurate when the claim conflicts with the data.)";

std::string correction(const std::string& problem)
{
    return "Your answer could not be accepted: " + problem
           + ". Restate the complete report and end it with exactly one line `Verdict: <label>`, where the label is "
             "one of Verified, Partly Verified, Partly Inaccurate or Inaccurate.";
}

} // namespace

std::string_view to_string(Verdict verdict)
{
    switch (verdict)
    {
        case Verdict::Verified: return "Verified";
        case Verdict::PartlyVerified: return "Partly Verified";
        case Verdict::PartlyInaccurate: return "Partly Inaccurate";
        case Verdict::Inaccurate: return "Inaccurate";
    }
    return "Inaccurate";
}

std::optional<Verdict> verdict_from_label(std::string_view label)
{
    auto wanted = lower(trim(label));
    for (auto v: all_verdicts)
        if (lower(to_string(v)) == wanted)
            return v;
    return std::nullopt;
}

Verdict parse_verdict(std::string_view text)
{
    auto found = std::vector<std::pair<Verdict, std::string>> {};
    auto inFence = false;
    for (const auto& line: split_lines(text))
    {
        if (is_fence(line))
        {
            inFence = !inFence;
            continue;
        }
        if (inFence)
            continue;
        auto label = verdict_label(line);
        if (!label)
            continue;
        auto verdict = verdict_from_label(*label);
        if (!verdict)
            throw VerdictParseError("unknown verdict label \"" + *label
                                    + "\"; allowed labels are Verified, Partly Verified, Partly Inaccurate, Inaccurate");
        found.emplace_back(*verdict, *label);
    }
    if (found.empty())
        throw VerdictParseError("no `Verdict: <label>` line found");
    for (const auto& [verdict, label]: found)
        if (verdict != found.front().first)
            throw VerdictParseError("conflicting verdict lines: \"" + found.front().second + "\" and \"" + label + "\"");
    return found.front().first;
}

ReportSections parse_sections(std::string_view text)
{
    auto sections = ReportSections {};
    auto current = Section::None;
    auto conclusion = std::vector<std::string> {};
    auto inFence = false;
    for (const auto& line: split_lines(text))
    {
        if (is_fence(line))
            inFence = !inFence;
        if (inFence || is_fence(line))
            continue;
        if (auto next = heading(line))
        {
            current = *next;
            continue;
        }
        if (verdict_label(line) || trim(line).empty())
        {
            if (current == Section::Conclusion && !conclusion.empty())
                conclusion.emplace_back();
            continue;
        }
        switch (current)
        {
            case Section::Findings: add_list_line(sections.findings, line); break;
            case Section::Assumptions: add_list_line(sections.assumptions, line); break;
            case Section::Conclusion: conclusion.push_back(trim(line)); break;
            default: break;
        }
    }
    while (!conclusion.empty() && conclusion.back().empty())
        conclusion.pop_back();
    for (std::size_t i = 0; i < conclusion.size(); ++i)
    {
        if (i)
            sections.conclusion += "\n";
        sections.conclusion += conclusion[i];
    }
    return sections;
}

double estimate_cost(const std::map<std::string, Usage>& usage, const std::map<std::string, Price>& pricing)
{
    auto cost = 0.0;
    for (const auto& [model, tokens]: usage)
    {
        auto price = pricing.find(model);
        if (price == pricing.end())
            continue;
        cost += (static_cast<double>(tokens.input_tokens) * price->second.input_per_mtok
                 + static_cast<double>(tokens.output_tokens) * price->second.output_per_mtok)
                / 1e6;
    }
    return cost;
}

nlohmann::json to_json(const VerificationReport& report)
{
    auto evidence = nlohmann::json::array();
    for (const auto& query: report.evidence)
        evidence.push_back({ { "source", query.source },
                             { "sql", query.sql },
                             { "result", query.captured_result ? result_to_json(*query.captured_result) : nlohmann::json() },
                             { "capture_error", query.capture_error } });
    auto usage = nlohmann::json::object();
    for (const auto& [model, tokens]: report.usage)
        usage[model] = { { "input_tokens", tokens.input_tokens }, { "output_tokens", tokens.output_tokens } };
    return {
        { "format_version", 1 },
        { "claim", { { "text", report.claim.text }, { "context", report.claim.context } } },
        { "verdict", to_string(report.verdict) },
        { "findings", report.findings },
        { "conclusion", report.conclusion },
        { "assumptions", report.assumptions },
        { "evidence", std::move(evidence) },
        { "usage", std::move(usage) },
        { "cost_estimate", report.cost_estimate },
        { "trace_ref", report.trace_ref },
        { "flags", report.flags },
    };
}

VerificationReport report_from_json(const nlohmann::json& json)
{
    if (json.value("format_version", 0) != 1)
        throw Error("unsupported report format_version");
    auto report = VerificationReport {};
    report.claim = { json.at("claim").at("text").get<std::string>(), json.at("claim").value("context", "") };
    auto verdict = verdict_from_label(json.at("verdict").get<std::string>());
    if (!verdict)
        throw Error("report has an unknown verdict");
    report.verdict = *verdict;
    report.findings = json.at("findings").get<std::vector<std::string>>();
    report.conclusion = json.at("conclusion").get<std::string>();
    report.assumptions = json.at("assumptions").get<std::vector<std::string>>();
    for (const auto& item: json.at("evidence"))
    {
        auto query = EvidenceQuery { item.at("source").get<std::string>(), item.at("sql").get<std::string>() };
        if (!item.at("result").is_null())
            query.captured_result = result_from_json(item["result"]);
        query.capture_error = item.value("capture_error", "");
        report.evidence.push_back(std::move(query));
    }
    for (const auto& [model, tokens]: json.at("usage").items())
        report.usage[model] = { tokens.at("input_tokens").get<std::int64_t>(), tokens.at("output_tokens").get<std::int64_t>() };
    report.cost_estimate = json.at("cost_estimate").get<double>();
    report.trace_ref = json.value("trace_ref", "");
    report.flags = json.value("flags", std::vector<std::string> {});
    return report;
}

std::string render_report(const VerificationReport& report)
{
    auto out = std::string("# Claim verification\n\n");
    out += "Claim: " + report.claim.text + "\n";
    if (!report.claim.context.empty())
        out += "Context: " + report.claim.context + "\n";

    out += "\n## Findings\n\n";
    for (const auto& item: report.findings)
        out += "- " + item + "\n";

    out += "\n## Conclusion\n\n";
    if (!report.conclusion.empty())
        out += report.conclusion + "\n";

    if (!report.assumptions.empty())
    {
        out += "\n## Assumptions and notes\n\n";
        for (const auto& item: report.assumptions)
            out += "- " + item + "\n";
    }

    out += "\n## Verdict\n\nVerdict: " + std::string(to_string(report.verdict)) + "\n";

    out += "\n## Evidence\n";
    for (std::size_t i = 0; i < report.evidence.size(); ++i)
    {
        const auto& query = report.evidence[i];
        out += "\n### Query " + std::to_string(i + 1) + "\n\n" + evidence_block(query) + "\n\n";
        if (query.captured_result)
        {
            out += render_result(*query.captured_result, query.captured_result->rows.size());
            if (out.back() != '\n')
                out += '\n';
        }
        else
            out += "Not captured: " + query.capture_error + "\n";
    }

    if (!report.flags.empty())
    {
        out += "\n## Flags\n\n";
        for (const auto& flag: report.flags)
            out += "- " + flag + "\n";
    }
    if (!report.trace_ref.empty())
        out += "\nTrace: " + report.trace_ref + "\n";
    return out;
}

VerificationReport parse_report_markdown(std::string_view text)
{
    auto report = VerificationReport {};
    auto sections = parse_sections(text);
    report.findings = std::move(sections.findings);
    report.conclusion = std::move(sections.conclusion);
    report.assumptions = std::move(sections.assumptions);
    report.verdict = parse_verdict(text);
    report.evidence = extract_evidence(text);

    auto current = Section::None;
    // The title heading and the claim lines come before any known section.
    auto preamble = true;
    auto inFence = false;
    for (const auto& line: split_lines(text))
    {
        if (is_fence(line))
            inFence = !inFence;
        if (inFence || is_fence(line))
            continue;
        if (auto next = heading(line))
        {
            current = *next;
            preamble = preamble && current == Section::Other;
            continue;
        }
        if (preamble && line.rfind("Claim: ", 0) == 0)
            report.claim.text = line.substr(7);
        else if (preamble && line.rfind("Context: ", 0) == 0)
            report.claim.context = line.substr(9);
        else if (current == Section::Flags && bullet(line))
            report.flags.push_back(*bullet(line));
        else if (line.rfind("Trace: ", 0) == 0)
            report.trace_ref = line.substr(7);
    }
    return report;
}

Environment make_environment(ToolboxConfig config, std::shared_ptr<SourcePool> pool, std::shared_ptr<ModelProvider> provider)
{
    auto environment = Environment { std::move(config), std::move(pool) };
    environment.experts = make_expert_bundle(environment.config, *environment.pool, provider);

    auto& spec = environment.verifier;
    spec.name = "verifier";
    spec.instructions = verifier_instructions;
    spec.output_contract = verifier_contract;
    spec.tools = environment.experts.tools;
    spec.provider = std::move(provider);
    spec.model_id = environment.config.settings.verifier_model;
    spec.sampling = { environment.config.settings.temperature, environment.config.settings.max_output_tokens };
    spec.max_turns = environment.config.settings.verifier_max_turns;
    spec.check();
    return environment;
}

std::string render_claim_input(const Claim& claim)
{
    auto text = "claim:\n" + claim.text;
    if (!claim.context.empty())
        text += "\n\ncontext:\n" + claim.context;
    return text;
}

void capture_evidence(VerificationReport& report, const SourcePool& pool, std::size_t row_cap)
{
    for (std::size_t i = 0; i < report.evidence.size(); ++i)
    {
        auto& query = report.evidence[i];
        query.captured_result.reset();
        query.capture_error.clear();
        try
        {
            query.captured_result = pool.handle(query.source).execute_sql(query.sql, row_cap);
        }
        catch (const std::exception& e)
        {
            query.capture_error = e.what();
            report.flags.push_back("evidence query " + std::to_string(i + 1) + " could not be executed: " + e.what());
        }
    }
}

Verification verify(const Claim& claim, const Environment& environment, const std::string& trace_ref)
{
    if (trim(claim.text).empty())
        throw Error("claim text is empty");

    auto trace = RunTrace {};
    auto result = Verification {};
    auto& run = result.verifier_run;
    run = run_agent(environment.verifier, render_claim_input(claim), &trace);

    auto verdict = std::optional<Verdict> {};
    if (run.complete)
    {
        try
        {
            verdict = parse_verdict(run.final_text);
        }
        catch (const VerdictParseError& e)
        {
            continue_run(environment.verifier, run, correction(e.what()), &trace);
            if (run.complete)
            {
                try
                {
                    verdict = parse_verdict(run.final_text);
                }
                catch (const VerdictParseError& again)
                {
                    result.expert_runs = trace.nested();
                    throw VerificationError(std::string("no verdict after one correction: ") + again.what());
                }
            }
        }
    }
    result.expert_runs = trace.nested();
    if (!run.complete)
        throw VerificationError(run.failure);

    auto& report = result.report;
    report.claim = claim;
    report.verdict = *verdict;
    auto sections = parse_sections(run.final_text);
    report.findings = std::move(sections.findings);
    report.conclusion = std::move(sections.conclusion);
    report.assumptions = std::move(sections.assumptions);

    try
    {
        report.evidence = extract_evidence(run.final_text);
    }
    catch (const std::exception& e)
    {
        report.flags.push_back(std::string("evidence in the final answer was unusable: ") + e.what());
    }
    if (report.evidence.empty())
    {
        // Fall back to what the SQL Expert cited, deduplicated in call order.
        auto seen = std::set<std::pair<std::string, std::string>> {};
        for (const auto& nested: result.expert_runs)
        {
            if (nested.tool != sql_expert_tool || nested.outcome.is_error)
                continue;
            for (auto& query: extract_evidence(nested.run.final_text))
                if (seen.emplace(query.source, sql::normalize_whitespace(query.sql)).second)
                    report.evidence.push_back(std::move(query));
        }
    }
    if (report.evidence.empty())
        report.flags.push_back("the report cites no evidence queries");

    capture_evidence(report, *environment.pool, static_cast<std::size_t>(environment.config.settings.evidence_row_cap));
    report.usage = trace.usage_by_model();
    report.cost_estimate = estimate_cost(report.usage, environment.config.settings.pricing);
    report.trace_ref = trace_ref;
    return result;
}

ReproducibilityOutcome validate_evidence(const VerificationReport& report, const SourcePool& pool, std::size_t row_cap)
{
    if (report.evidence.empty())
        throw Error("report has no evidence to validate");
    auto outcome = ReproducibilityOutcome { {}, true };
    for (std::size_t i = 0; i < report.evidence.size(); ++i)
    {
        const auto& query = report.evidence[i];
        auto check = QueryCheck { i };
        if (!query.captured_result)
        {
            check.diff = "no captured result" + (query.capture_error.empty() ? "" : ": " + query.capture_error);
        }
        else if (!pool.contains(query.source))
        {
            check.diff = "unknown source: " + query.source;
        }
        else
        {
            try
            {
                auto comparison = compare_results(*query.captured_result, pool.handle(query.source).execute_sql(query.sql, row_cap));
                check.match = comparison.match;
                check.diff = comparison.diff;
            }
            catch (const std::exception& e)
            {
                check.diff = e.what();
            }
        }
        outcome.overall = outcome.overall && check.match;
        outcome.queries.push_back(std::move(check));
    }
    return outcome;
}

} // namespace claimcheck
