// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/agent.hpp>
#include <claimcheck/experts.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace claimcheck
{

struct Claim
{
    std::string text;
    // Free text such as when and where the statement was made.
    std::string context;

    bool operator==(const Claim&) const = default;
};

enum class Verdict
{
    Verified,
    PartlyVerified,
    PartlyInaccurate,
    Inaccurate,
};

/// "Verified", "Partly Verified", "Partly Inaccurate", "Inaccurate".
[[nodiscard]] std::string_view to_string(Verdict verdict);
[[nodiscard]] std::optional<Verdict> verdict_from_label(std::string_view label);

/// Finds lines of the form `Verdict: <label>` outside fenced blocks, ignoring
/// case and markdown emphasis. Throws VerdictParseError when there is none,
/// when the label is not one of the four, or when lines disagree.
[[nodiscard]] Verdict parse_verdict(std::string_view text);

struct VerificationReport
{
    Claim claim;
    Verdict verdict = Verdict::Inaccurate;
    std::vector<std::string> findings;
    std::string conclusion;
    std::vector<std::string> assumptions;
    std::vector<EvidenceQuery> evidence;
    std::map<std::string, Usage> usage;
    double cost_estimate = 0;
    std::string trace_ref;
    // Problems that do not stop a report from being produced, such as
    // evidence that failed to execute.
    std::vector<std::string> flags;

    bool operator==(const VerificationReport&) const = default;
};

/// Structured form, schema-versioned with `format_version`. Decimal values are
/// written as {"$decimal": "text"} so that no precision is lost.
[[nodiscard]] nlohmann::json to_json(const VerificationReport& report);
[[nodiscard]] VerificationReport report_from_json(const nlohmann::json& json);

/// Markdown with the sections Findings, Conclusion, Assumptions and notes
/// (left out when empty), Verdict and Evidence, in that order.
[[nodiscard]] std::string render_report(const VerificationReport& report);

/// Reads back what render_report wrote: claim, narrative sections, verdict,
/// evidence SQL and flags. Captured results, usage and cost only travel in
/// the structured form.
[[nodiscard]] VerificationReport parse_report_markdown(std::string_view text);

/// The narrative part of the lead agent's answer.
struct ReportSections
{
    std::vector<std::string> findings;
    std::string conclusion;
    std::vector<std::string> assumptions;
};

[[nodiscard]] ReportSections parse_sections(std::string_view text);

[[nodiscard]] double estimate_cost(const std::map<std::string, Usage>& usage, const std::map<std::string, Price>& pricing);

struct Environment
{
    ToolboxConfig config;
    std::shared_ptr<SourcePool> pool;
    ExpertBundle experts;
    AgentSpec verifier;
};

/// Builds the expert bundle and the lead agent over one provider.
[[nodiscard]] Environment make_environment(ToolboxConfig config, std::shared_ptr<SourcePool> pool,
                                           std::shared_ptr<ModelProvider> provider);

[[nodiscard]] std::string render_claim_input(const Claim& claim);

struct Verification
{
    VerificationReport report;
    AgentRun verifier_run;
    std::vector<NestedRun> expert_runs;
};

/// Runs the lead agent to a verdict, retrying once with a correction when the
/// answer has no parseable verdict line, then captures every evidence query by
/// running it again. Throws VerificationError on turn exhaustion or a second
/// unparseable answer; provider errors propagate.
[[nodiscard]] Verification verify(const Claim& claim, const Environment& environment, const std::string& trace_ref = {});

/// Executes each evidence query and captures its result, flagging failures.
void capture_evidence(VerificationReport& report, const SourcePool& pool, std::size_t row_cap);

struct QueryCheck
{
    std::size_t index = 0;
    bool match = false;
    std::string diff;
};

struct ReproducibilityOutcome
{
    std::vector<QueryCheck> queries;
    bool overall = false;
};

/// Re-executes every evidence query and compares with the captured result.
/// Throws Error when the report carries no evidence.
[[nodiscard]] ReproducibilityOutcome validate_evidence(const VerificationReport& report, const SourcePool& pool,
                                                       std::size_t row_cap);

} // namespace claimcheck
