// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <claimcheck/config.hpp>
#include <claimcheck/session.hpp>
#include <claimcheck/verifier.hpp>

#include <optional>
#include <string>
#include <vector>

namespace claimcheck
{

enum class Label
{
    Entailed,
    Refuted,
};

[[nodiscard]] std::string_view to_string(Label label);
[[nodiscard]] std::optional<Label> parse_label(std::string_view text);

/// Verified is entailed. Both partial verdicts and Inaccurate are refuted: a
/// claim with any conflicting part counts as false.
[[nodiscard]] Label map_verdict(Verdict verdict);

struct BenchCase
{
    std::string id;
    std::string caption;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::string claim;
    Label gold = Label::Refuted;

    bool operator==(const BenchCase&) const = default;
};

/// One JSON object per line: {"id", "caption"?, "columns", "rows", "claim",
/// "gold": "entailed" | "refuted"}. Blank lines are skipped. Errors name the
/// 1-based line.
[[nodiscard]] std::vector<BenchCase> parse_cases(std::string_view text);
[[nodiscard]] std::vector<BenchCase> load_cases(const std::string& path);

/// Lowercase, runs of anything but letters and digits become one underscore,
/// leading digits get `prefix`, empty names become `fallback`.
[[nodiscard]] std::string sanitize_identifier(std::string_view name, std::string_view prefix, std::string_view fallback);

struct IngestedColumn
{
    std::string original;
    std::string name;
    // Empty, "_num" sibling or "_date" sibling.
    std::string typed_name;
    std::string typed_kind;
};

struct IngestedCase
{
    std::string table;
    std::vector<IngestedColumn> columns;
    std::string mapping_note;
    ToolboxConfig config;
};

inline constexpr std::string_view bench_source = "bench";

struct TableData
{
    std::string name;
    std::string caption;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 records: quoted fields may hold commas, doubled quotes and line
/// breaks. Throws Error naming the line of an unterminated quote.
[[nodiscard]] std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Writes the table to a fresh sqlite file at db_path. Every cell is stored
/// as the given text; a column where at least 95% of the nonempty cells parse
/// as numbers (or dates) gets a typed sibling column. The returned config
/// declares the file as `source` with execute-sql, list-tables and
/// describe-table tools in toolsets `sql` and `schema`, and carries
/// `settings`.
[[nodiscard]] IngestedCase ingest_table(const TableData& table, const std::string& db_path, const std::string& source,
                                        const Settings& settings);

/// ingest_table into source `bench`, naming the table after the caption.
[[nodiscard]] IngestedCase ingest_case(const BenchCase& bench_case, const std::string& db_path, const Settings& settings);

struct BenchResult
{
    std::string id;
    Label gold = Label::Refuted;
    std::optional<Verdict> verdict;
    std::optional<Label> predicted;
    bool correct = false;
    std::string failure;
    std::vector<std::string> flags;
    Usage usage;
    double cost = 0;
    double latency_ms = 0;
};

[[nodiscard]] nlohmann::json to_json(const BenchResult& result);
[[nodiscard]] BenchResult bench_result_from_json(const nlohmann::json& json);

struct BenchSummary
{
    std::size_t n_cases = 0;
    std::size_t correct = 0;
    std::size_t failures = 0;
    std::size_t pending = 0;
    double accuracy = 0;
    Usage tokens;
    double mean_tokens = 0;
    double total_cost = 0;
    double cost_per_case = 0;

    bool operator==(const BenchSummary&) const = default;
};

/// Latency is left out so that the summary of a rerun is identical.
[[nodiscard]] nlohmann::json to_json(const BenchSummary& summary);

/// Aggregates in case order over the cases that have a result.
[[nodiscard]] BenchSummary summarize(const std::vector<BenchCase>& cases, const std::vector<BenchResult>& results);

struct BenchOptions
{
    std::string out_dir;
    std::size_t parallelism = 1;
    bool resume = false;
    // Run at most this many of the pending cases.
    std::optional<std::size_t> limit;
    Settings settings;
    Mode mode = Mode::Replay;
    // Per-case transcripts <dir>/<id>.jsonl, read in replay mode and written
    // in record mode.
    std::string transcripts_dir;
    // Per-case scripts <dir>/<id>.json standing in for the endpoint.
    std::string scripts_dir;
};

struct BenchRun
{
    BenchSummary summary;
    std::vector<BenchResult> results;
    std::size_t executed = 0;
};

/// Verifies every pending case on a worker pool, appending one line per case
/// to <out_dir>/results.jsonl as it finishes, then writes
/// <out_dir>/summary.json. Without resume previous results are discarded.
/// Per-case failures are recorded, never thrown.
[[nodiscard]] BenchRun run_bench(const std::vector<BenchCase>& cases, const BenchOptions& options);

[[nodiscard]] BenchResult run_case(const BenchCase& bench_case, const BenchOptions& options);

} // namespace claimcheck
