// SPDX-License-Identifier: Apache-2.0
// Acceptance suite. One PASS/FAIL line per criterion, each run against its
// time limit. Exits nonzero when any criterion fails.
#include <claimcheck/bench.hpp>
#include <claimcheck/error.hpp>
#include <claimcheck/hash.hpp>
#include <claimcheck/session.hpp>
#include <claimcheck/sql.hpp>
#include <claimcheck/verifier.hpp>

#include <sqlite3.h>
#include <test_support.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace claimcheck;
using namespace claimcheck::testing;
namespace fs = std::filesystem;

namespace
{

// Thrown by expect() to end a criterion with a reason.
struct Unmet
{
    std::string why;
};

void expect(bool condition, const std::string& why)
{
    if (!condition)
        throw Unmet { why };
}

enum class Outcome
{
    Pass,
    Fail,
    Skip,
};

struct Criterion
{
    std::string name;
    double limit_s;
    // Returns a short detail line; a skip is signalled by returning nullopt.
    std::function<std::optional<std::string>()> check;
};

struct ClaimEntry
{
    std::string name;
    std::string config;
    Claim claim;
    std::optional<std::string> expected;
    std::string transcript;
};

std::vector<ClaimEntry> claim_manifest()
{
    auto entries = std::vector<ClaimEntry> {};
    for (const auto& j: nlohmann::json::parse(read_file(fixture("claims/claims.json"))))
        entries.push_back({ j["name"], j["config"], { j["claim"], j["context"] },
                            j["expected_verdict"].is_null() ? std::nullopt
                                                            : std::optional<std::string>(j["expected_verdict"]),
                            j["transcript"] });
    return entries;
}

const ClaimEntry& find_claim(const std::vector<ClaimEntry>& entries, const std::string& name)
{
    for (const auto& entry: entries)
        if (entry.name == name)
            return entry;
    throw Unmet { "claim manifest has no entry " + name };
}

struct Replayed
{
    Environment environment;
    Verification verification;
    std::size_t consumed = 0;
    std::size_t recorded = 0;
};

Replayed replay(const ToolboxConfig& config, const Claim& claim, const std::string& transcript)
{
    auto handle = make_provider({ Mode::Replay, transcript });
    auto pool = std::make_shared<SourcePool>(config.sources);
    auto environment = make_environment(config, pool, handle.provider);
    auto verification = verify(claim, environment, transcript);
    return { std::move(environment), std::move(verification), handle.replay->consumed(),
             handle.replay->transcript().entries.size() };
}

std::string private_copy(const fs::path& dir, const std::string& config_path, const std::string& db_path)
{
    fs::copy_file(fixture(db_path), dir / "copy.db");
    auto text = read_file(config_path);
    auto relative = "fixtures/" + db_path;
    text.replace(text.find(relative), relative.size(), (dir / "copy.db").string());
    write_file((dir / "toolbox.yaml").string(), text);
    return (dir / "toolbox.yaml").string();
}

// --- criteria -----------------------------------------------------------

std::optional<std::string> config_fidelity()
{
    auto fragment = load_config(fixture("toolbox/west_coast_tools.yaml"));
    expect(fragment.tools.size() == 3, "tools fragment declares " + std::to_string(fragment.tools.size()) + " tools");
    auto dialects = std::set<Dialect> {};
    for (const auto& tool: fragment.tools)
    {
        expect(tool.kind == ToolKind::ExecuteSql, tool.name + " is not an execute-sql tool");
        dialects.insert(fragment.find_source(tool.source)->kind);
    }
    expect(dialects.size() == 2, "tools span " + std::to_string(dialects.size()) + " dialects");

    auto combined = load_config(fixture("toolbox/west_coast.yaml"));
    expect(validate(combined).empty(), "combined document has diagnostics");
    auto order = [&](const std::string& toolset) {
        auto names = std::vector<std::string> {};
        for (const auto& tool: resolve_toolset(combined, toolset))
            names.push_back(tool.name);
        return names;
    };
    expect(order("west-coast-sql") == std::vector<std::string> { "seattle_sql", "portland_sql", "los_angeles_sql" },
           "west-coast-sql resolves out of order");
    expect(order("west-coast-schema") == std::vector<std::string> { "seattle_schema", "portland_schema", "los_angeles_schema" },
           "west-coast-schema resolves out of order");

    for (const auto* config: { &fragment, &combined })
        expect(parse_config(serialize_config(*config)) == *config, "round trip changed the configuration");
    return "3 tools, 2 dialects, toolsets in declaration order, round trip equal";
}

std::optional<std::string> grouping_regression()
{
    // Brute-force scan of the CSV: no SQL involved.
    auto scan = std::map<std::pair<long long, std::string>, long long> {};
    auto in = std::istringstream(read_file(fixture("crime/crime_data.csv")));
    auto line = std::string {};
    std::getline(in, line);
    expect(line.rfind("report_number,offense_date,offense_category,", 0) == 0, "unexpected CSV header");
    while (std::getline(in, line))
    {
        auto fields = std::vector<std::string> {};
        auto cell = std::string {};
        for (auto ch: line + ",")
        {
            if (ch == ',')
                fields.push_back(std::exchange(cell, {}));
            else
                cell += ch;
        }
        const auto& day = fields.at(1);
        const auto& category = fields.at(2);
        if (category != "PROPERTY CRIME" && category != "VIOLENT CRIME")
            continue;
        if (day >= "2023-01-01" && day < "2025-01-01")
            ++scan[{ std::stoll(day.substr(0, 4)), category }];
    }

    auto config = load_config(fixture("crime/toolbox.yaml"));
    auto pool = SourcePool(config.sources);
    auto result = pool.handle("seattle").execute_sql(read_file(fixture("crime/year_category.sql")), 1000);
    expect(result.rows.size() == 4, "query returned " + std::to_string(result.rows.size()) + " rows");
    expect(scan.size() == 4, "scan found " + std::to_string(scan.size()) + " groups");
    auto it = scan.begin();
    for (std::size_t i = 0; i < 4; ++i, ++it)
    {
        const auto& row = result.rows[i];
        auto year = std::get<std::int64_t>(row.at(0));
        auto category = std::get<std::string>(row.at(1));
        auto count = std::get<std::int64_t>(row.at(2));
        expect(year == it->first.first && category == it->first.second && count == it->second,
               "row " + std::to_string(i + 1) + " disagrees with the scan");
        const auto& frozen = year_category_oracle[i];
        expect(year == frozen.year && category == frozen.category && count == frozen.incidents,
               "row " + std::to_string(i + 1) + " disagrees with the committed oracle output");
    }
    return "4 grouped rows equal to the CSV scan and the oracle";
}

std::optional<std::string> end_to_end_replay()
{
    auto entries = claim_manifest();
    const auto& entry = find_claim(entries, "year_over_year");
    auto config = load_config(entry.config);

    auto first = replay(config, entry.claim, entry.transcript);
    const auto& report = first.verification.report;
    expect(report.verdict == Verdict::Inaccurate, "verdict is " + std::string(to_string(report.verdict)));
    expect(!report.evidence.empty(), "report has no evidence");
    expect(first.consumed == first.recorded, "transcript not fully consumed");
    auto check = validate_evidence(report, *first.environment.pool, config.settings.evidence_row_cap);
    expect(check.overall, "validate_evidence overall=false");

    auto second = replay(config, entry.claim, entry.transcript);
    auto a = to_json(report).dump(2);
    auto b = to_json(second.verification.report).dump(2);
    expect(a == b, "structured reports differ between replays");
    expect(render_report(report) == render_report(second.verification.report), "markdown differs between replays");
    return "Inaccurate, " + std::to_string(report.evidence.size()) + " evidence query, reproducible, byte-identical";
}

std::optional<std::string> orchestration_invariants()
{
    struct Run
    {
        std::string label;
        Replayed replayed;
    };
    auto runs = std::vector<Run> {};
    auto scratch = TempDir {};
    for (const auto& entry: claim_manifest())
        runs.push_back({ entry.name, replay(load_config(entry.config), entry.claim, entry.transcript) });
    auto bench = load_config(fixture("bench/bench.yaml")).settings;
    for (const auto& bench_case: load_cases(fixture("bench/cases.jsonl")))
    {
        auto ingested = ingest_case(bench_case, scratch.file(bench_case.id + ".db"), bench);
        runs.push_back({ bench_case.id, replay(ingested.config, { bench_case.claim, ingested.mapping_note },
                                               fixture("bench/transcripts/" + bench_case.id + ".jsonl")) });
    }

    auto expert_tools = std::set<std::string> { "data_expert", "schema_expert", "sql_expert" };
    auto identical_pairs = 0;
    for (const auto& [label, replayed]: runs)
    {
        const auto& env = replayed.environment;
        const auto& lead = replayed.verification.verifier_run;
        expect(replayed.consumed == replayed.recorded, label + ": transcript not fully consumed");

        // (a) the lead agent's history holds only expert tool traffic.
        auto offered = env.verifier.tools->names();
        expect(std::set<std::string>(offered.begin(), offered.end()) == expert_tools, label + ": lead agent offered other tools");
        for (const auto& message: lead.messages)
            for (const auto& call: message.tool_calls)
                expect(expert_tools.contains(call.tool), label + ": lead agent called " + call.tool);

        // (b) each expert touches only its own toolset.
        auto surface = std::map<std::string, std::vector<std::string>> {
            { "data_expert", env.experts.data_expert.tools->names() },
            { "schema_expert", env.experts.schema_expert.tools->names() },
            { "sql_expert", env.experts.sql_expert.tools->names() },
        };
        const auto& nested = replayed.verification.expert_runs;
        expect(!nested.empty(), label + ": no expert was consulted");
        for (const auto& expert: nested)
        {
            const auto& allowed = surface.at(expert.tool);
            for (const auto& invocation: expert.run.tool_invocations)
                expect(std::find(allowed.begin(), allowed.end(), invocation.call.tool) != allowed.end(),
                       label + ": " + expert.tool + " called " + invocation.call.tool);
            // (d) every run ends within its budget.
            expect(expert.run.complete && expert.run.turn_count <= env.experts.data_expert.max_turns,
                   label + ": " + expert.tool + " did not finish within its turn budget");
        }
        expect(lead.complete && lead.turn_count <= env.verifier.max_turns, label + ": lead agent exceeded its budget");

        // (c) identical invocations give identical runs.
        for (std::size_t i = 0; i < nested.size(); ++i)
            for (std::size_t j = i + 1; j < nested.size(); ++j)
                if (nested[i].tool == nested[j].tool && nested[i].arguments == nested[j].arguments)
                {
                    ++identical_pairs;
                    expect(nested[i].run == nested[j].run && nested[i].outcome == nested[j].outcome,
                           label + ": identical " + nested[i].tool + " invocations diverged");
                }
    }
    expect(identical_pairs > 0, "no run repeats an expert invocation");
    return std::to_string(runs.size()) + " transcripts, " + std::to_string(identical_pairs) + " repeated invocation checked";
}

struct Statement
{
    std::string sql;
    bool read_only;
};

std::vector<Statement> random_statements(std::size_t count)
{
    auto rng = std::mt19937(20250917);
    auto pick = [&](const std::vector<std::string>& items) {
        return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
    };
    auto columns = std::vector<std::string> { "offense", "precinct", "sector", "beat", "offense_category", "offense_date" };
    auto values = std::vector<std::string> { "'N'", "'M'", "'VIOLENT CRIME'", "'x; DROP TABLE crime_data'", "'2024-01-01'",
                                             "'it''s'", "42" };
    auto reads = std::vector<std::function<std::string()>> {
        [&] { return "SELECT " + pick(columns) + ", count(*) FROM crime_data GROUP BY 1"; },
        [&] { return "SELECT * FROM crime_data WHERE " + pick(columns) + " = " + pick(values) + " LIMIT 5"; },
        [&] { return "WITH t AS (SELECT " + pick(columns) + " AS c FROM crime_data) SELECT count(DISTINCT c) FROM t"; },
        [&] { return "select 'DELETE FROM crime_data; --' AS note"; },
        [&] { return "SELECT 1 -- ; DROP TABLE crime_data"; },
        [&] { return "  (SELECT count(*) FROM crime_data) ;"; },
        [&] { return "SELECT \"update\" FROM (SELECT 1 AS \"update\")"; },
    };
    auto writes = std::vector<std::function<std::string()>> {
        [&] { return "DELETE FROM crime_data WHERE " + pick(columns) + " = " + pick(values); },
        [&] { return "UPDATE crime_data SET " + pick(columns) + " = " + pick(values); },
        [&] { return "INSERT INTO crime_data (report_number) VALUES (" + pick(values) + ")"; },
        [&] { return "DROP TABLE crime_data"; },
        [&] { return "CREATE TABLE scratch AS SELECT * FROM crime_data"; },
        [&] { return "ALTER TABLE crime_data ADD COLUMN extra TEXT"; },
        [&] { return "REPLACE INTO crime_data (report_number) VALUES ('x')"; },
        [&] { return "PRAGMA journal_mode = DELETE"; },
        [&] { return "ATTACH DATABASE '/tmp/other.db' AS other"; },
        [&] { return "VACUUM"; },
        [&] { return "SELECT 1; DELETE FROM crime_data"; },
        [&] { return "SELECT count(*) FROM crime_data;\nDROP TABLE crime_data;"; },
        [&] { return "WITH gone AS (DELETE FROM crime_data RETURNING *) SELECT count(*) FROM gone"; },
        [&] { return "SELECT * INTO backup FROM crime_data"; },
        [&] { return "/* report */ UPDATE crime_data SET sector = 'Z'"; },
        [&] { return "SELECT 1 /* ; */ ; UPDATE crime_data SET beat = 'Q'"; },
        [&] { return "BEGIN; DELETE FROM crime_data; COMMIT"; },
        [&] { return "SELECT load_extension('evil')"; },
    };
    auto statements = std::vector<Statement> {};
    for (std::size_t i = 0; i < count; ++i)
    {
        auto mutate = std::bernoulli_distribution(0.6)(rng);
        const auto& source = mutate ? writes : reads;
        auto sql = source[std::uniform_int_distribution<std::size_t>(0, source.size() - 1)(rng)]();
        statements.push_back({ std::move(sql), !mutate });
    }
    return statements;
}

std::optional<std::string> read_only_safety()
{
    auto db = fixture("crime/crime.db");
    auto before = file_sha256(db);
    auto statements = random_statements(1000);

    auto config = load_config(fixture("crime/toolbox.yaml"));
    auto pool = SourcePool(config.sources);
    auto& handle = pool.handle("seattle");
    auto registry = make_database_registry(config, config.tools, pool, 50);
    auto mutating = 0;
    auto rejected = 0;
    auto reads_ok = 0;
    for (std::size_t i = 0; i < statements.size(); ++i)
    {
        const auto& statement = statements[i];
        mutating += statement.read_only ? 0 : 1;
        auto refused = false;
        if (i % 2 == 0)
        {
            try
            {
                (void)handle.execute_sql(statement.sql, 50);
            }
            catch (const ReadOnlyViolation&)
            {
                refused = true;
            }
            catch (const Error&)
            {
                // Engine errors on read-only statements are not refusals.
            }
        }
        else
        {
            auto outcome = registry->invoke({ "c", "seattle_sql", { { "sql", statement.sql } } });
            refused = outcome.is_error && outcome.content.find("read-only violation") != std::string::npos;
        }
        if (!statement.read_only)
        {
            expect(refused, "accepted: " + statement.sql);
            ++rejected;
        }
        else
        {
            expect(!refused, "refused a read-only statement: " + statement.sql);
            ++reads_ok;
        }
    }
    pool.close_all();
    expect(file_sha256(db) == before, "fixture checksum changed");
    return std::to_string(rejected) + "/" + std::to_string(mutating) + " non-read-only statements rejected, "
           + std::to_string(reads_ok) + " reads allowed, checksum unchanged";
}

std::optional<std::string> mini_bench()
{
    expect(map_verdict(Verdict::Verified) == Label::Entailed && map_verdict(Verdict::PartlyVerified) == Label::Refuted
               && map_verdict(Verdict::PartlyInaccurate) == Label::Refuted && map_verdict(Verdict::Inaccurate) == Label::Refuted,
           "verdict mapping changed");

    auto cases = load_cases(fixture("bench/cases.jsonl"));
    expect(cases.size() == 20, "expected 20 cases");
    auto options = BenchOptions {};
    options.mode = Mode::Replay;
    options.transcripts_dir = fixture("bench/transcripts");
    options.settings = load_config(fixture("bench/bench.yaml")).settings;
    options.parallelism = 4;

    auto whole = TempDir {};
    options.out_dir = whole.file("out");
    auto full = run_bench(cases, options);
    expect(full.summary.failures == 0, std::to_string(full.summary.failures) + " cases failed");
    expect(full.summary.accuracy == 1.0, "accuracy " + std::to_string(full.summary.accuracy));

    auto interrupted = TempDir {};
    options.out_dir = interrupted.file("out");
    options.limit = 10;
    auto partial = run_bench(cases, options);
    expect(partial.executed == 10 && partial.summary.pending == 10, "interrupted run did not stop at case 10");
    options.limit.reset();
    options.resume = true;
    auto resumed = run_bench(cases, options);
    expect(resumed.executed == 10, "resume ran " + std::to_string(resumed.executed) + " cases");
    expect(read_file(interrupted.file("out/summary.json")) == read_file(whole.file("out/summary.json")),
           "resumed summary differs from the uninterrupted one");

    char accuracy[32];
    std::snprintf(accuracy, sizeof accuracy, "%.3f", full.summary.accuracy);
    return std::string("accuracy ") + accuracy + ", resumed summary identical";
}

std::optional<std::string> evidence_drift()
{
    auto dir = TempDir {};
    auto entries = claim_manifest();
    const auto& entry = find_claim(entries, "year_over_year");
    auto configPath = private_copy(dir.path(), entry.config, "crime/crime.db");
    auto config = load_config(configPath);

    auto replayed = replay(config, entry.claim, entry.transcript);
    auto report = replayed.verification.report;
    expect(validate_evidence(report, *replayed.environment.pool, 1000).overall, "fresh capture does not validate");
    replayed.environment.pool->close_all();

    sqlite3* db = nullptr;
    expect(sqlite3_open(dir.file("copy.db").c_str(), &db) == SQLITE_OK, "cannot open the copy");
    auto rc = sqlite3_exec(db, "UPDATE crime_data SET offense_category = 'VIOLENT CRIME' WHERE report_number IN "
                               "(SELECT report_number FROM crime_data WHERE offense_category = 'PROPERTY CRIME' "
                               "AND offense_date >= '2024-01-01' LIMIT 3)",
                           nullptr, nullptr, nullptr);
    sqlite3_close(db);
    expect(rc == SQLITE_OK, "cannot mutate the copy");

    auto pool = SourcePool(config.sources);
    auto drift = validate_evidence(report, pool, 1000);
    expect(!drift.overall, "validation still passes after the mutation");
    expect(!drift.queries.at(0).diff.empty(), "diff is empty");
    return "overall=false, diff: " + drift.queries[0].diff.substr(0, drift.queries[0].diff.find('\n'));
}

std::optional<std::string> live_smoke()
{
    if (!std::getenv("CLAIMCHECK_API_KEY"))
        return std::nullopt;
    auto config = load_config(fixture("crime/toolbox.yaml"));
    auto handle = make_provider({ Mode::Live });
    auto pool = std::make_shared<SourcePool>(config.sources);
    auto environment = make_environment(config, pool, handle.provider);
    auto claim = Claim { "Seattle recorded more violent crime incidents in 2024 than in 2023.", "" };
    auto report = verify(claim, environment).report;

    auto back = parse_report_markdown(render_report(report));
    expect(back.verdict == report.verdict && back.claim == report.claim, "report markdown is not well-formed");
    expect(report_from_json(to_json(report)) == report, "structured report does not round trip");
    expect(!report.evidence.empty(), "live report cites no evidence");
    expect(validate_evidence(report, *pool, config.settings.evidence_row_cap).overall, "live evidence does not reproduce");
    expect(report.cost_estimate <= 0.25, "cost estimate above $0.25");
    return "verdict " + std::string(to_string(report.verdict)) + ", evidence reproducible";
}

} // namespace

int main()
{
    auto criteria = std::vector<Criterion> {
        { "config fidelity", 1, config_fidelity },
        { "year/category grouping regression", 1, grouping_regression },
        { "end-to-end replay", 10, end_to_end_replay },
        { "orchestration invariants", 5, orchestration_invariants },
        { "read-only safety", 30, read_only_safety },
        { "mini-benchmark oracle", 60, mini_bench },
        { "evidence drift detection", 2, evidence_drift },
        { "live smoke test", 600, live_smoke },
    };

    auto failed = 0;
    for (const auto& criterion: criteria)
    {
        auto started = std::chrono::steady_clock::now();
        auto outcome = Outcome::Pass;
        auto detail = std::string {};
        try
        {
            auto result = criterion.check();
            if (result)
                detail = *result;
            else
            {
                outcome = Outcome::Skip;
                detail = "CLAIMCHECK_API_KEY not set";
            }
        }
        catch (const Unmet& unmet)
        {
            outcome = Outcome::Fail;
            detail = unmet.why;
        }
        catch (const std::exception& e)
        {
            outcome = Outcome::Fail;
            detail = std::string("exception: ") + e.what();
        }
        auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (outcome == Outcome::Pass && elapsed >= criterion.limit_s)
        {
            outcome = Outcome::Fail;
            detail += " (too slow)";
        }
        failed += outcome == Outcome::Fail ? 1 : 0;
        const char* tag = outcome == Outcome::Pass ? "PASS" : outcome == Outcome::Fail ? "FAIL" : "SKIP";
        std::printf("%s  %-34s %7.3fs / %gs  %s\n", tag, criterion.name.c_str(), elapsed, criterion.limit_s, detail.c_str());
    }
    std::printf("%s\n", failed ? "acceptance: FAILED" : "acceptance: all criteria met");
    return failed ? 1 : 0;
}
