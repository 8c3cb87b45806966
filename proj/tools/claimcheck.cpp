// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/bench.hpp>
#include <claimcheck/config.hpp>
#include <claimcheck/error.hpp>
#include <claimcheck/session.hpp>
#include <claimcheck/verifier.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

namespace fs = std::filesystem;
using namespace claimcheck;

namespace
{

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

// Thrown for anything that should end the process with exit_usage.
struct UsageError: Error
{
    using Error::Error;
};

std::string read_text(const std::string& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw UsageError("cannot read " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
}

ToolboxConfig load(const std::string& path)
{
    try
    {
        return load_config(path);
    }
    catch (const Error& e)
    {
        throw UsageError(path + ": " + e.what());
    }
}

Mode mode_of(const std::string& text)
{
    auto mode = parse_mode(text);
    if (!mode)
        throw UsageError("--mode must be live, record or replay");
    return *mode;
}

ProviderHandle provider_for(ProviderSetup setup)
{
    if (setup.mode == Mode::Replay && setup.transcript.empty())
        throw UsageError("replay mode requires --transcript");
    if (setup.mode == Mode::Record && setup.transcript.empty())
        throw UsageError("record mode requires --transcript");
    if (setup.mode == Mode::Record && fs::path(setup.transcript).has_parent_path())
        fs::create_directories(fs::path(setup.transcript).parent_path());
    try
    {
        return make_provider(setup);
    }
    catch (const Error& e)
    {
        throw UsageError(e.what());
    }
}

// --- verify / replay ----------------------------------------------------

struct VerifyArgs
{
    std::string config;
    std::string claim;
    std::string claim_file;
    std::string context;
    std::string mode;
    std::string transcript;
    std::string script;
    std::string out;
};

int run_verification(const ToolboxConfig& config, const Claim& claim, ProviderSetup setup, const std::string& out)
{
    setup.meta = { utc_timestamp(), config.settings.verifier_model, config.settings.expert_model, claim.text,
                   claim.context };
    auto handle = provider_for(setup);
    auto pool = std::make_shared<SourcePool>(config.sources);

    auto environment = std::optional<Environment> {};
    try
    {
        environment = make_environment(config, pool, handle.provider);
    }
    catch (const Error& e)
    {
        throw UsageError(e.what());
    }

    auto verification = Verification {};
    try
    {
        verification = verify(claim, *environment, setup.transcript);
    }
    catch (const ModelError& e)
    {
        if (e.kind() == ModelError::Kind::Credentials)
            throw UsageError(e.what());
        std::cerr << "error: " << e.what() << "\n";
        return exit_failed;
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failed;
    }

    auto& report = verification.report;
    if (handle.replay)
    {
        auto total = handle.replay->transcript().entries.size();
        if (auto used = handle.replay->consumed(); used < total)
            report.flags.push_back("transcript has " + std::to_string(total - used) + " unused entries");
    }

    auto markdown = render_report(report);
    if (!out.empty())
    {
        write_text(fs::path(out) / "report.md", markdown);
        write_text(fs::path(out) / "report.json", to_json(report).dump(2) + "\n");
        std::cout << "report: " << (fs::path(out) / "report.md").string() << "\n";
        std::cout << "document: " << (fs::path(out) / "report.json").string() << "\n";
    }
    else
    {
        std::cout << markdown << "\n";
    }
    for (const auto& flag: report.flags)
        std::cerr << "flag: " << flag << "\n";
    std::cout << "Verdict: " << to_string(report.verdict) << std::endl;
    return report.flags.empty() ? exit_ok : exit_failed;
}

int cmd_verify(const VerifyArgs& args)
{
    if (args.claim.empty() == args.claim_file.empty())
        throw UsageError("exactly one of --claim or --claim-file is required");
    auto claim = Claim { args.claim.empty() ? read_text(args.claim_file) : args.claim, args.context };
    while (!claim.text.empty() && (claim.text.back() == '\n' || claim.text.back() == '\r'))
        claim.text.pop_back();
    if (claim.text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw UsageError("the claim is empty");
    auto config = load(args.config);
    return run_verification(config, claim, { mode_of(args.mode), args.transcript, args.script }, args.out);
}

int cmd_replay(const std::string& config_path, const std::string& transcript, const std::string& out)
{
    auto config = load(config_path);
    auto meta = TranscriptMeta {};
    try
    {
        meta = load_transcript(transcript).meta;
    }
    catch (const Error& e)
    {
        throw UsageError(e.what());
    }
    return run_verification(config, { meta.claim, meta.context }, { Mode::Replay, transcript }, out);
}

// --- bench --------------------------------------------------------------

struct BenchArgs
{
    std::string config;
    std::string cases;
    std::string mode;
    std::size_t parallelism = 1;
    bool resume = false;
    std::string out;
    std::string transcripts;
    std::string scripts;
    std::size_t limit = 0;
};

int cmd_bench(const BenchArgs& args)
{
    auto options = BenchOptions {};
    if (!args.config.empty())
        options.settings = load(args.config).settings;
    auto cases = std::vector<BenchCase> {};
    try
    {
        cases = load_cases(args.cases);
    }
    catch (const Error& e)
    {
        throw UsageError(e.what());
    }
    options.out_dir = args.out;
    options.parallelism = args.parallelism;
    options.resume = args.resume;
    if (args.limit)
        options.limit = args.limit;
    options.mode = mode_of(args.mode);
    options.transcripts_dir = args.transcripts;
    options.scripts_dir = args.scripts;
    if (options.mode == Mode::Replay && options.transcripts_dir.empty())
        throw UsageError("replay mode requires --transcripts");
    if (options.mode == Mode::Record && options.transcripts_dir.empty())
        throw UsageError("record mode requires --transcripts");
    if (options.mode != Mode::Replay && options.scripts_dir.empty())
    {
        try
        {
            (void)remote_options_from_env();
        }
        catch (const Error& e)
        {
            throw UsageError(e.what());
        }
    }

    auto run = run_bench(cases, options);
    for (const auto& result: run.results)
        if (!result.failure.empty())
            std::cerr << "case " << result.id << " failed: " << result.failure << "\n";
    const auto& s = run.summary;
    std::cout << "cases: " << s.n_cases << " (ran " << run.executed << ", pending " << s.pending << ")\n";
    std::cout << "correct: " << s.correct << ", failures: " << s.failures << "\n";
    std::cout << "results: " << (fs::path(args.out) / "results.jsonl").string() << "\n";
    char line[64];
    std::snprintf(line, sizeof line, "accuracy: %.3f", s.accuracy);
    std::cout << line << std::endl;
    return s.failures ? exit_failed : exit_ok;
}

// --- ingest -------------------------------------------------------------

struct IngestArgs
{
    std::string csv;
    std::string db;
    std::string table;
    std::string source = "local";
    std::string compat;
    std::string config_out;
};

int cmd_ingest(const IngestArgs& args)
{
    auto records = std::vector<std::vector<std::string>> {};
    try
    {
        records = parse_csv(read_text(args.csv));
    }
    catch (const Error& e)
    {
        throw UsageError(args.csv + ": " + e.what());
    }
    if (records.size() < 2)
        throw UsageError(args.csv + ": needs a header and at least one row");

    auto table = TableData {};
    table.name = args.table.empty() ? fs::path(args.csv).stem().string() : args.table;
    table.columns = records.front();
    table.rows.assign(records.begin() + 1, records.end());

    auto ingested = IngestedCase {};
    try
    {
        ingested = ingest_table(table, args.db, args.source, Settings {});
    }
    catch (const Error& e)
    {
        throw UsageError(e.what());
    }
    if (!args.compat.empty())
        ingested.config.sources.front().connection["compat"] = args.compat;
    auto diagnostics = validate(ingested.config);
    for (const auto& d: diagnostics)
        if (d.severity == Severity::Error)
            throw UsageError(d.path + ": " + d.message);

    auto fragment = serialize_config(ingested.config);
    if (!args.config_out.empty())
        write_text(args.config_out, fragment);
    else
        std::cout << fragment;
    std::cout << "ingested " << table.rows.size() << " rows into table " << ingested.table << " of " << args.db
              << std::endl;
    return exit_ok;
}

// --- config -------------------------------------------------------------

int cmd_config_validate(const std::string& path)
{
    auto config = load(path);
    auto warnings = 0;
    for (const auto& d: validate(config))
    {
        std::cout << (d.severity == Severity::Error ? "error: " : "warning: ") << d.path << ": " << d.message << "\n";
        warnings += d.severity == Severity::Warning;
    }
    std::cout << "ok: " << config.sources.size() << " sources, " << config.tools.size() << " tools, "
              << config.toolsets.size() << " toolsets, " << warnings << " warnings" << std::endl;
    return exit_ok;
}

int cmd_tools_list(const std::string& path)
{
    auto config = load(path);
    auto describe = [&](const ToolDecl& tool) {
        const auto* source = config.find_source(tool.source);
        std::cout << "  - " << tool.name << " (" << to_string(tool.kind) << ", source " << tool.source;
        if (source)
            std::cout << ", " << to_string(source->kind);
        std::cout << ")\n";
    };
    auto grouped = std::set<std::string> {};
    for (const auto& toolset: config.toolsets)
    {
        std::cout << toolset.name << ":\n";
        for (const auto& tool: resolve_toolset(config, toolset.name))
        {
            describe(tool);
            grouped.insert(tool.name);
        }
    }
    auto loose = std::vector<ToolDecl> {};
    for (const auto& tool: config.tools)
        if (!grouped.contains(tool.name))
            loose.push_back(tool);
    if (!loose.empty())
    {
        std::cout << "(no toolset):\n";
        for (const auto& tool: loose)
            describe(tool);
    }
    std::cout << config.toolsets.size() << " toolsets, " << config.tools.size() << " tools" << std::endl;
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    auto app = CLI::App { "Checks natural-language claims against SQL data sources." };
    app.require_subcommand(1);

    auto verifyArgs = VerifyArgs {};
    auto* verify = app.add_subcommand("verify", "Verify one claim and write its report");
    verify->add_option("--config", verifyArgs.config, "Toolbox configuration")->required();
    verify->add_option("--claim", verifyArgs.claim, "Claim text");
    verify->add_option("--claim-file", verifyArgs.claim_file, "File holding the claim text");
    verify->add_option("--context", verifyArgs.context, "Free-text context, such as when the claim was made");
    verify->add_option("--mode", verifyArgs.mode, "live, record or replay")->required();
    verify->add_option("--transcript", verifyArgs.transcript, "Transcript to record to or replay from");
    verify->add_option("--script", verifyArgs.script, "Scripted responses used in place of the endpoint");
    verify->add_option("--out", verifyArgs.out, "Directory for report.md and report.json");

    auto benchArgs = BenchArgs {};
    auto* bench = app.add_subcommand("bench", "Run a table fact-verification benchmark");
    bench->add_option("--config", benchArgs.config, "Configuration supplying settings");
    bench->add_option("--cases", benchArgs.cases, "Line-delimited cases file")->required();
    bench->add_option("--mode", benchArgs.mode, "live, record or replay")->required();
    bench->add_option("--parallelism", benchArgs.parallelism, "Cases verified at once")->check(CLI::PositiveNumber);
    bench->add_flag("--resume", benchArgs.resume, "Keep finished results and run only the rest");
    bench->add_option("--out", benchArgs.out, "Output directory")->required();
    bench->add_option("--transcripts", benchArgs.transcripts, "Directory of per-case transcripts");
    bench->add_option("--scripts", benchArgs.scripts, "Directory of per-case scripts");
    bench->add_option("--limit", benchArgs.limit, "Run at most this many pending cases")->check(CLI::PositiveNumber);

    auto ingestArgs = IngestArgs {};
    auto* ingest = app.add_subcommand("ingest", "Load a CSV file into a sqlite source");
    ingest->add_option("--csv", ingestArgs.csv, "Input CSV with a header row")->required();
    ingest->add_option("--db", ingestArgs.db, "sqlite file to create")->required();
    ingest->add_option("--table", ingestArgs.table, "Table name (defaults to the file name)");
    ingest->add_option("--source", ingestArgs.source, "Source name in the config fragment");
    ingest->add_option("--compat", ingestArgs.compat, "Accept another dialect's spellings (postgres)");
    ingest->add_option("--config-out", ingestArgs.config_out, "Write the config fragment here");

    auto configPath = std::string {};
    auto* configValidate = app.add_subcommand("config-validate", "Check a toolbox configuration");
    configValidate->add_option("--config", configPath, "Toolbox configuration")->required();
    auto* toolsList = app.add_subcommand("tools-list", "Print toolsets and their tools");
    toolsList->add_option("--config", configPath, "Toolbox configuration")->required();

    auto replayConfig = std::string {}, replayTranscript = std::string {}, replayOut = std::string {};
    auto* replay = app.add_subcommand("replay", "Re-run a recorded verification offline");
    replay->add_option("--config", replayConfig, "Toolbox configuration")->required();
    replay->add_option("--transcript", replayTranscript, "Recorded transcript")->required();
    replay->add_option("--out", replayOut, "Directory for report.md and report.json");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        (void)app.exit(e);
        return exit_usage;
    }

    try
    {
        if (verify->parsed())
            return cmd_verify(verifyArgs);
        if (bench->parsed())
            return cmd_bench(benchArgs);
        if (ingest->parsed())
            return cmd_ingest(ingestArgs);
        if (configValidate->parsed())
            return cmd_config_validate(configPath);
        if (toolsList->parsed())
            return cmd_tools_list(configPath);
        if (replay->parsed())
            return cmd_replay(replayConfig, replayTranscript, replayOut);
    }
    catch (const UsageError& e)
    {
        std::cerr << "error: " << e.what() << std::endl;
        return exit_usage;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << std::endl;
        return exit_failed;
    }
    return exit_usage;
}
