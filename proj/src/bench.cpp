// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/bench.hpp>
#include <claimcheck/error.hpp>

#include <sqlite3.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace claimcheck
{

std::string_view to_string(Label label)
{
    return label == Label::Entailed ? "entailed" : "refuted";
}

std::optional<Label> parse_label(std::string_view text)
{
    if (text == "entailed")
        return Label::Entailed;
    if (text == "refuted")
        return Label::Refuted;
    return std::nullopt;
}

Label map_verdict(Verdict verdict)
{
    return verdict == Verdict::Verified ? Label::Entailed : Label::Refuted;
}

// --- cases --------------------------------------------------------------

namespace
{

BenchCase case_from_json(const nlohmann::json& json)
{
    if (!json.is_object())
        throw Error("record must be a JSON object");
    auto c = BenchCase {};
    c.id = json.at("id").get<std::string>();
    static const auto idPattern = std::regex("[A-Za-z0-9._-]+");
    if (!std::regex_match(c.id, idPattern))
        throw Error("id `" + c.id + "` may only contain letters, digits, `.`, `_` and `-`");
    c.caption = json.value("caption", "");
    c.columns = json.at("columns").get<std::vector<std::string>>();
    c.rows = json.at("rows").get<std::vector<std::vector<std::string>>>();
    c.claim = json.at("claim").get<std::string>();
    auto gold = parse_label(json.at("gold").get<std::string>());
    if (!gold)
        throw Error("gold must be `entailed` or `refuted`");
    c.gold = *gold;

    if (c.columns.empty())
        throw Error("case " + c.id + " has no columns");
    if (c.rows.empty())
        throw Error("case " + c.id + " has an empty table");
    for (std::size_t i = 0; i < c.rows.size(); ++i)
        if (c.rows[i].size() != c.columns.size())
            throw Error("case " + c.id + ": row " + std::to_string(i + 1) + " has " + std::to_string(c.rows[i].size())
                        + " cells, expected " + std::to_string(c.columns.size()));
    if (c.claim.find_first_not_of(" \t\r\n") == std::string::npos)
        throw Error("case " + c.id + " has an empty claim");
    return c;
}

} // namespace

std::vector<BenchCase> parse_cases(std::string_view text)
{
    auto cases = std::vector<BenchCase> {};
    auto ids = std::set<std::string> {};
    auto in = std::istringstream(std::string(text));
    auto lineNo = 0;
    for (std::string line; std::getline(in, line);)
    {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            auto c = case_from_json(nlohmann::json::parse(line));
            if (!ids.insert(c.id).second)
                throw Error("duplicate case id `" + c.id + "`");
            cases.push_back(std::move(c));
        }
        catch (const std::exception& e)
        {
            throw Error("line " + std::to_string(lineNo) + ": " + e.what());
        }
    }
    return cases;
}

std::vector<BenchCase> load_cases(const std::string& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error("cannot read cases file " + path);
    try
    {
        return parse_cases(std::string(std::istreambuf_iterator<char>(in), {}));
    }
    catch (const Error& e)
    {
        throw Error(path + ": " + e.what());
    }
}

// --- ingestion ----------------------------------------------------------

std::string sanitize_identifier(std::string_view name, std::string_view prefix, std::string_view fallback)
{
    auto out = std::string {};
    auto gap = false;
    for (unsigned char c: name)
    {
        if (std::isalnum(c))
        {
            if (gap && !out.empty())
                out += '_';
            out += static_cast<char>(std::tolower(c));
            gap = false;
        }
        else
        {
            gap = true;
        }
    }
    if (out.empty())
        return std::string(fallback);
    if (std::isdigit(static_cast<unsigned char>(out.front())))
        out = std::string(prefix) + out;
    return out;
}

namespace
{

struct Parsed
{
    bool ok = false;
    bool integral = false;
    double number = 0;
    std::int64_t integer = 0;
};

std::string trim(std::string_view text)
{
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos)
        return {};
    auto end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

Parsed parse_number(std::string_view cell)
{
    static const auto grouped = std::regex(R"([+-]?\d{1,3}(,\d{3})+(\.\d+)?)");
    static const auto plain = std::regex(R"([+-]?(\d+(\.\d*)?|\.\d+))");
    auto text = trim(cell);
    if (std::regex_match(text, grouped))
        text.erase(std::remove(text.begin(), text.end(), ','), text.end());
    else if (!std::regex_match(text, plain))
        return {};
    auto parsed = Parsed { true };
    parsed.integral = text.find('.') == std::string::npos;
    parsed.number = std::strtod(text.c_str(), nullptr);
    if (parsed.integral)
    {
        errno = 0;
        parsed.integer = std::strtoll(text.c_str(), nullptr, 10);
        if (errno == ERANGE)
            parsed.integral = false;
    }
    return parsed;
}

std::optional<std::string> parse_date(std::string_view cell)
{
    static const char* months[] = { "january", "february", "march",     "april",   "may",      "june",
                                    "july",    "august",   "september", "october", "november", "december" };
    static const auto iso = std::regex(R"((\d{4})-(\d{2})-(\d{2}))");
    static const auto monthFirst = std::regex(R"(([a-z]+)\.?\s+(\d{1,2})\s*,?\s+(\d{4}))");
    static const auto dayFirst = std::regex(R"((\d{1,2})\s+([a-z]+)\.?\s*,?\s+(\d{4}))");

    auto text = trim(cell);
    for (auto& c: text)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto month = 0, day = 0, year = 0;
    auto monthNumber = [&](const std::string& name) {
        for (int i = 0; i < 12; ++i)
            if (name == months[i] || (name.size() == 3 && std::string_view(months[i]).substr(0, 3) == name)
                || (name == "sept" && i == 8))
                return i + 1;
        return 0;
    };
    auto m = std::smatch {};
    if (std::regex_match(text, m, iso))
    {
        year = std::stoi(m[1]);
        month = std::stoi(m[2]);
        day = std::stoi(m[3]);
    }
    else if (std::regex_match(text, m, monthFirst))
    {
        month = monthNumber(m[1]);
        day = std::stoi(m[2]);
        year = std::stoi(m[3]);
    }
    else if (std::regex_match(text, m, dayFirst))
    {
        day = std::stoi(m[1]);
        month = monthNumber(m[2]);
        year = std::stoi(m[3]);
    }
    else
    {
        return std::nullopt;
    }
    static const int lengths[] = { 31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31 };
    if (month < 1 || month > 12 || day < 1 || day > lengths[month - 1])
        return std::nullopt;
    auto leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    if (month == 2 && day == 29 && !leap)
        return std::nullopt;
    char buffer[48];
    std::snprintf(buffer, sizeof buffer, "%04d-%02d-%02d", year, month, day);
    return std::string(buffer);
}

std::string quote(std::string_view identifier)
{
    auto out = std::string("\"");
    for (char c: identifier)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

class Db
{
  public:
    explicit Db(const std::string& path)
    {
        if (sqlite3_open_v2(path.c_str(), &_db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK)
        {
            auto message = std::string(_db ? sqlite3_errmsg(_db) : "out of memory");
            sqlite3_close(_db);
            throw Error("cannot create " + path + ": " + message);
        }
    }
    ~Db() { sqlite3_close(_db); }
    Db(const Db&) = delete;
    Db& operator=(const Db&) = delete;

    void exec(const std::string& sql)
    {
        char* message = nullptr;
        if (sqlite3_exec(_db, sql.c_str(), nullptr, nullptr, &message) != SQLITE_OK)
        {
            auto text = std::string(message ? message : "unknown error");
            sqlite3_free(message);
            throw Error("ingest: " + text);
        }
    }

    sqlite3* get() const noexcept { return _db; }

  private:
    sqlite3* _db = nullptr;
};

} // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text)
{
    auto records = std::vector<std::vector<std::string>> {};
    auto record = std::vector<std::string> {};
    auto field = std::string {};
    auto quoted = false;
    auto line = 1, quoteLine = 0;
    auto started = false;
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        char c = text[i];
        if (quoted)
        {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"')
            {
                field += '"';
                ++i;
            }
            else if (c == '"')
                quoted = false;
            else
            {
                line += c == '\n';
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty())
        {
            quoted = true;
            quoteLine = line;
            started = true;
        }
        else if (c == ',')
        {
            record.push_back(std::move(field));
            field.clear();
            started = true;
        }
        else if (c == '\n' || c == '\r')
        {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            ++line;
            if (started || !field.empty())
            {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            field.clear();
            record.clear();
            started = false;
        }
        else
        {
            field += c;
            started = true;
        }
    }
    if (quoted)
        throw Error("unterminated quoted field starting on line " + std::to_string(quoteLine));
    if (started || !field.empty())
    {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

IngestedCase ingest_case(const BenchCase& bench_case, const std::string& db_path, const Settings& settings)
{
    auto name = sanitize_identifier(bench_case.caption, "t_", "case_table");
    if (name.size() > 48)
        name = sanitize_identifier(name.substr(0, 48), "t_", "case_table");
    return ingest_table({ name, bench_case.caption, bench_case.columns, bench_case.rows }, db_path,
                        std::string(bench_source), settings);
}

IngestedCase ingest_table(const TableData& table, const std::string& db_path, const std::string& source,
                          const Settings& settings)
{
    if (table.columns.empty() || table.rows.empty())
        throw Error("table " + table.name + " is empty");
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        if (table.rows[r].size() != table.columns.size())
            throw Error("table " + table.name + ": row " + std::to_string(r + 1) + " has "
                        + std::to_string(table.rows[r].size()) + " cells, expected " + std::to_string(table.columns.size()));

    auto ingested = IngestedCase {};
    ingested.table = sanitize_identifier(table.name, "t_", "case_table");

    auto taken = std::set<std::string> {};
    auto claim_name = [&](std::string base) {
        auto name = base;
        for (int n = 2; !taken.insert(name).second; ++n)
            name = base + "_" + std::to_string(n);
        return name;
    };
    for (const auto& original: table.columns)
        ingested.columns.push_back({ original, claim_name(sanitize_identifier(original, "c_", "column")) });

    // Typed siblings.
    auto numbers = std::vector<std::vector<Parsed>>(table.columns.size());
    auto dates = std::vector<std::vector<std::optional<std::string>>>(table.columns.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c)
    {
        auto nonempty = std::size_t { 0 }, numeric = std::size_t { 0 }, dated = std::size_t { 0 };
        auto integral = true;
        for (const auto& row: table.rows)
        {
            numbers[c].push_back(parse_number(row[c]));
            dates[c].push_back(parse_date(row[c]));
            if (trim(row[c]).empty())
                continue;
            ++nonempty;
            if (numbers[c].back().ok)
            {
                ++numeric;
                integral = integral && numbers[c].back().integral;
            }
            if (dates[c].back())
                ++dated;
        }
        if (!nonempty)
            continue;
        auto& column = ingested.columns[c];
        if (numeric * 100 >= nonempty * 95)
        {
            column.typed_name = claim_name(column.name + "_num");
            column.typed_kind = integral ? "INTEGER" : "REAL";
        }
        else if (dated * 100 >= nonempty * 95)
        {
            column.typed_name = claim_name(column.name + "_date");
            column.typed_kind = "DATE";
        }
    }

    std::error_code ignored;
    fs::remove(db_path, ignored);
    if (auto parent = fs::path(db_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    {
        auto db = Db(db_path);
        auto create = "CREATE TABLE " + quote(ingested.table) + " (";
        auto insert = "INSERT INTO " + quote(ingested.table) + " VALUES (";
        auto slots = 0;
        for (const auto& column: ingested.columns)
        {
            create += (slots ? ", " : "") + quote(column.name) + " TEXT";
            insert += slots++ ? ", ?" : "?";
            if (!column.typed_name.empty())
            {
                create += ", " + quote(column.typed_name) + " " + column.typed_kind;
                insert += ", ?";
                ++slots;
            }
        }
        db.exec(create + ")");
        db.exec("BEGIN");

        sqlite3_stmt* stmt = nullptr;
        if (sqlite3_prepare_v2(db.get(), (insert + ")").c_str(), -1, &stmt, nullptr) != SQLITE_OK)
            throw Error(std::string("ingest: ") + sqlite3_errmsg(db.get()));
        for (std::size_t r = 0; r < table.rows.size(); ++r)
        {
            sqlite3_reset(stmt);
            auto slot = 1;
            for (std::size_t c = 0; c < ingested.columns.size(); ++c)
            {
                const auto& cell = table.rows[r][c];
                sqlite3_bind_text(stmt, slot++, cell.data(), static_cast<int>(cell.size()), SQLITE_TRANSIENT);
                const auto& column = ingested.columns[c];
                if (column.typed_name.empty())
                    continue;
                const auto& number = numbers[c][r];
                if (column.typed_kind == "DATE")
                {
                    if (const auto& date = dates[c][r])
                        sqlite3_bind_text(stmt, slot, date->data(), static_cast<int>(date->size()), SQLITE_TRANSIENT);
                    else
                        sqlite3_bind_null(stmt, slot);
                }
                else if (!number.ok)
                    sqlite3_bind_null(stmt, slot);
                else if (column.typed_kind == "INTEGER")
                    sqlite3_bind_int64(stmt, slot, number.integer);
                else
                    sqlite3_bind_double(stmt, slot, number.number);
                ++slot;
            }
            if (sqlite3_step(stmt) != SQLITE_DONE)
            {
                auto message = std::string(sqlite3_errmsg(db.get()));
                sqlite3_finalize(stmt);
                throw Error("ingest: " + message);
            }
        }
        sqlite3_finalize(stmt);
        db.exec("COMMIT");
    }

    auto& note = ingested.mapping_note;
    note = "The table for this claim is `" + ingested.table + "` in source `" + source + "`";
    note += table.caption.empty() ? "." : " (caption: " + table.caption + ").";
    note += " Column names were sanitized:";
    auto typed = std::string {};
    for (std::size_t c = 0; c < ingested.columns.size(); ++c)
    {
        const auto& column = ingested.columns[c];
        note += (c ? ", `" : " `") + column.name + "` is \"" + column.original + "\"";
        if (!column.typed_name.empty())
            typed += (typed.empty() ? " `" : ", `") + column.typed_name + "` holds the "
                     + (column.typed_kind == "DATE" ? "ISO dates" : "numbers") + " parsed from `" + column.name + "`";
    }
    note += ".";
    if (!typed.empty())
        note += " Typed copies:" + typed + ".";
    note += " All other cells are stored as text exactly as given.";

    auto& config = ingested.config;
    config.sources.push_back({ source, Dialect::Sqlite, { { "path", db_path } } });
    config.tools = {
        { source + "_sql", ToolKind::ExecuteSql, source },
        { source + "_tables", ToolKind::ListTables, source },
        { source + "_describe", ToolKind::DescribeTable, source },
    };
    config.toolsets = { { "sql", { source + "_sql" } }, { "schema", { source + "_tables", source + "_describe" } } };
    config.settings = settings;
    return ingested;
}

// --- results ------------------------------------------------------------

nlohmann::json to_json(const BenchResult& result)
{
    return {
        { "id", result.id },
        { "gold", to_string(result.gold) },
        { "verdict", result.verdict ? nlohmann::json(to_string(*result.verdict)) : nlohmann::json() },
        { "predicted", result.predicted ? nlohmann::json(to_string(*result.predicted)) : nlohmann::json() },
        { "correct", result.correct },
        { "failure", result.failure },
        { "flags", result.flags },
        { "usage", { { "input_tokens", result.usage.input_tokens }, { "output_tokens", result.usage.output_tokens } } },
        { "cost", result.cost },
        { "latency_ms", result.latency_ms },
    };
}

BenchResult bench_result_from_json(const nlohmann::json& json)
{
    auto result = BenchResult {};
    result.id = json.at("id").get<std::string>();
    auto gold = parse_label(json.at("gold").get<std::string>());
    if (!gold)
        throw Error("bad gold label");
    result.gold = *gold;
    if (!json.at("verdict").is_null())
    {
        result.verdict = verdict_from_label(json["verdict"].get<std::string>());
        if (!result.verdict)
            throw Error("bad verdict");
    }
    if (!json.at("predicted").is_null())
        result.predicted = parse_label(json["predicted"].get<std::string>());
    result.correct = json.at("correct").get<bool>();
    result.failure = json.value("failure", "");
    result.flags = json.value("flags", std::vector<std::string> {});
    result.usage = { json.at("usage").value("input_tokens", std::int64_t { 0 }),
                     json.at("usage").value("output_tokens", std::int64_t { 0 }) };
    result.cost = json.value("cost", 0.0);
    result.latency_ms = json.value("latency_ms", 0.0);
    return result;
}

nlohmann::json to_json(const BenchSummary& summary)
{
    return {
        { "n_cases", summary.n_cases },
        { "correct", summary.correct },
        { "failures", summary.failures },
        { "pending", summary.pending },
        { "accuracy", summary.accuracy },
        { "tokens",
          { { "input", summary.tokens.input_tokens },
            { "output", summary.tokens.output_tokens },
            { "mean_per_case", summary.mean_tokens } } },
        { "cost", { { "total", summary.total_cost }, { "per_case", summary.cost_per_case } } },
    };
}

BenchSummary summarize(const std::vector<BenchCase>& cases, const std::vector<BenchResult>& results)
{
    auto byId = std::map<std::string, const BenchResult*> {};
    for (const auto& result: results)
        byId[result.id] = &result;
    auto summary = BenchSummary {};
    for (const auto& c: cases)
    {
        auto it = byId.find(c.id);
        if (it == byId.end())
        {
            ++summary.pending;
            continue;
        }
        const auto& result = *it->second;
        ++summary.n_cases;
        summary.correct += result.correct ? 1 : 0;
        summary.failures += result.failure.empty() ? 0 : 1;
        summary.tokens += result.usage;
        summary.total_cost += result.cost;
    }
    if (summary.n_cases)
    {
        auto n = static_cast<double>(summary.n_cases);
        summary.accuracy = static_cast<double>(summary.correct) / n;
        summary.mean_tokens = static_cast<double>(summary.tokens.input_tokens + summary.tokens.output_tokens) / n;
        summary.cost_per_case = summary.total_cost / n;
    }
    return summary;
}

// --- running ------------------------------------------------------------

BenchResult run_case(const BenchCase& bench_case, const BenchOptions& options)
{
    auto started = std::chrono::steady_clock::now();
    auto result = BenchResult { bench_case.id, bench_case.gold };
    try
    {
        auto ingested = ingest_case(bench_case, (fs::path(options.out_dir) / "cases" / (bench_case.id + ".db")).string(),
                                    options.settings);
        auto claim = Claim { bench_case.claim, ingested.mapping_note };

        auto setup = ProviderSetup { options.mode };
        if (!options.transcripts_dir.empty())
            setup.transcript = (fs::path(options.transcripts_dir) / (bench_case.id + ".jsonl")).string();
        if (!options.scripts_dir.empty())
            setup.script = (fs::path(options.scripts_dir) / (bench_case.id + ".json")).string();
        setup.meta = { utc_timestamp(), options.settings.verifier_model, options.settings.expert_model, claim.text,
                       claim.context };
        if (options.mode == Mode::Record && !options.transcripts_dir.empty())
            fs::create_directories(options.transcripts_dir);

        auto handle = make_provider(setup);
        auto pool = std::make_shared<SourcePool>(ingested.config.sources);
        auto environment = make_environment(ingested.config, pool, handle.provider);
        auto verification = verify(claim, environment, setup.transcript);
        pool->close_all();

        const auto& report = verification.report;
        result.verdict = report.verdict;
        result.predicted = map_verdict(report.verdict);
        result.correct = *result.predicted == bench_case.gold;
        result.flags = report.flags;
        for (const auto& [model, usage]: report.usage)
            result.usage += usage;
        result.cost = report.cost_estimate;
    }
    catch (const std::exception& e)
    {
        result.failure = e.what();
        result.correct = false;
    }
    result.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return result;
}

BenchRun run_bench(const std::vector<BenchCase>& cases, const BenchOptions& options)
{
    if (options.parallelism < 1)
        throw Error("parallelism must be at least 1");
    if (options.out_dir.empty())
        throw Error("bench needs an output directory");
    fs::create_directories(options.out_dir);
    auto resultsPath = fs::path(options.out_dir) / "results.jsonl";

    auto done = std::map<std::string, BenchResult> {};
    if (options.resume && fs::exists(resultsPath))
    {
        auto in = std::ifstream(resultsPath, std::ios::binary);
        auto text = std::string(std::istreambuf_iterator<char>(in), {});
        in.close();
        // A line without its newline was cut off mid-write; drop it.
        auto complete = text.rfind('\n');
        complete = complete == std::string::npos ? 0 : complete + 1;
        if (complete != text.size())
        {
            text.resize(complete);
            fs::resize_file(resultsPath, complete);
        }
        auto lines = std::istringstream(text);
        auto lineNo = 0;
        for (std::string line; std::getline(lines, line);)
        {
            ++lineNo;
            if (line.empty())
                continue;
            try
            {
                auto result = bench_result_from_json(nlohmann::json::parse(line));
                done[result.id] = std::move(result);
            }
            catch (const std::exception& e)
            {
                throw Error(resultsPath.string() + " line " + std::to_string(lineNo) + ": " + e.what());
            }
        }
    }
    else
    {
        std::ofstream(resultsPath, std::ios::trunc);
    }

    auto pending = std::vector<const BenchCase*> {};
    for (const auto& c: cases)
        if (!done.contains(c.id))
            pending.push_back(&c);
    if (options.limit && pending.size() > *options.limit)
        pending.resize(*options.limit);

    auto out = std::ofstream(resultsPath, std::ios::binary | std::ios::app);
    if (!out)
        throw Error("cannot append to " + resultsPath.string());
    auto mutex = std::mutex {};
    auto next = std::atomic<std::size_t> { 0 };
    auto worker = [&] {
        for (auto i = next++; i < pending.size(); i = next++)
        {
            auto result = run_case(*pending[i], options);
            auto lock = std::scoped_lock(mutex);
            out << to_json(result).dump() << '\n';
            out.flush();
            done[result.id] = std::move(result);
        }
    };
    auto threads = std::vector<std::thread> {};
    for (std::size_t t = 0; t < std::min(options.parallelism, pending.size()); ++t)
        threads.emplace_back(worker);
    for (auto& thread: threads)
        thread.join();
    out.close();

    auto run = BenchRun {};
    run.executed = pending.size();
    for (const auto& c: cases)
        if (auto it = done.find(c.id); it != done.end())
            run.results.push_back(it->second);
    run.summary = summarize(cases, run.results);

    auto summaryOut = std::ofstream(fs::path(options.out_dir) / "summary.json", std::ios::binary | std::ios::trunc);
    summaryOut << to_json(run.summary).dump(2) << '\n';
    return run;
}

} // namespace claimcheck
