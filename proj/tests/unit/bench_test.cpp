// SPDX-License-Identifier: Apache-2.0
#include <claimcheck/bench.hpp>
#include <claimcheck/error.hpp>

#include <doctest.h>
#include <test_support.hpp>

#include <set>
#include <sstream>

using namespace claimcheck;
using namespace claimcheck::testing;

namespace
{

std::string case_line(const std::string& id, const std::string& gold = "entailed")
{
    return R"({"id":")" + id + R"(","caption":"t","columns":["a","b"],"rows":[["1","2"]],"claim":"a is 1","gold":")" + gold
           + R"("})";
}

QueryResult query(const IngestedCase& ingested, const std::string& sql)
{
    auto pool = SourcePool(ingested.config.sources);
    return pool.handle(ingested.config.sources.at(0).name).execute_sql(sql, 1000);
}

BenchOptions replay_options(const TempDir& dir, std::size_t parallelism = 1)
{
    auto options = BenchOptions {};
    options.out_dir = dir.file("out");
    options.parallelism = parallelism;
    options.mode = Mode::Replay;
    options.transcripts_dir = fixture("bench/transcripts");
    return options;
}

std::vector<std::string> lines_of(const std::string& path)
{
    auto in = std::istringstream(read_file(path));
    auto lines = std::vector<std::string> {};
    for (std::string line; std::getline(in, line);)
        if (!line.empty())
            lines.push_back(line);
    return lines;
}

} // namespace

TEST_CASE("verdicts map to two labels, partial verdicts count as refuted")
{
    CHECK(map_verdict(Verdict::Verified) == Label::Entailed);
    CHECK(map_verdict(Verdict::PartlyVerified) == Label::Refuted);
    CHECK(map_verdict(Verdict::PartlyInaccurate) == Label::Refuted);
    CHECK(map_verdict(Verdict::Inaccurate) == Label::Refuted);
    CHECK(parse_label("entailed") == Label::Entailed);
    CHECK(to_string(Label::Refuted) == "refuted");
    CHECK_FALSE(parse_label("neutral"));
}

TEST_CASE("bench cases file")
{
    auto cases = load_cases(fixture("bench/cases.jsonl"));
    REQUIRE(cases.size() == 20);
    auto ids = std::set<std::string> {};
    auto entailed = 0;
    for (const auto& c: cases)
    {
        ids.insert(c.id);
        entailed += c.gold == Label::Entailed ? 1 : 0;
        CHECK_FALSE(c.claim.empty());
    }
    CHECK(ids.size() == 20);
    CHECK(entailed == 9);
    CHECK(cases[0].columns == std::vector<std::string> { "Rank", "Athlete", "Country", "Time" });

    auto parsed = parse_cases(case_line("a") + "\n\n" + case_line("b", "refuted") + "\n");
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1].gold == Label::Refuted);
    CHECK(parsed[0].rows == std::vector<std::vector<std::string>> { { "1", "2" } });
}

TEST_CASE("malformed cases name their line")
{
    auto good = case_line("a") + "\n" + case_line("b") + "\n";
    CHECK_THROWS_WITH_AS((void)parse_cases(good + "{not json\n"), doctest::Contains("line 3: "), Error);
    CHECK_THROWS_WITH_AS((void)parse_cases(good + case_line("a")), "line 3: duplicate case id `a`", Error);
    CHECK_THROWS_WITH_AS((void)parse_cases(case_line("a", "maybe")), "line 1: gold must be `entailed` or `refuted`", Error);
    CHECK_THROWS_AS((void)parse_cases(case_line("../escape")), Error);
    CHECK_THROWS_WITH_AS((void)parse_cases(R"({"id":"r","columns":["a","b"],"rows":[["1"]],"claim":"c","gold":"refuted"})"),
                         doctest::Contains("row 1 has 1"), Error);
    CHECK_THROWS_AS((void)parse_cases(R"({"id":"r","columns":["a"],"rows":[["1"]],"claim":" ","gold":"refuted"})"), Error);
    CHECK_THROWS_AS((void)load_cases("fixtures/bench/no_such_file.jsonl"), Error);
}

TEST_CASE("identifiers are sanitized for SQL")
{
    CHECK(sanitize_identifier("NIBRS Group AB", "c_", "column") == "nibrs_group_ab");
    CHECK(sanitize_identifier("Share (%)", "c_", "column") == "share");
    CHECK(sanitize_identifier("  Length (m) ", "c_", "column") == "length_m");
    CHECK(sanitize_identifier("2019", "c_", "column") == "c_2019");
    CHECK(sanitize_identifier("!!!", "c_", "column") == "column");
    CHECK(sanitize_identifier("highest grossing films of 2009", "t_", "case_table") == "highest_grossing_films_of_2009");
}

TEST_CASE("CSV parsing follows the quoting rules")
{
    auto rows = parse_csv("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\n1,,3");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string> { "a", "b", "c" });
    CHECK(rows[1] == std::vector<std::string> { "x, y", "say \"hi\"", "two\nlines" });
    CHECK(rows[2] == std::vector<std::string> { "1", "", "3" });
    CHECK(parse_csv("a\n\n").size() == 1);
    CHECK_THROWS_WITH_AS((void)parse_csv("a\n\"open,b\nc"), "unterminated quoted field starting on line 2", Error);
}

TEST_CASE("ingestion keeps text and adds typed columns")
{
    auto dir = TempDir {};
    auto table = TableData { "offenses", "offense summary", { "NIBRS Group AB", "Count", "Date", "Year", "year", "Mixed" } };
    for (int i = 0; i < 20; ++i)
        table.rows.push_back({ "A", std::to_string(1000 + i * 100), "June " + std::to_string(i + 1) + ", 2010",
                               std::to_string(2000 + i), "x", i < 18 ? std::to_string(i) : "n/a" });
    table.rows[3][1] = "1,250";
    table.rows[4][1] = "unknown";
    table.rows[5][3] = "";
    auto ingested = ingest_table(table, dir.file("t.db"), "local", Settings {});

    REQUIRE(ingested.columns.size() == 6);
    CHECK(ingested.table == "offenses");
    CHECK(ingested.columns[0].name == "nibrs_group_ab");
    CHECK(ingested.columns[0].typed_name.empty());
    // 19 of 20 cells are numbers: exactly 95%.
    CHECK(ingested.columns[1].typed_name == "count_num");
    CHECK(ingested.columns[1].typed_kind == "INTEGER");
    CHECK(ingested.columns[2].typed_name == "date_date");
    CHECK(ingested.columns[2].typed_kind == "DATE");
    // Empty cells do not count against the threshold.
    CHECK(ingested.columns[3].typed_name == "year_num");
    CHECK(ingested.columns[4].name == "year_2");
    // 18 of 20 is below the threshold.
    CHECK(ingested.columns[5].typed_name.empty());

    auto result = query(ingested, "SELECT count, count_num, date_date, year_num FROM offenses WHERE rowid IN (4, 5, 6) ORDER BY rowid");
    REQUIRE(result.rows.size() == 3);
    CHECK(result.rows[0] == Row { std::string("1,250"), std::int64_t { 1250 }, std::string("2010-06-04"), std::int64_t { 2003 } });
    CHECK(result.rows[1][0] == Value { std::string("unknown") });
    CHECK(result.rows[1][1] == Value { std::monostate {} });
    CHECK(result.rows[2][3] == Value { std::monostate {} });

    CHECK(ingested.mapping_note.rfind("The table for this claim is `offenses` in source `local` (caption: offense summary). "
                                      "Column names were sanitized: `nibrs_group_ab` is \"NIBRS Group AB\", `count` is \"Count\"",
                                      0)
          == 0);
    CHECK(ingested.mapping_note.find("`count_num` holds the numbers parsed from `count`") != std::string::npos);
    CHECK(ingested.mapping_note.find("`date_date` holds the ISO dates parsed from `date`") != std::string::npos);

    CHECK(ingested.config.find_tool("local_sql")->kind == ToolKind::ExecuteSql);
    CHECK(resolve_toolset(ingested.config, "schema").size() == 2);
    CHECK(validate(ingested.config).empty());
}

TEST_CASE("decimal and date formats are recognized")
{
    auto dir = TempDir {};
    auto table = TableData { "m", "", { "Area", "Opened" },
                             { { "412.5", "3 June 2010" }, { "35", "2011-01-09" }, { "-1.25", "December 31, 1999" } } };
    auto ingested = ingest_table(table, dir.file("m.db"), "local", Settings {});
    CHECK(ingested.columns[0].typed_kind == "REAL");
    auto result = query(ingested, "SELECT area_num, opened_date FROM m ORDER BY rowid");
    CHECK(render_value(result.rows[0][0]) == "412.5");
    CHECK(result.rows[0][1] == Value { std::string("2010-06-03") });
    CHECK(result.rows[2][1] == Value { std::string("1999-12-31") });
}

TEST_CASE("ingested crime CSV answers the year and category query")
{
    auto dir = TempDir {};
    auto rows = parse_csv(read_file(fixture("crime/crime_data.csv")));
    auto table = TableData { "crime_data", "", rows.front(), { rows.begin() + 1, rows.end() } };
    auto ingested = ingest_table(table, dir.file("crime.db"), "seattle", Settings {});
    ingested.config.sources[0].connection["compat"] = "postgres";

    auto result = query(ingested, read_file(fixture("crime/year_category.sql")));
    REQUIRE(result.rows.size() == std::size(year_category_oracle));
    for (std::size_t i = 0; i < result.rows.size(); ++i)
        CHECK(result.rows[i][2] == Value { std::int64_t { year_category_oracle[i].incidents } });
}

TEST_CASE("bench cases are named after their caption")
{
    auto dir = TempDir {};
    auto cases = load_cases(fixture("bench/cases.jsonl"));
    auto ingested = ingest_case(cases.at(5), dir.file("c.db"), Settings {});
    CHECK(ingested.table == "t_2010_tour_dates");
    CHECK(ingested.config.sources.at(0).name == "bench");
    CHECK(ingested.config.find_tool("bench_describe"));

    auto blank = cases.at(0);
    blank.caption = "";
    CHECK(ingest_case(blank, dir.file("d.db"), Settings {}).table == "case_table");
}

TEST_CASE("bench result JSON round trip")
{
    auto result = BenchResult { "x", Label::Entailed, Verdict::PartlyVerified, Label::Refuted, false, "", { "f" }, { 10, 2 }, 0.5, 12.5 };
    auto back = bench_result_from_json(nlohmann::json::parse(to_json(result).dump()));
    CHECK(to_json(back) == to_json(result));

    auto failed = BenchResult { "y", Label::Refuted };
    failed.failure = "replay miss";
    back = bench_result_from_json(to_json(failed));
    CHECK_FALSE(back.verdict);
    CHECK(back.failure == "replay miss");
}

TEST_CASE("summary arithmetic")
{
    auto cases = std::vector<BenchCase>(4);
    for (std::size_t i = 0; i < cases.size(); ++i)
        cases[i].id = "c" + std::to_string(i);
    auto results = std::vector<BenchResult> {
        { "c0", Label::Entailed, Verdict::Verified, Label::Entailed, true, "", {}, { 100, 10 }, 0.25 },
        { "c1", Label::Refuted, Verdict::Verified, Label::Entailed, false, "", {}, { 300, 30 }, 0.75 },
        { "c2", Label::Refuted },
    };
    results[2].failure = "boom";
    auto summary = summarize(cases, results);
    CHECK(summary.n_cases == 3);
    CHECK(summary.pending == 1);
    CHECK(summary.correct == 1);
    CHECK(summary.failures == 1);
    CHECK(summary.accuracy == doctest::Approx(1.0 / 3));
    CHECK(summary.tokens == Usage { 400, 40 });
    CHECK(summary.mean_tokens == doctest::Approx(440.0 / 3));
    CHECK(summary.total_cost == doctest::Approx(1.0));
    CHECK(to_json(summary).contains("tokens"));
    CHECK_FALSE(to_json(summary).contains("latency_ms"));
}

TEST_CASE("bench replay scores every case")
{
    auto dir = TempDir {};
    auto cases = load_cases(fixture("bench/cases.jsonl"));
    auto run = run_bench(cases, replay_options(dir, 4));
    CHECK(run.executed == 20);
    CHECK(run.summary.n_cases == 20);
    CHECK(run.summary.failures == 0);
    CHECK(run.summary.accuracy == 1.0);
    CHECK(lines_of(dir.file("out/results.jsonl")).size() == 20);
    CHECK(nlohmann::json::parse(read_file(dir.file("out/summary.json"))) == to_json(run.summary));

    auto serial = TempDir {};
    CHECK(run_bench(cases, replay_options(serial, 1)).summary == run.summary);
}

TEST_CASE("bench resume runs only what is missing")
{
    auto cases = load_cases(fixture("bench/cases.jsonl"));
    auto full = TempDir {};
    auto reference = run_bench(cases, replay_options(full)).summary;

    auto dir = TempDir {};
    auto options = replay_options(dir, 2);
    options.limit = 10;
    auto first = run_bench(cases, options);
    CHECK(first.executed == 10);
    CHECK(first.summary.pending == 10);

    // A crash mid-write leaves a partial line behind.
    auto results = dir.file("out/results.jsonl");
    write_file(results, read_file(results) + "{\"id\":\"bench-1");

    options.limit.reset();
    options.resume = true;
    auto second = run_bench(cases, options);
    CHECK(second.executed == 10);
    CHECK(second.summary == reference);
    auto lines = lines_of(results);
    CHECK(lines.size() == 20);
    auto ids = std::set<std::string> {};
    for (const auto& line: lines)
        ids.insert(nlohmann::json::parse(line)["id"].get<std::string>());
    CHECK(ids.size() == 20);

    // Resuming a finished run executes nothing.
    CHECK(run_bench(cases, options).executed == 0);

    // Without resume earlier results are discarded.
    options.resume = false;
    options.limit = 3;
    CHECK(run_bench(cases, options).summary.n_cases == 3);
}

TEST_CASE("a case without a transcript fails without stopping the run")
{
    auto dir = TempDir {};
    auto cases = load_cases(fixture("bench/cases.jsonl"));
    cases.resize(2);
    cases[1].id = "no-transcript";
    auto run = run_bench(cases, replay_options(dir));
    CHECK(run.summary.failures == 1);
    CHECK(run.summary.correct == 1);
    auto missing = std::find_if(run.results.begin(), run.results.end(), [](const auto& r) { return r.id == "no-transcript"; });
    REQUIRE(missing != run.results.end());
    CHECK_FALSE(missing->failure.empty());
}
