#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the scripted model responses used by the replay fixtures.

Outputs (all deterministic):
  fixtures/claims/claims.json              claim manifest
  fixtures/claims/<name>/script.json       scripted responses per claim
  fixtures/bench/cases.jsonl               20 table/claim cases
  fixtures/bench/scripts/<id>.json         scripted responses per case

Bench gold labels are not typed in by hand. Each case carries a query and a
predicate; this script loads the table into an in-memory sqlite database the
way the C++ ingester does (its own reimplementation), runs the query and
evaluates the predicate. The scripted verdict and the gold label both follow
from that result, so a wrong query or predicate shows up as a mismatch here.

Transcripts are then recorded from these scripts with
fixtures/scripts/record_transcripts.py.
"""
import json
import os
import re
import sqlite3

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def dump(path, obj):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, ensure_ascii=False)
        f.write("\n")


def usage(step, text):
    return {"input_tokens": 800 + 150 * step, "output_tokens": 30 + len(text) // 4}


def steps(*items):
    out = []
    for i, item in enumerate(items):
        if isinstance(item, str):
            step = {"content": item}
        else:
            step = {"tool_calls": [{"name": name, "arguments": args} for name, args in item]}
        step["usage"] = usage(i, json.dumps(step))
        out.append(step)
    return out


def evidence(source, sql):
    return f"```evidence source={source}\n{sql.strip()}\n```"


def report(findings, conclusion, assumptions, blocks, verdict):
    text = "## Findings\n\n" + "".join(f"- {f}\n" for f in findings)
    text += "\n## Conclusion\n\n" + conclusion + "\n"
    if assumptions:
        text += "\n## Assumptions and notes\n\n" + "".join(f"- {a}\n" for a in assumptions)
    text += "\n## Evidence\n\n" + "\n\n".join(blocks) + "\n\nVerdict: " + verdict
    return text


# --- claims over the crime fixtures ---------------------------------------

CRIME_COLUMNS_MD = """| column | type | notes |
| --- | --- | --- |
| report_number | TEXT | primary key |
| offense_date | DATE | day the offense occurred |
| offense_category | TEXT | PROPERTY CRIME or VIOLENT CRIME |
| offense | TEXT | specific offense |
| nibrs_group_ab | TEXT | offense group code (A or B) |
| precinct | TEXT | police precinct |
| sector | TEXT | police sector letter |
| beat | TEXT | beat within the sector |
| neighborhood | TEXT | often empty |"""


def year_over_year():
    with open(os.path.join(ROOT, "crime", "year_category.sql")) as f:
        grouping = f.read().strip()
    schema_q = ("List all tables related to crime, police incidents, offense categories, "
                "or year-by-year statistics.")
    sql_q = "How many property and violent crimes occurred in 2023 and 2024?"
    schema_info = ("Source seattle, table crime_data (Postgres spellings are accepted). "
                   "offense_date is the DATE of the offense; offense_category holds "
                   "'PROPERTY CRIME' or 'VIOLENT CRIME'. Count one row per incident.")
    script = {"agents": {
        "verifier": [{"steps": steps(
            [("data_expert", {})],
            [("schema_expert", {"question": schema_q, "context_hint": "Seattle, WA"})],
            [("sql_expert", {"question": sql_q, "schema_info": schema_info})],
            report(
                ["Property crime rose from 41 incidents in 2023 to 45 in 2024.",
                 "Violent crime rose from 15 incidents in 2023 to 19 in 2024."],
                "Both categories increased from 2023 to 2024, so the data contradict a reduction "
                "in either property or violent crime.",
                ["The claim is read as a comparison of calendar year 2024 with calendar year 2023.",
                 "Incidents are counted by offense date, one row per incident."],
                [evidence("seattle", grouping)],
                "Inaccurate"),
        )}],
        "data_expert": [{"steps": steps(
            [("seattle_tables", {})],
            [("seattle_describe", {"table": "crime_data"})],
            "The source seattle holds one table, crime_data, with one row per police-reported "
            "crime incident in Seattle: the offense date, offense category and specific offense, "
            "an offense group code, and the precinct, sector, beat and neighborhood where it occurred.",
        )}],
        "schema_expert": [{"steps": steps(
            [("seattle_tables", {})],
            [("seattle_describe", {"table": "crime_data"})],
            "The relevant table is `seattle.crime_data`, one row per incident.\n\n" + CRIME_COLUMNS_MD
            + "\n\nYear-by-year statistics can be derived from `offense_date`.",
        )}],
        "sql_expert": [{"steps": steps(
            [("seattle_sql", {"sql": "SELECT DISTINCT offense_category FROM crime_data ORDER BY 1"})],
            [("seattle_sql", {"sql": "SELECT min(offense_date) AS first_day, max(offense_date) AS last_day "
                                     "FROM crime_data"})],
            [("seattle_sql", {"sql": grouping})],
            "In 2023 there were 41 property crimes and 15 violent crimes; in 2024 there were 45 "
            "property crimes and 19 violent crimes.\n\n" + evidence("seattle", grouping),
        )}],
    }}
    return script


SECTOR_COUNTS = """SELECT EXTRACT(YEAR FROM report_datetime::timestamp)::int AS year,
       COUNT(*) AS incidents
FROM public.crime_data
WHERE offense_category = 'VIOLENT CRIME'
  AND sector = 'M'
  AND EXTRACT(MONTH FROM report_datetime::timestamp) BETWEEN 6 AND 8
GROUP BY 1
ORDER BY 1"""

SECTOR_CHANGE = """SELECT ROUND(100.0 * (SUM(CASE WHEN report_datetime >= '2025-01-01' THEN 1 ELSE 0 END)
                    - SUM(CASE WHEN report_datetime < '2025-01-01' THEN 1 ELSE 0 END))
             / SUM(CASE WHEN report_datetime < '2025-01-01' THEN 1 ELSE 0 END), 2) AS change_pct
FROM public.crime_data
WHERE offense_category = 'VIOLENT CRIME'
  AND sector = 'M'
  AND EXTRACT(MONTH FROM report_datetime::timestamp) BETWEEN 6 AND 8"""


def sector_m():
    schema_q = "Which tables and columns describe crime incidents by police sector, offense category and report time?"
    hint = "Seattle police sectors, summers of 2024 and 2025"
    sql_q = ("How many violent crime incidents were reported in police sector M in June to August 2024 "
             "and in June to August 2025, and what is the percentage change?")
    schema_info = ("Source seattle, table crime_data. report_datetime is a TIMESTAMP; sector holds the police "
                   "sector letter ('M' is the downtown core); offense_category is 'VIOLENT CRIME' for "
                   "violent incidents.")
    schema_answer = ("`seattle.crime_data` has one row per incident.\n\n"
                     "| column | type |\n| --- | --- |\n| report_datetime | TIMESTAMP |\n"
                     "| offense_category | TEXT |\n| sector | TEXT |\n| beat | TEXT |\n\n"
                     "Beats are named after their sector (M1, M2, M3 belong to sector M).")
    script = {"agents": {
        "verifier": [{"steps": steps(
            [("data_expert", {})],
            [("schema_expert", {"question": schema_q, "context_hint": hint})],
            [("schema_expert", {"question": schema_q, "context_hint": hint})],
            [("sql_expert", {"question": sql_q, "schema_info": schema_info})],
            report(
                ["Violent crime incidents reported in sector M fell from 105 in June to August 2024 "
                 "to 67 in June to August 2025.",
                 "That is a change of -36.19%, which rounds to the claimed 36% decline."],
                "The sector M figures match the claimed 36% drop in violent crime for the summer months.",
                ["Incidents are counted by report time, with June to August as the summer period."],
                [evidence("seattle", SECTOR_COUNTS), evidence("seattle", SECTOR_CHANGE)],
                "Verified"),
        )}],
        "data_expert": [{"steps": steps(
            [("seattle_tables", {})],
            "The source seattle holds one table, crime_data, listing police-reported crime incidents "
            "in Seattle with their report time, offense category, precinct, sector, beat and neighborhood.",
        )}],
        "schema_expert": [{"steps": steps(
            [("seattle_describe", {"table": "crime_data"})],
            schema_answer,
        )}],
        "sql_expert": [{"steps": steps(
            [("seattle_sql", {"sql": SECTOR_COUNTS})],
            [("seattle_sql", {"sql": SECTOR_CHANGE})],
            "Sector M had 105 violent crime incidents in June to August 2024 and 67 in the same months "
            "of 2025, a change of -36.19%.\n\n" + evidence("seattle", SECTOR_COUNTS) + "\n\n"
            + evidence("seattle", SECTOR_CHANGE),
        )}],
    }}
    return script


LIBRARY_QUERY = """SELECT offense, COUNT(*) AS incidents
FROM crime_data
WHERE offense ILIKE '%library%' OR neighborhood ILIKE '%library%'
GROUP BY 1"""


def absent_data():
    schema_q = "Is there any table about library visits or library branches?"
    hint = "Seattle Public Library, 2024"
    sql_q = "Does any row of crime_data mention a library in its offense or neighborhood?"
    script = {"agents": {
        "verifier": [{"steps": steps(
            [("data_expert", {})],
            [("schema_expert", {"question": schema_q, "context_hint": hint})],
            [("sql_expert", {"question": sql_q,
                             "schema_info": "Source seattle, table crime_data with text columns offense "
                                            "and neighborhood."})],
            report(
                ["No connected source has data on library visits.",
                 "The only table, crime_data, has no rows that mention a library."],
                "The available data cannot support the claim about library visits.",
                ["With no visit data at all, the claim is treated as not supported by the grounding data."],
                [evidence("seattle", LIBRARY_QUERY)],
                "Inaccurate"),
        )}],
        "data_expert": [{"steps": steps(
            [("seattle_tables", {})],
            "The source seattle holds a single table, crime_data, with police-reported crime "
            "incidents in Seattle for 2023 and 2024.",
        )}],
        "schema_expert": [{"steps": steps(
            [("seattle_tables", {})],
            "Not found: no source has a table about library visits or branches. The only table, "
            "`seattle.crime_data`, records crime incidents.",
        )}],
        "sql_expert": [{"steps": steps(
            [("seattle_sql", {"sql": LIBRARY_QUERY})],
            "No rows mention a library; the query returns nothing.\n\n" + evidence("seattle", LIBRARY_QUERY),
        )}],
    }}
    return script


CLAIMS = [
    {
        "name": "year_over_year",
        "config": "fixtures/crime/toolbox.yaml",
        "claim": "I am pleased to acknowledge that 2024 saw a reduction in property crime and violent crime in Seattle.",
        "context": "Statement from the 2024 annual report of the Seattle City Attorney.",
        "expected_verdict": "Inaccurate",
        "script": year_over_year,
    },
    {
        "name": "sector_m",
        "config": "fixtures/sectors/toolbox.yaml",
        "claim": "Violent crime incidents in Seattle police's M sector, the downtown core, fell 36% in June "
                 "through August 2025 compared with the same months of 2024.",
        "context": "Published in September 2025.",
        "expected_verdict": "Verified",
        "script": sector_m,
    },
    {
        "name": "absent_data",
        "config": "fixtures/crime/toolbox.yaml",
        "claim": "Seattle's public libraries recorded more than two million visits in 2024.",
        "context": "",
        "expected_verdict": None,
        "script": absent_data,
    },
]


# --- bench cases -------------------------------------------------------------

def sanitize(name, prefix, fallback):
    out, gap = "", False
    for ch in name:
        if ch.isascii() and ch.isalnum():
            if gap and out:
                out += "_"
            out += ch.lower()
            gap = False
        else:
            gap = True
    if not out:
        return fallback
    if out[0].isdigit():
        out = prefix + out
    return out


GROUPED = re.compile(r"[+-]?\d{1,3}(,\d{3})+(\.\d+)?")
PLAIN = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)")


def parse_number(cell):
    text = cell.strip()
    if GROUPED.fullmatch(text):
        text = text.replace(",", "")
    elif not PLAIN.fullmatch(text):
        return None
    if "." in text:
        return float(text)
    return int(text)


def load_case(case):
    """Mirror of the C++ ingester for numeric columns (the cases use no date columns in queries)."""
    table = sanitize(case["caption"], "t_", "case_table")[:48]
    taken = set()

    def claim(base):
        name, n = base, 2
        while name in taken:
            name = f"{base}_{n}"
            n += 1
        taken.add(name)
        return name

    names = [claim(sanitize(c, "c_", "column")) for c in case["columns"]]
    typed = []
    for i, name in enumerate(names):
        cells = [r[i] for r in case["rows"] if r[i].strip()]
        parsed = [parse_number(c) for c in cells]
        ok = [p for p in parsed if p is not None]
        if cells and len(ok) * 100 >= len(cells) * 95:
            kind = "INTEGER" if all(isinstance(p, int) for p in ok) else "REAL"
            typed.append((i, claim(name + "_num"), kind))
    con = sqlite3.connect(":memory:")
    cols = [f'"{n}" TEXT' for n in names] + [f'"{t}" {k}' for _, t, k in typed]
    con.execute(f'CREATE TABLE "{table}" ({", ".join(cols)})')
    for row in case["rows"]:
        values = list(row) + [parse_number(row[i]) for i, _, _ in typed]
        con.execute(f'INSERT INTO "{table}" VALUES ({",".join("?" * len(values))})', values)
    return con, table, names


def C(id, caption, columns, rows, claim, sql, holds, false_label, question):
    return dict(id=id, caption=caption, columns=columns, rows=rows, claim=claim, sql=sql, holds=holds,
                false_label=false_label, question=question)


CASES = [
    C("bench-01", "marathon results", ["Rank", "Athlete", "Country", "Time"],
      [["1", "Joseph Kiprono", "kenya", "2:07:11"], ["2", "Haile Tesfaye", "ethiopia", "2:07:45"],
       ["3", "Daniel Kosgei", "kenya", "2:08:02"], ["4", "Abebe Dinku", "ethiopia", "2:08:30"],
       ["5", "Paul Rotich", "kenya", "2:09:14"]],
      "kenya had 3 runners in the top 5",
      "SELECT count(*) AS runners FROM marathon_results WHERE country = 'kenya' AND rank_num <= 5",
      lambda r: r[0][0] == 3, None, "How many of the top 5 runners are from kenya?"),
    C("bench-02", "league table", ["Team", "Played", "Won", "Drawn", "Lost", "Points"],
      [["city", "10", "7", "2", "1", "23"], ["rovers", "10", "6", "3", "1", "21"],
       ["united", "10", "4", "2", "4", "14"], ["athletic", "10", "2", "1", "7", "7"]],
      "rovers finished the season with more points than city",
      "SELECT team, points_num FROM league_table WHERE team IN ('rovers', 'city') ORDER BY points_num DESC",
      lambda r: r[0][0] == "rovers", "Inaccurate", "How many points did rovers and city finish with?"),
    C("bench-03", "election results", ["Candidate", "Party", "Votes", "Share (%)"],
      [["Margaret Hale", "labour", "21,345", "45.2"], ["Tom Barker", "conservative", "18,002", "38.1"],
       ["Ruth Ellis", "liberal democrat", "7,890", "16.7"]],
      "the labour candidate received more than 20,000 votes",
      "SELECT candidate, votes_num FROM election_results WHERE party = 'labour'",
      lambda r: r[0][1] > 20000, None, "How many votes did the labour candidate receive?"),
    C("bench-04", "medal table", ["Nation", "Gold", "Silver", "Bronze", "Total"],
      [["norway", "5", "4", "2", "11"], ["germany", "4", "5", "3", "12"], ["canada", "3", "3", "4", "10"],
       ["austria", "2", "2", "5", "9"]],
      "norway won 5 gold medals and 12 medals in total",
      "SELECT gold_num, total_num FROM medal_table WHERE nation = 'norway'",
      lambda r: r[0][0] == 5 and r[0][1] == 12, "Partly Verified",
      "How many gold medals and how many medals in total did norway win?"),
    C("bench-05", "highest grossing films of 2009", ["Rank", "Title", "Studio", "Worldwide gross"],
      [["1", "Skyline Drift", "Meridian", "$412,300,000"], ["2", "Paper Harbor", "Northgate", "$388,100,000"],
       ["3", "Last Orchard", "Meridian", "$301,000,000"], ["4", "Glass Season", "Solstice", "$287,500,000"],
       ["5", "Iron Tide", "Northgate", "$250,200,000"]],
      "meridian released two of the five highest grossing films of 2009",
      "SELECT count(*) AS films FROM highest_grossing_films_of_2009 WHERE studio = 'Meridian'",
      lambda r: r[0][0] == 2, None, "How many of the listed films did Meridian release?"),
    C("bench-06", "2010 tour dates", ["Date", "City", "Venue", "Attendance"],
      [["june 3, 2010", "berlin", "o2 world", "11,200"], ["june 5, 2010", "paris", "bercy", "14,500"],
       ["june 8, 2010", "london", "wembley arena", "12,100"],
       ["june 11, 2010", "madrid", "palacio de deportes", "9,800"]],
      "the largest crowd of the tour was in berlin",
      "SELECT city, attendance_num FROM t_2010_tour_dates ORDER BY attendance_num DESC LIMIT 1",
      lambda r: r[0][0] == "berlin", "Inaccurate", "Which city had the largest attendance?"),
    C("bench-07", "longest bridges in the region", ["Bridge", "Location", "Length (m)", "Opened"],
      [["Harbor Crossing", "port ellis", "2,450", "1964"], ["Old Mill Bridge", "ashford", "1,120", "1931"],
       ["River Gate", "ashford", "1,870", "1948"], ["North Span", "kelby", "980", "1977"]],
      "the longest bridge in the region opened before 1950",
      "SELECT bridge, length_m_num, opened_num FROM longest_bridges_in_the_region "
      "ORDER BY length_m_num DESC LIMIT 1",
      lambda r: r[0][2] < 1950, "Inaccurate", "When did the longest bridge open?"),
    C("bench-08", "highest mountains", ["Peak", "Elevation (m)", "Range", "First ascent"],
      [["Everest", "8,849", "Himalaya", "1953"], ["K2", "8,611", "Karakoram", "1954"],
       ["Kangchenjunga", "8,586", "Himalaya", "1955"], ["Lhotse", "8,516", "Himalaya", "1956"]],
      "k2 is higher than kangchenjunga",
      "SELECT peak, elevation_m_num FROM highest_mountains WHERE peak IN ('K2', 'Kangchenjunga') "
      "ORDER BY elevation_m_num DESC",
      lambda r: r[0][0] == "K2", None, "What are the elevations of K2 and Kangchenjunga?"),
    C("bench-09", "secondary schools", ["School", "Type", "Students"],
      [["Westfield High", "public", "1,240"], ["St. Anne's", "private", "610"],
       ["Oakridge Academy", "private", "820"], ["Lakeside High", "public", "980"]],
      "the two private schools have a combined enrollment above 1,500",
      "SELECT sum(students_num) AS students FROM secondary_schools WHERE type = 'private'",
      lambda r: r[0][0] > 1500, "Inaccurate", "What is the combined enrollment of the private schools?"),
    C("bench-10", "studio albums", ["Album", "Year", "Peak position", "Certification"],
      [["Northern Lights", "1991", "4", "platinum"], ["Second Wind", "1994", "14", "gold"],
       ["Paper Moons", "1997", "2", "2x platinum"], ["Afterglow", "2003", "9", ""]],
      "every album the band released in the 1990s reached the top 10",
      "SELECT album, year_num, peak_position_num FROM studio_albums WHERE year_num BETWEEN 1990 AND 1999 "
      "ORDER BY year_num",
      lambda r: all(x[2] <= 10 for x in r), "Partly Inaccurate",
      "What peak positions did the 1990s albums reach?"),
    C("bench-11", "monthly rainfall", ["Month", "Rainfall (mm)", "Rain days"],
      [["september", "61", "9"], ["october", "98", "14"], ["november", "142", "18"], ["december", "127", "17"]],
      "november was the wettest month",
      "SELECT month, rainfall_mm_num FROM monthly_rainfall ORDER BY rainfall_mm_num DESC LIMIT 1",
      lambda r: r[0][0] == "november", None, "Which month had the most rainfall?"),
    C("bench-12", "leading scorers", ["Player", "Team", "Games", "Points", "PPG"],
      [["Marcus Hill", "hawks", "70", "1,988", "28.4"], ["Dion Carter", "bulls", "72", "1,901", "26.4"],
       ["Lee Ward", "suns", "65", "1,651", "25.4"]],
      "the league's top scorer averaged more than 30 points per game",
      "SELECT player, ppg_num FROM leading_scorers ORDER BY points_num DESC LIMIT 1",
      lambda r: r[0][1] > 30, "Inaccurate", "What did the top scorer average per game?"),
    C("bench-13", "red and blue line stations", ["Station", "Line", "Opened", "Daily passengers"],
      [["Central", "red", "1979", "41,000"], ["Harbor", "red", "1983", "12,400"], ["Museum", "red", "1986", "9,700"],
       ["Park Lane", "blue", "1984", "8,300"], ["Riverside", "red", "1992", "7,100"]],
      "three stations on the red line opened in the 1980s",
      "SELECT count(*) AS stations FROM red_and_blue_line_stations WHERE line = 'red' "
      "AND opened_num BETWEEN 1980 AND 1989",
      lambda r: r[0][0] == 3, "Inaccurate", "How many red line stations opened in the 1980s?"),
    C("bench-14", "grand slam finals", ["Year", "Tournament", "Opponent", "Score", "Outcome"],
      [["2010", "australian open", "e. moreau", "4-6, 6-3, 6-2", "winner"],
       ["2011", "french open", "k. lind", "3-6, 4-6", "runner-up"],
       ["2012", "wimbledon", "a. sousa", "7-5, 6-4", "winner"],
       ["2013", "us open", "e. moreau", "6-7, 6-3, 4-6", "runner-up"]],
      "she won the 2012 wimbledon final",
      "SELECT outcome FROM grand_slam_finals WHERE year_num = 2012 AND tournament = 'wimbledon'",
      lambda r: r[0][0] == "winner", None, "What was the outcome of the 2012 wimbledon final?"),
    C("bench-15", "districts by population", ["District", "Area (km2)", "Population 2020"],
      [["north", "412.5", "88,100"], ["central", "35.2", "142,600"], ["east", "120.8", "97,300"],
       ["south", "210.0", "76,900"]],
      "the north district is both the largest by area and the most populous",
      "SELECT district, area_km2_num, population_2020_num FROM districts_by_population "
      "ORDER BY area_km2_num DESC",
      lambda r: r[0][0] == "north" and max(x[2] for x in r) == r[0][2], "Partly Verified",
      "Which district has the largest area, and which has the largest population?"),
    C("bench-16", "car sales by model", ["Model", "Manufacturer", "2019", "2020"],
      [["zephyr", "aldana", "48,200", "39,750"], ["cruz", "aldana", "31,400", "33,100"],
       ["falcon", "berg", "27,900", "22,600"]],
      "sales of the zephyr fell from 2019 to 2020",
      "SELECT model, c_2019_num, c_2020_num FROM car_sales_by_model WHERE model = 'zephyr'",
      lambda r: r[0][2] < r[0][1], None, "How many zephyrs were sold in 2019 and in 2020?"),
    C("bench-17", "museum attendance", ["Museum", "City", "Visitors (2019)", "Visitors (2020)"],
      [["natural history", "lyon", "612,000", "198,000"], ["modern art", "lyon", "455,000", "141,500"],
       ["maritime", "brest", "230,400", "96,000"]],
      "all three museums had fewer visitors in 2020 than in 2019",
      "SELECT museum, visitors_2019_num, visitors_2020_num FROM museum_attendance "
      "WHERE visitors_2020_num < visitors_2019_num",
      lambda r: len(r) == 3, None, "Which museums had fewer visitors in 2020 than in 2019?"),
    C("bench-18", "stage winners", ["Stage", "Route", "Winner", "Nationality"],
      [["1", "nice - antibes", "p. rossi", "italy"], ["2", "antibes - digne", "m. laurent", "france"],
       ["3", "digne - gap", "g. bianchi", "italy"], ["4", "gap - briancon", "t. weber", "germany"],
       ["5", "briancon - sestriere", "l. conti", "italy"]],
      "italian riders won 4 stages",
      "SELECT count(*) AS stages FROM stage_winners WHERE nationality = 'italy'",
      lambda r: r[0][0] == 4, "Inaccurate", "How many stages did italian riders win?"),
    C("bench-19", "university rankings", ["Rank", "University", "Country", "Score"],
      [["1", "northfield institute", "usa", "98.7"], ["2", "kingsbridge university", "uk", "97.9"],
       ["3", "weston college", "uk", "96.4"], ["4", "pacific tech", "usa", "95.8"],
       ["5", "lumen university", "switzerland", "94.1"], ["6", "eastgate university", "usa", "93.6"]],
      "two of the top six universities are in the uk",
      "SELECT count(*) AS universities FROM university_rankings WHERE country = 'uk' AND rank_num <= 6",
      lambda r: r[0][0] == 2, None, "How many of the top six universities are in the uk?"),
    C("bench-20", "fleet list", ["Ship", "Class", "Launched", "Tonnage"],
      [["aurora", "liner", "1912", "31,500"], ["meridian", "cargo", "1925", "42,000"],
       ["tern", "coaster", "1931", "2,100"], ["halcyon", "liner", "1938", "38,400"]],
      "the oldest ship in the fleet was launched in 1912 and is also its heaviest",
      "SELECT ship, launched_num, tonnage_num, (SELECT max(tonnage_num) FROM fleet_list) AS max_tonnage "
      "FROM fleet_list ORDER BY launched_num LIMIT 1",
      lambda r: r[0][1] == 1912 and r[0][2] == r[0][3], "Partly Verified",
      "When was the oldest ship launched, and is it the heaviest?"),
]


def render_rows(columns, rows):
    return "; ".join(", ".join(f"{c} = {v}" for c, v in zip(columns, row)) for row in rows) or "no rows"


def bench_script(case):
    con, table, names = load_case(case)
    cursor = con.execute(case["sql"])
    columns = [d[0] for d in cursor.description]
    rows = cursor.fetchall()
    holds = case["holds"](rows)
    verdict = "Verified" if holds else case["false_label"]
    gold = "entailed" if holds else "refuted"
    result = render_rows(columns, rows)
    describe = ", ".join(f"`{n}`" for n in names)
    schema_info = f"Source bench, table `{table}`. Columns: {describe}. Numeric copies end in `_num`."
    script = {"agents": {
        "verifier": [{"steps": steps(
            [("data_expert", {})],
            [("schema_expert", {"question": "Which columns hold the values needed to check the claim, and what "
                                            "types do they have?", "context_hint": case["caption"]})],
            [("sql_expert", {"question": case["question"], "schema_info": schema_info})],
            report(
                [f"{case['question']} The query returned: {result}.",
                 "This supports the claim." if holds else "This conflicts with the claim."],
                "The claim holds." if holds else "The claim does not hold as stated.",
                [],
                [evidence("bench", case["sql"])],
                verdict),
        )}],
        "data_expert": [{"steps": steps(
            [("bench_tables", {})],
            f"The source bench holds one table, {table}, about {case['caption']}, with columns {describe}.",
        )}],
        "schema_expert": [{"steps": steps(
            [("bench_describe", {"table": table})],
            f"`bench.{table}` stores every cell as text; columns ending in `_num` hold parsed numbers. "
            f"Columns: {describe}.",
        )}],
        "sql_expert": [{"steps": steps(
            [("bench_sql", {"sql": case["sql"]})],
            f"The query returned: {result}.\n\n" + evidence("bench", case["sql"]),
        )}],
    }}
    record = {"id": case["id"], "caption": case["caption"], "columns": case["columns"], "rows": case["rows"],
              "claim": case["claim"], "gold": gold}
    return record, script


def main():
    manifest = []
    for claim in CLAIMS:
        dump(os.path.join(ROOT, "claims", claim["name"], "script.json"), claim["script"]())
        entry = {k: v for k, v in claim.items() if k != "script"}
        entry["script"] = f"fixtures/claims/{claim['name']}/script.json"
        entry["transcript"] = f"fixtures/claims/{claim['name']}/transcript.jsonl"
        manifest.append(entry)
    dump(os.path.join(ROOT, "claims", "claims.json"), manifest)

    lines = []
    for case in CASES:
        record, script = bench_script(case)
        lines.append(json.dumps(record, ensure_ascii=False))
        dump(os.path.join(ROOT, "bench", "scripts", f"{case['id']}.json"), script)
    with open(os.path.join(ROOT, "bench", "cases.jsonl"), "w") as f:
        f.write("\n".join(lines) + "\n")
    golds = [json.loads(l)["gold"] for l in lines]
    print(f"{len(manifest)} claims, {len(lines)} cases "
          f"({golds.count('entailed')} entailed, {golds.count('refuted')} refuted)")


if __name__ == "__main__":
    main()
