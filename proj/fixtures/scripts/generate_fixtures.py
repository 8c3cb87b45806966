#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the synthetic crime fixtures (CSV + sqlite database).

The output is deterministic: rerunning the script rewrites byte-identical CSV
files. The sqlite files are rebuilt from schema.sql + the CSV.

    python3 fixtures/scripts/generate_fixtures.py
"""
import csv
import datetime as dt
import os
import random
import sqlite3

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

PROPERTY = [
    ("THEFT FROM MOTOR VEHICLE", "A"),
    ("BURGLARY/BREAKING & ENTERING", "A"),
    ("SHOPLIFTING", "A"),
    ("DESTRUCTION/DAMAGE/VANDALISM OF PROPERTY", "A"),
    ("MOTOR VEHICLE THEFT", "A"),
]
VIOLENT = [
    ("AGGRAVATED ASSAULT", "A"),
    ("ROBBERY", "A"),
    ("RAPE", "A"),
    ("MURDER & NONNEGLIGENT MANSLAUGHTER", "A"),
]
SECTORS = {
    "N": ["B", "J", "L", "N", "U"],
    "W": ["D", "K", "M", "Q"],
    "E": ["C", "E", "G"],
    "S": ["O", "R", "S"],
    "SW": ["F", "W"],
}
NEIGHBORHOODS = {
    "M": ["BELLTOWN", "DOWNTOWN COMMERCIAL"],
    "K": ["PIONEER SQUARE", "CHINATOWN/INTERNATIONAL DISTRICT"],
    "D": ["SOUTH LAKE UNION", "QUEEN ANNE"],
    "E": ["CAPITOL HILL"],
}

CRIME_COLUMNS = [
    "report_number", "offense_date", "offense_category", "offense",
    "nibrs_group_ab", "precinct", "sector", "beat", "neighborhood",
]

# (year, category) -> incident count. Both categories rise from 2023 to 2024.
CRIME_COUNTS = {
    (2023, "PROPERTY CRIME"): 41,
    (2023, "VIOLENT CRIME"): 15,
    (2024, "PROPERTY CRIME"): 45,
    (2024, "VIOLENT CRIME"): 19,
}


def pick_location(rng, sector=None):
    if sector is None:
        precinct = rng.choice(sorted(SECTORS))
        sector = rng.choice(SECTORS[precinct])
    else:
        precinct = next(p for p, s in SECTORS.items() if sector in s)
    beat = f"{sector}{rng.randint(1, 3)}"
    # Roughly half of the neighborhood values are missing.
    hood = ""
    if rng.random() < 0.5:
        hood = rng.choice(NEIGHBORHOODS.get(sector, ["UNKNOWN"]))
    return precinct, sector, beat, hood


def random_day(rng, year, months=range(1, 13)):
    month = rng.choice(list(months))
    start = dt.date(year, month, 1)
    nxt = dt.date(year + (month == 12), month % 12 + 1, 1)
    return start + dt.timedelta(days=rng.randrange((nxt - start).days))


def crime_rows():
    rng = random.Random(20240101)
    rows = []
    for (year, category), count in CRIME_COUNTS.items():
        offenses = PROPERTY if category == "PROPERTY CRIME" else VIOLENT
        for _ in range(count):
            offense, group = rng.choice(offenses)
            precinct, sector, beat, hood = pick_location(rng)
            day = random_day(rng, year)
            rows.append([None, day.isoformat(), category, offense, group,
                         precinct, sector, beat, hood])
    rows.sort(key=lambda r: (r[1], r[2], r[3]))
    for i, r in enumerate(rows):
        r[0] = f"{r[1][:4]}-{100000 + i:06d}"
    return rows


SECTOR_COLUMNS = [
    "report_number", "report_datetime", "offense_category", "offense",
    "precinct", "sector", "beat", "neighborhood",
]


def sector_rows():
    rng = random.Random(20251001)
    plan = [
        # (year, months, category, sector, count)
        (2024, range(6, 9), "VIOLENT CRIME", "M", 105),
        (2025, range(6, 9), "VIOLENT CRIME", "M", 67),
        (2024, range(6, 9), "VIOLENT CRIME", "K", 38),
        (2025, range(6, 9), "VIOLENT CRIME", "K", 41),
        (2024, range(6, 9), "PROPERTY CRIME", "M", 30),
        (2025, range(6, 9), "PROPERTY CRIME", "M", 26),
        (2024, [5, 9], "VIOLENT CRIME", "M", 22),
        (2025, [5, 9], "VIOLENT CRIME", "M", 19),
        (2024, range(6, 9), "VIOLENT CRIME", "D", 17),
        (2025, range(6, 9), "VIOLENT CRIME", "D", 15),
    ]
    rows = []
    for year, months, category, sector, count in plan:
        offenses = PROPERTY if category == "PROPERTY CRIME" else VIOLENT
        for _ in range(count):
            offense, _group = rng.choice(offenses)
            precinct, sector_, beat, hood = pick_location(rng, sector)
            day = random_day(rng, year, months)
            stamp = f"{day.isoformat()} {rng.randrange(24):02d}:{rng.randrange(60):02d}:00"
            rows.append([None, stamp, category, offense, precinct, sector_, beat, hood])
    rows.sort(key=lambda r: (r[1], r[2], r[3], r[6]))
    for i, r in enumerate(rows):
        r[0] = f"{r[1][:4]}-{200000 + i:06d}"
    return rows


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


def build_db(db_path, schema_path, table, columns, rows):
    if os.path.exists(db_path):
        os.remove(db_path)
    con = sqlite3.connect(db_path)
    with open(schema_path) as f:
        con.executescript(f.read())
    marks = ",".join("?" for _ in columns)
    con.executemany(
        f"INSERT INTO {table} ({','.join(columns)}) VALUES ({marks})",
        [[None if v == "" else v for v in r] for r in rows],
    )
    con.commit()
    con.execute("VACUUM")
    con.close()


def main():
    crime_dir = os.path.join(ROOT, "crime")
    rows = crime_rows()
    write_csv(os.path.join(crime_dir, "crime_data.csv"), CRIME_COLUMNS, rows)
    build_db(os.path.join(crime_dir, "crime.db"), os.path.join(crime_dir, "schema.sql"),
             "crime_data", CRIME_COLUMNS, rows)

    sector_dir = os.path.join(ROOT, "sectors")
    rows = sector_rows()
    write_csv(os.path.join(sector_dir, "crime_data.csv"), SECTOR_COLUMNS, rows)
    build_db(os.path.join(sector_dir, "sectors.db"), os.path.join(sector_dir, "schema.sql"),
             "crime_data", SECTOR_COLUMNS, rows)


if __name__ == "__main__":
    main()
