#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Brute-force (year, category) incident counts over crime_data.csv.

Independent of any SQL engine: reads the CSV row by row and applies the same
filter as the year/category grouping query (two categories, 2023-01-01 <=
offense_date < 2025-01-01). Prints one `year,category,count` line per group in
sorted order. The C++ tests freeze these numbers.
"""
import csv
import os
import sys
from collections import Counter

path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "crime_data.csv")
counts = Counter()
with open(path, newline="") as f:
    for row in csv.DictReader(f):
        day = row["offense_date"]
        if not day or row["offense_category"] not in ("PROPERTY CRIME", "VIOLENT CRIME"):
            continue
        if "2023-01-01" <= day < "2025-01-01":
            counts[(int(day[:4]), row["offense_category"])] += 1
for (year, category), n in sorted(counts.items()):
    print(f"{year},{category},{n}")
