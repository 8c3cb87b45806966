#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Brute-force count of violent incidents in sector M, June-August, per year."""
import csv
import os
import sys
from collections import Counter

path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "crime_data.csv")
counts = Counter()
with open(path, newline="") as f:
    for row in csv.DictReader(f):
        stamp = row["report_datetime"]
        if row["offense_category"] != "VIOLENT CRIME" or row["sector"] != "M":
            continue
        if 6 <= int(stamp[5:7]) <= 8:
            counts[int(stamp[:4])] += 1
for year, n in sorted(counts.items()):
    print(f"{year},{n}")
before, after = counts[2024], counts[2025]
print(f"change_pct,{(after - before) / before * 100:.2f}")
