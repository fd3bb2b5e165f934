#!/usr/bin/env python3
"""Fetch the UCI seeds dataset and write data/seeds.csv.

The seeds dataset (210 wheat kernels, 7 geometric features, 3 varieties)
is not bundled with the repository; this script downloads the original
whitespace-separated file and converts it to the CSV layout the CLI and
the acceptance suite expect. Requires network access to archive.ics.uci.edu.
"""

import csv
import pathlib
import sys
import urllib.request

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/00236/seeds_dataset.txt"
VARIETIES = {"1": "Kama", "2": "Rosa", "3": "Canadian"}
FEATURES = [
    "area",
    "perimeter",
    "compactness",
    "kernel_length",
    "kernel_width",
    "asymmetry",
    "groove_length",
]


def main() -> int:
    out_path = pathlib.Path(__file__).resolve().parent.parent / "data" / "seeds.csv"
    print(f"downloading {URL}")
    raw = urllib.request.urlopen(URL, timeout=60).read().decode("utf-8")

    rows = []
    for line in raw.splitlines():
        fields = line.split()
        # a handful of lines in the source file have missing fields; skip them
        if len(fields) != 8:
            continue
        rows.append(fields[:7] + [VARIETIES[fields[7]]])
    if len(rows) < 190:
        print(f"unexpectedly few complete rows ({len(rows)}); aborting", file=sys.stderr)
        return 1

    with out_path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(FEATURES + ["variety"])
        w.writerows(rows)
    print(f"wrote {out_path} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
