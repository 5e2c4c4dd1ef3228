#!/usr/bin/env python3
"""Convert the raw public Adult Income and COMPAS files into headed CSVs.

Usage: prepare_data.py RAW_DIR OUT_DIR

RAW_DIR must contain adult.data, adult.test and compas-scores-two-years.csv
(for example from the `responsibly` wheel: responsibly/dataset/{adult,compas}/).
"""
import csv
import os
import sys

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]

COMPAS_COLUMNS = [
    "sex", "age", "juv_fel_count", "juv_misd_count", "priors_count",
    "charge_id", "charge_degree", "race", "two_year_recid",
]


def adult_rows(path):
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(ADULT_COLUMNS):
                continue
            cells = ["" if c == "?" else c for c in cells]
            cells[-1] = "1" if cells[-1].rstrip(".") == ">50K" else "0"
            yield cells


def main(raw, out):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "adult.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(ADULT_COLUMNS)
        for name in ("adult.data", "adult.test"):
            for row in adult_rows(os.path.join(raw, name)):
                w.writerow(row)

    races = {"African-American": "black", "Caucasian": "white"}
    with open(os.path.join(raw, "compas-scores-two-years.csv")) as src, \
            open(os.path.join(out, "compas.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COMPAS_COLUMNS)
        for r in csv.DictReader(src):
            if r["race"] not in races:
                continue
            w.writerow([
                r["sex"], r["age"], r["juv_fel_count"], r["juv_misd_count"],
                r["priors_count"], r["c_charge_desc"] or "(none)",
                r["c_charge_degree"], races[r["race"]], r["two_year_recid"],
            ])


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
