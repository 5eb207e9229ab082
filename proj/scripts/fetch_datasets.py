#!/usr/bin/env python3
"""Rebuild the CSVs under data/ from offline PyPI wheels.

The library never touches the network. This script is the documented way to
regenerate the shipped CSVs:

  pip download rdatasets keel_ds --no-deps -d /tmp/wheels
  python3 scripts/fetch_datasets.py /tmp/wheels data/

Crab: MASS::crabs (Campbell & Mahon 1974), 200 rows. Label column `sp`
(species B/O); `sex` and `index` are dropped.
Sonar: UCI "Connectionist Bench (Sonar, Mines vs. Rocks)", 208 rows x 60
features, KEEL copy. Label column `Type` (M/R).
Pima: Pima Indians diabetes, 768 rows x 8 features, KEEL copy. Label column
`Class` (tested_positive/tested_negative).
Heart: Statlog heart, 270 rows x 13 features, KEEL copy. Label column
`Class` (2 = disease present, 1 = absent).
"""
import csv
import glob
import os
import pickle
import sys
import zipfile


def wheel(directory, prefix):
    hits = sorted(glob.glob(os.path.join(directory, prefix + "*.whl")))
    if not hits:
        sys.exit(f"no {prefix} wheel in {directory}")
    return zipfile.ZipFile(hits[-1])


def crabs(wheels, out):
    import lzma

    import pandas  # noqa: F401  (needed to unpickle the frame)

    zf = wheel(wheels, "rdatasets")
    raw = zf.read("rdatasets/_data/MASS/crabs.pkl.compress")
    frame = pickle.loads(lzma.decompress(raw))
    cols = ["FL", "RW", "CL", "CW", "BD"]
    with open(os.path.join(out, "crabs.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols + ["sp"])
        for _, row in frame.iterrows():
            w.writerow([f"{row[c]:g}" for c in cols] + [row["sp"]])


def sonar(wheels, out):
    zf = wheel(wheels, "keel_ds")
    text = zf.read("keel_ds/data/balanced/raw/sonar.dat").decode()
    rows = [[tok.strip() for tok in line.split(",")]
            for line in text.splitlines() if line.strip()]
    names = [f"Band{i + 1}" for i in range(len(rows[0]) - 1)] + ["Type"]
    with open(os.path.join(out, "sonar.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        w.writerows(rows)


def keel_plain(wheels, out, name, columns):
    zf = wheel(wheels, "keel_ds")
    text = zf.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    rows = [[tok.strip() for tok in line.split(",")]
            for line in text.splitlines() if line.strip()]
    with open(os.path.join(out, f"{name}.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        w.writerows(rows)


PIMA_COLUMNS = ["Preg", "Plas", "Pres", "Skin", "Insu", "Mass", "Pedi", "Age", "Class"]
HEART_COLUMNS = ["Age", "Sex", "ChestPain", "RestBP", "Chol", "FBS", "RestECG", "MaxHR",
                 "ExAngina", "Oldpeak", "Slope", "Vessels", "Thal", "Class"]


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    crabs(sys.argv[1], sys.argv[2])
    sonar(sys.argv[1], sys.argv[2])
    keel_plain(sys.argv[1], sys.argv[2], "pima", PIMA_COLUMNS)
    keel_plain(sys.argv[1], sys.argv[2], "heart", HEART_COLUMNS)
