#!/usr/bin/env python3
"""Regenerate the bundled CSV datasets (iris, digits) from scikit-learn.

Only needed when refreshing data/; the repository already ships the
output. The orthodontic growth file (data/orthodont.csv) is maintained
by hand and not touched here.
"""

import csv
import pathlib

from sklearn.datasets import load_digits, load_iris

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def write_iris() -> None:
    iris = load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    with (DATA / "iris.csv").open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + ["species"])
        for x, y in zip(iris.data, iris.target):
            w.writerow([f"{v:g}" for v in x] + [iris.target_names[y]])
    print("wrote iris.csv")


def write_digits() -> None:
    digits = load_digits()
    names = [f"p{i}" for i in range(64)]
    with (DATA / "digits.csv").open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + ["digit"])
        for x, y in zip(digits.data, digits.target):
            w.writerow([f"{v:g}" for v in x] + [str(y)])
    print("wrote digits.csv")


if __name__ == "__main__":
    write_iris()
    write_digits()
