#!/usr/bin/env python3
"""Fetch MNIST and write data/mnist_train.csv (60k) and data/mnist_test.csv (10k).

Opt-in: the files are ~500 MB of CSV and are never bundled. Requires
network access and scikit-learn. Used by scripts/run_mnist_nystrom.sh.
"""

import csv
import pathlib

from sklearn.datasets import fetch_openml

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def main() -> None:
    print("fetching MNIST from OpenML (this downloads ~55 MB)...")
    mnist = fetch_openml("mnist_784", version=1, as_frame=False, parser="liac-arff")
    x, y = mnist.data, mnist.target
    names = [f"p{i}" for i in range(784)]

    for path, lo, hi in ((DATA / "mnist_train.csv", 0, 60000),
                         (DATA / "mnist_test.csv", 60000, 70000)):
        with path.open("w", newline="") as f:
            w = csv.writer(f)
            w.writerow(names + ["digit"])
            for i in range(lo, hi):
                w.writerow([f"{v:g}" for v in x[i]] + [str(y[i])])
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
