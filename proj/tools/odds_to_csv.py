#!/usr/bin/env python3
"""Convert ODDS .mat files (X, y) to the CSV layout read by unisel.

    python3 tools/odds_to_csv.py musk.mat thyroid.mat ... --out data/

Each output has columns f0..f{d-1},label and is named after the input stem.
Older ODDS files saved as MATLAB v7.3 are read through h5py when present.
"""
import argparse
import csv
import pathlib
import sys

import numpy as np


def load_mat(path):
    try:
        from scipy.io import loadmat
        mat = loadmat(path)
        return np.asarray(mat["X"], dtype=float), np.asarray(mat["y"]).ravel()
    except NotImplementedError:
        import h5py
        with h5py.File(path, "r") as f:
            return np.asarray(f["X"], dtype=float).T, np.asarray(f["y"]).ravel()


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("inputs", nargs="+", type=pathlib.Path)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for src in args.inputs:
        x, y = load_mat(src)
        if x.shape[0] != y.shape[0]:
            sys.exit(f"{src}: {x.shape[0]} rows but {y.shape[0]} labels")
        labels = set(np.unique(y).tolist())
        if not labels <= {0, 1}:
            sys.exit(f"{src}: labels must be 0/1, found {sorted(labels)}")
        dst = args.out / (src.stem + ".csv")
        with dst.open("w", newline="") as f:
            w = csv.writer(f)
            w.writerow([f"f{j}" for j in range(x.shape[1])] + ["label"])
            for row, label in zip(x, y):
                w.writerow([repr(float(v)) for v in row] + [int(label)])
        print(f"{dst}: {x.shape[0]} rows, {x.shape[1]} features, {int(y.sum())} outliers")


if __name__ == "__main__":
    main()
