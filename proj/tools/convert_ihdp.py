#!/usr/bin/env python3
"""Convert the public IHDP benchmark files into the confbound dataset CSV.

Accepted inputs:
  * an .npz archive with arrays x (n, d, R), t, yf, ycf, mu0, mu1 (n, R),
    e.g. ihdp_npci_1-100.train.npz;
  * one or more headerless CSV files with columns t, yf, ycf, mu0, mu1,
    x1..xd (one replication per file, e.g. ihdp_npci_1.csv).

Replications are numbered from 1 in input order. The output header is
rep,x0,...,x{d-1},t,yf,ycf,mu0,mu1; covariate x{j} is the (j+1)-th covariate
of the source, so the 0-based --hide-col j of the confbound CLI refers to it.
"""

import argparse
import sys

import numpy as np

TRUTH = ("ycf", "mu0", "mu1")


def from_npz(path):
    data = np.load(path)
    x = data["x"]
    if x.ndim == 2:
        x = x[:, :, None]
    reps = []
    for r in range(x.shape[2]):
        cols = {k: np.asarray(data[k]).reshape(x.shape[0], -1)[:, r] for k in ("t", "yf") + TRUTH}
        reps.append((x[:, :, r], cols))
    return reps


def from_csv(path):
    raw = np.loadtxt(path, delimiter=",", ndmin=2)
    if raw.shape[1] < 6:
        raise ValueError(f"{path}: expected t, yf, ycf, mu0, mu1 followed by covariates")
    cols = {k: raw[:, i] for i, k in enumerate(("t", "yf") + TRUTH)}
    return [(raw[:, 5:], cols)]


def write(reps, out):
    d = reps[0][0].shape[1]
    header = ["rep"] + [f"x{j}" for j in range(d)] + ["t", "yf", *TRUTH]
    out.write(",".join(header) + "\n")
    for rep_id, (x, cols) in enumerate(reps, start=1):
        if x.shape[1] != d:
            raise ValueError(f"replication {rep_id} has {x.shape[1]} covariates, expected {d}")
        t = cols["t"]
        if not np.all((t == 0) | (t == 1)):
            raise ValueError(f"replication {rep_id}: treatment must be 0/1")
        for i in range(x.shape[0]):
            fields = [str(rep_id)] + [repr(float(v)) for v in x[i]]
            fields.append(str(int(t[i])))
            fields += [repr(float(cols[k][i])) for k in ("yf", *TRUTH)]
            out.write(",".join(fields) + "\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("inputs", nargs="+", help=".npz archive or per-replication CSV files")
    parser.add_argument("-o", "--output", help="output CSV (default: stdout)")
    args = parser.parse_args(argv)

    reps = []
    for path in args.inputs:
        reps.extend(from_npz(path) if path.endswith(".npz") else from_csv(path))
    if args.output:
        with open(args.output, "w", encoding="ascii") as out:
            write(reps, out)
    else:
        write(reps, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
