"""Plot regret curves from a ``coop-ftpl`` output directory.

    python scripts/plot_traces.py OUT_DIR [--bound]
"""
import argparse
import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--bound", action="store_true", help="overlay the tuned regret bound")
    args = ap.parse_args()

    meta = [json.loads(line) for line in open(os.path.join(args.out_dir, "metadata.jsonl"))]
    groups = {}
    for m in meta:
        groups.setdefault((m["arm"], m["point"]), []).append(m)
    fig, ax = plt.subplots(figsize=(7, 4))
    for (arm, point), runs in sorted(groups.items()):
        curves = [np.loadtxt(os.path.join(args.out_dir, r["trace_file"]), delimiter=",",
                             skiprows=1, usecols=3) for r in runs]
        curves = np.atleast_2d(np.array(curves))
        mean = curves.mean(axis=0)
        t = np.arange(1, mean.size + 1)
        ax.plot(t, mean, label=f"{arm} {point} ({len(runs)} seeds)")
        if args.bound and runs[0]["bound_value"]:
            ax.axhline(runs[0]["bound_value"], ls="--", lw=0.8, color="grey")
    ax.set_xlabel("round")
    ax.set_ylabel("network regret")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(args.out_dir, "regret.png")
    fig.savefig(path, dpi=120)
    print(path)


if __name__ == "__main__":
    main()
