#!/usr/bin/env python3
"""Render per-cell time series from a run directory (windows.csv, cluster.csv)."""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--out", type=Path, help="image path (default: <run_dir>/run.png)")
    args = ap.parse_args()

    w = pd.read_csv(args.run_dir / "windows.csv", na_values="NA")
    c = pd.read_csv(args.run_dir / "cluster.csv", na_values="NA")
    t = lambda df: df["time_s"] / 60.0

    panels = [
        ("cio_db", "CIO (dB)"),
        ("scheduler_load", "scheduler load"),
        ("global_load", "global load"),
        ("mean_ftt_s", "mean FTT (s)"),
    ]
    fig, axes = plt.subplots(len(panels) + 1, 1, figsize=(8, 12), sharex=True)
    for ax, (col, label) in zip(axes, panels):
        for cell, rows in w.groupby("cell_id"):
            kind = rows["cell_kind"].iloc[0]
            ax.plot(t(rows), rows[col], label=f"{cell} ({kind})")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize="small", ncol=3)
    axes[-1].plot(t(c), c["mut_mbps"], label="MUT")
    axes[-1].plot(t(c), c["cet_mbps"], label="CET")
    axes[-1].set_ylabel("Mbps")
    axes[-1].set_xlabel("time (min)")
    axes[-1].legend(fontsize="small")
    axes[-1].grid(alpha=0.3)

    out = args.out or args.run_dir / "run.png"
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
