#!/usr/bin/env python3
"""Plot a trace CSV produced by `swtrack run` or `swtrack compare`.

Usage: plot_trace.py trace.csv [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__, file=sys.stderr)
        return 1
    trace = pd.read_csv(sys.argv[1])
    out = sys.argv[2] if len(sys.argv) > 2 else sys.argv[1] + ".png"

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(10, 8))
    t_ms = trace["t"] * 1e3

    axes[0].plot(t_ms, trace["tau"], lw=0.6)
    axes[0].set_ylabel("torque [N m]")
    axes[1].plot(t_ms, trace["lambda_sm"], lw=0.6, color="tab:orange")
    axes[1].set_ylabel("stator flux [Wb]")
    axes[2].step(t_ms, trace["mode"], lw=0.6, color="tab:green", where="post")
    axes[2].set_ylabel("mode")
    axes[2].set_xlabel("time [ms]")
    switches = int(trace["switched"].sum())
    axes[0].set_title(f"{sys.argv[1]} — {switches} switches")

    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
