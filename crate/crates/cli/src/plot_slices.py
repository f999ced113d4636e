#!/usr/bin/env python3
"""Render every slice_*.csv in this directory as a membership heatmap."""

import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))
files = sorted(glob.glob(os.path.join(here, "slice_*.csv")))
if not files:
    sys.exit("no slice_*.csv files found next to this script")

cols = min(len(files), 4)
rows = (len(files) + cols - 1) // cols
fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3.5 * rows), squeeze=False)
for ax in axes.flat:
    ax.set_visible(False)
for ax, path in zip(axes.flat, files):
    ax.set_visible(True)
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    ax.imshow(data, origin="lower", cmap="Greens", vmin=0, vmax=1, aspect="auto")
    ax.set_title(os.path.basename(path)[len("slice_"):-len(".csv")], fontsize=9)
    ax.set_xlabel("col index")
    ax.set_ylabel("row index")
fig.suptitle("kernel slices (1 = member cell)")
fig.tight_layout()
out = os.path.join(here, "kernel_slices.png")
fig.savefig(out, dpi=130)
print(f"wrote {out}")
