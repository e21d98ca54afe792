"""Render pattern.csv files (from `msprcapon pattern`) to PNG. Needs matplotlib.

    python scripts/plot_patterns.py results/paper_fig1/pattern/pattern.csv [...]
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot(path: Path) -> Path:
    data = np.genfromtxt(path, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(data["angle_deg"], data["capon_db"], label="Capon")
    ax.plot(data["angle_deg"], data["mspr_db"], "--", label="MSPR-Capon")
    ax.set_xlabel("angle (deg)")
    ax.set_ylabel("normalised gain (dB)")
    ax.set_xlim(-90, 90)
    ax.set_ylim(bottom=max(-80.0, np.nanmin([data["capon_db"], data["mspr_db"]]) - 5))
    ax.grid(alpha=0.3)
    ax.legend()
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


if __name__ == "__main__":
    for arg in sys.argv[1:]:
        print(plot(Path(arg)))
