"""Plot one result CSV written by `spectral-cutoff run`.

The x axis is the first integer parameter column (N, band, K, ...). Rows are
grouped by the remaining parameter columns, one line per group.

    python docs/examples/plot_results.py results/fejer-convergence.csv -o fejer.png
"""

import argparse

import matplotlib.pyplot as plt
import pandas as pd

TRAILING = ["value", "status", "gap", "feas_residual", "wall_time_ms"]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("-o", "--output", help="image path; shows a window when omitted")
    parser.add_argument("--logy", action="store_true", help="logarithmic value axis")
    args = parser.parse_args()

    df = pd.read_csv(args.csv, na_values=[], keep_default_na=False)
    df["value"] = pd.to_numeric(df["value"].replace({"inf": "Infinity"}), errors="coerce")
    params = [c for c in df.columns if c not in TRAILING and c != "experiment"]
    x = next((c for c in params if pd.api.types.is_integer_dtype(df[c])), params[0])
    groups = [c for c in params if c != x]

    fig, ax = plt.subplots(figsize=(6, 4))
    grouped = df.groupby(groups, sort=False) if groups else [((), df)]
    for key, part in grouped:
        key = key if isinstance(key, tuple) else (key,)
        label = ", ".join(f"{g}={v:.4g}" if isinstance(v, float) else f"{g}={v}" for g, v in zip(groups, key))
        ax.plot(part[x], part["value"], marker="o", label=label or None)
    ax.set_xlabel(x)
    ax.set_ylabel("value")
    ax.set_title(df["experiment"].iloc[0])
    if args.logy:
        ax.set_yscale("log")
    if groups:
        ax.legend(fontsize="small")
    fig.tight_layout()
    if args.output:
        fig.savefig(args.output, dpi=150)
    else:
        plt.show()


if __name__ == "__main__":
    main()
