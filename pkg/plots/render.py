#!/usr/bin/env python3
"""Render figures from experiment CSVs (pure consumer, no simulation).

Reads the flat schema written by the simulation CLI (one row per
mechanism/run/time-step) and draws one of three figure kinds:

  lines      mean max_weight over runs, against time, one line per group
  histogram  frequency of max_weight at a fixed time, median marked
  runtime    mean wall_time_seconds over runs, against time

Groups are built from the grouping columns: the first names the line, the
rest qualify it when they take several values (by default mechanism, then
k and p_two). ``--check-aggregates`` prints the exact numbers a plot would
draw, as CSV, and renders nothing; it exists so the aggregation can be
verified without comparing pixels.

Usage:
    render.py --csv results/comparison.csv --kind lines --out comparison.png
    render.py --csv results/histogram.csv --kind histogram --check-aggregates
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import matplotlib
import pandas as pd

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

REQUIRED_COLUMNS = [
    "mechanism",
    "run",
    "t",
    "max_weight",
    "utilized_votes",
    "wall_time_seconds",
]

VALUE_COLUMN = {"lines": "max_weight", "runtime": "wall_time_seconds"}

GROUP_TAGS = {"k": "k", "p_two": "p"}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: inputs, figure kind, grouping, output image."""

    csv_paths: tuple[str, ...]
    kind: str  # lines | histogram | runtime
    out: str | None = None
    group_columns: tuple[str, ...] = ("mechanism", "k", "p_two")

    def __post_init__(self):
        if self.kind not in ("lines", "histogram", "runtime"):
            raise SystemExit(f"error: unknown figure kind {self.kind!r}")
        if not self.group_columns:
            raise SystemExit("error: at least one grouping column is required")


def load_frames(spec: FigureSpec) -> pd.DataFrame:
    frames = []
    for path in spec.csv_paths:
        try:
            frames.append(pd.read_csv(path))
        except (FileNotFoundError, pd.errors.EmptyDataError) as exc:
            raise SystemExit(f"error: cannot read {path}: {exc}")
    df = pd.concat(frames, ignore_index=True)
    needed = set(REQUIRED_COLUMNS) | {c for c in spec.group_columns if c != "mechanism"}
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    missing += [c for c in needed - set(REQUIRED_COLUMNS) if c not in df.columns]
    if missing:
        raise SystemExit(f"error: input is missing columns {missing}")
    if df.empty:
        raise SystemExit("error: input contains no rows")
    return df


def group_labels(df: pd.DataFrame, spec: FigureSpec) -> pd.Series:
    """First grouping column names the group; later ones qualify it when
    they actually vary across the file."""
    first, *rest = spec.group_columns
    labels = df[first].astype(str).copy()
    for col in rest:
        if df[col].nunique(dropna=True) > 1:
            tag = GROUP_TAGS.get(col, col)
            suffix = df[col].map(lambda v: "" if pd.isna(v) else f" ({tag}={v:g})")
            labels = labels + suffix
    return labels


def aggregates(df: pd.DataFrame, spec: FigureSpec) -> pd.DataFrame:
    df = df.assign(group=group_labels(df, spec))
    if spec.kind in VALUE_COLUMN:
        col = VALUE_COLUMN[spec.kind]
        return (
            df.groupby(["group", "t"], sort=True)[col]
            .mean()
            .reset_index()
            .rename(columns={col: f"mean_{col}"})
        )
    return (
        df.groupby("group", sort=True)["max_weight"]
        .median()
        .reset_index()
        .rename(columns={"max_weight": "median_max_weight"})
    )


def render(spec: FigureSpec) -> None:
    df = load_frames(spec)
    agg = aggregates(df, spec)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if spec.kind in VALUE_COLUMN:
        value = f"mean_{VALUE_COLUMN[spec.kind]}"
        for group, block in agg.groupby("group", sort=True):
            ax.plot(block["t"], block[value], marker="o", markersize=2.5, label=group)
        ax.set_xlabel("time step")
        ax.set_ylabel(
            "mean maximum weight" if spec.kind == "lines" else "mean wall time [s]"
        )
        if spec.kind == "runtime":
            ax.set_yscale("log")
        ax.legend()
    else:
        df = df.assign(group=group_labels(df, spec))
        medians = dict(zip(agg["group"], agg["median_max_weight"]))
        lo = int(df["max_weight"].min())
        hi = int(df["max_weight"].max()) + 1
        bins = range(lo, hi + 1)
        for group in sorted(df["group"].unique()):
            vals = df.loc[df["group"] == group, "max_weight"]
            ax.hist(vals, bins=bins, alpha=0.45, label=group)
            ax.axvline(medians[group], color="black", linewidth=1.2)
        ax.set_xlabel("maximum weight")
        ax.set_ylabel("frequency")
        ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--csv", action="append", required=True, help="input CSV (repeatable)"
    )
    parser.add_argument("--kind", required=True, choices=["lines", "histogram", "runtime"])
    parser.add_argument("--out", default=None, help="output image path")
    parser.add_argument(
        "--group-columns",
        default="mechanism,k,p_two",
        help="comma-separated grouping columns; the first names the curve",
    )
    parser.add_argument(
        "--check-aggregates",
        action="store_true",
        help="print the plotted aggregates as CSV instead of rendering",
    )
    args = parser.parse_args(argv)
    spec = FigureSpec(
        csv_paths=tuple(args.csv),
        kind=args.kind,
        out=args.out,
        group_columns=tuple(c for c in args.group_columns.split(",") if c),
    )
    if args.check_aggregates:
        agg = aggregates(load_frames(spec), spec)
        agg.to_csv(sys.stdout, index=False, float_format="%.17g")
        return 0
    if not spec.out:
        raise SystemExit("error: --out is required unless --check-aggregates is given")
    render(spec)
    print(f"wrote {spec.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
