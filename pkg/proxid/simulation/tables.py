"""
Plain-text result tables: one row per estimator, metric blocks as column
groups and one column per setting inside each block.
"""
from __future__ import annotations

import pandas as pd

__all__ = [
    "METRICS",
    "read_results",
    "render_table",
]

METRICS = (
    ("mean_absolute_bias", "Mean Absolute Bias"),
    ("percent_absolute_bias", "Percent Absolute Bias"),
    ("coverage", "Coverage"),
    ("width", "Interval Width"),
)


def read_results(path):
    return pd.read_csv(path)


def render_table(results, title=None):
    """
    Render a ``results.csv`` frame. Metric blocks that are empty for every
    estimator (coverage without a bootstrap) are left out.
    """
    empty = (f"{title}\n" if title else "") + "(no results)\n"
    if results.empty:
        return empty
    settings = list(pd.unique(results["setting"]))
    labels = list(pd.unique(results["label"]))
    blocks = []
    for column, heading in METRICS:
        if column not in results or results[column].isna().all():
            continue
        block = results.pivot(index="label", columns="setting", values=column)
        block = block.reindex(index=labels, columns=settings)
        block.columns = pd.MultiIndex.from_product([[heading], settings])
        blocks.append(block)
    if not blocks:
        return empty
    table = pd.concat(blocks, axis=1)
    table.index.name = None
    text = table.to_string(float_format=lambda v: f"{v:.3f}", na_rep="-")
    failures = int(results["failures"].sum()) if "failures" in results else 0
    lines = [title] if title else []
    lines.append(text)
    if failures:
        lines.append(f"{failures} cell(s) failed; see report.json")
    return "\n".join(lines) + "\n"
