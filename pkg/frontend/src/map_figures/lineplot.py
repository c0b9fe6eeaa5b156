"""Metric-vs-parameter line plots (one line per scenario or prior)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .jobs import FigureJob, apply_filter, read_table
from .render import save_figure

_MARKERS = ("o", "s", "^", "D", "v", "P", "X")


def _series(rows: list[dict], job: FigureJob) -> dict[str, list[tuple[float, float]]]:
    for col in (job.x_column, job.y_column, job.series_column):
        if col not in rows[0]:
            raise KeyError(f"CSV missing column {col!r}")
    out: dict[str, list[tuple[float, float]]] = {}
    for idx, row in enumerate(rows, start=1):
        try:
            x = float(row[job.x_column])
            y = float(row[job.y_column])
        except ValueError as exc:
            raise ValueError(f"non-numeric cell in data row {idx}: {exc}") from exc
        out.setdefault(str(row[job.series_column]), []).append((x, y))
    return {k: sorted(v) for k, v in sorted(out.items())}


def render_lineplot(job: FigureJob) -> str:
    """One line per series value, x-ticks at the observed parameter grid."""
    rows: list[dict] = []
    for path in job.inputs:
        rows.extend(apply_filter(read_table(path), job.row_filter))
    series = _series(rows, job)

    fig, ax = plt.subplots(figsize=(5.6, 4.2))
    ticks: set[float] = set()
    for k, (name, points) in enumerate(series.items()):
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ticks.update(xs)
        ax.plot(xs, ys, marker=_MARKERS[k % len(_MARKERS)],
                label=f"{job.series_column} {name}")
    ax.set_xticks(sorted(ticks))
    ax.set_xlabel(job.x_column)
    ax.set_ylabel(job.y_column)
    ax.legend(fontsize=8, frameon=False)
    if job.title:
        ax.set_title(job.title)
    return save_figure(fig, job)
