"""Turn the experiment runner's CSV outputs into figures.

Three plot kinds are supported, one per documented CSV schema:

- ``variation-lines``: variation-function curves ``K(y)`` from
  ``variation.csv`` (columns ``y_1..y_M, K_value, certificate``).
- ``rip-decay``: empirical isometry-failure rate against sample count from
  ``rip.csv``, with the Wilson confidence band and the exponential bound
  ``2 exp(-exponent)`` overlaid.
- ``phase-heatmap``: recovery error over the (order, sample count) grid from
  ``phase.csv``, coloured by ``log10`` of the mean relative error clipped to
  [-8, 0] (the clip fixes the colour contrast; the colormap itself is the
  perceptually uniform matplotlib default and purely cosmetic).

Every renderer returns the plotted data as a dict of arrays so tests can
read back exactly what was drawn.  Inputs are opened read-only and never
modified; axis ranges always come from the data.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PHASE_HEATMAP = "phase-heatmap"
VARIATION_LINES = "variation-lines"
RIP_DECAY = "rip-decay"
KINDS = (PHASE_HEATMAP, VARIATION_LINES, RIP_DECAY)

_LOG_CLIP = (-8.0, 0.0)

_RIP_COLUMNS = (
    "n", "delta", "trials", "failures", "rate", "wilson_lo", "wilson_hi", "exponent",
)
_PHASE_COLUMNS = ("M", "n", "trials", "mean_rel_error", "success_rate", "seed")


class SchemaError(ValueError):
    """The input CSV does not match the documented schema for the kind."""


@dataclass(frozen=True)
class PlotJob:
    """One rendering task: a source CSV, a plot kind, and an image path."""

    source: Path
    kind: str
    image: Path
    log_y: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "source", Path(self.source))
        object.__setattr__(self, "image", Path(self.image))


def _read_rows(path: Path) -> tuple[list[str], list[dict]]:
    if not path.is_file():
        raise FileNotFoundError(f"input CSV not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, expected a CSV header row")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows below the header")
    return list(reader.fieldnames), rows


def _check_columns(path: Path, found: list[str], required: tuple) -> None:
    missing = [c for c in required if c not in found]
    extra = [c for c in found if c not in required]
    if missing or extra:
        raise SchemaError(
            f"{path}: column mismatch; missing {missing or 'none'}, "
            f"unexpected {extra or 'none'}; expected exactly {list(required)}"
        )


def _floats(rows: list[dict], column: str) -> np.ndarray:
    try:
        return np.array([float(row[column]) for row in rows])
    except ValueError as exc:
        raise SchemaError(f"column {column!r} holds a non-numeric value: {exc}") from exc


def _render_variation(job: PlotJob, columns: list[str], rows: list[dict]) -> dict:
    y_columns = [c for c in columns if c.startswith("y_")]
    expected = tuple(y_columns) + ("K_value", "certificate")
    if not y_columns:
        raise SchemaError(
            f"{job.source}: column mismatch; missing ['y_1'], found {columns}"
        )
    _check_columns(job.source, columns, expected)

    coords = np.column_stack([_floats(rows, c) for c in y_columns])
    values = _floats(rows, "K_value")
    certificates = [row["certificate"] for row in rows]

    fig, ax = plt.subplots(figsize=(6, 4))
    if coords.shape[1] == 1:
        order = np.argsort(coords[:, 0])
        coords, values = coords[order], values[order]
        certificates = [certificates[i] for i in order]
        ax.plot(coords[:, 0], values, lw=1.5, label=certificates[0])
        ax.set_xlabel("y")
        ax.legend(loc="best")
    else:
        scatter = ax.scatter(coords[:, 0], coords[:, 1], c=values, s=12)
        fig.colorbar(scatter, ax=ax, label="K(y)")
        ax.set_xlabel("y_1")
        ax.set_ylabel("y_2")
    ax.set_title("variation function")
    if coords.shape[1] == 1:
        ax.set_ylabel("K(y)")
    if job.log_y:
        ax.set_yscale("log")
    fig.savefig(job.image, dpi=150, bbox_inches="tight")
    plt.close(fig)

    data = {c: coords[:, i] for i, c in enumerate(y_columns)}
    data.update({"K_value": values, "certificate": certificates})
    return data


def _render_rip(job: PlotJob, columns: list[str], rows: list[dict]) -> dict:
    _check_columns(job.source, columns, _RIP_COLUMNS)
    parsed = {column: _floats(rows, column) for column in _RIP_COLUMNS}
    n = parsed["n"]
    rate = parsed["rate"]
    lo = parsed["wilson_lo"]
    hi = parsed["wilson_hi"]
    bound = 2.0 * np.exp(-parsed["exponent"])

    order = np.argsort(n)
    n, rate, lo, hi, bound = n[order], rate[order], lo[order], hi[order], bound[order]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.fill_between(n, lo, hi, alpha=0.25, label="Wilson interval")
    ax.plot(n, rate, "o-", label="empirical failure rate")
    ax.plot(n, bound, "--", label="exponential bound")
    ax.set_xlabel("sample count n")
    ax.set_ylabel("failure probability")
    ax.set_title("isometry failure rate")
    if job.log_y:
        ax.set_yscale("log")
    ax.legend(loc="best")
    fig.savefig(job.image, dpi=150, bbox_inches="tight")
    plt.close(fig)

    return {"n": n, "rate": rate, "wilson_lo": lo, "wilson_hi": hi, "bound": bound}


def _render_phase(job: PlotJob, columns: list[str], rows: list[dict]) -> dict:
    _check_columns(job.source, columns, _PHASE_COLUMNS)
    parsed = {column: _floats(rows, column) for column in _PHASE_COLUMNS}
    orders = parsed["M"].astype(int)
    counts = parsed["n"].astype(int)
    errors = parsed["mean_rel_error"]

    axis_orders = np.unique(orders)
    axis_counts = np.unique(counts)
    grid = np.full((len(axis_orders), len(axis_counts)), np.nan)
    with np.errstate(divide="ignore"):
        log_err = np.clip(np.log10(np.maximum(errors, 0.0)), *_LOG_CLIP)
    for row_order, row_count, value in zip(orders, counts, log_err):
        i = int(np.searchsorted(axis_orders, row_order))
        j = int(np.searchsorted(axis_counts, row_count))
        grid[i, j] = value

    fig, ax = plt.subplots(figsize=(6, 4))
    image = ax.imshow(
        grid, aspect="auto", origin="lower", vmin=_LOG_CLIP[0], vmax=_LOG_CLIP[1]
    )
    ax.set_xticks(range(len(axis_counts)), [str(v) for v in axis_counts])
    ax.set_yticks(range(len(axis_orders)), [str(v) for v in axis_orders])
    ax.set_xlabel("sample count n")
    ax.set_ylabel("order M")
    ax.set_title("log10 mean relative recovery error")
    fig.colorbar(image, ax=ax)
    fig.savefig(job.image, dpi=150, bbox_inches="tight")
    plt.close(fig)

    return {"M": axis_orders, "n": axis_counts, "log10_error": grid}


_RENDERERS = {
    VARIATION_LINES: _render_variation,
    RIP_DECAY: _render_rip,
    PHASE_HEATMAP: _render_phase,
}


def render(job, source=None, image=None) -> dict:
    """Render a :class:`PlotJob` (or ``kind, source, image``) to an image.

    Returns the plotted data as a dict of arrays, keyed like the source
    columns (plus derived series such as the ``rip-decay`` bound).
    """
    if not isinstance(job, PlotJob):
        job = PlotJob(source=Path(source), kind=str(job), image=Path(image))
    columns, rows = _read_rows(job.source)
    return _RENDERERS[job.kind](job, columns, rows)
