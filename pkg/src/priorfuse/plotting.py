"""Band table and SVG rendering for the 1D demonstration plot.

The figure shows the predictive mean with one- and two-standard-deviation
bands of the posterior predictive, the true curve where known, and the
training points. The SVG is assembled by hand from the same table that goes
into the CSV, so the two artifacts cannot drift apart, and the output is
byte-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .gaussian import PosteriorPredictive


@dataclass(frozen=True)
class BandTable:
    x: np.ndarray
    mean: np.ndarray
    lower1: np.ndarray
    upper1: np.ndarray
    lower2: np.ndarray
    upper2: np.ndarray
    true: np.ndarray | None

    def rows(self) -> list[list]:
        cols = [self.x, self.mean, self.lower1, self.upper1, self.lower2, self.upper2]
        out = []
        for i in range(self.x.size):
            row = [float(c[i]) for c in cols]
            row.append("" if self.true is None else float(self.true[i]))
            out.append(row)
        return out


BAND_HEADER = ["x", "mean", "lower1", "upper1", "lower2", "upper2", "true"]


def make_band_table(
    x_grid: np.ndarray,
    preds: list[PosteriorPredictive],
    true_values: np.ndarray | None = None,
) -> BandTable:
    x_grid = np.asarray(x_grid, dtype=float)
    if len(preds) != x_grid.size:
        raise InputError("one prediction per grid point required")
    mean = np.array([p.mean for p in preds])
    sd = np.sqrt(np.array([p.total_variance for p in preds]))
    return BandTable(
        x=x_grid,
        mean=mean,
        lower1=mean - sd,
        upper1=mean + sd,
        lower2=mean - 2.0 * sd,
        upper2=mean + 2.0 * sd,
        true=None if true_values is None else np.asarray(true_values, dtype=float),
    )


def _polyline(xs, ys, to_px):
    return " ".join(f"{px:.2f},{py:.2f}" for px, py in (to_px(x, y) for x, y in zip(xs, ys)))


def render_svg(
    table: BandTable,
    train_x: np.ndarray,
    train_y: np.ndarray,
    width: int = 800,
    height: int = 500,
) -> str:
    """Mean curve, shaded 1-sd and 2-sd bands, true curve, and data points."""
    pad = 45
    x_lo, x_hi = float(table.x.min()), float(table.x.max())
    y_candidates = [table.lower2, table.upper2]
    if table.true is not None:
        y_candidates.append(table.true)
    if train_y.size:
        y_candidates.append(train_y)
    y_lo = float(min(c.min() for c in y_candidates))
    y_hi = float(max(c.max() for c in y_candidates))
    y_span = (y_hi - y_lo) or 1.0
    y_lo -= 0.05 * y_span
    y_hi += 0.05 * y_span

    def to_px(x, y):
        px = pad + (x - x_lo) / (x_hi - x_lo) * (width - 2 * pad)
        py = height - pad - (y - y_lo) / (y_hi - y_lo) * (height - 2 * pad)
        return px, py

    def band(lower, upper, color):
        forward = list(zip(table.x, upper))
        backward = list(zip(table.x[::-1], lower[::-1]))
        points = " ".join(
            f"{px:.2f},{py:.2f}" for px, py in (to_px(x, y) for x, y in forward + backward)
        )
        return f'<polygon points="{points}" fill="{color}" stroke="none"/>'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        band(table.lower2, table.upper2, "#c6dbef"),
        band(table.lower1, table.upper1, "#6baed6"),
    ]
    if table.true is not None:
        parts.append(
            f'<polyline points="{_polyline(table.x, table.true, to_px)}" fill="none" '
            'stroke="#808080" stroke-width="1.5" stroke-dasharray="6,4"/>'
        )
    parts.append(
        f'<polyline points="{_polyline(table.x, table.mean, to_px)}" fill="none" '
        'stroke="#08519c" stroke-width="2"/>'
    )
    for x, y in zip(train_x, train_y):
        px, py = to_px(float(x), float(y))
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2" fill="#d62728"/>')
    # frame and extreme tick labels
    parts.append(
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    for x_val in (x_lo, x_hi):
        px, _ = to_px(x_val, y_lo)
        parts.append(
            f'<text x="{px:.2f}" y="{height - pad + 18}" font-size="12" '
            f'text-anchor="middle" fill="#333333">{x_val:g}</text>'
        )
    for y_val in (y_lo, y_hi):
        _, py = to_px(x_lo, y_val)
        parts.append(
            f'<text x="{pad - 6}" y="{py + 4:.2f}" font-size="12" '
            f'text-anchor="end" fill="#333333">{y_val:.2f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
