"""Fidelity-versus-error sweeps, analytic series checks, and CSV export.

A scan evaluates each registered scheme (a factory mapping an ErrorModel
to a gate) on a grid of error fractions and scores every gate against
the sequential target with the overlap fidelity.  Grids are built with
exact +/- mirroring so evenness checks see true sign pairs instead of
linspace rounding dust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import gate_fidelity
from .sequences import ErrorKind, ErrorModel, sequential_gate

__all__ = [
    "ErrorGrid",
    "ScanResult",
    "ScanError",
    "scan",
    "ple_series_fidelity",
    "quadratic_loss_coefficient",
    "good_fidelity_window",
    "render_csv",
    "export_csv",
    "write_plot_script",
    "GOOD_FIDELITY_THRESHOLD",
]

# Fidelity floor defining a "good" operating window.
GOOD_FIDELITY_THRESHOLD = 0.9

GateFactory = Callable[[ErrorModel], np.ndarray]


@dataclass(frozen=True)
class ErrorGrid:
    """Ordered error fractions of one kind (PLE or ORE)."""

    kind: ErrorKind
    points: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind is ErrorKind.NONE:
            raise ValueError("grid kind must be PLE or ORE")
        if not self.points:
            raise ValueError("grid needs at least one point")
        pts = self.points
        if any(not math.isfinite(p) or abs(p) > 1.0 for p in pts):
            raise ValueError("grid points must be finite with |eps| <= 1")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("grid points must be strictly increasing")

    @classmethod
    def uniform(cls, kind: ErrorKind, lo: float, hi: float, n: int) -> "ErrorGrid":
        """n evenly spaced points on [lo, hi].

        Symmetric ranges (lo == -hi) are mirrored exactly, so every point
        has its sign partner bit-for-bit and odd n contains an exact 0.
        """
        if n < 1:
            raise ValueError("need at least one grid point")
        if n == 1:
            return cls(kind, (float(lo),))
        if lo == -hi and hi > 0:
            half = np.linspace(lo, hi, n)[n // 2 :].copy()
            if n % 2:
                half[0] = 0.0  # clear linspace dust at the centre
            pts = np.concatenate([-half[::-1][: n - half.size], half])
        else:
            pts = np.linspace(lo, hi, n)
        return cls(kind, tuple(float(p) for p in pts))


@dataclass(frozen=True)
class ScanResult:
    """Fidelity series per scheme label, aligned with the grid points."""

    grid: ErrorGrid
    series: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.grid.points)
        for label, vals in self.series.items():
            if len(vals) != n:
                raise ValueError(f"series {label!r} length {len(vals)} != grid {n}")
            if any(v < 0.0 or v > 1.0 for v in vals):
                raise ValueError(f"series {label!r} has fidelity outside [0, 1]")


class ScanError(RuntimeError):
    """A scheme factory failed; message carries the label and error fraction."""


def scan(schemes: Sequence[tuple[str, GateFactory]], grid: ErrorGrid) -> ScanResult:
    """Evaluate every scheme over the grid against the sequential target."""
    if not schemes:
        raise ValueError("need at least one scheme")
    target = sequential_gate()
    series: dict[str, tuple[float, ...]] = {}
    for label, factory in schemes:
        vals = []
        for eps in grid.points:
            err = ErrorModel(grid.kind, eps)
            try:
                gate = factory(err)
            except Exception as exc:
                raise ScanError(
                    f"scheme {label!r} failed at epsilon={eps:.6g}: {exc}"
                ) from exc
            vals.append(gate_fidelity(gate, target))
        series[label] = tuple(vals)
    return ScanResult(grid=grid, series=series)


def ple_series_fidelity(eps_f: float) -> float:
    """Truncated analytic PLE fidelity of the sequential gate.

    F = 1 - (5 pi^2 / 96) eps^2 + (pi^4 / 4608) eps^4, valid to O(eps^6).
    """
    if abs(eps_f) > 1.0:
        raise ValueError(f"|eps_f| must be <= 1, got {eps_f}")
    e2 = eps_f * eps_f
    return 1.0 - (5.0 * math.pi**2 / 96.0) * e2 + (math.pi**4 / 4608.0) * e2 * e2


def quadratic_loss_coefficient(result: ScanResult, label: str | None = None) -> float:
    """Coefficient c of 1 - F = c eps^2 + ... near eps = 0.

    Affine least squares of (1 - F) against eps^2 restricted to
    |eps| <= 0.05; the intercept absorbs any constant offset so a flat
    series fits to exactly zero.  Needs >= 5 points covering +/-0.05.
    """
    if label is None:
        if len(result.series) != 1:
            raise ValueError("label required when the scan holds several series")
        label = next(iter(result.series))
    pts = np.asarray(result.grid.points)
    fid = np.asarray(result.series[label])
    mask = np.abs(pts) <= 0.05 + 1e-12
    if mask.sum() < 5 or pts[mask].min() > -0.05 + 1e-9 or pts[mask].max() < 0.05 - 1e-9:
        raise ValueError("fit needs >= 5 points spanning [-0.05, 0.05]")
    coeff = np.polyfit(pts[mask] ** 2, 1.0 - fid[mask], 1)
    return float(coeff[0])


def good_fidelity_window(
    result: ScanResult, label: str, threshold: float = GOOD_FIDELITY_THRESHOLD
) -> float | None:
    """Half-width of the largest symmetric interval of good fidelity.

    Returns the largest sampled |eps| such that every grid point with
    smaller or equal |eps| has F >= threshold, or None if even the
    innermost shell fails.
    """
    pts = np.asarray(result.grid.points)
    fid = np.asarray(result.series[label])
    radii = np.abs(pts)
    best = None
    for r in np.unique(radii):
        if np.any(fid[radii == r] < threshold):
            break
        best = float(r)
    return best


def render_csv(result: ScanResult) -> str:
    """CSV text: header `epsilon,<labels...>`, 9 significant digits."""
    labels = list(result.series)
    lines = ["epsilon," + ",".join(labels)]
    for i, eps in enumerate(result.grid.points):
        row = [f"{eps:.9g}"] + [f"{result.series[lab][i]:.9g}" for lab in labels]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def export_csv(result: ScanResult, destination) -> str:
    """Write the scan CSV to a path or text stream; returns the text."""
    text = render_csv(result)
    if hasattr(destination, "write"):
        destination.write(text)
        return text
    try:
        with open(destination, "w", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write scan CSV to {destination}: {exc}") from exc
    return text


def write_plot_script(result: ScanResult, csv_path: str, destination) -> None:
    """Companion gnuplot script plotting every series in the exported CSV."""
    ncols = 1 + len(result.series)
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{result.grid.kind.value} error fraction'",
        "set ylabel 'gate fidelity'",
        "set yrange [0:1.02]",
        "set grid",
        f"plot for [col=2:{ncols}] '{csv_path}' using 1:col with lines lw 2",
    ]
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write plot script to {destination}: {exc}") from exc
