"""Accuracy indicators and protection-level consistency."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import ArrayLike


@dataclass(frozen=True)
class AccuracySummary:
    mean: float
    sigma: float
    rms: float
    p95: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def nearest_rank(values: ArrayLike, pct: float) -> float:
    """Nearest-rank percentile: the smallest value with at least ``pct`` percent at or below it."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("empty series")
    rank = max(1, math.ceil(pct / 100.0 * v.size))
    return float(v[rank - 1])


def compute_metrics(errors: ArrayLike) -> AccuracySummary:
    """
    Mean, population standard deviation, RMS and nearest-rank 95th percentile.

    Raises
    ------
    ValueError
        For an empty series.
    """
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise ValueError("empty series")
    return AccuracySummary(
        float(e.mean()), float(e.std()), float(np.sqrt(np.mean(e * e))), nearest_rank(e, 95.0)
    )


@dataclass(frozen=True)
class PlConsistency:
    containment: float  # fraction of epochs with every axis inside its PL
    axis_containment: tuple[float, float, float]
    mean_width: tuple[float, float, float]  # mean full width 2 * PL per axis


def pl_consistency(errors: ArrayLike, pl: ArrayLike) -> PlConsistency:
    """
    Containment of per-axis errors in symmetric per-axis protection levels.

    ``errors`` and ``pl`` are ``(N, 3)``; an epoch counts as contained when
    ``|error| <= pl`` on all axes.
    """
    e = np.abs(np.asarray(errors, dtype=float))
    r = np.asarray(pl, dtype=float)
    if e.shape != r.shape or e.ndim != 2:
        raise ValueError("errors and protection levels must both be (N, axes)")
    inside = e <= r
    return PlConsistency(
        float(np.mean(inside.all(axis=1))),
        tuple(float(x) for x in inside.mean(axis=0)),
        tuple(float(x) for x in 2.0 * r.mean(axis=0)),
    )
