"""Scaling exponents of correlators and transport classification.

Local exponents are discrete log-log slopes between consecutive positive
times; running averages are their cumulative means. Errors are propagated
assuming independent correlator errors and independent slopes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

SUPERDIFFUSIVE = -2.0 / 3.0


class Transport(str, Enum):
    BALLISTIC = "ballistic"
    SUPERDIFFUSIVE = "superdiffusive"
    DIFFUSIVE = "diffusive"
    INTERMEDIATE = "intermediate"


REFERENCE_EXPONENTS = {
    Transport.BALLISTIC: -1.0,
    Transport.SUPERDIFFUSIVE: SUPERDIFFUSIVE,
    Transport.DIFFUSIVE: -0.5,
}


@dataclass
class ExponentSeries:
    """Slope ``k`` spans ``times[k] -> times[k+1]`` (``times`` are the slope start times)."""

    steps: np.ndarray
    times: np.ndarray
    local: np.ndarray
    sigma_local: np.ndarray
    running: np.ndarray | None = None
    sigma_running: np.ndarray | None = None
    invalid: list[int] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.local)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "time", "Y", "sigma_Y", "Ybar", "sigma_Ybar"])
        running = self.running if self.running is not None else np.full(len(self), np.nan)
        sig_run = self.sigma_running if self.sigma_running is not None else np.full(len(self), np.nan)
        for row in zip(self.steps, self.times, self.local, self.sigma_local, running, sig_run):
            w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
        return buf.getvalue()


def local_exponents(series, start: int | None = None) -> ExponentSeries:
    """Log-log slopes ``Y_i`` and their propagated errors.

    ``series`` needs ``times``, ``mean`` and ``stderr`` arrays. Slopes start at
    the first positive time (or at step ``start`` if given). A slope touching a
    non-positive correlator is recorded as NaN and listed in ``invalid``.
    """
    t = np.asarray(series.times, dtype=float)
    c = np.asarray(series.mean, dtype=float)
    s = np.asarray(series.stderr, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    first = int(np.argmax(t > 0)) if start is None else int(start)
    if t[first] <= 0:
        raise ValueError("slopes need positive times")
    idx = np.arange(first, len(t) - 1)
    local = np.full(idx.size, np.nan)
    sigma = np.full(idx.size, np.nan)
    invalid = []
    for k, i in enumerate(idx):
        if c[i] <= 0 or c[i + 1] <= 0:
            invalid.append(int(i))
            continue
        dlt = math.log(t[i + 1]) - math.log(t[i])
        local[k] = (math.log(c[i + 1]) - math.log(c[i])) / dlt
        sigma[k] = math.sqrt((s[i + 1] / c[i + 1]) ** 2 + (s[i] / c[i]) ** 2) / dlt
    meta = dict(getattr(series, "metadata", {}) or {})
    meta["first_slope_step"] = first
    return ExponentSeries(steps=idx, times=t[idx], local=local, sigma_local=sigma,
                          invalid=invalid, metadata=meta)


def running_average(es: ExponentSeries) -> ExponentSeries:
    """Fill ``running`` and ``sigma_running``; an invalid slope makes all later entries NaN."""
    count = np.arange(1, len(es) + 1)
    es.running = np.cumsum(es.local) / count
    es.sigma_running = np.sqrt(np.cumsum(es.sigma_local ** 2)) / count
    return es


def exponents(series, start: int | None = None) -> ExponentSeries:
    return running_average(local_exponents(series, start))


def shared_point_sigma_running(series, start: int | None = None) -> np.ndarray:
    """Standard error of ``Ybar_i`` with the correlation between adjacent slopes kept.

    Neighbouring slopes share one correlator point, so they are anticorrelated
    and the independent-slope formula overestimates the spread of the running
    average. This propagates the (independent) correlator errors linearly
    through the full expression instead.
    """
    es = local_exponents(series, start)
    t = np.asarray(series.times, dtype=float)
    c = np.asarray(series.mean, dtype=float)
    s = np.asarray(series.stderr, dtype=float)
    idx = es.steps
    pts = np.arange(idx[0], idx[-1] + 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig_l = np.where(c[pts] > 0, s[pts] / c[pts], np.nan)
    inv_d = 1.0 / np.diff(np.log(t[pts]))
    out = np.empty(idx.size)
    coef = np.zeros(pts.size)
    for k in range(idx.size):
        # slope k adds +1/d_k on point k+1 and -1/d_k on point k
        coef[k + 1] += inv_d[k]
        coef[k] -= inv_d[k]
        out[k] = math.sqrt(np.sum((coef[: k + 2] * sig_l[: k + 2]) ** 2)) / (k + 1)
    return out


def default_window(length: int) -> slice:
    """Last third of the slope series (at least one entry)."""
    return slice(length - max(1, length // 3), length)


def window_mean(es: ExponentSeries, window: slice | None = None) -> float:
    if es.running is None:
        running_average(es)
    window = default_window(len(es)) if window is None else window
    vals = es.running[window]
    if vals.size == 0:
        raise ValueError("empty classification window")
    return float(np.mean(vals))


@dataclass(frozen=True)
class TransportClass:
    label: Transport
    exponent: float
    nearest: Transport
    distance: float


def classify_exponent(exponent: float, tol: float = 0.07) -> TransportClass:
    nearest = min(REFERENCE_EXPONENTS, key=lambda k: abs(exponent - REFERENCE_EXPONENTS[k]))
    dist = abs(exponent - REFERENCE_EXPONENTS[nearest])
    label = nearest if dist <= tol else Transport.INTERMEDIATE
    return TransportClass(label, exponent, nearest, dist)


def classify(es: ExponentSeries, window: slice | None = None, tol: float = 0.07) -> TransportClass:
    return classify_exponent(window_mean(es, window), tol)


@dataclass(frozen=True)
class RankEntry:
    index: int
    label: str
    exponent: float
    deviation: float  # negative: toward ballistic, positive: toward diffusive

    @property
    def direction(self) -> str:
        return "ballistic" if self.deviation < 0 else "diffusive"


def resilience_rank(
    runs: Sequence[ExponentSeries],
    window: slice | None = None,
    labels: Sequence[str] | None = None,
) -> list[RankEntry]:
    """Order runs by distance of their window-mean running exponent from -2/3."""
    if not runs:
        return []
    grid = runs[0].times
    for es in runs[1:]:
        if es.times.shape != grid.shape or not np.allclose(es.times, grid):
            raise ValueError("runs must share their time grid")
    labels = list(labels) if labels is not None else [str(k) for k in range(len(runs))]
    entries = []
    for k, es in enumerate(runs):
        y = window_mean(es, window)
        entries.append(RankEntry(k, labels[k], y, y - SUPERDIFFUSIVE))
    return sorted(entries, key=lambda e: abs(e.deviation))


def onset_step(
    es: ExponentSeries,
    threshold: float = 0.05,
    reference: "float | ExponentSeries" = SUPERDIFFUSIVE,
    direction: int | None = None,
):
    """First step whose running exponent departs ``reference`` by more than ``threshold``.

    ``reference`` is either a constant or another run on the same time grid
    (typically the uncoupled chain on the same random backgrounds), which
    removes the early transient common to all runs. With ``direction`` = +1
    (toward diffusive) or -1 (toward ballistic) only departures of that sign
    count. Returns ``None`` if the series never departs.
    """
    if es.running is None:
        running_average(es)
    if isinstance(reference, ExponentSeries):
        if reference.running is None:
            running_average(reference)
        if not np.array_equal(reference.steps, es.steps):
            raise ValueError("reference run must share the step grid")
        ref = reference.running
    else:
        ref = float(reference)
    diff = es.running - ref
    if direction is None:
        hits = np.flatnonzero(np.abs(diff) > threshold)
    else:
        hits = np.flatnonzero(np.sign(direction) * diff > threshold)
    return int(es.steps[hits[0]]) if hits.size else None
