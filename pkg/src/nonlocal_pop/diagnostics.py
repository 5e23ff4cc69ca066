"""Observables extracted from simulation records.

Front positions and speeds, peak counts, dominant spatial frequencies,
splitting events and drifting-peak tracks.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .dispersion import ModelParams, pattern_period
from .errors import ConfigurationError, NoFrontError
from .kernel import Kernel, Shape
from .solver import PERIODIC, Grid, RunRecord, State

RIGHTWARD = "rightward"
LEFTWARD = "leftward"

# fraction of samples dropped at each end of the speed fit window
FIT_TRIM = 0.2
MAX_MISSING_FRACTION = 0.2


@dataclass
class FrontTrace:
    times: np.ndarray
    positions: np.ndarray
    fitted_speed: float
    fit_residual: float
    direction: str = RIGHTWARD

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.positions.tolist()))


@dataclass
class PatternSummary:
    peak_count: int
    peak_positions: np.ndarray
    dominant_xi: float
    amplitude: float


def default_peak_settings(params: ModelParams, kernel: Kernel, grid: Grid) -> tuple[float, float]:
    """``(0.1 sigma, tau/4)`` for box kernels, ``(0.1 sigma, 4 dx)`` otherwise."""
    if kernel.shape in (Shape.BOX_SYMMETRIC, Shape.BOX_ASYMMETRIC):
        separation = pattern_period(kernel.width) / 4.0
    else:
        separation = 4.0 * grid.dx
    return 0.1 * params.sigma, separation


def linear_fit(t, x) -> tuple[float, float]:
    """Least-squares slope and RMS residual."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two samples for a linear fit")
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, x, rcond=None)
    resid = x - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid ** 2)))


def _fit_window(n: int, trim: float = FIT_TRIM) -> slice:
    k = int(math.floor(trim * n))
    if n - 2 * k < 2:
        k = max(0, (n - 2) // 2)
    return slice(k, n - k)


def front_position(c: np.ndarray, x: np.ndarray, level: float, direction: str) -> float | None:
    """Outermost crossing of ``level`` in ``direction``, linearly interpolated."""
    above = np.nonzero(c >= level)[0]
    if above.size == 0:
        return None
    dx = x[1] - x[0]
    if direction == RIGHTWARD:
        i = above[-1]
        if i == c.size - 1:
            return None
        return float(x[i] + (c[i] - level) / (c[i] - c[i + 1]) * dx)
    i = above[0]
    if i == 0:
        return None
    return float(x[i] - (c[i] - level) / (c[i] - c[i - 1]) * dx)


def track_front(record: RunRecord, level: float | None = None, direction: str = RIGHTWARD,
                boundary_margin: float = 0.2, trim: float = FIT_TRIM) -> FrontTrace:
    """Front position per snapshot and its fitted speed.

    Tracking halts at the first snapshot whose front lies within
    ``boundary_margin * L`` of the boundary it is heading to.  The speed is a
    least-squares fit over the middle of the retained samples (``trim`` is
    dropped from each end).

    Raises
    ------
    NoFrontError
        If at least 20% of the examined snapshots have no crossing.
    """
    if direction not in (RIGHTWARD, LEFTWARD):
        raise ConfigurationError(f"direction must be {RIGHTWARD!r} or {LEFTWARD!r}")
    sigma = record.params.sigma
    level = 0.5 * sigma if level is None else level
    if not 0 < level < sigma:
        raise ConfigurationError(f"front level must lie strictly between 0 and {sigma:g}")
    L = record.grid.L
    x = record.grid.x
    times, positions = [], []
    examined = missing = 0
    for t, c in zip(record.times, record.snapshots):
        pos = front_position(c, x, level, direction)
        examined += 1
        if pos is None:
            missing += 1
            continue
        if (direction == RIGHTWARD and pos > (1 - boundary_margin) * L) or (
                direction == LEFTWARD and pos < boundary_margin * L):
            examined -= 1
            break
        times.append(float(t))
        positions.append(pos)
    if examined == 0 or missing >= MAX_MISSING_FRACTION * examined or len(times) < 2:
        raise NoFrontError(f"no {direction} crossing of c={level:g} in {missing}/{examined} snapshots")
    times_a, pos_a = np.array(times), np.array(positions)
    win = _fit_window(len(times_a), trim)
    speed, resid = linear_fit(times_a[win], pos_a[win])
    return FrontTrace(times_a, pos_a, speed, resid, direction)


def power_spectrum(c: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Discrete power of ``c - mean(c)`` against angular wavenumber."""
    c = np.asarray(c, dtype=float)
    power = np.abs(np.fft.rfft(c - c.mean())) ** 2
    xi = 2.0 * math.pi * np.arange(power.size) / grid.period
    return xi, power


def find_field_peaks(c: np.ndarray, grid: Grid, min_height: float, min_separation: float) -> np.ndarray:
    """Indices of local maxima higher than ``mean(c) + min_height``.

    Plateaus count once (at their middle).  Closer than ``min_separation``
    peaks are thinned keeping the higher one; on periodic grids this also
    holds across the wrap.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    threshold = c.mean() + min_height
    distance = max(1, int(math.ceil(min_separation / grid.dx - 1e-9)))
    if grid.bc == PERIODIC:
        shift = int(np.argmin(c))
        rolled = np.roll(c, -shift)
        idx, _ = find_peaks(rolled, height=threshold, distance=distance)
        idx = list(idx)
        while len(idx) > 1 and idx[0] + n - idx[-1] < distance:
            idx.pop(0 if rolled[idx[0]] < rolled[idx[-1]] else -1)
        return np.sort((np.array(idx, dtype=int) + shift) % n)
    idx, _ = find_peaks(c, height=threshold, distance=distance)
    return idx


def pattern_summary(state: State | np.ndarray, grid: Grid, min_height: float,
                    min_separation: float) -> PatternSummary:
    c = state.c if isinstance(state, State) else np.asarray(state, dtype=float)
    idx = find_field_peaks(c, grid, min_height, min_separation)
    xi, power = power_spectrum(c, grid)
    if power.size > 1 and power[1:].max() > 0:
        dominant = float(xi[1 + int(np.argmax(power[1:]))])
    else:
        dominant = 0.0
    return PatternSummary(len(idx), grid.x[idx], dominant, float(c.max() - c.min()))


def splitting_history(record: RunRecord, min_height: float, min_separation: float) -> list[tuple[float, int]]:
    return [(float(t), len(find_field_peaks(c, record.grid, min_height, min_separation)))
            for t, c in zip(record.times, record.snapshots)]


def splitting_events(history) -> list[float]:
    """Times at which the peak count increases."""
    return [t for (_, prev), (t, cur) in zip(history, history[1:]) if cur > prev]


@dataclass
class PeakTrack:
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    partial: bool = False

    @property
    def speed(self) -> float | None:
        if len(self.times) < 3:
            return None
        return linear_fit(self.times, self.positions)[0]


@dataclass
class DriftReport:
    tracks: list
    leading_times: np.ndarray
    leading_positions: np.ndarray
    drift_speed: float
    spacings: np.ndarray
    wavenumber: float

    @property
    def track_speeds(self) -> list[float]:
        return [s for s in (tr.speed for tr in self.tracks) if s is not None]


def _periodic_delta(a, b, period):
    return (a - b + 0.5 * period) % period - 0.5 * period


def drift_tracker(record: RunRecord, min_height: float, min_separation: float,
                  direction: str = LEFTWARD, max_jump: float | None = None,
                  trim: float = FIT_TRIM) -> DriftReport:
    """Follow maxima across snapshots and measure how the pattern moves.

    Peaks are linked to the nearest peak of the previous snapshot within
    ``max_jump`` (default ``min_separation / 2``); a peak that finds no
    successor ends its track, which is then flagged ``partial``.  Positions
    are unwrapped on periodic grids.

    ``drift_speed`` is the fitted speed of the outermost peak in ``direction``
    (the leading edge of the pattern).  ``spacings`` are the gaps between the
    final-snapshot peaks on the leading half of the pattern and
    ``wavenumber`` is ``2 pi / median(spacings)``.
    """
    grid = record.grid
    period = grid.period
    max_jump = 0.5 * min_separation if max_jump is None else max_jump
    open_tracks: list[PeakTrack] = []
    done: list[PeakTrack] = []
    lead_t, lead_x = [], []
    peaks = np.array([])
    for t, c in zip(record.times, record.snapshots):
        peaks = grid.x[find_field_peaks(c, grid, min_height, min_separation)]
        if peaks.size:
            lead_t.append(float(t))
            lead_x.append(float(peaks.min() if direction == LEFTWARD else peaks.max()))
        claimed = set()
        still_open = []
        for tr in open_tracks:
            last = tr.positions[-1]
            if peaks.size:
                deltas = _periodic_delta(peaks, last % period, period)
                order = np.argsort(np.abs(deltas))
                j = next((int(k) for k in order if int(k) not in claimed
                          and abs(deltas[k]) <= max_jump), None)
            else:
                j = None
            if j is None:
                tr.partial = True
                done.append(tr)
                continue
            claimed.add(j)
            tr.times.append(float(t))
            tr.positions.append(last + float(deltas[j]))
            still_open.append(tr)
        for k, p in enumerate(peaks):
            if k not in claimed:
                still_open.append(PeakTrack([float(t)], [float(p)]))
        open_tracks = still_open
    tracks = done + open_tracks

    lead_t_a, lead_x_a = np.array(lead_t), np.array(lead_x)
    if lead_t_a.size >= 2:
        win = _fit_window(lead_t_a.size, trim)
        drift = linear_fit(lead_t_a[win], lead_x_a[win])[0]
    else:
        drift = 0.0

    final = np.sort(peaks)
    half = final[: (final.size + 1) // 2] if direction == LEFTWARD else final[final.size // 2:]
    spacings = np.diff(half)
    wavenumber = 2 * math.pi / float(np.median(spacings)) if spacings.size else 0.0
    return DriftReport(tracks, lead_t_a, lead_x_a, drift, spacings, wavenumber)


# -- persistence --------------------------------------------------------------

def write_front_csv(trace: FrontTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x_front"])
        for t, x in zip(trace.times, trace.positions):
            w.writerow([format(t, ".12g"), format(x, ".12g")])


def write_peaks_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "peak_count"])
        for t, n in history:
            w.writerow([format(t, ".12g"), n])


def write_spectrum_csv(xi, power, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "power"])
        for k, p in zip(xi, power):
            w.writerow([format(float(k), ".12g"), format(float(p), ".12g")])


def write_summary_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
