"""Explicit finite-difference integration of the 1D nonlocal equation.

    c_t = d c_xx + c (a - b - K[c]),     K[c](x) = int phi(x - y) c(y) dy

The integral is a trapezoid sum over kernel weights (``direct``) or the same
circular sum evaluated with FFTs (``spectral``, periodic grids only).
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .dispersion import ModelParams, pattern_period
from .errors import BlowUpError, ConfigurationError
from .kernel import Kernel, Shape

log = logging.getLogger(__name__)

PERIODIC = "periodic"
ZERO_FLUX = "zero_flux"
DIRECT = "direct"
SPECTRAL = "spectral"

# default explicit step as a fraction of the diffusive limit dx**2/(2d)
DEFAULT_DT_FRACTION = 0.4
MIN_POINTS = 16
NOISE_FRACTION = 1e-3


@dataclass(frozen=True)
class Grid:
    L: float
    n: int
    bc: str = PERIODIC

    def __post_init__(self):
        if self.bc not in (PERIODIC, ZERO_FLUX):
            raise ConfigurationError(f"unknown boundary condition {self.bc!r}")
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise ConfigurationError(f"grid needs at least {MIN_POINTS} points, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigurationError("domain length must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @classmethod
    def from_spacing(cls, L: float, dx: float, bc: str = PERIODIC) -> "Grid":
        """Grid whose spacing is the largest value not exceeding ``dx``."""
        cells = max(int(math.ceil(L / dx - 1e-9)), 1)
        return cls(L, cells if bc == PERIODIC else cells + 1, bc)

    @property
    def dx(self) -> float:
        return self.L / self.n if self.bc == PERIODIC else self.L / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @property
    def period(self) -> float:
        """Length used for discrete Fourier modes."""
        return self.n * self.dx

    def integrate(self, c: np.ndarray) -> float:
        if self.bc == PERIODIC:
            return float(np.sum(c) * self.dx)
        return float((np.sum(c) - 0.5 * (c[0] + c[-1])) * self.dx)

    def to_dict(self):
        return {"L": self.L, "n": self.n, "bc": self.bc}

    @classmethod
    def from_dict(cls, data):
        return cls(data["L"], data["n"], data.get("bc", PERIODIC))


@dataclass
class State:
    c: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)

    def check(self, tol: float = 1e-12) -> None:
        if not np.all(np.isfinite(self.c)):
            raise BlowUpError(f"non-finite concentration at t={self.t:g}", time=self.t)
        if self.c.size and self.c.min() < -tol:
            raise ConfigurationError(f"negative concentration {self.c.min():g} at t={self.t:g}")


@dataclass(frozen=True)
class SchemeConfig:
    dt: float
    t_end: float
    snapshot_every: float
    convolution_mode: str = DIRECT
    safety: float = 0.9

    def __post_init__(self):
        if self.convolution_mode not in (DIRECT, SPECTRAL):
            raise ConfigurationError(f"unknown convolution mode {self.convolution_mode!r}")
        if not self.dt > 0 or not self.t_end >= 0 or not self.snapshot_every > 0:
            raise ConfigurationError("dt and snapshot_every must be positive, t_end non-negative")
        if not 0 < self.safety <= 1:
            raise ConfigurationError("safety factor must lie in (0, 1]")

    def check_stability(self, grid: Grid, params: ModelParams, c_max: float) -> None:
        """Diffusive and reaction step bounds of the explicit scheme."""
        tol = 1 + 1e-12
        if params.d > 0:
            limit = self.safety * grid.dx ** 2 / (2 * params.d)
            if self.dt > limit * tol:
                raise ConfigurationError(f"dt={self.dt:g} exceeds diffusive bound {limit:g}")
        # Lipschitz constant of c (sigma - K c) for a unit-mass kernel and 0 <= c <= c_max
        limit = self.safety / (params.sigma + 2.0 * c_max)
        if self.dt > limit * tol:
            raise ConfigurationError(f"dt={self.dt:g} exceeds reaction bound {limit:g}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def default_dx(kernel: Kernel) -> float:
    """``min(0.02, tau/64)`` with tau the predicted pattern period of box kernels."""
    if kernel.shape in (Shape.BOX_SYMMETRIC, Shape.BOX_ASYMMETRIC):
        return min(0.02, pattern_period(kernel.width) / 64.0)
    return 0.02


def default_dt(dx: float, d: float) -> float:
    return DEFAULT_DT_FRACTION * dx * dx / (2.0 * d)


@dataclass
class RunRecord:
    grid: Grid
    params: ModelParams
    kernel: Kernel
    dt: float
    times: np.ndarray
    snapshots: np.ndarray
    masses: np.ndarray
    min_value: float = field(default=math.inf)

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> State:
        return State(self.snapshots[i].copy(), float(self.times[i]))

    @property
    def final(self) -> State:
        return self.state(-1)

    def thinned(self, every: int) -> "RunRecord":
        sl = slice(None, None, every)
        return RunRecord(self.grid, self.params, self.kernel, self.dt, self.times[sl],
                         self.snapshots[sl], self.masses[sl], self.min_value)


class NonlocalOperator:
    """Precomputed discrete convolution ``K_i = sum_k w_k c_{i-k}`` for one grid."""

    def __init__(self, kernel: Kernel, grid: Grid, mode: str = DIRECT):
        if mode not in (DIRECT, SPECTRAL):
            raise ConfigurationError(f"unknown convolution mode {mode!r}")
        if mode == SPECTRAL and grid.bc != PERIODIC:
            raise ConfigurationError("spectral convolution requires a periodic grid")
        limit = grid.L / 2 if grid.bc == PERIODIC else grid.L
        if kernel.support_radius > limit * (1 + 1e-12):
            raise ConfigurationError(
                f"kernel support {kernel.support_radius:g} exceeds {limit:g} for this grid")
        self.kernel, self.grid, self.mode = kernel, grid, mode
        self.weights = kernel.sample_on_grid(grid.dx)
        self.m = (self.weights.size - 1) // 2
        self.is_delta = kernel.shape is Shape.DELTA
        if mode == SPECTRAL:
            circ = np.zeros(grid.n)
            np.add.at(circ, np.arange(-self.m, self.m + 1) % grid.n, self.weights)
            self._kernel_hat = np.fft.rfft(circ)

    def __call__(self, c: np.ndarray) -> np.ndarray:
        if self.is_delta:
            return c * self.weights[0]
        if self.mode == SPECTRAL:
            return np.fft.irfft(np.fft.rfft(c) * self._kernel_hat, self.grid.n)
        m = self.m
        if self.grid.bc == PERIODIC:
            padded = np.concatenate((c[-m:], c, c[:m])) if m else c
        else:
            padded = np.pad(c, m, mode="edge")
        return np.convolve(padded, self.weights, mode="valid")


def nonlocal_term(state: State, kernel: Kernel, grid: Grid, mode: str = DIRECT) -> np.ndarray:
    """Trapezoid approximation of ``int phi(x - y) c(y) dy`` on the grid.

    Zero-flux grids extend ``c`` by its boundary values outside the domain.
    """
    return NonlocalOperator(kernel, grid, mode)(state.c)


def laplacian(c: np.ndarray, grid: Grid) -> np.ndarray:
    out = np.empty_like(c)
    out[1:-1] = c[2:] - 2.0 * c[1:-1] + c[:-2]
    if grid.bc == PERIODIC:
        out[0] = c[1] - 2.0 * c[0] + c[-1]
        out[-1] = c[0] - 2.0 * c[-1] + c[-2]
    else:
        out[0] = 2.0 * (c[1] - c[0])
        out[-1] = 2.0 * (c[-2] - c[-1])
    return out / grid.dx ** 2


def _advance(c, t, params, op, grid, dt):
    # overflow is reported below as a blow-up, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        new = c + dt * (params.d * laplacian(c, grid) + c * (params.sigma - op(c)))
    if not np.all(np.isfinite(new)):
        raise BlowUpError(f"non-finite values after step at t={t + dt:g}", time=t + dt)
    return new


def step(state: State, params: ModelParams, kernel: Kernel, grid: Grid, dt: float,
         mode: str = DIRECT) -> State:
    """One forward-Euler step of the nonlocal equation."""
    op = NonlocalOperator(kernel, grid, mode)
    return State(_advance(state.c, state.t, params, op, grid, dt), state.t + dt)


def simulate(initial: State, params: ModelParams, kernel: Kernel, grid: Grid,
             scheme: SchemeConfig) -> RunRecord:
    """Advance ``initial`` to ``scheme.t_end`` and collect snapshots.

    A snapshot (and its total mass) is stored at the start, every
    ``snapshot_every`` time units and at the end.  On blow-up the raised
    :class:`BlowUpError` carries the partial record.
    """
    if initial.c.shape != (grid.n,):
        raise ConfigurationError(f"initial state has {initial.c.size} points, grid has {grid.n}")
    if not params.d > 0:
        raise ConfigurationError("simulation needs d > 0")
    initial.check()
    scheme.check_stability(grid, params, max(float(initial.c.max()), params.sigma))
    op = NonlocalOperator(kernel, grid, scheme.convolution_mode)

    dt = scheme.dt
    n_steps = int(round(scheme.t_end / dt))
    stride = max(1, int(round(scheme.snapshot_every / dt)))
    c = initial.c.copy()
    times, snaps, masses = [initial.t], [c.copy()], [grid.integrate(c)]
    lowest = float(c.min())

    def record():
        return RunRecord(grid, params, kernel, dt, np.array(times), np.array(snaps),
                         np.array(masses), lowest)

    for k in range(1, n_steps + 1):
        t_prev = initial.t + (k - 1) * dt
        try:
            c = _advance(c, t_prev, params, op, grid, dt)
        except BlowUpError as exc:
            exc.record = record()
            raise
        lowest = min(lowest, float(c.min()))
        if k % stride == 0 or k == n_steps:
            times.append(initial.t + k * dt)
            snaps.append(c.copy())
            masses.append(grid.integrate(c))
    if lowest < -1e-9:
        log.warning("concentration dipped to %.3g; check the time step", lowest)
    return record()


@dataclass(frozen=True)
class InitialCondition:
    """Recipe for an initial field.

    kind is one of ``zero``, ``perturbed_equilibrium`` (uniform noise of the
    given amplitude around ``a - b``; ``amplitude=None`` means
    ``1e-3 (a - b)``), ``plug`` (``height`` on an interval of
    ``width`` around ``center``) or ``two_plugs`` (same, around each entry of
    ``centers``).  ``height=None`` means ``a - b``.
    """

    kind: str = "perturbed_equilibrium"
    amplitude: float | None = None
    seed: int = 0
    center: float | None = None
    centers: Sequence[float] | None = None
    width: float = 1.0
    height: float | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "perturbed_equilibrium", "plug", "two_plugs"):
            raise ConfigurationError(f"unknown initial condition {self.kind!r}")
        if self.amplitude is not None and self.amplitude < 0:
            raise ConfigurationError("noise amplitude must be nonnegative")
        if self.centers is not None:
            object.__setattr__(self, "centers", tuple(float(v) for v in self.centers))

    def to_dict(self):
        out = asdict(self)
        if out["centers"] is not None:
            out["centers"] = list(out["centers"])
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def build_initial(init: InitialCondition, grid: Grid, params: ModelParams) -> State:
    x = grid.x
    sigma = params.sigma
    if init.kind == "zero":
        return State(np.zeros(grid.n))
    if init.kind == "perturbed_equilibrium":
        amp = NOISE_FRACTION * sigma if init.amplitude is None else init.amplitude
        rng = np.random.default_rng(init.seed)
        return State(sigma + rng.uniform(-amp, amp, grid.n))

    height = sigma if init.height is None else init.height
    if init.kind == "plug":
        centers = (grid.L / 2 if init.center is None else init.center,)
    else:
        centers = init.centers or (grid.L / 3, 2 * grid.L / 3)
    c = np.zeros(grid.n)
    half = init.width / 2 + 1e-9 * grid.dx
    for center in centers:
        if center - init.width / 2 < 0 or center + init.width / 2 > grid.L:
            raise ConfigurationError(f"plug at {center} does not fit in [0, {grid.L}]")
        c[np.abs(x - center) <= half] = height
    return State(c)


def write_snapshots_csv(record: RunRecord, path, every: int = 1, point_stride: int = 1) -> None:
    """Long-format ``t,x,c`` table, optionally thinned in time and space."""
    x = record.grid.x[::point_stride]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "c"])
        for t, c in zip(record.times[::every], record.snapshots[::every]):
            tt = format(float(t), ".12g")
            for xi, ci in zip(x, c[::point_stride]):
                w.writerow([tt, format(float(xi), ".12g"), format(float(ci), ".12g")])
