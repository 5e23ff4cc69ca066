"""Linear stability of the homogeneous state and related closed-form results.

Perturbing the positive equilibrium ``c = a - b`` by ``exp(i xi x + lambda t)``
gives ``lambda = -Phi(xi)`` with the dispersion function

    Phi(xi) = d xi**2 + sigma * Re phi_hat(xi),      sigma = a - b.

The equilibrium is stable when ``Phi > 0`` for every ``xi``.  For the box
kernel the neutral curves in the ``(N, mu = d/sigma)`` plane follow from the
roots of ``tan z = z/3``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    ConfigurationError,
    InvalidBranchError,
    NonClosureError,
    PhaseSingularityError,
    ScanRangeError,
    SingularInputError,
)
from .kernel import Kernel

# keeps bisection brackets off the poles of tan
POLE_MARGIN = 1e-6
BOX_ROOT_COEFFICIENT = 1.0 / 3.0


@dataclass(frozen=True)
class ModelParams:
    """Reaction constants of ``c_t = d c_xx + c (a - phi*c) - b c``.

    ``d = 0`` is accepted to represent the no-diffusion limit; anything that
    scans frequencies or steps in time requires ``d > 0``.
    """

    d: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("d", "a", "b"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigurationError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if self.d < 0:
            raise ConfigurationError(f"diffusion d must be non-negative, got {self.d}")
        if not self.a > self.b:
            raise ConfigurationError(f"need a > b for a positive equilibrium (a={self.a}, b={self.b})")

    @property
    def sigma(self) -> float:
        return self.a - self.b

    @property
    def mu(self) -> float:
        return self.d / self.sigma

    @classmethod
    def from_sigma(cls, d: float, sigma: float, b: float = 1.0) -> "ModelParams":
        return cls(d=d, a=b + sigma, b=b)

    def to_dict(self):
        return {"d": self.d, "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, data):
        return cls(d=data["d"], a=data["a"], b=data["b"])


@dataclass
class DispersionReport:
    xi_samples: np.ndarray
    phi_samples: np.ndarray
    min_value: float
    min_xi: float
    stable: bool

    @property
    def samples(self):
        return list(zip(self.xi_samples.tolist(), self.phi_samples.tolist()))


@dataclass(frozen=True)
class CriticalCurvePoint:
    branch_index: int
    z_j: float
    N: float
    mu_critical: float

    @property
    def tau(self) -> float:
        return 2.0 * math.pi * self.N / self.z_j


def dispersion_value(params: ModelParams, kernel: Kernel, xi):
    """``d xi**2 + sigma * Re phi_hat(xi)``; vectorized over ``xi``."""
    xi = np.asarray(xi, dtype=float)
    out = params.d * xi * xi + params.sigma * np.real(kernel.fourier_transform(xi))
    return out[()] if out.ndim == 0 else out


def default_xi_max(params: ModelParams, kernel: Kernel) -> float:
    if params.d <= 0:
        raise ConfigurationError("frequency scans need d > 0")
    return max(20.0 / kernel.length_scale, 10.0 * math.sqrt(params.sigma / params.d))


def stability_verdict(params: ModelParams, kernel: Kernel, xi_max: float | None = None,
                      n_samples: int = 2000, xtol: float = 1e-10) -> DispersionReport:
    """Scan ``Phi`` on ``[0, xi_max]`` and refine its minimum by golden section.

    Raises
    ------
    ScanRangeError
        If ``Phi(xi_max) <= sigma``, i.e. the scan stops before diffusion
        dominates and a negative dip could hide beyond it.
    """
    if xi_max is None:
        xi_max = default_xi_max(params, kernel)
    if n_samples < 3:
        raise ConfigurationError("n_samples must be at least 3")
    xs = np.linspace(0.0, xi_max, n_samples)
    phis = dispersion_value(params, kernel, xs)
    if not phis[-1] > params.sigma:
        raise ScanRangeError(
            f"Phi({xi_max:g}) = {phis[-1]:g} <= sigma = {params.sigma:g}; widen the scan")

    i = int(np.argmin(phis))
    min_xi, min_value = float(xs[i]), float(phis[i])
    if 0 < i < n_samples - 1 and phis[i] < phis[i - 1] and phis[i] < phis[i + 1]:
        res = minimize_scalar(lambda x: dispersion_value(params, kernel, x),
                              bracket=(xs[i - 1], xs[i], xs[i + 1]),
                              method="golden", tol=xtol / max(xs[i], 1.0))
        if res.fun <= min_value:
            min_xi, min_value = float(res.x), float(res.fun)
    return DispersionReport(xs, phis, min_value, min_xi, min_value > 0)


def bisect(f, lo: float, hi: float, xtol: float = 0.0, maxiter: int = 200) -> float:
    """Plain bisection on a sign-changing bracket.

    With the default ``xtol = 0`` it runs until the bracket can no longer be
    split in floating point.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"root not bracketed on [{lo}, {hi}]")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= xtol:
            break
        fmid = f(mid)
        if fmid == 0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_branch_roots(coefficient: float, n_branches: int) -> list[float]:
    """First ``n_branches`` positive roots of ``tan z = coefficient * z``.

    Each root lies alone on a tangent branch; the branch ends are pulled in by
    ``POLE_MARGIN`` before bisecting.  For ``coefficient > 1`` the first root
    sits in ``(0, pi/2)``.
    """
    if not coefficient > 0:
        raise ConfigurationError("coefficient must be positive")
    if n_branches < 1:
        raise ConfigurationError("n_branches must be at least 1")

    def f(z):
        return math.tan(z) - coefficient * z

    roots = []
    if coefficient > 1:
        roots.append(bisect(f, POLE_MARGIN, 0.5 * math.pi - POLE_MARGIN))
    k = 1
    while len(roots) < n_branches:
        lo = (2 * k - 1) * 0.5 * math.pi + POLE_MARGIN
        hi = (2 * k + 1) * 0.5 * math.pi - POLE_MARGIN
        roots.append(bisect(f, lo, hi))
        k += 1
    return roots


def critical_mu(N: float, j: int = 1) -> CriticalCurvePoint:
    """Neutral curve ``mu_j(N) = -N**2 sin(z_j) / z_j**3`` for odd ``j``."""
    if not N > 0:
        raise ConfigurationError("N must be positive")
    if int(j) != j or j < 1 or j % 2 == 0:
        raise InvalidBranchError(f"branch index must be a positive odd integer, got {j}")
    z = solve_branch_roots(BOX_ROOT_COEFFICIENT, int(j))[-1]
    mu = -N * N * math.sin(z) / z ** 3
    return CriticalCurvePoint(int(j), z, float(N), mu)


def pattern_period(N: float) -> float:
    """Wavelength ``2 pi N / z_1`` of the first mode to lose stability."""
    if not N > 0:
        raise ConfigurationError("N must be positive")
    z1 = solve_branch_roots(BOX_ROOT_COEFFICIENT, 1)[0]
    return 2.0 * math.pi * N / z1


def bounded_domain_critical_mu(L: float) -> tuple[float, float]:
    """``(z, mu)`` with ``tan z = z`` and ``mu = -sin z / (xi**2 z)``, ``xi = 2 pi / L``."""
    if not L > 0:
        raise ConfigurationError("L must be positive")
    xi = 2.0 * math.pi / L
    z = solve_branch_roots(1.0, 1)[0]
    return z, -math.sin(z) / (xi * xi * z)


def minimal_wave_speed(params: ModelParams) -> float:
    return 2.0 * math.sqrt(params.d * params.sigma)


def asymmetric_drift_speed(xi: float, N: float) -> float:
    """``(cos(xi N) - 1) / (xi**2 N)``; negative values mean leftward drift."""
    if xi == 0:
        raise SingularInputError("drift speed is singular at xi = 0")
    if not N > 0:
        raise ConfigurationError("N must be positive")
    return (math.cos(xi * N) - 1.0) / (xi * xi * N)


def neutral_frequency_relation(params: ModelParams, kernel: Kernel, xi: float) -> tuple[float, float]:
    """Real and imaginary balance for a travelling mode ``cos(xi (x - s t))``.

    Returns ``(d xi**2 + sigma int phi cos, s)`` with
    ``xi s = -sigma int phi(y) sin(xi y) dy``.
    """
    if not xi > 0:
        raise ConfigurationError("xi must be positive")
    ft = kernel.fourier_transform(xi)
    residual = params.d * xi * xi + params.sigma * float(np.real(ft))
    speed = -params.sigma * float(np.imag(ft)) / xi
    return residual, speed


@dataclass
class PhaseOrbit:
    c: np.ndarray
    p: np.ndarray
    period: float
    return_error: float
    steps: int = field(default=0)


def taylor_phase_plane(params: ModelParams, gamma: float, start_c: float,
                       arc_steps: int = 20000, step: float | None = None) -> PhaseOrbit:
    """Integrate ``c' = p, p' = -c (sigma - c) / (d (1 - gamma c))`` from ``(start_c, 0)``.

    This is the stationary problem of the two-term Taylor reduction of the
    nonlocal equation.  Around ``(sigma, 0)`` it is a center when
    ``gamma * sigma > 1``.  Integration uses classical RK4 with a fixed step
    (default: 1/2000 of the linearized period) and stops at the second sign
    change of ``p``; the crossing is located exactly with a partial step.

    Raises
    ------
    PhaseSingularityError
        The orbit reaches ``c = 1/gamma``.
    NonClosureError
        No return within ``arc_steps`` steps, or the orbit escapes to infinity.
    """
    d, sigma = params.d, params.sigma
    if not d > 0:
        raise ConfigurationError("phase plane needs d > 0")

    def denom(c):
        return d * (1.0 - gamma * c)

    def rhs(state):
        c, p = state
        return np.array([p, -c * (sigma - c) / denom(c)])

    def rk4(state, h):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        return state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    start = np.array([float(start_c), 0.0])
    if start_c == sigma:
        return PhaseOrbit(start[:1].copy(), start[1:].copy(), 0.0, 0.0, 0)
    if denom(start_c) == 0:
        raise PhaseSingularityError("start point lies on c = 1/gamma")

    if step is None:
        curvature = abs(sigma / denom(sigma)) if denom(sigma) != 0 else 1.0 / d
        step = 2.0 * math.pi / math.sqrt(curvature) / 2000.0

    sign0 = math.copysign(1.0, denom(start_c))
    states = [start]
    state = start
    crossings = 0
    last_sign = 0.0
    for n in range(1, arc_steps + 1):
        new = rk4(state, step)
        if not np.all(np.isfinite(new)) or abs(new[0]) > 1e6 * (1 + abs(sigma)):
            raise NonClosureError(f"orbit escaped after {n} steps")
        if math.copysign(1.0, denom(new[0])) != sign0 or denom(new[0]) == 0:
            raise PhaseSingularityError(f"orbit crossed c = 1/gamma = {1 / gamma:g}")
        s = np.sign(new[1])
        if s != 0 and last_sign != 0 and s != last_sign:
            crossings += 1
        if s != 0:
            last_sign = s
        if crossings == 2:
            old = state
            h_star = brentq(lambda h: rk4(old, h)[1], 0.0, step, xtol=1e-15)
            final = rk4(old, h_star)
            states.append(final)
            orbit = np.array(states)
            return PhaseOrbit(orbit[:, 0], orbit[:, 1], (n - 1) * step + h_star,
                              float(np.hypot(*(final - start))), n)
        states.append(new)
        state = new
    raise NonClosureError(f"no return to start within {arc_steps} steps")


def neutral_curve_rows(N_values: Iterable[float], branches: Iterable[int] = (1,)) -> list[CriticalCurvePoint]:
    """Critical points for every ``N`` and every requested odd branch ``j``."""
    branches = list(branches)
    if not branches:
        raise ConfigurationError("need at least one branch")
    for j in branches:
        if int(j) != j or j < 1 or j % 2 == 0:
            raise InvalidBranchError(f"branch index must be a positive odd integer, got {j}")
    roots = solve_branch_roots(BOX_ROOT_COEFFICIENT, max(branches))
    rows = []
    for N in N_values:
        if not N > 0:
            raise ConfigurationError("N values must be positive")
        for j in branches:
            z = roots[j - 1]
            rows.append(CriticalCurvePoint(int(j), z, float(N), -N * N * math.sin(z) / z ** 3))
    return rows


def write_neutral_curve_csv(rows: Iterable[CriticalCurvePoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "j", "z_j", "mu_critical", "tau"])
        for r in rows:
            w.writerow([repr(r.N), r.branch_index, repr(r.z_j), repr(r.mu_critical), repr(r.tau)])
