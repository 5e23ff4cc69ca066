"""Influence functions for the nonlocal consumption term.

A :class:`Kernel` describes phi(y), the weight with which individuals at
distance ``y`` consume the resource available at a point.  Each shape knows
its analytic Fourier transform ``int phi(y) exp(i xi y) dy``, its half second
moment and how to turn itself into trapezoid weights on a uniform mesh.

Shapes
------
box_symmetric   height 1 on ``|y| <= width``           (width = half-width N)
box_asymmetric  height 1 on ``0 <= y <= width``        (width = full support N)
gaussian        ``exp(-decay * y**2)``
exponential     ``exp(-decay * |y|)``
delta           point mass at the origin

With ``normalized=True`` (the default) every shape is rescaled to unit mass.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigurationError, UnsupportedOperationError

# phi(y)/phi(0) below this is treated as zero when truncating infinite tails
TAIL_TOLERANCE = 1e-12


class Shape(str, enum.Enum):
    BOX_SYMMETRIC = "box_symmetric"
    BOX_ASYMMETRIC = "box_asymmetric"
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"
    DELTA = "delta"


_BOXES = (Shape.BOX_SYMMETRIC, Shape.BOX_ASYMMETRIC)
_DECAYING = (Shape.GAUSSIAN, Shape.EXPONENTIAL)


def _sinc(u):
    """sin(u)/u with the removable singularity filled in."""
    return np.sinc(np.asarray(u, dtype=float) / np.pi)


def _one_minus_cos_over(u):
    """(1 - cos u)/u, evaluated without dividing by u."""
    u = np.asarray(u, dtype=float)
    return 0.5 * u * _sinc(0.5 * u) ** 2


def _unwrap(value):
    return value[()] if isinstance(value, np.ndarray) and value.ndim == 0 else value


@dataclass(frozen=True)
class Kernel:
    """Immutable descriptor of an influence function.

    Use the named constructors (:meth:`box`, :meth:`box_asymmetric`,
    :meth:`gaussian`, :meth:`exponential`, :meth:`delta`) rather than the raw
    dataclass signature.
    """

    shape: Shape
    width: float | None = None
    decay: float | None = None
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if self.shape in _BOXES:
            if self.width is None or not (self.width > 0) or not math.isfinite(self.width):
                raise ConfigurationError(f"{self.shape.value} kernel needs a positive finite width")
            if self.decay is not None:
                raise ConfigurationError(f"{self.shape.value} kernel takes no decay parameter")
            object.__setattr__(self, "width", float(self.width))
        elif self.shape in _DECAYING:
            if self.decay is None or not (self.decay > 0) or not math.isfinite(self.decay):
                raise ConfigurationError(f"{self.shape.value} kernel needs a positive finite decay")
            if self.width is not None:
                raise ConfigurationError(f"{self.shape.value} kernel takes no width parameter")
            object.__setattr__(self, "decay", float(self.decay))
        elif self.width is not None or self.decay is not None:
            raise ConfigurationError("delta kernel takes no parameters")
        object.__setattr__(self, "normalized", bool(self.normalized))

    # -- constructors -------------------------------------------------------

    @classmethod
    def box(cls, half_width: float, normalized: bool = True) -> "Kernel":
        return cls(Shape.BOX_SYMMETRIC, width=half_width, normalized=normalized)

    @classmethod
    def box_asymmetric(cls, width: float, normalized: bool = True) -> "Kernel":
        return cls(Shape.BOX_ASYMMETRIC, width=width, normalized=normalized)

    @classmethod
    def gaussian(cls, decay: float, normalized: bool = True) -> "Kernel":
        return cls(Shape.GAUSSIAN, decay=decay, normalized=normalized)

    @classmethod
    def exponential(cls, decay: float, normalized: bool = True) -> "Kernel":
        return cls(Shape.EXPONENTIAL, decay=decay, normalized=normalized)

    @classmethod
    def delta(cls) -> "Kernel":
        return cls(Shape.DELTA)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"shape": self.shape.value}
        if self.width is not None:
            out["width"] = self.width
        if self.decay is not None:
            out["decay"] = self.decay
        if self.shape is not Shape.DELTA:
            out["normalized"] = self.normalized
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Kernel":
        unknown = set(data) - {"shape", "width", "decay", "normalized"}
        if unknown:
            raise ConfigurationError(f"unknown kernel keys: {sorted(unknown)}")
        try:
            shape = Shape(data["shape"])
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad kernel shape in {data!r}") from exc
        return cls(shape, width=data.get("width"), decay=data.get("decay"),
                   normalized=data.get("normalized", True))

    # -- basic properties ---------------------------------------------------

    @property
    def is_even(self) -> bool:
        return self.shape is not Shape.BOX_ASYMMETRIC

    @property
    def raw_mass(self) -> float:
        """Integral of the un-normalized shape."""
        if self.shape is Shape.BOX_SYMMETRIC:
            return 2.0 * self.width
        if self.shape is Shape.BOX_ASYMMETRIC:
            return self.width
        if self.shape is Shape.GAUSSIAN:
            return math.sqrt(math.pi / self.decay)
        if self.shape is Shape.EXPONENTIAL:
            return 2.0 / self.decay
        return 1.0

    @property
    def mass(self) -> float:
        return 1.0 if self.normalized else self.raw_mass

    @property
    def _scale(self) -> float:
        return 1.0 / self.raw_mass if self.normalized else 1.0

    def support(self) -> tuple[float, float]:
        """Closed interval outside which phi vanishes (tails cut at TAIL_TOLERANCE)."""
        if self.shape is Shape.BOX_SYMMETRIC:
            return -self.width, self.width
        if self.shape is Shape.BOX_ASYMMETRIC:
            return 0.0, self.width
        if self.shape is Shape.GAUSSIAN:
            r = math.sqrt(-math.log(TAIL_TOLERANCE) / self.decay)
            return -r, r
        if self.shape is Shape.EXPONENTIAL:
            r = -math.log(TAIL_TOLERANCE) / self.decay
            return -r, r
        return 0.0, 0.0

    @property
    def support_radius(self) -> float:
        lo, hi = self.support()
        return max(abs(lo), abs(hi))

    @property
    def length_scale(self) -> float:
        """Characteristic width used to size frequency scans."""
        if self.shape in _BOXES:
            return self.width
        if self.shape is Shape.GAUSSIAN:
            return 1.0 / math.sqrt(self.decay)
        if self.shape is Shape.EXPONENTIAL:
            return 1.0 / self.decay
        return 1.0

    # -- analytic quantities ------------------------------------------------

    def evaluate(self, y):
        """Pointwise density phi(y); accepts scalars or arrays."""
        if self.shape is Shape.DELTA:
            raise UnsupportedOperationError("the delta kernel has no pointwise density")
        y = np.asarray(y, dtype=float)
        if self.shape is Shape.BOX_SYMMETRIC:
            raw = (np.abs(y) <= self.width).astype(float)
        elif self.shape is Shape.BOX_ASYMMETRIC:
            raw = ((y >= 0.0) & (y <= self.width)).astype(float)
        elif self.shape is Shape.GAUSSIAN:
            raw = np.exp(-self.decay * y * y)
        else:
            raw = np.exp(-self.decay * np.abs(y))
        return _unwrap(raw * self._scale)

    def fourier_transform(self, xi):
        """``int phi(y) exp(i xi y) dy`` in closed form (complex)."""
        xi = np.asarray(xi, dtype=float)
        if self.shape is Shape.BOX_SYMMETRIC:
            u = xi * self.width
            out = self.raw_mass * _sinc(u) + 0j
        elif self.shape is Shape.BOX_ASYMMETRIC:
            u = xi * self.width
            out = self.raw_mass * (_sinc(u) + 1j * _one_minus_cos_over(u))
        elif self.shape is Shape.GAUSSIAN:
            out = self.raw_mass * np.exp(-xi * xi / (4.0 * self.decay)) + 0j
        elif self.shape is Shape.EXPONENTIAL:
            a = self.decay
            out = 2.0 * a / (a * a + xi * xi) + 0j
        else:
            out = np.ones_like(xi) + 0j
        if self.shape is not Shape.DELTA:
            out = out * self._scale
        return _unwrap(out)

    def second_moment_gamma(self) -> float:
        """Half the second moment, ``0.5 * int phi(y) y**2 dy``."""
        if self.shape is Shape.BOX_SYMMETRIC:
            raw = self.width ** 3 / 3.0
        elif self.shape is Shape.BOX_ASYMMETRIC:
            raw = self.width ** 3 / 6.0
        elif self.shape is Shape.GAUSSIAN:
            raw = 0.25 * math.sqrt(math.pi) * self.decay ** -1.5
        elif self.shape is Shape.EXPONENTIAL:
            raw = 2.0 / self.decay ** 3
        else:
            return 0.0
        return raw * self._scale

    # -- discretization -----------------------------------------------------

    def sample_on_grid(self, dx: float, support_radius: float | None = None) -> np.ndarray:
        """Trapezoid weights ``phi(k dx) dx`` for offsets ``k = -m..m``.

        The returned vector has length ``2m + 1`` with ``m = floor(R/dx)`` and
        the zero offset at index ``m``.  Weights sitting exactly on a jump of
        the box shapes, or on the ends of the truncated range, are halved.
        Normalized kernels are rescaled so the weights sum to one.
        """
        if self.shape is Shape.DELTA:
            return np.ones(1)
        if not dx > 0:
            raise ConfigurationError("dx must be positive")
        radius = self.support_radius if support_radius is None else float(support_radius)
        if radius < self.support_radius * (1 - 1e-12):
            raise ConfigurationError(
                f"support_radius {radius} smaller than kernel support {self.support_radius}")
        m = int(math.floor(radius / dx + 1e-9))
        y = np.arange(-m, m + 1) * dx
        raw = np.asarray(self.evaluate(y), dtype=float) / self._scale
        tol = 1e-9 * dx
        halve = np.zeros(y.size, dtype=bool)
        halve[[0, -1]] = True
        lo, hi = self.support()
        if self.shape in _BOXES:
            halve |= (np.abs(y - lo) < tol) | (np.abs(y - hi) < tol)
        w = raw * dx
        w[halve] *= 0.5
        if self.normalized:
            w /= w.sum()
        return w
