"""Uniform 2D grids, scalar fields on them, and trapezoidal inner products.

Fields store samples with shape ``(nx, ny)``: ``samples[i, j]`` is the value at
``(x[i], y[j])``.  Row-major flattening therefore walks ``y`` fastest.

All integrals are over the plane with measure ``dx dy``.  Sums are taken by
:func:`numpy.sum` over a contiguous 1D buffer, which uses pairwise summation and
is deterministic for a given input.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ContractError, NumericalError

MEASURE = "d2x"


@dataclass(frozen=True)
class UnitSystem:
    """Natural units used by every formula in the package."""

    hbar: float = 1.0
    c: float = 1.0
    e_abs: float = 1.0

    def __post_init__(self):
        if (self.hbar, self.c, self.e_abs) != (1.0, 1.0, 1.0):
            raise ContractError("only hbar = c = |e| = 1 is supported")

    def describe(self) -> str:
        return f"hbar=c=|e|=1, measure {MEASURE}"


UNITS = UnitSystem()


@dataclass(frozen=True)
class Grid2D:
    """Endpoint-inclusive uniform lattice on ``[x_min, x_max] x [y_min, y_max]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("x_min", "x_max", "y_min", "y_max"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ContractError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if not self.x_max > self.x_min or not self.y_max > self.y_min:
            raise ContractError("grid bounds must satisfy max > min")
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4:
                raise ContractError(f"{name} must be an integer >= 4, got {n}")
            object.__setattr__(self, name, int(n))

    @classmethod
    def square(cls, half_width: float, n: int) -> Grid2D:
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def half_width(self) -> float:
        """Largest distance from the origin to a domain edge along an axis."""
        return max(abs(self.x_min), abs(self.x_max), abs(self.y_min), abs(self.y_max))

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.nx)
        x.flags.writeable = False
        return x

    @cached_property
    def y(self) -> np.ndarray:
        y = np.linspace(self.y_min, self.y_max, self.ny)
        y.flags.writeable = False
        return y

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` of shape ``(nx, ny)``."""
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    @cached_property
    def weights(self) -> np.ndarray:
        """Tensor-product trapezoidal weights, including the cell area."""
        wx = np.full(self.nx, self.dx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.dy)
        wy[[0, -1]] *= 0.5
        w = np.outer(wx, wy)
        w.flags.writeable = False
        return w

    def point(self, i: int, j: int) -> tuple[float, float]:
        return float(self.x[i]), float(self.y[j])

    def describe(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "nx": self.nx,
            "ny": self.ny,
            "measure": MEASURE,
        }


def _first_nonfinite(samples: np.ndarray) -> tuple[int, int] | None:
    bad = ~np.isfinite(samples)
    if not bad.any():
        return None
    flat = int(np.argmax(bad.ravel()))
    i, j = np.unravel_index(flat, samples.shape)
    return int(i), int(j)


@dataclass(frozen=True, eq=False)
class _Field:
    grid: Grid2D
    samples: np.ndarray = field(repr=False)

    _dtype = float

    def __post_init__(self):
        data = np.array(self.samples, dtype=self._dtype, copy=True)
        if data.shape != self.grid.shape:
            if data.size == self.grid.nx * self.grid.ny:
                data = data.reshape(self.grid.shape)
            else:
                raise ContractError(
                    f"expected {self.grid.nx * self.grid.ny} samples, got {data.size}"
                )
        bad = _first_nonfinite(data)
        if bad is not None:
            raise NumericalError(f"non-finite sample at lattice index {bad}")
        data.flags.writeable = False
        object.__setattr__(self, "samples", data)

    def _check_grid(self, other: _Field):
        if other.grid != self.grid:
            raise ContractError("fields live on different grids")


class RealField(_Field):
    """Real scalar samples on a grid."""

    _dtype = float


class ComplexField(_Field):
    """Complex scalar samples on a grid (a sampled wavefunction)."""

    _dtype = complex

    def norm2(self) -> float:
        return inner_product(self, self).real

    def __add__(self, other: ComplexField) -> ComplexField:
        self._check_grid(other)
        return ComplexField(self.grid, self.samples + other.samples)

    def __sub__(self, other: ComplexField) -> ComplexField:
        self._check_grid(other)
        return ComplexField(self.grid, self.samples - other.samples)

    def scaled(self, factor: complex) -> ComplexField:
        return ComplexField(self.grid, factor * self.samples)


def integrate(grid: Grid2D, values: np.ndarray) -> complex | float:
    """Trapezoidal integral of sampled values over the grid."""
    weighted = np.ascontiguousarray(grid.weights * values).ravel()
    return np.sum(weighted)


def inner_product(f: ComplexField, g: ComplexField) -> complex:
    """Return the trapezoidal approximation of the integral of conj(f) * g."""
    f._check_grid(g)
    fr, fi = f.samples.real, f.samples.imag
    gr, gi = g.samples.real, g.samples.imag
    # split real/imaginary parts so that (f, f) is exactly real
    total = complex(integrate(f.grid, fr * gr + fi * gi), integrate(f.grid, fr * gi - fi * gr))
    if not np.isfinite(total):
        raise NumericalError("inner product is not finite")
    return total


def apply_phase(f: ComplexField, alpha: RealField) -> ComplexField:
    """Multiply ``f`` pointwise by ``exp(i * alpha)``."""
    f._check_grid(alpha)
    return ComplexField(f.grid, f.samples * np.exp(1j * alpha.samples))


def expectation(f: ComplexField, w: RealField, *, norm_tol: float = 1e-8) -> float:
    """Return the integral of ``w * |f|**2``.

    A warning is issued when ``f`` is not normalized to within ``norm_tol``;
    the unnormalized moment is returned regardless.
    """
    f._check_grid(w)
    density = np.abs(f.samples) ** 2
    norm = float(integrate(f.grid, density))
    if abs(norm - 1.0) > norm_tol:
        warnings.warn(
            f"expectation of a non-normalized field (norm {norm:.12g})",
            RuntimeWarning,
            stacklevel=2,
        )
    value = float(integrate(f.grid, w.samples * density))
    if not np.isfinite(value):
        raise NumericalError("expectation value is not finite")
    return value
