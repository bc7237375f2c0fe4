"""Parametrized state families and finite-difference parameter derivatives."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Literal

import numpy as np

from . import expr as ex
from .errors import ContractError, NumericalError
from .fields import ComplexField, Grid2D

logger = logging.getLogger(__name__)

Normalization = Literal["enforce", "trust"]


class ParamPoint(Mapping):
    """Immutable ordered mapping from parameter name to a finite real value."""

    __slots__ = ("_items",)

    def __init__(self, values: Mapping[str, float] | Iterable[tuple[str, float]] = (), **kwargs):
        items = dict(values)
        items.update(kwargs)
        clean = {}
        for name, value in items.items():
            value = float(value)
            if not math.isfinite(value):
                raise ContractError(f"parameter {name!r} must be finite, got {value}")
            clean[str(name)] = value
        self._items = clean

    def __getitem__(self, name: str) -> float:
        return self._items[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self):
        return hash(tuple(self._items.items()))

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items.items())
        return f"ParamPoint({inner})"

    def replace(self, **values: float) -> ParamPoint:
        items = dict(self._items)
        items.update(values)
        return ParamPoint(items)


@dataclass(frozen=True)
class StateFamily:
    """A map from parameter points to wavefunctions sampled on a grid.

    ``domain`` holds open intervals ``(lo, hi)`` per parameter; finite-difference
    steps are shrunk so that they never leave them.
    """

    params: tuple[str, ...]
    evaluator: Callable[[ParamPoint, Grid2D], ComplexField] = field(repr=False)
    normalization: Normalization = "enforce"
    domain: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    name: str = "family"

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if len(set(self.params)) != len(self.params):
            raise ContractError(f"duplicate parameter names in {self.params}")
        if self.normalization not in ("enforce", "trust"):
            raise ContractError(f"unknown normalization policy {self.normalization!r}")
        unknown = set(self.domain) - set(self.params)
        if unknown:
            raise ContractError(f"domain given for undeclared parameters {sorted(unknown)}")

    def check_point(self, at: ParamPoint):
        missing = [p for p in self.params if p not in at]
        if missing:
            raise ContractError(f"{self.name}: missing parameter values {missing}")
        for name, (lo, hi) in self.domain.items():
            if not lo < at[name] < hi:
                raise ContractError(f"{self.name}: {name}={at[name]} outside ({lo}, {hi})")

    def __call__(self, at: ParamPoint, grid: Grid2D) -> ComplexField:
        psi = self.evaluator(at, grid)
        if self.normalization == "enforce":
            n2 = psi.norm2()
            if not n2 > 0.0:
                raise NumericalError(f"{self.name}: state has zero norm at {at}")
            psi = psi.scaled(1.0 / math.sqrt(n2))
        return psi


@dataclass(frozen=True)
class DerivativeScheme:
    """Central differences with relative step ``h_rel``, optionally Richardson-extrapolated."""

    h_rel: float = 1e-3
    richardson: bool = True

    def __post_init__(self):
        if not 0.0 < self.h_rel < 0.1:
            raise ContractError(f"h_rel must lie in (0, 0.1), got {self.h_rel}")

    def describe(self) -> dict:
        return {"h_rel": self.h_rel, "richardson": self.richardson}


DEFAULT_SCHEME = DerivativeScheme()


def make_expr_family(
    amplitude: ex.Expr,
    phase: ex.Expr,
    params: Iterable[str],
    normalization: Normalization = "enforce",
    domain: Mapping[str, tuple[float, float]] | None = None,
    name: str = "expr",
) -> StateFamily:
    """Family ``psi = A * exp(i * phi)`` from real amplitude and phase expressions."""
    params = tuple(params)
    for label, tree in (("amplitude", amplitude), ("phase", phase)):
        extra = ex.parameters(tree) - set(params)
        if extra:
            raise ContractError(f"{label} references undeclared parameters {sorted(extra)}")

    def evaluate(at: ParamPoint, grid: Grid2D) -> ComplexField:
        a = ex.eval_on_grid(amplitude, grid, at).samples
        phi = ex.eval_on_grid(phase, grid, at).samples
        return ComplexField(grid, a * np.exp(1j * phi))

    return StateFamily(params, evaluate, normalization, dict(domain or {}), name)


def derivative_step(family: StateFamily, at: ParamPoint, which: str, scheme: DerivativeScheme) -> tuple[float, bool]:
    """Absolute step for differentiating along ``which``, and whether it was shrunk."""
    value = at[which]
    h = scheme.h_rel * max(abs(value), 1.0)
    lo, hi = family.domain.get(which, (-math.inf, math.inf))
    room = min(value - lo, hi - value)
    if h >= room:
        return 0.5 * room, True
    return h, False


def _central(family, at, which, h, grid) -> np.ndarray:
    plus = family(at.replace(**{which: at[which] + h}), grid).samples
    minus = family(at.replace(**{which: at[which] - h}), grid).samples
    return (plus - minus) / (2.0 * h)


def param_derivative_info(
    family: StateFamily,
    at: ParamPoint,
    which: str,
    grid: Grid2D,
    scheme: DerivativeScheme = DEFAULT_SCHEME,
) -> tuple[ComplexField, float, bool]:
    """Like :func:`param_derivative` but also returns the step and the shrink flag."""
    if which not in family.params:
        raise ContractError(f"{which!r} is not a parameter of {family.name}")
    family.check_point(at)
    h, shrunk = derivative_step(family, at, which, scheme)
    if shrunk:
        logger.warning("%s: step for %s shrunk to %.3g to stay inside the domain", family.name, which, h)
    d = _central(family, at, which, h, grid)
    if scheme.richardson:
        d_half = _central(family, at, which, 0.5 * h, grid)
        d = (4.0 * d_half - d) / 3.0
    return ComplexField(grid, d), h, shrunk


def param_derivative(
    family: StateFamily,
    at: ParamPoint,
    which: str,
    grid: Grid2D,
    scheme: DerivativeScheme = DEFAULT_SCHEME,
) -> ComplexField:
    """Finite-difference derivative of the family's state along one parameter.

    All evaluations use the single ``grid`` so the fields subtract pointwise.
    """
    return param_derivative_info(family, at, which, grid, scheme)[0]
