"""Berry connection, quantum metric, gauge phases and covariant derivatives.

All functions here take a :class:`~gaugeqmt.family.StateFamily`, a parameter
point and a grid, and work with finite-difference parameter derivatives on
that single grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Union

import numpy as np

from . import expr as ex
from .errors import ContractError, GaugeError, NumericalError
from .family import (
    DEFAULT_SCHEME,
    DerivativeScheme,
    ParamPoint,
    StateFamily,
    param_derivative_info,
)
from .fields import ComplexField, Grid2D, RealField, apply_phase, expectation, inner_product

# |Re(psi, d psi)| above this means the state is not normalized well enough
HERMITICITY_TOL = 1e-4
NORM_TOL = 1e-6
# analytic phase derivatives must match finite differences this closely
PHASE_DERIVATIVE_TOL = 1e-6

PROBE_GRID = Grid2D.square(2.0, 9)


# --------------------------------------------------------------------------
# gauge phases and connections


def _fd_param(evaluate: Callable[[ParamPoint], np.ndarray], at: ParamPoint, which: str) -> np.ndarray:
    """Richardson-extrapolated central difference of a real field along one parameter."""
    h = 1e-3 * max(abs(at[which]), 1.0)

    def central(step):
        up = evaluate(at.replace(**{which: at[which] + step}))
        down = evaluate(at.replace(**{which: at[which] - step}))
        return (up - down) / (2.0 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


@dataclass(frozen=True)
class GaugePhase:
    """A real phase ``alpha(params, x, y)`` defining ``psi -> exp(i alpha) psi``.

    ``derivatives`` optionally holds analytic parameter derivatives of ``alpha``.
    They are checked against finite differences on a small probe grid at
    ``probe`` (every parameter set to 1 by default).
    """

    alpha: ex.Expr
    params: tuple[str, ...]
    derivatives: Mapping[str, ex.Expr] = field(default_factory=dict)
    probe: ParamPoint | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "derivatives", dict(self.derivatives))
        declared = set(self.params)
        extra = ex.parameters(self.alpha) - declared
        if extra:
            raise GaugeError(f"phase references undeclared parameters {sorted(extra)}")
        for name, tree in self.derivatives.items():
            if name not in declared:
                raise GaugeError(f"derivative given for undeclared parameter {name!r}")
            extra = ex.parameters(tree) - declared
            if extra:
                raise GaugeError(f"derivative d{name} references undeclared parameters {sorted(extra)}")
        self._validate()

    def _validate(self):
        probe = self.probe if self.probe is not None else ParamPoint({p: 1.0 for p in self.params})
        for name, tree in self.derivatives.items():
            analytic = ex.eval_on_grid(tree, PROBE_GRID, probe).samples
            numeric = _fd_param(lambda pt: ex.eval_on_grid(self.alpha, PROBE_GRID, pt).samples, probe, name)
            err = np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic)))
            if err > PHASE_DERIVATIVE_TOL:
                raise GaugeError(
                    f"analytic derivative d{name}({ex.to_text(tree)}) disagrees with finite "
                    f"differences of {ex.to_text(self.alpha)} by {err:.3g}"
                )

    @classmethod
    def from_text(
        cls,
        alpha: str,
        params: Iterable[str],
        derivatives: Mapping[str, str] | None = None,
        constants: Mapping[str, float] | None = None,
    ) -> GaugePhase:
        """Build a phase from expression strings.

        ``constants`` are names bound to fixed numbers (e.g. the gauge-family
        label ``g``); they are substituted before the phase is used.
        """
        params = tuple(params)
        constants = dict(constants or {})
        names = params + tuple(constants)

        def build(text):
            return ex.substitute(ex.parse(text, names), constants)

        derivs = {k: build(v) for k, v in (derivatives or {}).items()}
        return cls(build(alpha), params, derivs)

    def field(self, at: ParamPoint, grid: Grid2D) -> RealField:
        return ex.eval_on_grid(self.alpha, grid, at)

    def has_analytic(self, which: str) -> bool:
        return which in self.derivatives or which not in ex.parameters(self.alpha)

    def derivative_field(self, which: str, at: ParamPoint, grid: Grid2D) -> RealField:
        """``d alpha / d which`` on ``grid``; analytic when available, else finite differences."""
        if which in self.derivatives:
            return ex.eval_on_grid(self.derivatives[which], grid, at)
        if which not in ex.parameters(self.alpha):
            return RealField(grid, np.zeros(grid.shape))
        return RealField(grid, _fd_param(lambda pt: self.field(pt, grid).samples, at, which))

    def then(self, other: GaugePhase) -> GaugePhase:
        """The phase of applying ``self`` and then ``other`` (the sum of both)."""
        params = self.params + tuple(p for p in other.params if p not in self.params)
        derivs = {}
        for name in params:
            if self.has_analytic(name) and other.has_analytic(name):
                parts = [
                    ph.derivatives.get(name, ex.ZERO) for ph in (self, other)
                ]
                derivs[name] = ex.add(*parts)
        return GaugePhase(ex.add(self.alpha, other.alpha), params, derivs, self.probe)


ConnectionTerm = Union[ex.Expr, Callable[[ParamPoint, Grid2D], RealField]]


@dataclass(frozen=True)
class Connection:
    """Per-parameter real fields ``Gamma_i(params, x, y)``.

    Terms are expression trees when possible; transporting through a phase
    without analytic derivatives yields sampled (callable) terms.
    """

    terms: Mapping[str, ConnectionTerm]

    def __post_init__(self):
        object.__setattr__(self, "terms", dict(self.terms))

    @classmethod
    def zero(cls, params: Iterable[str]) -> Connection:
        return cls({p: ex.ZERO for p in params})

    @classmethod
    def from_text(cls, terms: Mapping[str, str], params: Iterable[str], constants: Mapping[str, float] | None = None) -> Connection:
        constants = dict(constants or {})
        names = tuple(params) + tuple(constants)
        return cls({k: ex.substitute(ex.parse(v, names), constants) for k, v in terms.items()})

    @property
    def params(self) -> tuple[str, ...]:
        return tuple(self.terms)

    def is_analytic(self, which: str) -> bool:
        return not callable(self.terms[which])

    def field(self, which: str, at: ParamPoint, grid: Grid2D) -> RealField:
        term = self.terms[which]
        if callable(term):
            return term(at, grid)
        return ex.eval_on_grid(term, grid, at)

    def covers(self, params: Iterable[str]) -> bool:
        return set(params) <= set(self.terms)


def transform_connection(conn: Connection, phase: GaugePhase, *, allow_sampled: bool = True) -> Connection:
    """Transport a connection through a gauge change: ``Gamma_i + d_i alpha``.

    Raises:
        GaugeError: ``phase`` depends on a parameter the connection lacks, or
            an analytic derivative is missing and ``allow_sampled`` is false.
    """
    missing = set(phase.params) - set(conn.terms)
    if missing:
        raise GaugeError(f"connection has no component for phase parameters {sorted(missing)}")
    terms: dict[str, ConnectionTerm] = {}
    for name, term in conn.terms.items():
        if name not in ex.parameters(phase.alpha) and name not in phase.derivatives:
            terms[name] = term
        elif name in phase.derivatives and not callable(term):
            terms[name] = ex.add(term, phase.derivatives[name])
        elif allow_sampled:
            terms[name] = _sampled_sum(conn, phase, name)
        else:
            raise GaugeError(f"no analytic derivative of the phase along {name!r}")
    return Connection(terms)


def _sampled_sum(conn: Connection, phase: GaugePhase, which: str):
    def term(at: ParamPoint, grid: Grid2D) -> RealField:
        base = conn.field(which, at, grid).samples
        return RealField(grid, base + phase.derivative_field(which, at, grid).samples)

    return term


def gauge_transform(family: StateFamily, phase: GaugePhase) -> StateFamily:
    """The family ``exp(i alpha) psi``; normalization is inherited from ``family``."""
    extra = set(phase.params) - set(family.params)
    if extra:
        raise GaugeError(f"phase parameters {sorted(extra)} are not parameters of {family.name}")

    def evaluate(at: ParamPoint, grid: Grid2D) -> ComplexField:
        return apply_phase(family(at, grid), phase.field(at, grid))

    return StateFamily(
        family.params,
        evaluate,
        "trust",
        family.domain,
        f"{family.name} * exp(i*({ex.to_text(phase.alpha)}))",
    )


# --------------------------------------------------------------------------
# metric computations


class BerryConnection(NamedTuple):
    value: float
    residual: float


@dataclass(frozen=True)
class QMTResult:
    """Metric matrix, Berry connection and numerical diagnostics at one point."""

    params: tuple[str, ...]
    metric: np.ndarray
    beta: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        metric = np.array(self.metric, dtype=float)
        beta = np.array(self.beta, dtype=float)
        n = len(self.params)
        if metric.shape != (n, n) or beta.shape != (n,):
            raise ContractError("metric/beta dimensions do not match the parameter list")
        metric.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "beta", beta)

    def __getitem__(self, key: tuple[str, str]) -> float:
        i, j = (self.params.index(k) for k in key)
        return float(self.metric[i, j])

    @property
    def value(self) -> float:
        """The single metric entry of a one-parameter family."""
        if len(self.params) != 1:
            raise ContractError("value is only defined for one-parameter families")
        return float(self.metric[0, 0])


@dataclass
class _Derivatives:
    psi: ComplexField
    d: list[ComplexField]
    beta: list[float]
    residuals: list[float]
    steps: dict[str, float]
    shrunk: dict[str, bool]
    norm_deviation: float


def _derivatives(family, at, grid, scheme, names=None) -> _Derivatives:
    names = family.params if names is None else names
    family.check_point(at)
    psi = family(at, grid)
    norm_dev = abs(psi.norm2() - 1.0)
    if norm_dev > NORM_TOL:
        raise ContractError(f"{family.name} is not normalized on this grid (|norm-1| = {norm_dev:.3g})")
    d, beta, res, steps, shrunk = [], [], [], {}, {}
    for name in names:
        dpsi, h, was_shrunk = param_derivative_info(family, at, name, grid, scheme)
        overlap = inner_product(psi, dpsi)
        residual = abs(overlap.real)
        if residual > HERMITICITY_TOL:
            raise NumericalError(
                f"{family.name}: hermiticity residual {residual:.3g} along {name} exceeds "
                f"{HERMITICITY_TOL:g} (state not normalized or step too large)"
            )
        d.append(dpsi)
        beta.append((-1j * overlap).real)
        res.append(residual)
        steps[name] = h
        shrunk[name] = was_shrunk
    return _Derivatives(psi, d, beta, res, steps, shrunk, norm_dev)


def _diagnostics(der: _Derivatives, grid: Grid2D, scheme: DerivativeScheme, **extra) -> dict:
    out = {
        "hermiticity_residuals": list(der.residuals),
        "scheme": scheme.describe(),
        "steps": dict(der.steps),
        "step_shrunk": dict(der.shrunk),
        "grid": grid.describe(),
        "norm_deviation": der.norm_deviation,
    }
    out.update(extra)
    return out


def _gram(vectors: list[ComplexField]) -> np.ndarray:
    n = len(vectors)
    G = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = inner_product(vectors[i], vectors[j]).real
    return G


def berry_connection(
    family: StateFamily,
    at: ParamPoint,
    which: str,
    grid: Grid2D,
    scheme: DerivativeScheme = DEFAULT_SCHEME,
) -> BerryConnection:
    """``beta = Re[-i (psi, d psi)]`` and the residual ``|Re (psi, d psi)|``."""
    der = _derivatives(family, at, grid, scheme, names=(which,))
    return BerryConnection(der.beta[0], der.residuals[0])


def qmt(
    family: StateFamily,
    at: ParamPoint,
    grid: Grid2D,
    scheme: DerivativeScheme = DEFAULT_SCHEME,
    *,
    formulation: str = "standard",
) -> QMTResult:
    """Quantum metric ``G_ij = Re (d_i psi, d_j psi) - beta_i beta_j``.

    ``formulation="projected"`` evaluates the same tensor as
    ``Re ((d_i - i beta_i) psi, (d_j - i beta_j) psi)``.
    """
    der = _derivatives(family, at, grid, scheme)
    beta = np.array(der.beta)
    if formulation == "standard":
        G = _gram(der.d) - np.outer(beta, beta)
    elif formulation == "projected":
        G = _gram([d - der.psi.scaled(1j * b) for d, b in zip(der.d, beta)])
    else:
        raise ContractError(f"unknown formulation {formulation!r}")
    return QMTResult(family.params, G, beta, _diagnostics(der, grid, scheme, formulation=formulation))


def covariant_qmt(
    family: StateFamily,
    conn: Connection,
    at: ParamPoint,
    grid: Grid2D,
    scheme: DerivativeScheme = DEFAULT_SCHEME,
) -> QMTResult:
    """Gauge-covariant metric ``G_ij = Re (D_i psi, D_j psi)`` with ``D_i = d_i - i Gamma_i``.

    No ``beta_i beta_j`` term is subtracted; ``beta`` is reported for diagnostics.
    """
    if not conn.covers(family.params):
        missing = sorted(set(family.params) - set(conn.params))
        raise ContractError(f"connection lacks components for {missing}")
    der = _derivatives(family, at, grid, scheme)
    covariant = []
    for name, d in zip(family.params, der.d):
        gamma = conn.field(name, at, grid)
        covariant.append(ComplexField(grid, d.samples - 1j * gamma.samples * der.psi.samples))
    G = _gram(covariant)
    return QMTResult(family.params, G, np.array(der.beta), _diagnostics(der, grid, scheme, formulation="covariant"))


def line_element(result: QMTResult, dlambda) -> float:
    """Squared distance ``G_ij dl_i dl_j`` for a parameter displacement."""
    d = np.atleast_1d(np.asarray(dlambda, dtype=float))
    if d.shape != result.beta.shape:
        raise ContractError(f"displacement has {d.size} components, metric has {result.beta.size}")
    value = float(d @ result.metric @ d)
    if value < 0.0:
        scale = float(np.abs(result.metric).max() * (d @ d))
        if -value > 1e-12 * scale:
            raise NumericalError(f"metric is not positive semidefinite (dl^2 = {value:.3g})")
        value = 0.0
    return value


def beta_shift_check(
    family: StateFamily,
    phase: GaugePhase,
    at: ParamPoint,
    which: str,
    grid: Grid2D,
    scheme: DerivativeScheme = DEFAULT_SCHEME,
) -> tuple[float, float]:
    """Both sides of the connection shift under ``psi -> exp(i alpha) psi``.

    Returns ``(beta' - beta, <d alpha / d which>)``; they agree for any phase,
    including ones that depend on position.
    """
    before = berry_connection(family, at, which, grid, scheme).value
    after = berry_connection(gauge_transform(family, phase), at, which, grid, scheme).value
    psi = family(at, grid)
    rhs = expectation(psi, phase.derivative_field(which, at, grid))
    return after - before, rhs
