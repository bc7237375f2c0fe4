"""Lowest-Landau-level states, the ``g B x y`` gauge family and its connection.

Units are ``hbar = c = |e| = 1`` so the combination ``|e| B / (hbar c)`` is just
``B > 0``.  The symmetric-gauge ground state with angular momentum ``m`` is

    psi_m = sqrt(B^(m+1) / (pi m! 2^(m+1))) (x + i y)^m exp(-B r^2 / 4)

and the gauge family multiplies it by ``exp(i g B x y)``; ``g = 0`` is the
symmetric gauge and ``g = 1/2`` the Landau gauge ``A = B (0, x)``.
"""

from __future__ import annotations

import math

import numpy as np

from . import expr as ex
from .errors import ContractError
from .family import ParamPoint, StateFamily
from .fields import ComplexField, Grid2D
from .geometry import Connection, GaugePhase

DEFAULT_N = 256
DEFAULT_N_SIGMA = 8.0


def _check(B: float, m: int = 0):
    if not B > 0:
        raise ContractError(f"B must be positive, got {B}")
    if int(m) != m or m < 0:
        raise ContractError(f"m must be a nonnegative integer, got {m}")


def landau_state(B: float, m: int, grid: Grid2D) -> ComplexField:
    """Sample the symmetric-gauge ground state ``psi_{0,m}`` at field ``B``."""
    _check(B, m)
    m = int(m)
    X, Y = grid.mesh
    # log-space prefactor keeps large m finite
    log_norm = 0.5 * ((m + 1) * math.log(B) - math.log(math.pi) - math.lgamma(m + 1) - (m + 1) * math.log(2.0))
    envelope = np.exp(log_norm - 0.25 * B * (X * X + Y * Y))
    if m:
        envelope = envelope * (X + 1j * Y) ** m
    return ComplexField(grid, envelope)


def landau_family(m: int = 0, g: float = 0.0) -> StateFamily:
    """Family ``B -> psi_{0,m}(B) exp(i g B x y)``, analytically normalized."""
    _check(1.0, m)
    g = float(g)

    def evaluate(at: ParamPoint, grid: Grid2D) -> ComplexField:
        B = at["B"]
        psi = landau_state(B, m, grid)
        if g == 0.0:
            return psi
        X, Y = grid.mesh
        return ComplexField(grid, psi.samples * np.exp(1j * g * B * X * Y))

    return StateFamily(("B",), evaluate, "trust", {"B": (0.0, math.inf)}, f"landau(m={m}, g={g:g})")


def landau_phase(g: float) -> GaugePhase:
    """The gauge phase ``alpha = g B x y`` with its analytic B-derivative."""
    return GaugePhase.from_text("g*B*x*y", ["B"], {"B": "g*x*y"}, constants={"g": float(g)})


def landau_connection(g: float = 0.0) -> Connection:
    """Connection ``Gamma_B = g x y``, the transport of ``Gamma_B = 0`` by ``landau_phase(g)``."""
    g = float(g)
    if g == 0.0:
        return Connection.zero(["B"])
    return Connection({"B": ex.substitute(ex.parse("g*x*y", ["g"]), {"g": g})})


def reference_qmt_paper(B: float, g: float) -> float:
    """Closed form ``(g^2 + 1/2) / B`` as printed in the original derivation.

    Reported next to computed values for comparison only; it does not agree
    with the direct evaluation ``(g^2 + 1/4) / B^2`` (see :mod:`gaugeqmt.oracle`).
    """
    _check(B)
    return (g * g + 0.5) / B


def default_grid(B: float, n: int = DEFAULT_N, n_sigma: float = DEFAULT_N_SIGMA) -> Grid2D:
    """Square grid of half-width ``n_sigma / sqrt(B)`` with ``n x n`` samples."""
    _check(B)
    if int(n) != n or n < 4:
        raise ContractError(f"n must be an integer >= 4, got {n}")
    if not n_sigma > 0:
        raise ContractError(f"n_sigma must be positive, got {n_sigma}")
    return Grid2D.square(n_sigma / math.sqrt(B), int(n))


_CENTRAL_STENCILS = {
    2: ((1, 1 / 2),),
    4: ((1, 2 / 3), (2, -1 / 12)),
    6: ((1, 3 / 4), (2, -3 / 20), (3, 1 / 60)),
}


def lz_residual(field: ComplexField, m: int, order: int = 6) -> float:
    """Norm of ``(L_z - m) psi`` with ``L_z = -i (x d_y - y d_x)``.

    Spatial derivatives are central differences of the given ``order``; the
    norm is taken over the interior points where the stencil fits.  The
    second-order stencil is not rotation invariant at the 1e-4 level on the
    default grid, hence the sixth-order default.
    """
    try:
        stencil = _CENTRAL_STENCILS[order]
    except KeyError:
        raise ContractError(f"order must be one of {sorted(_CENTRAL_STENCILS)}") from None
    grid = field.grid
    psi = field.samples
    k = len(stencil)
    nx, ny = grid.shape
    inner = (slice(k, nx - k), slice(k, ny - k))
    d_x = sum(c * (psi[k + o : nx - k + o, inner[1]] - psi[k - o : nx - k - o, inner[1]]) for o, c in stencil) / grid.dx
    d_y = sum(c * (psi[inner[0], k + o : ny - k + o] - psi[inner[0], k - o : ny - k - o]) for o, c in stencil) / grid.dy
    X, Y = grid.mesh
    r = -1j * (X[inner] * d_y - Y[inner] * d_x) - m * psi[inner]
    return float(math.sqrt(np.sum(np.abs(r.ravel()) ** 2) * grid.dx * grid.dy))
