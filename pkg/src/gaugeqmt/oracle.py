"""Closed-form Gaussian moments of the lowest-Landau-level densities.

The density of the angular-momentum-``m`` state is radially symmetric,
``|psi_m|^2 = B^(m+1) / (pi m! 2^(m+1)) r^(2m) exp(-B r^2 / 2)``, so

    <r^(2k)>     = (m+k)!/m! * (2/B)^k
    <x^p y^q>    = <r^(p+q)> * (p-1)!! (q-1)!! / (p+q)!!      (p, q even)

and any moment with an odd exponent vanishes.

Derivation of the metric.  Writing ``psi' = psi * exp(i g B x y)`` the
logarithmic B-derivative is ``d_B psi' / psi' = u + i g x y`` with
``u = (m+1)/(2B) - r^2/4``.  Hence ``(d psi', d psi') = <u^2> + g^2 <x^2 y^2>``,
the connection is ``beta = g <x y>`` and

    G = <u^2> - <u>^2 + g^2 (<x^2 y^2> - <x y>^2).

With ``<u> = 0`` this is ``(m+1)/(4 B^2) + g^2 (m+1)(m+2)/(2 B^2)``, which for
``m = 0`` is ``(g^2 + 1/4)/B^2``.  Covariantising with ``Gamma_B = g x y``
removes the ``g x y`` term from the log-derivative, leaving ``<u^2>``.

Passing ``fractions.Fraction`` values for ``B`` and ``g`` yields exact rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

from .errors import ContractError, NumericalError

__all__ = [
    "MomentSpec",
    "gaussian_moment",
    "radial_moment",
    "oracle_qmt",
    "oracle_covariant_qmt",
    "oracle_beta",
    "analytic_derivative",
]


def _double_factorial(n: int) -> int:
    result = 1
    while n > 1:
        result *= n
        n -= 2
    return result


def _check_B(B):
    if not B > 0:
        raise ContractError(f"B must be positive, got {B}")


def _finish(value):
    if isinstance(value, Fraction):
        return value
    try:
        out = float(value)
    except OverflowError as exc:
        raise NumericalError("moment overflows double precision") from exc
    if not math.isfinite(out):
        raise NumericalError("moment overflows double precision")
    return out


@dataclass(frozen=True)
class MomentSpec:
    """Exponents ``p, q`` of ``<x^p y^q>`` in the state with label ``m`` at field ``B``."""

    p: int
    q: int
    m: int = 0
    B: Real = 1.0

    def __post_init__(self):
        for name in ("p", "q", "m"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ContractError(f"{name} must be a nonnegative integer, got {v}")
        _check_B(self.B)


def radial_moment(k: int, m: int, B):
    """``<r^(2k)>`` in the state with label ``m``."""
    _check_B(B)
    ratio = math.factorial(m + k) // math.factorial(m)
    if isinstance(B, Fraction):
        return _finish(ratio * (Fraction(2) / B) ** k)
    try:
        return _finish(ratio * (2.0 / B) ** k)
    except OverflowError as exc:
        raise NumericalError("moment overflows double precision") from exc


def gaussian_moment(spec: MomentSpec):
    """Exact ``<x^p y^q>`` for the lowest-Landau-level density."""
    p, q = int(spec.p), int(spec.q)
    if p % 2 or q % 2:
        return Fraction(0) if isinstance(spec.B, Fraction) else 0.0
    angular = Fraction(_double_factorial(p - 1) * _double_factorial(q - 1), _double_factorial(p + q))
    radial = radial_moment((p + q) // 2, int(spec.m), spec.B)
    if isinstance(radial, Fraction):
        return angular * radial
    return _finish(float(angular) * radial)


def _moments(B, m):
    def mom(p, q):
        return gaussian_moment(MomentSpec(p, q, m, B))

    r2 = mom(2, 0) + mom(0, 2)
    r4 = mom(4, 0) + 2 * mom(2, 2) + mom(0, 4)
    return mom, r2, r4


def _u_variance(B, m):
    _, r2, r4 = _moments(B, m)
    a = (m + 1) / (2 * B) if not isinstance(B, Fraction) else Fraction(m + 1) / (2 * B)
    mean_u = a - r2 / 4
    mean_u2 = a * a - a * r2 / 2 + r4 / 16
    return mean_u2 - mean_u * mean_u


def oracle_qmt(B, g, m: int = 0):
    """Exact metric ``G_BB`` of the Landau family ``psi_m * exp(i g B x y)``."""
    _check_B(B)
    mom, _, _ = _moments(B, m)
    xy_var = mom(2, 2) - mom(1, 1) ** 2
    return _finish(_u_variance(B, m) + g * g * xy_var)


def oracle_covariant_qmt(B, m: int = 0):
    """Exact covariant metric with the transported connection; independent of ``g``."""
    _check_B(B)
    return _finish(_u_variance(B, m))


def oracle_beta(B, g, m: int = 0):
    """Exact Berry connection ``g <x y>`` of the Landau family (zero by symmetry)."""
    _check_B(B)
    mom, _, _ = _moments(B, m)
    return _finish(g * mom(1, 1))


def analytic_derivative(B: float, g: float, grid, m: int = 0):
    """Exact ``d/dB`` of the Landau family state, ``(u + i g x y) psi'`` sampled on ``grid``."""
    from .fields import ComplexField
    from .landau import landau_family

    _check_B(B)
    X, Y = grid.mesh
    psi = landau_family(m, g)({"B": B}, grid).samples
    u = (m + 1) / (2.0 * B) - 0.25 * (X * X + Y * Y)
    return ComplexField(grid, (u + 1j * g * X * Y) * psi)
