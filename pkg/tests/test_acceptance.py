"""Acceptance criteria 1-8.

Each test prints (and records for the terminal summary) one line of the form
``PASS criterion N: ...`` or ``FAIL criterion N: ...``.  Run with::

    pytest tests/test_acceptance.py -v -s
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from gaugeqmt import (
    ComplexField,
    Connection,
    ExprSyntaxError,
    GaugePhase,
    MomentSpec,
    ParamPoint,
    StateFamily,
    beta_shift_check,
    berry_connection,
    covariant_qmt,
    default_grid,
    gaussian_moment,
    inner_product,
    landau_connection,
    landau_family,
    landau_state,
    make_expr_family,
    oracle_qmt,
    param_derivative,
    parse,
    qmt,
)
from gaugeqmt.cli import main
from gaugeqmt.config import parse_config
from gaugeqmt.family import DerivativeScheme
from gaugeqmt.oracle import analytic_derivative
from gaugeqmt.sweep import run_convergence

B_LATTICE = (0.5, 1.0, 2.0, 4.0)
G_LATTICE = (0.0, 0.5, 1.0, 2.0)
B_DOWN = (1.0, 0.5, 0.25, 0.125)


def verdict(record_property, n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    record_property("acceptance", line)
    assert ok, line


def naive(B, g, m=0):
    return qmt(landau_family(m, g), ParamPoint(B=B), default_grid(B))


def covariant(B, g, m=0):
    return covariant_qmt(landau_family(m, g), landau_connection(g), ParamPoint(B=B), default_grid(B))


@pytest.fixture(scope="module")
def lattice():
    """Naive and covariant metrics on the 4 x 4 (B, g) lattice."""
    return {(B, g): (naive(B, g), covariant(B, g)) for B in B_LATTICE for g in G_LATTICE}


def test_criterion_1_naive_metric_depends_on_gauge(record_property):
    start = time.perf_counter()
    G = {g: naive(1.0, g).value for g in (0.0, 0.5, 1.0)}
    elapsed = time.perf_counter() - start
    errs = [abs(G[g] - G[0.0] - g * g) for g in (0.5, 1.0)]
    ok = max(errs) < 1e-5 and elapsed < 10.0
    verdict(
        record_property, 1, ok,
        f"max |G(g)-G(0)-g^2| = {max(errs):.2e} (tol 1e-5), runtime {elapsed:.2f} s (limit 10 s)",
    )


def test_criterion_2_covariant_metric_is_gauge_invariant(record_property, lattice):
    spread, vs_naive = 0.0, 0.0
    for B in B_LATTICE:
        cov = [lattice[B, g][1].value for g in G_LATTICE]
        ref = lattice[B, 0.0][0].value
        spread = max(spread, max(abs(a / b - 1) for a in cov for b in cov))
        vs_naive = max(vs_naive, max(abs(c / ref - 1) for c in cov))
    ok = spread < 1e-6 and vs_naive < 1e-6
    verdict(
        record_property, 2, ok,
        f"pairwise rel spread {spread:.2e}, rel diff to G_naive(g=0) {vs_naive:.2e} (tol 1e-6)",
    )


def test_criterion_3_berry_connection_vanishes(record_property):
    worst = 0.0
    for B in (0.5, 1.0, 2.0):
        for g in G_LATTICE:
            beta = berry_connection(landau_family(0, g), ParamPoint(B=B), "B", default_grid(B)).value
            worst = max(worst, abs(beta))
    verdict(record_property, 3, worst < 1e-8, f"max |beta_B| = {worst:.2e} over B in {{0.5,1,2}} x 4 g (tol 1e-8)")


def test_criterion_4_oracle_equivalence(record_property, lattice):
    metric_err = max(
        abs(lattice[B, g][0].value / oracle_qmt(B, g, 0) - 1) for B in B_LATTICE for g in G_LATTICE
    )
    # high-resolution trapezoidal moments of the Landau densities
    moment_err = 0.0
    for m in (0, 1, 2):
        B = 1.0
        grid = default_grid(B, 1024, 10.0)
        rho = np.abs(landau_state(B, m, grid).samples) ** 2
        X, Y = grid.mesh
        for p in range(7):
            for q in range(7 - p):
                exact = float(gaussian_moment(MomentSpec(p, q, m, Fraction(1))))
                num = float(np.sum(grid.weights * X**p * Y**q * rho))
                if exact == 0.0:
                    moment_err = max(moment_err, abs(num))
                else:
                    moment_err = max(moment_err, abs(num / exact - 1))
    ok = metric_err < 1e-5 and moment_err < 1e-9
    verdict(
        record_property, 4, ok,
        f"max rel |G_naive/oracle - 1| = {metric_err:.2e} (tol 1e-5), "
        f"moment vs quadrature {moment_err:.2e} (tol 1e-9)",
    )


def test_criterion_5_divergence_as_field_vanishes(record_property):
    increasing, fit = True, 0.0
    for g in G_LATTICE:
        nv = [naive(B, g).value for B in B_DOWN]
        cv = [covariant(B, g).value for B in B_DOWN]
        increasing &= all(b > a for a, b in zip(nv, nv[1:])) and all(b > a for a, b in zip(cv, cv[1:]))
        fit = max(fit, max(abs(c * 4 * B * B - 1) for c, B in zip(cv, B_DOWN)))
    ok = increasing and fit < 1e-4
    verdict(
        record_property, 5, ok,
        f"strictly increasing as B -> 1/8: {increasing}; covariant vs 1/(4B^2) rel {fit:.2e} (tol 1e-4)",
    )


def _random_case(rng):
    """A Landau family and a random polynomial gauge phase with its B-derivative."""
    m = int(rng.integers(0, 3))
    g = float(rng.uniform(-1.5, 1.5))
    B = float(rng.uniform(0.5, 2.0))
    c = [float(v) for v in rng.uniform(-1.0, 1.0, size=6)]
    poly = " + ".join(f"({v!r})*{t}" for v, t in zip(c[:5], ("x", "y", "x*y", "x^2", "y^2")))
    phase = GaugePhase.from_text(
        f"B*({poly}) + ({c[5]!r})*B^2", ["B"], {"B": f"{poly} + 2*({c[5]!r})*B"}
    )
    return landau_family(m, g), phase, B


def _two_param_family():
    amp = parse("exp(-B*(x^2+y^2)/4 - s*x^2)", ["B", "s"])
    ph = parse("s*x + B*y^2/5", ["B", "s"])
    return make_expr_family(amp, ph, ["B", "s"], domain={"B": (0.0, math.inf)})


def _global_phase_family():
    def evaluate(at, grid):
        return ComplexField(grid, np.exp(1j * at["B"]) * landau_state(1.0, 0, grid).samples)

    return StateFamily(("B",), evaluate, "trust", {"B": (0.0, math.inf)})


def test_criterion_6_transformation_identities(record_property):
    rng = np.random.default_rng(6)
    shift = 0.0
    for _ in range(20):
        family, phase, B = _random_case(rng)
        lhs, rhs = beta_shift_check(family, phase, ParamPoint(B=B), "B", default_grid(B))
        shift = max(shift, abs(lhs - rhs))

    grid = default_grid(1.0)
    cases = [
        (landau_family(0, 0.7), ParamPoint(B=1.0)),
        (landau_family(2, -0.4), ParamPoint(B=1.0)),
        (_global_phase_family(), ParamPoint(B=0.3)),
        (_two_param_family(), ParamPoint(B=1.0, s=0.2)),
    ]
    forms, reduction = 0.0, 0.0
    for family, at in cases:
        std = qmt(family, at, grid)
        proj = qmt(family, at, grid, formulation="projected")
        forms = max(forms, float(np.max(np.abs(std.metric - proj.metric))))
        conn = Connection({p: parse(repr(float(b))) for p, b in zip(family.params, std.beta)})
        cov = covariant_qmt(family, conn, at, grid)
        reduction = max(reduction, float(np.max(np.abs(cov.metric - std.metric))))
    ok = shift < 1e-6 and forms < 1e-10 and reduction < 1e-8
    verdict(
        record_property, 6, ok,
        f"beta shift |lhs-rhs| {shift:.2e} over 20 cases (tol 1e-6), "
        f"standard vs projected {forms:.2e} (tol 1e-10), Gamma=beta reduction {reduction:.2e} (tol 1e-8)",
    )


def test_criterion_7_convergence_orders(record_property):
    B, g = 1.0, 0.0
    grid, at = default_grid(B), ParamPoint(B=B)
    family = landau_family(0, g)
    exact = analytic_derivative(B, g, grid)

    def err(h):
        d = param_derivative(family, at, "B", grid, DerivativeScheme(h, richardson=False)) - exact
        return math.sqrt(inner_product(d, d).real)

    ratios = [err(h) / err(h / 2) for h in (1e-2, 1e-3, 1e-4)]
    report = run_convergence(parse_config({"model": {"g": [g]}, "sweep": {"from": B}})).diagnostics
    quad = [r["norm_error"] for r in report["quadrature_normalization"]]
    grid_diffs = [r["diff_from_previous"] for r in report["grid_refinement"][1:]]
    monotone = all(b < a for a, b in zip(quad, quad[1:])) and all(b < a for a, b in zip(grid_diffs, grid_diffs[1:]))
    ok = all(3.5 <= r <= 4.5 for r in ratios) and monotone and all(report["checks"].values())
    verdict(
        record_property, 7, ok,
        f"plain FD ratios {', '.join(f'{r:.3f}' for r in ratios)} (range [3.5, 4.5]); "
        f"quadrature/grid-doubling errors decrease monotonically: {monotone}",
    )


def test_criterion_8_parser_and_io(record_property, tmp_path, capsys):
    import test_expr  # property suite for the expression language

    test_expr.test_print_parse_round_trip()
    test_expr.test_grid_matches_scalar_evaluation()
    positions = {"x+*y": 2, "2x": 1, "(x": 2, "x)": 1, "x $ y": 2, "exp x": 4, "x^": 2, "": 0}
    offsets_ok = True
    for text, offset in positions.items():
        try:
            parse(text)
            offsets_ok = False
        except ExprSyntaxError as exc:
            offsets_ok &= exc.position == offset

    cfg = tmp_path / "run.toml"
    cfg.write_text('[model]\ng = [0.0, 0.5, 1.0]\n[grid]\nn = 128\n[sweep]\nfrom = 0.5\nto = 2.0\npoints = 3\n')
    outs = []
    codes = []
    for i in range(2):
        path = tmp_path / f"out{i}.csv"
        codes.append(main(["sweep", "--config", str(cfg), "--output", str(path)]))
        outs.append(path.read_bytes())
    identical = outs[0] == outs[1]

    bad = tmp_path / "bad.toml"
    bad.write_text("[model]\ng = []\n")
    drifting = tmp_path / "drift.toml"
    drifting.write_text(
        '[model]\nname = "expr"\nparams = ["B"]\nnormalization = "trust"\n'
        'amplitude = "exp(-(x^2+y^2)/4) * sqrt(1 + 0.01*(B-1)) / sqrt(2*pi)"\n[grid]\nn = 64\n'
    )
    codes += [
        main(["sweep", "--config", str(bad)]),
        main(["sweep", "--config", str(cfg), "--unknown"]),
        main(["sweep", "--config", str(drifting)]),
    ]
    capsys.readouterr()
    exits_ok = codes == [0, 0, 1, 1, 2]
    ok = offsets_ok and identical and exits_ok
    verdict(
        record_property, 8, ok,
        f"parser properties passed, error offsets ok: {offsets_ok}; byte-identical CSV: {identical}; "
        f"exit codes {codes} (expected [0, 0, 1, 1, 2])",
    )
