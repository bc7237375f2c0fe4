"""Parameter sweeps, gauge comparisons and convergence studies."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import expr as ex
from .config import RunConfig
from .errors import ConfigError, ContractError, ExprError, GaugeError, NumericalError, QMTError
from .family import DerivativeScheme, ParamPoint, StateFamily, make_expr_family, param_derivative
from .fields import UNITS, Grid2D, inner_product
from .geometry import (
    HERMITICITY_TOL,
    Connection,
    GaugePhase,
    covariant_qmt,
    gauge_transform,
    qmt,
    transform_connection,
)
from .landau import default_grid, landau_connection, landau_family, landau_state, reference_qmt_paper
from .oracle import analytic_derivative, oracle_covariant_qmt, oracle_qmt

COLUMNS = (
    "B",
    "g",
    "G_naive",
    "G_covariant",
    "beta",
    "G_paper_ref",
    "G_oracle",
    "herm_residual",
    "grid_n",
    "grid_halfwidth",
    "fd_step",
)

MODELS = {
    "landau": "lowest-Landau-level state psi_{0,m} in the gauge family exp(i g B x y); parameter B",
    "expr": "user family A*exp(i*phi) from expressions, gauge phase alpha(g) and base connection gamma",
}


def fmt(value: float) -> str:
    return format(float(value), ".17g")


@dataclass(frozen=True)
class SweepRow:
    B: float
    g: float
    G_naive: float
    G_covariant: float
    beta: float
    G_paper_ref: float
    G_oracle: float
    herm_residual: float
    grid_n: int
    grid_halfwidth: float
    fd_step: float

    @property
    def failed(self) -> bool:
        return not self.herm_residual < HERMITICITY_TOL

    def as_strings(self) -> list[str]:
        return [str(v) if isinstance(v, int) else fmt(v) for v in dataclasses.astuple(self)]

    @classmethod
    def from_strings(cls, values: list[str]) -> SweepRow:
        kinds = [f.type for f in dataclasses.fields(cls)]
        return cls(*(int(v) if k in ("int", int) else float(v) for v, k in zip(values, kinds)))


@dataclass
class SweepResult:
    rows: list[SweepRow]
    status: int = 0
    message: str = ""
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# model assembly


@dataclass(frozen=True)
class Point:
    """Everything needed to evaluate one row."""

    family: StateFamily
    connection: Connection
    at: ParamPoint
    which: str
    grid: Grid2D
    oracle: float
    covariant_oracle: float
    paper_ref: float


def _grid_for(config: RunConfig, value: float) -> Grid2D:
    gc = config.grid
    if gc.bounds is not None:
        x0, x1, y0, y1 = gc.bounds
        return Grid2D(x0, x1, y0, y1, gc.n, gc.n)
    if config.model.name == "landau":
        return default_grid(value, gc.n, gc.n_sigma)
    return Grid2D.square(gc.n_sigma, gc.n)


def build_points(config: RunConfig) -> list[tuple[float, float, Callable[[], Point]]]:
    """One lazily-built :class:`Point` per (sweep value, g), in output order.

    Expression and gauge errors are reported as :class:`ConfigError`.
    """
    model = config.model
    out = []
    try:
        if model.name == "landau":
            for value in config.sweep.values():
                for g in model.g:
                    out.append((value, g, _landau_point(config, value, g)))
        else:
            base = _expr_base(config)
            for value in config.sweep.values():
                for g in model.g:
                    out.append((value, g, _expr_point(config, base, value, g)))
    except (ExprError, GaugeError, ContractError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    return out


def _landau_point(config, B, g):
    m = config.model.m

    def build():
        return Point(
            landau_family(m, g),
            landau_connection(g),
            ParamPoint(B=B),
            "B",
            _grid_for(config, B),
            oracle_qmt(B, g, m),
            oracle_covariant_qmt(B, m),
            reference_qmt_paper(B, g),
        )

    return build


def _expr_base(config):
    model = config.model
    params = model.params
    family = make_expr_family(
        ex.parse(model.amplitude, params),
        ex.parse(model.phase, params),
        params,
        normalization=model.normalization,
        domain={"B": (0.0, math.inf)} if "B" in params else None,
    )
    unknown = set(model.gamma) - set(params)
    if unknown:
        raise ConfigError(f"model.gamma: components for unknown parameters {sorted(unknown)}")
    terms = {p: ex.parse(model.gamma.get(p, "0"), params) for p in params}
    phases = {}
    for g in model.g:
        if model.alpha is None:
            if g != 0.0:
                raise ConfigError("model.g: nonzero gauge values need model.alpha")
            phases[g] = None
        else:
            phases[g] = GaugePhase.from_text(model.alpha, params, model.alpha_derivatives, constants={"g": g})
    return family, Connection(terms), phases


def _expr_point(config, base, value, g):
    family, conn, phases = base
    model = config.model

    def build():
        at = ParamPoint({p: (value if p == config.sweep.param else model.values[p]) for p in model.params})
        phase = phases[g]
        fam, c = (family, conn) if phase is None else (gauge_transform(family, phase), transform_connection(conn, phase))
        return Point(fam, c, at, config.sweep.param, _grid_for(config, value), math.nan, math.nan, math.nan)

    return build


def compute_row(value: float, g: float, point: Point, scheme: DerivativeScheme) -> SweepRow:
    naive = qmt(point.family, point.at, point.grid, scheme)
    cov = covariant_qmt(point.family, point.connection, point.at, point.grid, scheme)
    idx = point.family.params.index(point.which)
    residual = max(naive.diagnostics["hermiticity_residuals"])
    row = SweepRow(
        B=value,
        g=g,
        G_naive=float(naive.metric[idx, idx]),
        G_covariant=float(cov.metric[idx, idx]),
        beta=float(naive.beta[idx]),
        G_paper_ref=point.paper_ref,
        G_oracle=point.oracle,
        herm_residual=residual,
        grid_n=point.grid.nx,
        grid_halfwidth=point.grid.half_width,
        fd_step=naive.diagnostics["steps"][point.which],
    )
    computed = (row.G_naive, row.G_covariant, row.beta, row.herm_residual, row.fd_step)
    if not all(math.isfinite(v) for v in computed):
        raise NumericalError("non-finite value in row")
    return row


# --------------------------------------------------------------------------
# output


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.as_strings())
    return buf.getvalue()


def read_csv(path: str | Path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected header {header}")
        return [SweepRow.from_strings(r) for r in reader]


def atomic_write(path: str | Path, text: str):
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".diagnostics.json")


def _tolerance_report(rows: list[SweepRow], covariant_oracles: list[float]) -> dict:
    report: dict = {"hermiticity_tol": HERMITICITY_TOL}
    if not rows:
        return report
    report["max_herm_residual"] = max(r.herm_residual for r in rows)
    pairs = [(r, c) for r, c in zip(rows, covariant_oracles) if math.isfinite(r.G_oracle)]
    if pairs:
        report["max_rel_error_naive_vs_oracle"] = max(abs(r.G_naive / r.G_oracle - 1) for r, _ in pairs)
        report["max_rel_error_covariant_vs_oracle"] = max(abs(r.G_covariant / c - 1) for r, c in pairs)
    spreads = []
    for B in sorted({r.B for r in rows}):
        vals = [r.G_covariant for r in rows if r.B == B]
        spreads.append((max(vals) - min(vals)) / abs(float(np.mean(vals))))
    report["max_rel_spread_covariant_over_g"] = max(spreads)
    return report


def run_sweep(config: RunConfig, output: str | Path | None = None) -> SweepResult:
    """Compute one row per (sweep value, g) and write CSV plus JSON sidecar.

    Status is 0 on success and 2 on numerical failure; in the failure case no
    CSV is written and the sidecar names the offending row.
    """
    scheme = DerivativeScheme(config.derivative.h_rel, config.derivative.richardson)
    points = build_points(config)

    def work(item):
        value, g, build = item
        try:
            point = build()
            return compute_row(value, g, point, scheme), point.covariant_oracle, None
        except QMTError as exc:
            return None, None, f"row {config.sweep.param}={fmt(value)}, g={fmt(g)}: {exc}"

    if config.sweep.jobs > 1:
        with ThreadPoolExecutor(config.sweep.jobs) as pool:
            results = list(pool.map(work, points))
    else:
        results = [work(p) for p in points]

    rows = [r for r, _, _ in results if r is not None]
    covariant_oracles = [c for r, c, _ in results if r is not None]
    errors = [e for _, _, e in results if e is not None]
    failed = [r for r in rows if r.failed]
    status, message = 0, f"{len(rows)} rows"
    if errors:
        status, message = 2, errors[0]
    elif failed:
        status, message = 2, f"row B={fmt(failed[0].B)}, g={fmt(failed[0].g)}: hermiticity residual breach"

    diagnostics = {
        "status": "ok" if status == 0 else "failed",
        "message": message,
        "errors": errors,
        "units": UNITS.describe(),
        "columns": list(COLUMNS),
        "config": config.raw,
        "tolerances": _tolerance_report(rows, covariant_oracles),
    }
    out = output if output is not None else config.output.path
    if out is not None:
        if status == 0:
            atomic_write(out, rows_to_csv(rows))
        atomic_write(sidecar_path(out), json.dumps(diagnostics, indent=2, sort_keys=True, default=str) + "\n")
    return SweepResult(rows, status, message, diagnostics)


# --------------------------------------------------------------------------
# convergence study

CONVERGENCE_N = (64, 128, 256, 512)
CONVERGENCE_H = (1e-2, 1e-3, 1e-4)
QUADRATURE_N = (5, 9, 17, 33)
PLAIN_RATIO_RANGE = (3.5, 4.5)
RICHARDSON_MIN_ORDER = 3.5


def _field_error(a, b) -> float:
    diff = a - b
    return math.sqrt(inner_product(diff, diff).real)


def run_convergence(config: RunConfig) -> SweepResult:
    """Grid and step refinement at the first (sweep value, g) of ``config``.

    The derivative error is measured against the analytic B-derivative for the
    Landau model and otherwise against a second Richardson level built from
    ``h_rel = 1e-2`` and ``5e-3``.  Observed orders come from step pairs ``(h, h/2)``; the
    Richardson order is asserted only at the largest step, where truncation
    rather than rounding dominates.
    """
    value, g, build = build_points(config)[0]
    point = build()
    scheme = DerivativeScheme(config.derivative.h_rel, config.derivative.richardson)
    landau = config.model.name == "landau"
    checks: dict[str, bool] = {}

    grid_rows = []
    prev = None
    for n in CONVERGENCE_N:
        grid = _grid_for(dataclasses.replace(config, grid=dataclasses.replace(config.grid, n=n)), value)
        G = qmt(point.family, point.at, grid, scheme)[point.which, point.which]
        grid_rows.append(
            {
                "n": n,
                "G_naive": G,
                "error_vs_oracle": G - point.oracle if landau else math.nan,
                "diff_from_previous": math.nan if prev is None else abs(G - prev),
            }
        )
        prev = G
    diffs = [r["diff_from_previous"] for r in grid_rows[1:]]
    checks["grid_differences_shrink"] = all(b < a for a, b in zip(diffs, diffs[1:]))

    if landau:
        exact = analytic_derivative(value, g, point.grid, config.model.m)
    else:
        # second Richardson level from h = 1e-2 and h/2: sixth order, and not one of the tabulated estimates
        coarse, fine = (
            param_derivative(point.family, point.at, point.which, point.grid, DerivativeScheme(h, True))
            for h in (1e-2, 5e-3)
        )
        exact = fine.scaled(16 / 15) - coarse.scaled(1 / 15)

    step_rows = []
    for richardson in (False, True):
        for h in CONVERGENCE_H:
            errs = []
            for hh in (h, h / 2):
                d = param_derivative(point.family, point.at, point.which, point.grid, DerivativeScheme(hh, richardson))
                errs.append(_field_error(d, exact))
            try:
                G = qmt(point.family, point.at, point.grid, DerivativeScheme(h, richardson))[point.which, point.which]
                note = ""
            except NumericalError as exc:
                # large plain steps breach the hermiticity guard; the field error is still meaningful
                G, note = math.nan, str(exc)
            ratio = errs[0] / errs[1] if errs[1] > 0 else math.inf
            step_rows.append(
                {
                    "richardson": richardson,
                    "h_rel": h,
                    "G_naive": G,
                    "G_error_vs_oracle": G - point.oracle if landau else math.nan,
                    "derivative_error_h": errs[0],
                    "derivative_error_h_half": errs[1],
                    "ratio": ratio,
                    "observed_order": math.log2(ratio) if 0 < ratio < math.inf else math.nan,
                    "note": note,
                }
            )
    plain = [r for r in step_rows if not r["richardson"]]
    rich = [r for r in step_rows if r["richardson"]]
    lo, hi = PLAIN_RATIO_RANGE
    checks["plain_ratio_in_range"] = all(lo <= r["ratio"] <= hi for r in plain)
    checks["richardson_order"] = rich[0]["observed_order"] >= RICHARDSON_MIN_ORDER
    at_default = {r["richardson"]: r["derivative_error_h"] for r in step_rows if r["h_rel"] == 1e-3}
    checks["richardson_beats_plain"] = at_default[True] < at_default[False]

    quad_rows = []
    if landau:
        for n in QUADRATURE_N:
            grid = default_grid(value, n, config.grid.n_sigma)
            psi = landau_state(value, config.model.m, grid)
            quad_rows.append({"n": n, "norm_error": abs(psi.norm2() - 1.0)})
        errs = [r["norm_error"] for r in quad_rows]
        checks["quadrature_error_decreases"] = all(b < a for a, b in zip(errs, errs[1:]))

    report = {
        "point": {config.sweep.param: value, "g": g},
        "oracle": point.oracle,
        "grid_refinement": grid_rows,
        "step_refinement": step_rows,
        "quadrature_normalization": quad_rows,
        "checks": checks,
    }
    ok = all(checks.values())
    failed = sorted(k for k, v in checks.items() if not v)
    return SweepResult([], 0 if ok else 2, "all checks passed" if ok else f"failed checks: {failed}", report)


def format_convergence(report: dict) -> str:
    lines = [f"point: {report['point']}  oracle: {fmt(report['oracle'])}", "", "n      G_naive                  |dG| vs previous"]
    for r in report["grid_refinement"]:
        lines.append(f"{r['n']:<6d} {fmt(r['G_naive']):<24s} {r['diff_from_previous']:.3e}")
    lines += ["", "scheme      h_rel   deriv err(h)  err(h/2)     ratio   order"]
    for r in report["step_refinement"]:
        name = "richardson" if r["richardson"] else "central"
        lines.append(
            f"{name:<11s} {r['h_rel']:<7.0e} {r['derivative_error_h']:.3e}     {r['derivative_error_h_half']:.3e}    "
            f"{r['ratio']:<7.3g} {r['observed_order']:.2f}"
        )
    if report["quadrature_normalization"]:
        lines += ["", "n      |norm - 1|"]
        for r in report["quadrature_normalization"]:
            lines.append(f"{r['n']:<6d} {r['norm_error']:.3e}")
    lines += [""] + [f"{'PASS' if v else 'FAIL'}  {k}" for k, v in report["checks"].items()]
    return "\n".join(lines) + "\n"
