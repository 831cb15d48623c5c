"""Command-line front end: ``multispec <subcommand> CONFIG.json [options]``.

The configuration is one JSON document.  Complex numbers are written as
``[re, im]`` pairs (plain numbers are accepted for real values) and matrices
row-major.  Results are CSV with a header row and 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import bform, infinite, pointspec, transform, verify
from .boundary import BoundaryMatrix, NotUnitaryError, decompose
from .characteristics import transport
from .eigensolver import NEAR_DEGENERACY_TOL, Branch, coefficient_grid, e, solve_coefficients
from .errors import NumericalWarning
from .intervals import ConfigError, IntervalConfig

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 1


class SchemaError(ValueError):
    """A malformed configuration; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _get(doc: dict, key: str, path: str, default: Any = ...) -> Any:
    if not isinstance(doc, dict):
        raise SchemaError(path, "expected an object")
    if key not in doc:
        if default is ...:
            raise SchemaError(f"{path}.{key}", "missing required field")
        return default
    return doc[key]


def parse_complex(value, path: str) -> complex:
    if isinstance(value, bool):
        raise SchemaError(path, "expected a number or [re, im]")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise SchemaError(path, "expected a number or [re, im]")


def parse_real_list(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise SchemaError(path, "expected a list of numbers")
    return np.array(value, dtype=float)


def parse_intervals(doc, path: str = "intervals") -> IntervalConfig:
    if not isinstance(doc, dict):
        raise SchemaError(path, "expected an object")
    if "betas" in doc or "alphas" in doc:
        betas = parse_real_list(_get(doc, "betas", path), f"{path}.betas")
        alphas = parse_real_list(_get(doc, "alphas", path), f"{path}.alphas")
        return IntervalConfig(betas, alphas)
    beta1 = _get(doc, "beta1", path)
    gaps = parse_real_list(_get(doc, "gaps", path), f"{path}.gaps")
    lengths = parse_real_list(_get(doc, "lengths", path), f"{path}.lengths")
    return IntervalConfig.from_lengths(float(beta1), gaps, lengths)


def _matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise SchemaError(path, "expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != len(value):
            raise SchemaError(f"{path}[{i}]", f"expected a row of length {len(value)}")
        rows.append([parse_complex(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex)


def parse_boundary(doc, path: str = "boundary") -> BoundaryMatrix:
    kind = _get(doc, "kind", path)
    reunitarize = bool(_get(doc, "reunitarize", path, False))
    if kind == "explicit":
        return BoundaryMatrix(_matrix(_get(doc, "matrix", path), f"{path}.matrix"), reunitarize=reunitarize)
    if kind == "permutation":
        perm = _get(doc, "perm", path)
        return BoundaryMatrix.permutation([int(p) for p in perm])
    if kind == "cycles":
        return BoundaryMatrix.from_cycles(int(_get(doc, "n", path)), _get(doc, "cycles", path))
    if kind == "diagonal":
        return BoundaryMatrix.diagonal(parse_real_list(_get(doc, "phases", path), f"{path}.phases"))
    if kind in ("su2", "split_su2", "leaky_su2"):
        a = parse_complex(_get(doc, "a", path), f"{path}.a")
        b = parse_complex(_get(doc, "b", path), f"{path}.b")
        return getattr(BoundaryMatrix, kind)(a, b)
    if kind == "template":
        n = int(_get(doc, "n", path))
        return BoundaryMatrix.template(n, parse_complex(_get(doc, "c", path, 1.0), f"{path}.c"))
    if kind == "phase_template":
        return BoundaryMatrix.phase_template(
            float(_get(doc, "c_phase", path)),
            parse_real_list(_get(doc, "corner_phases", path), f"{path}.corner_phases"),
        )
    raise SchemaError(f"{path}.kind", f"unknown boundary kind {kind!r}")


def parse_infinite(doc, path: str = "infinite") -> infinite.InfiniteConfig:
    if "cantor_level" in doc:
        return infinite.cantor_complement(int(doc["cantor_level"]))
    if "dyadic_count" in doc:
        return infinite.dyadic_config(int(doc["dyadic_count"]))
    ivs = _get(doc, "intervals", path)
    if not isinstance(ivs, list):
        raise SchemaError(f"{path}.intervals", "expected a list of [r, s] pairs")
    return infinite.InfiniteConfig(tuple(tuple(parse_real_list(iv, f"{path}.intervals[{k}]")) for k, iv in enumerate(ivs)))


@dataclass
class Context:
    doc: dict
    params: dict

    def param(self, key: str, default: Any = ...) -> Any:
        return _get(self.params, key, "params", default)

    def cfg(self) -> IntervalConfig:
        return parse_intervals(_get(self.doc, "intervals", "$"))

    def boundary(self, key: str = "boundary") -> BoundaryMatrix:
        return parse_boundary(_get(self.doc, key, "$"), key)

    def window(self, key: str = "window") -> tuple[float, float]:
        w = parse_real_list(self.param(key), f"params.{key}")
        if w.size != 2 or not w[0] < w[1]:
            raise SchemaError(f"params.{key}", "expected [lo, hi] with lo < hi")
        return float(w[0]), float(w[1])

    def state(self, cfg: IntervalConfig, horizon: float) -> transform.GridState:
        spec = self.param("state")
        grid = transform.make_grid(
            cfg,
            transform.default_margin(cfg, horizon),
            int(_get(spec, "samples_per_span", "params.state", transform.SAMPLES_PER_SPAN)),
        )
        comps = _get(spec, "components", "params.state", None)
        return transform.GridState.gaussian(
            cfg,
            grid,
            float(_get(spec, "center", "params.state")),
            float(_get(spec, "width", "params.state")),
            float(_get(spec, "momentum", "params.state", 0.0)),
            comps,
            horizon,
        )


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(header: list[str], rows, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


# subcommands: each returns (header, rows, instance checks)


def cmd_coeffs(ctx: Context):
    cfg, B = ctx.cfg(), ctx.boundary()
    lo, hi = ctx.window()
    lam = np.linspace(lo, hi, int(ctx.param("count", 1001)))
    coeffs, bad = coefficient_grid(cfg, B, lam)
    branches = [Branch.NONDEGENERATE.value] * lam.size
    # the pointwise solver classifies degenerate points and warns near them
    close = np.flatnonzero(pointspec.smallest_singular_values(cfg, B, lam) < NEAR_DEGENERACY_TOL) if cfg.n > 1 else []
    for k in close:
        branches[k] = solve_coefficients(cfg, B, float(lam[k]))[0].branch.value
    header = ["lambda"] + [f"A{k}_{part}" for k in range(cfg.n + 1) for part in ("re", "im", "abs")] + ["branch"]
    rows = [
        [l] + [v for a in row for v in (a.real, a.imag, abs(a))] + [br]
        for l, row, br in zip(lam, coeffs, branches)
    ]
    checks = []
    if cfg.n == 2:
        a, b = complex(B.u[0]), complex(B.corner[0, 0])
        ell = float(cfg.lengths[0])
        a1 = a * e(lam * (cfg.betas[0] - cfg.alphas[0])) / (1 - b * e(lam * ell))
        err = float(np.max(np.abs(coeffs[:, 1] - a1)))
        checks.append(Check("n=2 closed form A1", err <= 1e-12, f"max error {err:.2e}"))
    checks.append(Check("no degenerate grid points", len(bad) == 0, f"{len(bad)} degenerate points"))
    return header, rows, checks


def cmd_pointspec(ctx: Context):
    cfg, B = ctx.cfg(), ctx.boundary()
    window = ctx.window()
    spec = pointspec.find_point_spectrum(cfg, B, window, ctx.param("step", None))
    rows = [[lam, str(m)] for lam, m in spec.points]
    checks = []
    exact = pointspec.closed_form_spectrum(cfg, B, window)
    if exact is not None:
        same = len(exact) == len(spec) and (
            len(spec) == 0
            or (
                np.max(np.abs(exact.values - spec.values)) <= 1e-8
                and np.array_equal(exact.multiplicities, spec.multiplicities)
            )
        )
        checks.append(Check("closed-form spectrum", bool(same), f"{len(spec)} roots vs {len(exact)} exact"))
    return ["lambda", "multiplicity"], rows, checks


def cmd_density(ctx: Context):
    cfg, B = ctx.cfg(), ctx.boundary()
    center = float(ctx.param("center", 0.0))
    half = float(ctx.param("half_width"))
    spec = pointspec.closed_form_spectrum(cfg, B, (center - half, center + half))
    source = "closed-form"
    if spec is None or not ctx.param("closed_form", True):
        spec = pointspec.find_point_spectrum(cfg, B, (center - half, center + half))
        source = "root-finder"
    dens = pointspec.density(spec, center, half)
    gap = abs(dens - cfg.total_length) / cfg.total_length
    rows = [[center, half, dens, cfg.total_length, gap, source]]
    return ["center", "half_width", "density", "total_length", "relative_gap", "source"], rows, []


def cmd_poles(ctx: Context):
    cfg, B = ctx.cfg(), ctx.boundary()
    rects = ctx.param("rectangles")
    rows, checks = [], []
    for k, r in enumerate(rects):
        rect = tuple(parse_real_list(r, f"params.rectangles[{k}]"))
        count = pointspec.complex_zero_count(cfg, B, rect)
        row = list(rect) + [str(count)]
        if cfg.n == 2:
            expected = len(pointspec.pole_progression(cfg, B, rect))
            row.append(str(expected))
            checks.append(Check(f"rectangle {k} count", count == expected, f"{count} vs {expected}"))
        rows.append(row)
    header = ["x0", "x1", "y0", "y1", "count"] + (["closed_form_count"] if cfg.n == 2 else [])
    return header, rows, checks


def cmd_evolve(ctx: Context):
    """Per-time norms and component masses, or with ``params.snapshots`` the sampled states."""
    cfg, B = ctx.cfg(), ctx.boundary()
    times = parse_real_list(ctx.param("times"), "params.times")
    horizon = float(ctx.param("horizon", float(np.max(np.abs(times))) if times.size else 0.0))
    f = ctx.state(cfg, horizon)
    snapshots = bool(ctx.param("snapshots", False))
    norm0 = f.norm()
    rows, worst, oracle_err = [], 0.0, 0.0
    for t in times:
        g = transform.evolve(cfg, B, f, float(t))
        worst = max(worst, abs(g.norm() - norm0))
        if snapshots:
            rows.extend([t, x, v.real, v.imag, abs(v) ** 2] for x, v in zip(g.grid.x, g.values))
        else:
            rows.append([t, g.norm()] + list(g.component_mass()))
        steps = t / f.grid.dx
        if ctx.param("oracle", False) and t >= 0 and abs(steps - round(steps)) <= 1e-9:
            oracle_err = max(oracle_err, float(np.max(np.abs(g.values - transport(B, f, float(t)).values))))
    if snapshots:
        header = ["t", "x", "re", "im", "abs2"]
    else:
        header = ["t", "norm"] + [f"mass{k}" for k in range(cfg.n + 1)]
    checks = [Check("norm preserved", worst <= 1e-3 * max(norm0, 1e-300), f"max drift {worst:.2e}")]
    if ctx.param("oracle", False):
        checks.append(Check("characteristics oracle", oracle_err <= 1e-3, f"max sample error {oracle_err:.2e}"))
    return header, rows, checks


def cmd_intertwine(ctx: Context):
    cfg, B1, B2 = ctx.cfg(), ctx.boundary("boundary"), ctx.boundary("boundary2")
    f = ctx.state(cfg, float(ctx.param("horizon", 0.0)))
    g = transform.intertwiner_apply(cfg, B1, B2, f)
    rows = [[x, v.real, v.imag, abs(v) ** 2] for x, v in zip(g.grid.x, g.values)]
    drift = abs(g.norm() - f.norm())
    return ["x", "re", "im", "abs2"], rows, [Check("W isometric", drift <= 1e-3 * f.norm(), f"norm drift {drift:.2e}")]


def cmd_inner(ctx: Context):
    cfg, B, C = ctx.cfg(), ctx.boundary("boundary"), ctx.boundary("boundary2")
    res = bform.inner_product(cfg, B, C, ctx.param("lam_max", None), periodic=ctx.param("periodic", None))
    row = [res.value.real, res.value.imag, res.error_bound]
    header = ["re", "im", "error_bound"]
    checks = []
    if cfg.n == 2:
        exact = bform.inner_product_closed_form(cfg, B, C)
        row += [exact.real, exact.imag]
        header += ["closed_form_re", "closed_form_im"]
        rel = abs(res.value - exact) / max(abs(exact), 1e-300)
        checks.append(Check("n=2 closed form", rel <= 1e-3, f"relative error {rel:.2e}"))
    return header, [row], checks


def cmd_decompose(ctx: Context):
    B = ctx.boundary()
    report = decompose(B)
    again = decompose(np.asarray(B.entries)[np.ix_(np.array(report.permutation) - 1, np.array(report.permutation) - 1)])
    sizes_same = sorted(map(len, again.blocks)) == sorted(map(len, report.blocks))
    rows = [[str(k + 1), " ".join(map(str, blk)), str(report.is_decomposable), str(report.operator_split)] for k, blk in enumerate(report.blocks)]
    return (
        ["block", "indices", "decomposable", "operator_split"],
        rows,
        [Check("idempotent on permuted matrix", sizes_same, f"{len(report.blocks)} blocks")],
    )


def cmd_cantor(ctx: Context):
    window = ctx.window()
    phases = ctx.param("phases", None)
    if "infinite" in ctx.doc:
        cfg, level = parse_infinite(ctx.doc["infinite"]), None
    else:
        level = int(ctx.param("level"))
        cfg = infinite.cantor_complement(level)
    spec = infinite.diagonal_point_spectrum(cfg, phases, window)
    rows = [[lam, str(m)] for lam, m in spec.points]
    checks = []
    if level and phases is None:
        coarse = infinite.diagonal_point_spectrum(infinite.cantor_complement(level - 1), None, window)
        kept = all(spec.multiplicity(lam) >= m for lam, m in coarse.points)
        checks.append(Check("truncation monotone", kept, f"level {level - 1} -> {level}"))
    return ["lambda", "multiplicity"], rows, checks


COMMANDS: dict[str, tuple[Callable, str, list[str]]] = {
    "coeffs": (cmd_coeffs, "scattering coefficients on a lambda grid", ["unitarity-system", "boundary-residual", "gauge-covariance"]),
    "pointspec": (cmd_pointspec, "embedded eigenvalues in a window", ["eigen-relations", "degenerate-orthogonality", "boundary-residual"]),
    "density": (cmd_density, "counting density of the point spectrum", ["eigen-relations", "corner-norm-bound"]),
    "poles": (cmd_poles, "zero counts of D in rectangles", ["eigen-relations"]),
    "evolve": (cmd_evolve, "norm and component masses of U(t) f", ["unitarity-system"]),
    "intertwine": (cmd_intertwine, "apply the intertwiner between two boundary matrices", ["unitarity-system"]),
    "inner": (cmd_inner, "inner product of two boundary matrices", ["unitarity-system"]),
    "decompose": (cmd_decompose, "block decomposition of a boundary matrix", ["unitarity-system", "degenerate-orthogonality"]),
    "cantor": (cmd_cantor, "point spectrum on a truncated Cantor complement", []),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multispec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, _) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="JSON configuration file, or - for stdin")
        p.add_argument("-o", "--output", help="CSV output path (default stdout)")
        p.add_argument("--verify", action="store_true", help="run invariant checks and report pass/fail")
        p.add_argument("--seed", type=int, default=verify.DEFAULT_SEED, help="seed for randomized property suites")
        p.add_argument("--trials", type=int, default=verify.DEFAULT_TRIALS, help="trials per property suite")
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    code = getattr(category, "code", "W000") if issubclass(category, NumericalWarning) else category.__name__
    print(f"warning[{code}]: {message}", file=sys.stderr)


def _load(path: str) -> dict:
    text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected a JSON object")
    return doc


def run(argv: list[str] | None = None, stdout=None) -> int:
    args = build_parser().parse_args(argv)
    stdout = sys.stdout if stdout is None else stdout
    handler, _, suites = COMMANDS[args.command]
    previous = warnings.showwarning
    warnings.showwarning = _show_warning
    try:
        doc = _load(args.config)
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise SchemaError("params", "expected an object")
        header, rows, checks = handler(Context(doc, params))
    except (SchemaError, ConfigError, NotUnitaryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError) as exc:
        code = getattr(exc, "code", None)
        print(f"error[{code}]: {exc}" if code else f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        warnings.showwarning = previous

    buf = io.StringIO()
    _write_csv(header, rows, buf)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        stdout.write(buf.getvalue())

    if not args.verify:
        return 0
    lines = [c.line() for c in checks]
    ok = all(c.passed for c in checks)
    for name in suites:
        res = verify.run_suite(name, args.trials, args.seed)
        lines.append(res.line())
        ok &= res.passed
    for line in lines:
        print(f"verify: {line}", file=sys.stderr)
    return 0 if ok else EXIT_VERIFY


def main() -> None:
    sys.exit(run())
