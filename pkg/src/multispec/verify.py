"""Randomized invariant checks shared by the test suite and ``--verify``.

Each suite draws ``trials`` random instances from a seeded generator and
records the worst residual.  A trial fails when its residual exceeds the
suite tolerance or when the computation raises.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boundary import (
    BoundaryMatrix,
    degenerate_orthogonality_check,
    gauge_action,
    is_degenerate,
    random_degenerate,
    random_unitary,
)
from .eigensolver import solve_coefficients
from .intervals import IntervalConfig

DEFAULT_TRIALS = 500
DEFAULT_SEED = 20240607


@dataclass(frozen=True)
class SuiteResult:
    name: str
    trials: int
    failures: int
    worst: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: {self.failures}/{self.trials} failures, "
            f"worst residual {self.worst:.3e} (tol {self.tolerance:.0e})"
        )


def random_config(n: int, rng: np.random.Generator) -> IntervalConfig:
    return IntervalConfig.from_lengths(
        rng.uniform(-2, 2), rng.uniform(0.2, 2.0, n), rng.uniform(0.2, 2.0, n - 1)
    )


def random_boundary(n: int, rng: np.random.Generator) -> BoundaryMatrix:
    return BoundaryMatrix(random_unitary(n, rng))


def _run(name: str, trial: Callable[[np.random.Generator], float], tol: float, trials: int, seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    failures, worst = 0, 0.0
    for _ in range(trials):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                r = float(trial(rng))
        except (ArithmeticError, ValueError, np.linalg.LinAlgError):
            failures += 1
            worst = np.inf
            continue
        worst = max(worst, r)
        if not r <= tol:
            failures += 1
    return SuiteResult(name, trials, failures, worst, tol)


def _unitarity_system(rng) -> float:
    """All four conditions characterising U(n) in corner coordinates."""
    B = random_boundary(int(rng.integers(2, 7)), rng)
    u, bp, c, w = B.u, B.corner, B.c, B.w
    eye = np.eye(bp.shape[0])
    nw, nu = np.vdot(w, w).real, np.vdot(u, u).real
    res = [
        np.linalg.norm(bp.conj().T @ bp + np.outer(w, w.conj()) - eye),
        np.linalg.norm(bp @ bp.conj().T + np.outer(u, u.conj()) - eye),
        np.linalg.norm(bp @ w + np.conj(c) * u),
        abs(nw + abs(c) ** 2 - 1),
        abs(nu + abs(c) ** 2 - 1),
    ]
    return max(res)


def _eigen_relations(rng) -> float:
    B = random_boundary(int(rng.integers(2, 7)), rng)
    bp, c2 = B.corner, abs(B.c) ** 2
    r1 = np.linalg.norm(bp.conj().T @ bp @ B.w - c2 * B.w)
    r2 = np.linalg.norm(bp @ bp.conj().T @ B.u - c2 * B.u)
    return max(r1, r2)


def _corner_norm_bound(rng) -> float:
    """Positive part of ``|c| - ||B'||``; zero when the bound holds."""
    B = random_boundary(int(rng.integers(2, 7)), rng)
    return max(0.0, abs(B.c) - np.linalg.norm(B.corner, 2))


def _degenerate_orthogonality(rng) -> float:
    B, zeta = random_degenerate(int(rng.integers(3, 7)), rng)
    found, z = is_degenerate(B)
    if not found:
        raise ArithmeticError("constructed degenerate matrix not detected")
    return max(max(degenerate_orthogonality_check(B, zeta)), max(degenerate_orthogonality_check(B, z)))


def _gauge_covariance(rng) -> float:
    """Solutions transform as ``v -> (v_0, g v', v_n)`` under ``alpha_g``.

    A general ``g`` acts on the untwisted system (``lambda = 0``); a diagonal
    ``g`` commutes with the twist, so it is also tested at random ``lambda``.
    """
    n = int(rng.integers(2, 7))
    cfg, B = random_config(n, rng), random_boundary(n, rng)
    if rng.uniform() < 0.5:
        g, lam = random_unitary(n - 1, rng), 0.0
    else:
        g, lam = np.diag(np.exp(2j * np.pi * rng.uniform(size=n - 1))), rng.uniform(-10, 10)
    (v,) = solve_coefficients(cfg, B, lam)
    (vg,) = solve_coefficients(cfg, gauge_action(g, B), lam)
    expected = np.concatenate([[v.A[0]], g @ v.A[1:-1], [v.A[-1]]])
    return float(np.linalg.norm(vg.A - expected))


def _boundary_residual(rng) -> float:
    """Every emitted solution satisfies the boundary system, degenerate points included.

    The residual is relative to ``max(1, ||A||)``; spectral parameters are real.
    """
    n = int(rng.integers(2, 7))
    cfg = random_config(n, rng)
    kind = rng.integers(3)
    if kind == 0:
        B, z = random_boundary(n, rng), rng.uniform(-20, 20)
    elif kind == 1:
        # a degenerate corner at lambda = 0, where the twist is trivial
        B, _ = random_degenerate(max(n, 3), rng)
        cfg = random_config(B.n, rng)
        z = 0.0
    else:
        B, z = BoundaryMatrix.template(n, np.exp(2j * np.pi * rng.uniform())), float(rng.integers(-5, 6))
        cfg = IntervalConfig.from_lengths(rng.uniform(-2, 2), rng.uniform(0.2, 2.0, n), np.ones(n - 1))
    sols = solve_coefficients(cfg, B, z) + solve_coefficients(cfg, B, z, "kernel_basis")
    if not sols:
        raise ArithmeticError("no solution returned")
    return max(s.boundary_residual(cfg, B) / max(1.0, np.linalg.norm(s.A)) for s in sols)


SUITES: dict[str, tuple[Callable, float]] = {
    "unitarity-system": (_unitarity_system, 1e-10),
    "eigen-relations": (_eigen_relations, 1e-10),
    "corner-norm-bound": (_corner_norm_bound, 1e-12),
    "degenerate-orthogonality": (_degenerate_orthogonality, 1e-10),
    "gauge-covariance": (_gauge_covariance, 1e-10),
    "boundary-residual": (_boundary_residual, 1e-10),
}


def run_suite(name: str, trials: int = DEFAULT_TRIALS, seed: int = DEFAULT_SEED) -> SuiteResult:
    trial, tol = SUITES[name]
    return _run(name, trial, tol, trials, seed)


def run_all(trials: int = DEFAULT_TRIALS, seed: int = DEFAULT_SEED) -> list[SuiteResult]:
    return [run_suite(name, trials, seed) for name in SUITES]
