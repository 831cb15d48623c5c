"""Embedded point spectrum: real zeros of ``D(lambda) = det(I - B'_ab(lambda))``.

Roots are found by scanning the smallest singular value of ``I - B'_ab`` on a
fine grid, refining every local minimum, and certifying survivors by the
singular value threshold.  Multiplicity is the numerical kernel dimension,
i.e. the number of independent eigenfunctions.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar

from .boundary import DEGENERACY_TOL, BoundaryMatrix
from .eigensolver import (
    det_D,
    det_D_derivative,
    e,
    solve_coefficients,
    twisted_corner,
)
from .errors import BoundaryZeroError, RootCollisionWarning, WindingError
from .intervals import IntervalConfig

COLLISION_TOL = 1e-10
THREADS_ENV = "MULTISPEC_THREADS"


@dataclass(frozen=True)
class Progression:
    """Arithmetic progression ``offset + step * Z``."""

    offset: float
    step: float

    def members(self, lo: float, hi: float) -> np.ndarray:
        k0 = math.ceil((lo - self.offset) / self.step - 1e-12)
        k1 = math.floor((hi - self.offset) / self.step + 1e-12)
        return self.offset + self.step * np.arange(k0, k1 + 1)


@dataclass(frozen=True)
class PointSpectrum:
    window: tuple[float, float]
    points: list[tuple[float, int]] = field(default_factory=list)
    closed_form: list[Progression] | None = None

    @property
    def values(self) -> np.ndarray:
        return np.array([p for p, _ in self.points], dtype=float)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.points], dtype=int)

    def __len__(self):
        return len(self.points)


def default_step(cfg: IntervalConfig) -> float:
    return 1.0 / (16.0 * max(cfg.total_length, 1.0))


def smallest_singular_values(cfg: IntervalConfig, B: BoundaryMatrix, lambdas) -> np.ndarray:
    a = np.eye(cfg.n - 1) - twisted_corner(cfg, B, np.asarray(lambdas, dtype=float))
    return np.linalg.svd(a, compute_uv=False)[..., -1]


def _sigma(cfg, B, lam: float) -> float:
    return float(smallest_singular_values(cfg, B, np.array([lam]))[0])


def _refine(cfg: IntervalConfig, B: BoundaryMatrix, bracket) -> float:
    lo, mid, hi = bracket
    res = minimize_scalar(
        lambda x: _sigma(cfg, B, x),
        bracket=(lo, mid, hi),
        method="golden",
        options={"xtol": 1e-15},
    )
    lam = float(res.x)
    best = _sigma(cfg, B, lam)
    # polish with Newton on D; at multiple roots this stalls and we keep the golden value
    for _ in range(6):
        d = complex(det_D(cfg, B, lam))
        dd = det_D_derivative(cfg, B, lam)
        if dd == 0:
            break
        cand = lam - (d / dd).real
        if not lo <= cand <= hi:
            break
        s = _sigma(cfg, B, cand)
        if s >= best:
            break
        lam, best = cand, s
    return lam


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def kernel_dimension(cfg: IntervalConfig, B: BoundaryMatrix, lam: float, tol: float = DEGENERACY_TOL) -> int:
    a = np.eye(cfg.n - 1) - twisted_corner(cfg, B, lam)
    return int(np.sum(np.linalg.svd(a, compute_uv=False) <= tol))


def find_point_spectrum(
    cfg: IntervalConfig,
    B: BoundaryMatrix,
    window: tuple[float, float],
    step: float | None = None,
) -> PointSpectrum:
    """Real zeros of ``D`` in ``window`` with their multiplicities, sorted ascending."""
    lo, hi = float(window[0]), float(window[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"window must be a finite interval, got {window}")
    if cfg.n < 2:
        return PointSpectrum((lo, hi), [])
    step = default_step(cfg) if step is None else float(step)
    count = int(math.ceil((hi - lo) / step)) + 3
    grid = lo - step + step * np.arange(count)
    sig = smallest_singular_values(cfg, B, grid)

    left = np.r_[np.inf, sig[:-1]]
    right = np.r_[sig[1:], np.inf]
    minima = np.flatnonzero((sig <= left) & (sig < right))
    minima = minima[(minima > 0) & (minima < count - 1)]
    # sigma_min is Lipschitz in lambda, so a zero between grid points forces
    # the nearest sample below this bound; other minima cannot hide a root
    offsets = cfg.betas[None, 1:] - cfg.alphas[:-1, None]
    lipschitz = 2 * np.pi * np.linalg.norm(offsets * np.abs(B.corner))
    minima = minima[sig[minima] <= 0.5 * lipschitz * step + DEGENERACY_TOL]
    brackets = [(grid[i - 1], grid[i], grid[i + 1]) for i in minima]

    workers = _workers()
    if workers > 1 and len(brackets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            roots = list(pool.map(lambda br: _refine(cfg, B, br), brackets))
    else:
        roots = [_refine(cfg, B, br) for br in brackets]

    # Newton can land on a subnormal instead of an exact zero
    roots = sorted(0.0 if abs(r) < np.finfo(float).tiny else r for r in roots if _sigma(cfg, B, r) <= DEGENERACY_TOL)
    merged: list[float] = []
    for r in roots:
        if merged and abs(r - merged[-1]) <= COLLISION_TOL:
            warnings.warn(
                f"refined roots collide near {r!r}; multiplicity taken from kernel dimension",
                RootCollisionWarning,
                stacklevel=2,
            )
            continue
        merged.append(r)
    points = [(r, kernel_dimension(cfg, B, r)) for r in merged if lo <= r <= hi]
    return PointSpectrum((lo, hi), points, closed_form_progressions(cfg, B))


def closed_form_progressions(cfg: IntervalConfig, B: BoundaryMatrix) -> list[Progression] | None:
    """Progressions for a diagonal corner ``diag(z_k)``; ``None`` when not applicable.

    With a diagonal corner, ``D = prod (1 - z_k e(lambda L_k))`` and only the
    unimodular ``z_k = e(theta_k)`` contribute roots ``(-theta_k + Z) / L_k``.
    """
    if cfg.n < 2:
        return []
    bp = np.asarray(B.corner)
    if np.linalg.norm(bp - np.diag(np.diag(bp))) > 1e-12:
        return None
    progs = []
    for zk, ell in zip(np.diag(bp), cfg.lengths):
        if abs(abs(zk) - 1) <= 1e-12:
            theta = np.angle(zk) / (2 * np.pi)
            progs.append(Progression(offset=-theta / ell, step=1.0 / ell))
    return progs


def closed_form_spectrum(cfg: IntervalConfig, B: BoundaryMatrix, window) -> PointSpectrum | None:
    """Exact spectrum from the progressions, with membership-count multiplicities."""
    progs = closed_form_progressions(cfg, B)
    if progs is None:
        return None
    lo, hi = float(window[0]), float(window[1])
    cands = np.sort(np.concatenate([p.members(lo, hi) for p in progs] + [np.zeros(0)]))
    points: list[tuple[float, int]] = []
    for lam in cands:
        if points and abs(lam - points[-1][0]) <= 1e-9 * max(1.0, abs(lam)):
            continue
        mult = sum(
            1
            for p in progs
            if abs((lam - p.offset) / p.step - round((lam - p.offset) / p.step)) <= 1e-9
        )
        points.append((float(lam), mult))
    return PointSpectrum((lo, hi), points, progs)


def density(spectrum: PointSpectrum, center: float, half_width: float) -> float:
    """Multiplicity-weighted count in ``[a - T, a + T)`` divided by ``2T``."""
    lo, hi = center - half_width, center + half_width
    if lo < spectrum.window[0] - 1e-12 or hi > spectrum.window[1] + 1e-12:
        raise ValueError(f"density window [{lo}, {hi}] exceeds computed range {spectrum.window}")
    if not spectrum.points:
        return 0.0
    vals, mults = spectrum.values, spectrum.multiplicities
    # refined roots land within rounding of the window ends; snap them consistently
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))
    mask = (vals >= lo - tol) & (vals < hi - tol)
    return float(mults[mask].sum()) / (2 * half_width)


def log_derivative(cfg: IntervalConfig, B: BoundaryMatrix, z) -> np.ndarray:
    """``D'(z)/D(z) = -2 pi i tr(R delta(M))`` on a batch of points."""
    z = np.asarray(z, dtype=complex)
    m = twisted_corner(cfg, B, z)
    r = np.linalg.inv(np.eye(cfg.n - 1) - m)
    delta = m * cfg.betas[1:] - cfg.alphas[:-1, None] * m
    return -2j * np.pi * np.einsum("...ij,...ji->...", r, delta)


def _contour_integral(cfg, B, corners, per_edge: int) -> complex:
    total = 0j
    for a, b in zip(corners, corners[1:] + corners[:1]):
        t = np.linspace(0.0, 1.0, per_edge + 1)
        zs = a + (b - a) * t
        f = log_derivative(cfg, B, zs) * (b - a)
        total += integrate.trapezoid(f, t)
    return total / (2j * np.pi)


def contour_winding(
    cfg: IntervalConfig,
    B: BoundaryMatrix,
    rectangle: tuple[float, float, float, float],
    max_points: int = 1 << 17,
) -> complex:
    """``(1/2 pi i) * contour integral of D'/D`` around ``[x0, x1] x [y0, y1]``.

    The trapezoid rule on each edge is doubled until two successive values
    agree to 1e-4 and sit within 1e-2 of an integer, or ``max_points`` is hit.
    """
    x0, x1, y0, y1 = map(float, rectangle)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("rectangle must have positive width and height")
    if cfg.n < 2:
        return 0j
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    span = max(x1 - x0, y1 - y0) * max(cfg.total_length, 1.0)
    n = max(64, 1 << int(math.ceil(math.log2(64 * span + 1))))
    # boundary zero check on a fine sample
    for a, b in zip(corners, corners[1:] + corners[:1]):
        zs = a + (b - a) * np.linspace(0, 1, 4 * n + 1)
        dmin = np.min(np.abs(det_D(cfg, B, zs)))
        if dmin <= 1e-8:
            raise BoundaryZeroError(f"|D| = {dmin:.1e} on the rectangle boundary")
    prev = _contour_integral(cfg, B, corners, n)
    while True:
        n *= 2
        cur = _contour_integral(cfg, B, corners, n)
        if (abs(cur - prev) < 1e-4 and abs(cur - round(cur.real)) < 1e-2) or n > max_points:
            return complex(cur)
        prev = cur


def complex_zero_count(
    cfg: IntervalConfig,
    B: BoundaryMatrix,
    rectangle: tuple[float, float, float, float],
    max_points: int = 1 << 17,
) -> int:
    """Number of zeros of ``D`` inside ``[x0, x1] x [y0, y1]`` by the argument principle."""
    w = contour_winding(cfg, B, rectangle, max_points)
    nearest = round(w.real)
    if abs(w - nearest) >= 0.1:
        raise WindingError(f"winding number {w} did not settle to an integer")
    return int(nearest)


def pole_progression(cfg: IntervalConfig, B: BoundaryMatrix, rectangle) -> list[complex]:
    """Closed-form zeros ``(1/L)((-1/2 pi i) log b + Z)`` for ``n = 2`` inside a rectangle."""
    if cfg.n != 2:
        raise ValueError("closed-form pole progression exists for n = 2 only")
    b = complex(B.corner[0, 0])
    if b == 0:
        return []
    ell = cfg.lengths[0]
    base = (-1.0 / (2j * np.pi)) * np.log(b)
    x0, x1, y0, y1 = rectangle
    out = []
    k0 = math.floor(x0 * ell - base.real) - 1
    k1 = math.ceil(x1 * ell - base.real) + 1
    for k in range(k0, k1 + 1):
        z = (base + k) / ell
        if x0 < z.real < x1 and y0 < z.imag < y1:
            out.append(complex(z))
    return out


def _split_su2_parameter(B: BoundaryMatrix) -> complex:
    bp = np.asarray(B.corner)
    if B.n != 3 or np.linalg.norm(B.u) > 1e-12 or abs(B.c - 1) > 1e-12:
        raise ValueError("expected the split n=3 form with u = w = 0 and c = 1")
    a, b = bp[0, 0], bp[0, 1]
    if abs(bp[1, 0] + np.conj(b)) > 1e-12 or abs(bp[1, 1] - np.conj(a)) > 1e-12:
        raise ValueError("corner is not of the form [[a, b], [-conj(b), conj(a)]]")
    return complex(a)


def torus_motion_residual(cfg: IntervalConfig, B: BoundaryMatrix, lam: float) -> float:
    """Residual of the Moebius form of ``D = 0`` for the split SU(2) matrix.

    Writing ``a = w e(phi_0)`` with ``0 < w < 1``, a real ``lambda`` is a root
    iff ``e(lambda L_2 - phi_0) = (1 - w X) / (w - X)`` with
    ``X = e(lambda L_1 + phi_0)``.
    """
    a = _split_su2_parameter(B)
    w = abs(a)
    if not 0 < w < 1:
        raise ValueError("need 0 < |a| < 1")
    phi0 = np.angle(a) / (2 * np.pi)
    l1, l2 = cfg.lengths
    x = complex(e(lam * l1 + phi0))
    if abs(w - x) < 1e-12:
        raise ZeroDivisionError("lambda sits on the Moebius pole")
    rhs = (1 - w * x) / (w - x)
    return float(abs(complex(e(lam * l2 - phi0)) - rhs))


def split_su2_det(cfg: IntervalConfig, a: complex, lam):
    """``1 + e(lambda(L_1+L_2)) - a e(lambda L_1) - conj(a) e(lambda L_2)``."""
    l1, l2 = cfg.lengths
    lam = np.asarray(lam, dtype=complex)
    return 1 + e(lam * (l1 + l2)) - a * e(lam * l1) - np.conj(a) * e(lam * l2)


@dataclass(frozen=True)
class PairReport:
    lam: float
    abs_a1: float
    abs_a2: float
    moduli_equal: bool
    equal: bool


def spectral_pair_report(cfg: IntervalConfig, B: BoundaryMatrix, lam: float, tol: float = 1e-8) -> PairReport:
    """Compare the bounded-component amplitudes of the boundstate at ``lambda``."""
    sols = [s for s in solve_coefficients(cfg, B, lam) if abs(s.A[0]) == 0]
    if not sols:
        raise ValueError(f"lambda={lam} is not an eigenvalue")
    A = sols[0].A
    a1, a2 = A[1], A[2]
    return PairReport(
        lam=float(lam),
        abs_a1=float(abs(a1)),
        abs_a2=float(abs(a2)),
        moduli_equal=bool(abs(abs(a1) - abs(a2)) <= tol),
        equal=bool(abs(a1 - a2) <= tol),
    )


def folded_roots(spectrum: PointSpectrum, period: float = 1.0) -> np.ndarray:
    """Roots reduced modulo ``period``, sorted; fills densely when lengths are incommensurate."""
    return np.sort(np.mod(spectrum.values, period))
