"""Configurations with infinitely many bounded components, handled by truncation.

The bounded components are disjoint open intervals ``I_k = (r_k, s_k)`` inside
``(0, 1)``; the two half-lines are glued to each other.  For a diagonal
boundary operator ``diag(e(theta_0), e(theta_1), ...)`` each interval carries
its own progression of eigenvalues ``{lambda : lambda l_k - theta_k in Z}``,
and the multiplicity of ``lambda`` is the number of intervals whose
progression contains it.  Everything here works on a finite truncation whose
level is recorded in the result.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .boundary import BoundaryMatrix
from .intervals import ConfigError, IntervalConfig
from .pointspec import PointSpectrum, Progression

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class InfiniteConfig:
    """A truncated family of disjoint intervals in ``(0, 1)``."""

    intervals: tuple[tuple[float, float], ...]
    label: str = "explicit"

    def __post_init__(self):
        exact = all(isinstance(v, (Fraction, int)) for iv in self.intervals for v in iv)
        ivs = tuple((Fraction(r), Fraction(s)) if exact else (float(r), float(s)) for r, s in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for k, (r, s) in enumerate(ivs, start=1):
            if not 0.0 <= r < s <= 1.0:
                raise ConfigError(f"interval {k} = ({r}, {s}) is not a nonempty subinterval of (0, 1)")
        ordered = sorted(ivs)
        for (r1, s1), (r2, s2) in zip(ordered, ordered[1:]):
            if s1 > r2:
                raise ConfigError(f"intervals ({r1}, {s1}) and ({r2}, {s2}) overlap")

    @property
    def exact(self) -> bool:
        return all(isinstance(r, Fraction) for r, _ in self.intervals)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([float(s - r) for r, s in self.intervals])

    @property
    def count(self) -> int:
        return len(self.intervals)

    def truncated(self, count: int) -> "InfiniteConfig":
        return InfiniteConfig(self.intervals[:count], f"{self.label}[:{count}]")


def _ternary(digits) -> Fraction:
    return sum((Fraction(d, 3 ** (i + 1)) for i, d in enumerate(digits)), Fraction(0))


def cantor_complement(level: int) -> InfiniteConfig:
    """Removed middle thirds up to ``level``: ``2^j`` intervals of length ``3^-(j+1)`` at level ``j``.

    Left endpoints are the ternary numbers ``0.x_1 ... x_j 1`` with digits
    ``x_i`` in ``{0, 2}``.
    """
    if level < 0:
        raise ValueError("level must be non-negative")
    intervals = []
    for j in range(level + 1):
        width = Fraction(1, 3 ** (j + 1))
        for digits in itertools.product((0, 2), repeat=j):
            left = _ternary((*digits, 1))
            intervals.append((left, left + width))
    return InfiniteConfig(tuple(intervals), f"cantor(J={level})")


def dyadic_config(count: int) -> InfiniteConfig:
    """``I_k = (1 - 2^(1-k), 1 - 2^-k)`` for ``k = 1..count``, so ``l_k = 2^-k``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return InfiniteConfig(
        tuple((1 - Fraction(2) ** (1 - k), 1 - Fraction(2) ** -k) for k in range(1, count + 1)),
        f"dyadic(K={count})",
    )


@dataclass(frozen=True)
class InfiniteSpectrum(PointSpectrum):
    """Point spectrum of a truncation.

    ``growing`` lists eigenvalues claimed by every interval of the truncation;
    their multiplicity increases without bound as the truncation grows.
    """

    truncation: int = 0
    label: str = ""
    growing: list[float] = field(default_factory=list)

    def multiplicity(self, lam: float) -> int:
        for val, mult in self.points:
            if abs(val - lam) <= MEMBERSHIP_TOL * max(1.0, abs(lam)):
                return mult
        return 0


def _membership(lam: float, lengths, phases) -> int:
    x = lam * np.asarray(lengths) - np.asarray(phases)
    return int(np.sum(np.abs(x - np.round(x)) <= MEMBERSHIP_TOL))


def progressions(cfg: InfiniteConfig, phases=None) -> list[Progression]:
    """``(theta_k + Z) / l_k`` for each interval."""
    theta = np.zeros(cfg.count) if phases is None else np.asarray(phases, dtype=float)
    if theta.shape != (cfg.count,):
        raise ValueError(f"expected {cfg.count} phases, got {theta.shape}")
    return [Progression(t / ell, 1.0 / ell) for t, ell in zip(theta, cfg.lengths)]


def diagonal_point_spectrum(cfg: InfiniteConfig, phases, window) -> InfiniteSpectrum:
    """Eigenvalues in ``window`` of the diagonal operator with interval phases ``theta_k``.

    ``phases`` holds ``theta_1 .. theta_K`` (one per interval; ``None`` means
    all zero).  The glued half-lines contribute no eigenvalues.
    """
    lo, hi = float(window[0]), float(window[1])
    progs = progressions(cfg, phases)
    theta = np.array([p.offset / p.step for p in progs])
    lengths = cfg.lengths
    if cfg.exact and not np.any(theta):
        # rational lengths and zero phases: members k / l_k exactly
        cands = sorted(
            {
                float(Fraction(k) / (s - r))
                for r, s in cfg.intervals
                for k in range(math.ceil(lo * (s - r)), math.floor(hi * (s - r)) + 1)
            }
        )
    else:
        cands = np.sort(np.concatenate([p.members(lo, hi) for p in progs] + [np.zeros(0)]))
    points: list[tuple[float, int]] = []
    for lam in cands:
        if points and abs(lam - points[-1][0]) <= MEMBERSHIP_TOL * max(1.0, abs(lam)):
            continue
        points.append((float(lam), _membership(lam, lengths, theta)))
    growing = [lam for lam, m in points if m == cfg.count and cfg.count > 1]
    return InfiniteSpectrum((lo, hi), points, progs, truncation=cfg.count, label=cfg.label, growing=growing)


@dataclass(frozen=True)
class DenseProbe:
    target: float
    levels: np.ndarray
    eigenvalues: np.ndarray

    def closest(self, upto: int | None = None) -> float:
        """Distance from the target to the nearest eigenvalue from levels ``<= upto``."""
        mask = np.ones(self.levels.shape, bool) if upto is None else self.levels <= upto
        if not mask.any():
            return math.inf
        return float(np.min(np.abs(self.eigenvalues[mask] - self.target)))


def dense_spectrum_probe(phases, target: float, window, levels: int | None = None) -> DenseProbe:
    """Eigenvalues near ``target`` for ``l_k = 2^-k`` and phases ``theta_k``.

    Level ``k`` contributes the progression ``2^k (theta_k + Z)``; its member
    closest to ``target`` (``2^k theta_k`` when ``2^k theta_k`` is near it) is
    reported when it lies inside ``window``.
    """
    theta = np.asarray(phases, dtype=float)
    count = theta.size if levels is None else int(levels)
    lo, hi = float(window[0]), float(window[1])
    lv, ev = [], []
    for k in range(1, count + 1):
        step = 2.0**k
        offset = step * theta[k - 1]
        lam = offset + step * round((target - offset) / step)
        if lo <= lam <= hi:
            lv.append(k)
            ev.append(lam)
    return DenseProbe(float(target), np.array(lv, dtype=int), np.array(ev, dtype=float))


def finite_truncation(cfg: InfiniteConfig) -> IntervalConfig:
    """The finite configuration whose bounded components are the sorted intervals.

    The removed set is ``[0, 1]`` minus the intervals, so consecutive
    intervals (and the ends 0, 1) must be separated by a gap.
    """
    ordered = sorted(cfg.intervals)
    betas = [0.0] + [float(s) for _, s in ordered]
    alphas = [float(r) for r, _ in ordered] + [1.0]
    return IntervalConfig(np.array(betas), np.array(alphas))


def diagonal_truncation_matrix(cfg: InfiniteConfig, phases=None, glue_phase: float = 0.0) -> BoundaryMatrix:
    """Boundary matrix on :func:`finite_truncation` realising the diagonal operator.

    In the finite twisted convention a corner entry ``z_k`` produces roots
    ``lambda l_k + arg(z_k)/2pi in Z``, so the interval phases enter as
    ``e(-theta_k)``.  ``phases`` follow the order of ``cfg.intervals``.
    """
    theta = np.zeros(cfg.count) if phases is None else np.asarray(phases, dtype=float)
    order = sorted(range(cfg.count), key=lambda k: cfg.intervals[k])
    n = cfg.count + 1
    layout = np.zeros((n, n), dtype=complex)
    for pos, k in enumerate(order):
        layout[pos, pos] = np.exp(-2j * np.pi * theta[k])
    layout[n - 1, n - 1] = np.exp(2j * np.pi * glue_phase)
    return BoundaryMatrix(np.roll(layout, 1, axis=1))


def shift_truncation_matrix(cfg: InfiniteConfig, rng: np.random.Generator | None = None) -> BoundaryMatrix:
    """A boundary matrix whose corner is nilpotent, so ``D == 1`` and the point spectrum is empty.

    The component-layout matrix is a cyclic shift (optionally with random
    phases): each bounded component feeds the next, the last feeds the
    half-line, and the half-line feeds the first.
    """
    n = cfg.count + 1
    layout = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    if rng is not None:
        layout = np.diag(np.exp(2j * np.pi * rng.uniform(size=n))) @ layout
    return BoundaryMatrix(np.roll(layout, 1, axis=1))
