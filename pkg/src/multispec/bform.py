"""Inner products between boundary conditions.

For boundary matrices ``B`` and ``C`` on the same configuration,

    <B, C> = sum_{j=1}^{n-1} int A_j^B(lambda) conj(A_j^C(lambda)) |Sh_j(lambda)|^2 dlambda

where ``Sh_j`` is the Fourier transform of the indicator of the bounded
component ``J_j``.  The integrand decays only like ``1/lambda^2``, so the
quadrature adds an explicit tail correction and reports an error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .boundary import BoundaryMatrix
from .eigensolver import coefficient_grid, e, reduced_det, reduced_det_derivative
from .errors import PoleProximityError, QuadratureError
from .intervals import IntervalConfig
from .pointspec import smallest_singular_values

MAX_POINTS = 2**24
CHUNK = 2**16


@dataclass(frozen=True)
class ShannonWeight:
    """``Sh_j(lambda) = int_{J_j} e(lambda x) dx`` for a bounded component ``j``."""

    cfg: IntervalConfig
    j: int

    def __post_init__(self):
        if not 1 <= self.j <= self.cfg.n - 1:
            raise ValueError(f"component {self.j} is not bounded")

    @property
    def length(self) -> float:
        return float(self.cfg.lengths[self.j - 1])

    def __call__(self, lam):
        left, right = self.cfg.component_bounds(self.j)
        lam = np.asarray(lam, dtype=float)
        return self.length * np.sinc(lam * self.length) * e(0.5 * (left + right) * lam)

    def modulus_sq(self, lam):
        lam = np.asarray(lam, dtype=float)
        return (self.length * np.sinc(lam * self.length)) ** 2


@dataclass(frozen=True)
class InnerProduct:
    value: complex
    error_bound: float
    tail: complex
    lam_max: float


def _integrand(cfg, Bs, Cs, xs, ys, lam):
    """``sum_j (sum_k x_k A_j^{B_k}) conj(sum_l y_l A_j^{C_l}) |Sh_j|^2``."""
    if lam.size > CHUNK:
        return np.concatenate(
            [_integrand(cfg, Bs, Cs, xs, ys, lam[i : i + CHUNK]) for i in range(0, lam.size, CHUNK)]
        )
    left = sum(x * coefficient_grid(cfg, B, lam)[0] for x, B in zip(xs, Bs))
    right = sum(y * coefficient_grid(cfg, C, lam)[0] for y, C in zip(ys, Cs))
    total = np.zeros(lam.shape, dtype=complex)
    for j in range(1, cfg.n):
        total += left[:, j] * np.conj(right[:, j]) * ShannonWeight(cfg, j).modulus_sq(lam)
    return total


def _pole_distance(cfg: IntervalConfig, B: BoundaryMatrix) -> float:
    """Rough distance from the real axis to the nearest pole of the coefficients.

    The corner entries carry phases ``e(z (beta_{j+1} - alpha_i))``, so
    ``sigma_min(I - B'(z))`` grows at most like ``2 pi * reach * |Im z|`` off
    the axis with ``reach`` the largest such exponent.  Its smallest value
    along a stretch of the real line, divided by that rate, bounds how close
    the poles come.
    """
    reach = _reach(cfg)
    stretch = 8.0 / float(cfg.lengths.min())
    lam = np.linspace(-stretch, stretch, int(256 * stretch * max(reach, 1.0)) + 1)
    sig = smallest_singular_values(cfg, B, lam)
    best = lam[np.argsort(sig)[:4]]
    h = lam[1] - lam[0]
    sig_min = float(sig.min())
    for centre in best:
        res = optimize.minimize_scalar(
            lambda s: float(smallest_singular_values(cfg, B, np.array([s]))[0]),
            bounds=(centre - h, centre + h),
            method="bounded",
            options={"xatol": 1e-12},
        )
        sig_min = min(sig_min, float(res.fun))
    return sig_min / (2 * np.pi * reach)


GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(16)
NEWTON_STEPS = 40
ROUNDOFF = 1e-13


def _reach(cfg: IntervalConfig) -> float:
    return max(float(np.max(np.abs(cfg.betas[1:, None] - cfg.alphas[None, :-1]))), 1.0)


def _nearby_poles(cfg: IntervalConfig, B: BoundaryMatrix, lo: float, hi: float) -> np.ndarray:
    """Poles of the coefficients lying within about ``1 / reach`` of ``[lo, hi]``.

    Poles are zeros of ``D(z) = e(z L) Dr(-z)``.  Every local minimum of
    ``sigma_min(I - B'(lambda))`` on a scan of the real line seeds a Newton
    iteration on the reduced determinant; seeds that wander off are dropped.
    A pole close to the axis sits under such a minimum and Newton converges
    to it quickly, which is the case the quadrature cares about.
    """
    reach = _reach(cfg)
    lam = np.linspace(lo, hi, int(math.ceil((hi - lo) * 16.0 * reach)) + 1)
    sig = smallest_singular_values(cfg, B, lam)
    idx = np.flatnonzero((sig[1:-1] <= sig[:-2]) & (sig[1:-1] <= sig[2:])) + 1
    seeds = lam[idx]
    w = -seeds.astype(complex)
    limit = 0.5 / reach
    for _ in range(NEWTON_STEPS):
        step = reduced_det(cfg, B, w) / (2j * np.pi * reduced_det_derivative(cfg, B, w))
        big = np.abs(step) > limit
        step[big] *= limit / np.abs(step[big])
        w = w - step
    z = -w
    ok = np.isfinite(z) & (np.abs(z.real - seeds) < 1.0 / reach) & (np.abs(reduced_det(cfg, B, w)) < 1e-8)
    return z[ok]


def _breakpoints(lo: float, hi: float, width: float, centres, distances) -> np.ndarray:
    """Panel edges of about ``width``, graded geometrically towards each close pole."""
    pieces = [np.linspace(lo, hi, int(math.ceil((hi - lo) / width)) + 1)]
    for c, d in zip(centres, distances):
        # wider peaks cannot hide between nodes; the panel check resolves them
        if d >= width / 16:
            continue
        # a 16-point panel loses nothing to a pole at a quarter of its distance
        steps = d * 4.0 ** np.arange(int(math.ceil(math.log(width / d, 4))) + 1)
        pieces.append(np.concatenate([[c], c - steps, c + steps]))
    edges = np.unique(np.concatenate(pieces))
    return edges[(edges >= lo) & (edges <= hi)]


@dataclass
class _PanelRule:
    """Sixteen-point Gauss rules on panels, each checked against its two halves."""

    fun: object
    budget: int
    used: int = 0

    def _apply(self, lo, hi):
        """Panel integrals and the accuracy floor that roundoff puts on each."""
        self.used += lo.size * GAUSS_NODES.size
        if self.used > self.budget:
            raise QuadratureError(f"resolving the integrand needs more than {self.budget} evaluations")
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x = mid[:, None] + half[:, None] * GAUSS_NODES
        vals = self.fun(x.ravel()).reshape(x.shape)
        # rounding the nodes moves them by about eps |lambda|, which shifts the
        # integral by up to that much times the integrand's variation
        variation = np.sum(np.abs(np.diff(vals, axis=1)), axis=1)
        floor = ROUNDOFF * half * (np.abs(vals) @ GAUSS_WEIGHTS)
        floor += 4 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)) * variation
        return half * (vals @ GAUSS_WEIGHTS), floor

    def integrate(self, edges: np.ndarray, rtol: float = 1e-11) -> tuple[complex, float]:
        """Integral over ``[edges[0], edges[-1]]`` and the summed panel discrepancies.

        A panel is accepted once its one-rule value and the sum over its halves
        agree to ``rtol`` times the total apportioned by width, or to within
        the panel's roundoff floor.
        """
        lo, hi = edges[:-1], edges[1:]
        whole, _ = self._apply(lo, hi)
        density = rtol * max(float(np.sum(np.abs(whole))), 1e-300) / (edges[-1] - edges[0])
        total, err = 0j, 0.0
        while lo.size:
            mid = 0.5 * (lo + hi)
            (left, lfloor), (right, rfloor) = self._apply(lo, mid), self._apply(mid, hi)
            diff = np.abs(left + right - whole)
            done = (diff <= density * (hi - lo)) | (diff <= lfloor + rfloor)
            total += np.sum((left + right)[done])
            err += float(np.sum(np.maximum(diff, lfloor + rfloor)[done]))
            keep = ~done
            lo, hi = np.concatenate([lo[keep], mid[keep]]), np.concatenate([mid[keep], hi[keep]])
            whole = np.concatenate([left[keep], right[keep]])
        return complex(total), err


def _tail(rule: _PanelRule, edges_for, lam_max: float, window: float) -> complex:
    """Integral beyond ``+-lam_max``.

    The integrand is ``p(lambda) / (pi lambda)^2`` with ``p`` bounded and almost
    periodic; ``p`` is replaced by its mean over the last ``window`` of each side.
    """
    weighted = _PanelRule(lambda lam: rule.fun(lam) * (np.pi * lam) ** 2, rule.budget, rule.used)
    tail = 0j
    for lo, hi in ((lam_max - window, lam_max), (-lam_max, -lam_max + window)):
        mean, _ = weighted.integrate(edges_for(lo, hi))
        tail += mean / window / (np.pi**2 * lam_max)
    rule.used = weighted.used
    return tail


def combination_inner(
    cfg: IntervalConfig,
    xs,
    Bs,
    ys,
    Cs,
    lam_max: float | None = None,
    check: bool = True,
    periodic: bool | None = None,
) -> InnerProduct:
    """Extended form on formal combinations ``sum x_k B_k`` and ``sum y_l C_l``.

    For ``n = 2`` the exact periodic reduction is used unless ``periodic`` is
    False; otherwise the real line is truncated at ``lam_max`` (default
    ``200 / min L``) and the ``1/lambda^2`` tail is added back from the mean of
    the integrand's numerator near the cutoff.  The truncated integral uses
    Gauss panels graded towards the near-real poles of the coefficients, which
    sit at the dips of ``sigma_min(I - B'(lambda))``.  With ``check`` the
    result is recomputed at twice the cutoff and a disagreement beyond the
    error bound raises :class:`QuadratureError`.
    """
    if cfg.n < 2:
        return InnerProduct(0j, 0.0, 0j, 0.0)
    if periodic is None:
        periodic = cfg.n == 2
    if periodic:
        return _periodic_reduction(cfg, Bs, Cs, xs, ys)
    ell_min = float(cfg.lengths.min())
    lam_max = 200.0 / ell_min if lam_max is None else float(lam_max)
    reach = _reach(cfg)
    outer = 2 * lam_max if check else lam_max
    poles = np.concatenate([_nearby_poles(cfg, M, -outer, outer) for M in (*Bs, *Cs)])
    distances = np.abs(poles.imag)
    if distances.size and distances.min() < 1e-10:
        raise PoleProximityError("a coefficient has a pole on the real axis; the form diverges")
    centres = poles.real
    # sixteen nodes resolve two oscillations of e(reach lambda) per panel
    width = 2.0 / reach

    def edges_for(lo, hi):
        return _breakpoints(lo, hi, width, centres, distances)

    rule = _PanelRule(lambda lam: _integrand(cfg, Bs, Cs, xs, ys, lam), MAX_POINTS)
    window = max(8.0 / ell_min, 4 * width)
    body, disc = rule.integrate(edges_for(-lam_max, lam_max))
    tail = _tail(rule, edges_for, lam_max, window)
    value = body + tail
    # the tail estimate is accurate to O(1/lam_max^2); bound it generously by a fraction of itself
    bound = disc + 0.05 * abs(tail) + 1e-12 * abs(value)
    if check:
        doubled, disc2 = body, disc
        for lo, hi in ((-2 * lam_max, -lam_max), (lam_max, 2 * lam_max)):
            piece, err = rule.integrate(edges_for(lo, hi))
            doubled, disc2 = doubled + piece, disc2 + err
        tail2 = _tail(rule, edges_for, 2 * lam_max, window)
        doubled += tail2
        if abs(doubled - value) > bound + disc2 + 0.05 * abs(tail2):
            raise QuadratureError(
                f"doubling the cutoff changed the value by {abs(doubled - value):.2e} "
                f"(bound {bound:.2e})"
            )
    return InnerProduct(complex(value), float(bound), complex(tail), lam_max)


def inner_product(
    cfg: IntervalConfig,
    B: BoundaryMatrix,
    C: BoundaryMatrix,
    lam_max: float | None = None,
    check: bool = True,
    periodic: bool | None = None,
) -> InnerProduct:
    """``<B, C>``; see :func:`combination_inner`."""
    return combination_inner(cfg, [1.0], [B], [1.0], [C], lam_max, check, periodic)


def _periodic_reduction(cfg, Bs, Cs, xs, ys) -> InnerProduct:
    ell = float(cfg.lengths[0])
    distance = min(_pole_distance(cfg, M) for M in (*Bs, *Cs))
    if distance < 1e-10:
        raise PoleProximityError("a coefficient has a pole on the real axis; the form diverges")
    points = 1 << max(8, int(math.ceil(math.log2(8.0 / (ell * distance)))))
    if points > MAX_POINTS:
        raise QuadratureError(f"resolving the integrand needs {points} nodes (limit {MAX_POINTS})")
    lam = np.arange(points) / (points * ell)
    left = sum(x * coefficient_grid(cfg, B, lam)[0][:, 1] for x, B in zip(xs, Bs))
    right = sum(y * coefficient_grid(cfg, C, lam)[0][:, 1] for y, C in zip(ys, Cs))
    vals = left * np.conj(right)
    fine = ell * np.mean(vals)
    coarse = ell * np.mean(vals[::2])
    return InnerProduct(complex(fine), float(abs(fine - coarse)) + 1e-15 * abs(fine), 0j, math.inf)


def inner_product_periodic(cfg: IntervalConfig, B: BoundaryMatrix, C: BoundaryMatrix) -> InnerProduct:
    """Exact reduction for ``n = 2``: ``L^2 int_0^{1/L} A_1^B conj(A_1^C) dlambda``.

    The product of coefficients is ``1/L``-periodic and the periodised
    ``|Sh_1|^2`` is the constant ``L^2``, so a periodic trapezoid rule converges
    geometrically with no truncation.
    """
    if cfg.n != 2:
        raise ValueError("the periodic reduction applies to n = 2 only")
    return _periodic_reduction(cfg, [B], [C], [1.0], [1.0])


def inner_product_closed_form(cfg: IntervalConfig, B: BoundaryMatrix, C: BoundaryMatrix) -> complex:
    """``a conj(c) L / (1 - b conj(d))`` with ``u = a, B' = b`` and ``u = c, C' = d``."""
    if cfg.n != 2:
        raise ValueError("closed form is for n = 2")
    a, b = complex(B.u[0]), complex(B.corner[0, 0])
    c, d = complex(C.u[0]), complex(C.corner[0, 0])
    return a * c.conjugate() * float(cfg.lengths[0]) / (1 - b * d.conjugate())


def geometric_series_integral(b: complex, d: complex, ell: float, points: int = 4096) -> complex:
    """``int_0^{1/L} (1 - b e(lambda L))^-1 (1 - conj(d) e(-lambda L))^-1 dlambda`` by the periodic trapezoid rule."""
    lam = np.arange(points) / (points * ell)
    vals = 1.0 / ((1 - b * e(lam * ell)) * (1 - np.conj(d) * e(-lam * ell)))
    return complex(np.mean(vals) / ell)


def poisson_kernel(b: complex, xi):
    """``(1 - |b|^2) / (1 - 2|b| cos(2 pi xi) + |b|^2)``."""
    r = abs(complex(b))
    if r >= 1:
        raise ValueError("the Poisson kernel needs |b| < 1")
    xi = np.asarray(xi, dtype=float)
    return (1 - r * r) / (1 - 2 * r * np.cos(2 * np.pi * xi) + r * r)


def poisson_normalization(b: complex) -> float:
    """``int_0^1 P_b`` by adaptive quadrature; equals one."""
    val, _ = integrate.quad(lambda s: float(poisson_kernel(b, s)), 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-13)
    return float(val)


@dataclass(frozen=True)
class PeriodicSum:
    value: float
    tail_bound: float


def per_shannon(length: float, lam: float, truncation: int) -> PeriodicSum:
    """``sum_{|k| <= N} |Sh(lambda + k/L)|^2`` for an interval of length ``L``.

    The full series equals ``L^2``; the tail beyond ``N`` is at most
    ``2 L^2 / (pi^2 (N - |lambda L|))``.
    """
    if truncation < 1:
        raise ValueError("truncation must be at least 1")
    ell = float(length)
    shift = abs(lam * ell)
    if truncation <= shift:
        raise ValueError("truncation must exceed |lambda L|")
    k = np.arange(-truncation, truncation + 1)
    terms = (ell * np.sinc((lam + k / ell) * ell)) ** 2
    return PeriodicSum(float(np.sum(terms)), 2 * ell**2 / (np.pi**2 * (truncation - shift)))
