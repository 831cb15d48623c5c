"""Spectral transform, time evolution and related operators on a sampled domain.

Functions on the truncated domain are sampled at cell midpoints of a uniform
grid.  The grid is aligned so that every interval endpoint falls on a cell
edge whenever the endpoints are commensurate; then translations by multiples
of ``dx`` are exact and no sample straddles two components.

The continuum part of the spectral transform is

    (V f)(lambda) = sum_j conj(A_j(lambda)) (P_j f)^(lambda),
    (V* g)        = sum_j P_j (A_j g)^v,

realised with FFTs, and the evolution group is ``U(t) = V* M_t V`` with
``M_t g = e(-lambda t) g``, plus the boundstate part when the corner is
degenerate somewhere in the resolved frequency band.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import reduce

import numpy as np
from scipy import fft
from scipy.signal import fftconvolve

from .boundary import BoundaryMatrix
from .eigensolver import Branch, coefficient_grid, e, solve_coefficients
from .errors import GridResonanceWarning, HorizonError
from .intervals import IntervalConfig
from .pointspec import find_point_spectrum

SAMPLES_PER_SPAN = 64


@dataclass(frozen=True)
class Grid:
    """Uniform midpoint grid ``x_m = x_min + (m + 1/2) dx`` for ``m < size``."""

    x_min: float
    dx: float
    size: int
    aligned: bool = True

    @property
    def x_max(self) -> float:
        return self.x_min + self.size * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.size) + 0.5) * self.dx

    @property
    def lambdas(self) -> np.ndarray:
        """Dual frequencies in FFT order."""
        return fft.fftfreq(self.size, self.dx)

    @property
    def dlam(self) -> float:
        return 1.0 / (self.size * self.dx)

    def refined(self) -> "Grid":
        """Halve ``dx`` and double the box about its centre (both grids refine 2x)."""
        half = self.size * self.dx / 2
        return Grid(self.x_min - half, self.dx / 2, 4 * self.size, self.aligned)


def _common_step(offsets: np.ndarray) -> float | None:
    """Largest ``h`` with every offset an integer multiple of ``h``, if rational enough."""
    fracs = []
    for d in offsets:
        f = Fraction(float(d)).limit_denominator(10**6)
        if abs(float(f) - d) > 1e-12 * max(1.0, abs(d)):
            return None
        fracs.append(f)
    fracs = [f for f in fracs if f != 0]
    if not fracs:
        return None
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fracs))
    num = reduce(math.gcd, (abs(f.numerator) * (den // f.denominator) for f in fracs))
    return num / den


def make_grid(
    cfg: IntervalConfig,
    margin: float,
    samples_per_span: int = SAMPLES_PER_SPAN,
) -> Grid:
    """Grid resolving every bounded length and gap with ``samples_per_span`` cells.

    The box extends at least ``margin`` beyond the outermost endpoints.  Its
    size is rounded up to an FFT-friendly length.
    """
    spans = np.concatenate([cfg.lengths, cfg.gaps])
    target = float(spans.min()) / samples_per_span
    ends = np.sort(np.concatenate([cfg.betas, cfg.alphas]))
    h = _common_step(ends - ends[0])
    aligned = h is not None
    dx = h / math.ceil(h / target - 1e-9) if aligned else target
    left = math.ceil(margin / dx)
    x_min = ends[0] - left * dx
    size = left + math.ceil((ends[-1] - ends[0]) / dx - 1e-9) + math.ceil(margin / dx)
    size = fft.next_fast_len(size)
    return Grid(float(x_min), float(dx), int(size), aligned)


def default_margin(cfg: IntervalConfig, horizon: float) -> float:
    """Horizon plus room for the slowly decaying tails that sharp spectral cutoffs produce."""
    return float(horizon) + 128.0 * max(cfg.total_length, cfg.total_gap, 1.0)


@dataclass(frozen=True)
class GridState:
    """Samples of a function on the truncated domain.

    ``horizon`` is the largest ``|t|`` for which the box margin guarantees
    that evolved mass stays inside the box.
    """

    cfg: IntervalConfig
    grid: Grid
    values: np.ndarray
    horizon: float = 0.0
    labels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} samples, got {vals.shape}")
        labels = self.cfg.component_of(self.grid.x)
        vals[labels < 0] = 0.0
        ends = (float(self.cfg.betas[0]), float(self.cfg.alphas[-1]))
        room = min(ends[0] - self.grid.x_min, self.grid.x_max - ends[1])
        if room < self.horizon - 1e-12:
            raise HorizonError(f"box margin {room:.3g} is smaller than the horizon {self.horizon}")
        vals.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labels)

    def with_values(self, values) -> "GridState":
        return replace(self, values=values)

    def norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "GridState") -> complex:
        return complex(self.grid.dx * np.vdot(self.values, other.values))

    def component(self, k: int) -> np.ndarray:
        return np.where(self.labels == k, self.values, 0.0)

    def component_mass(self) -> np.ndarray:
        """Squared norm carried by each component ``J_0 .. J_n``."""
        w = np.abs(self.values) ** 2 * self.grid.dx
        return np.bincount(self.labels[self.labels >= 0], w[self.labels >= 0], self.cfg.n + 1)

    def restrict(self, components) -> "GridState":
        keep = np.isin(self.labels, list(components))
        return self.with_values(np.where(keep, self.values, 0.0))

    @classmethod
    def zeros(cls, cfg, grid, horizon=0.0) -> "GridState":
        return cls(cfg, grid, np.zeros(grid.size, dtype=complex), horizon)

    @classmethod
    def gaussian(
        cls,
        cfg: IntervalConfig,
        grid: Grid,
        center: float,
        width: float,
        momentum: float = 0.0,
        components=None,
        horizon: float = 0.0,
    ) -> "GridState":
        """``exp(-(x - c)^2 / (2 w^2)) e(p x)``, optionally kept only on some components."""
        x = grid.x
        vals = np.exp(-0.5 * ((x - center) / width) ** 2) * e(momentum * x)
        state = cls(cfg, grid, vals, horizon)
        return state.restrict(components) if components is not None else state


@dataclass(frozen=True)
class SpectralFunction:
    grid: Grid
    values: np.ndarray

    @property
    def lambdas(self) -> np.ndarray:
        return self.grid.lambdas

    def norm(self) -> float:
        return float(np.sqrt(self.grid.dlam * np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "SpectralFunction") -> complex:
        return complex(self.grid.dlam * np.vdot(self.values, other.values))


def fourier(grid: Grid, values: np.ndarray) -> np.ndarray:
    """``f^(lambda) = int f(x) e(-lambda x) dx`` on the dual grid (midpoint rule)."""
    x0 = grid.x_min + 0.5 * grid.dx
    return grid.dx * e(-grid.lambdas * x0) * fft.fft(values)


def inverse_fourier(grid: Grid, values: np.ndarray) -> np.ndarray:
    x0 = grid.x_min + 0.5 * grid.dx
    return fft.ifft(values * e(grid.lambdas * x0)) / grid.dx


# ---------------------------------------------------------------------------
# spectral data cached per (configuration, boundary matrix, grid)

@dataclass(frozen=True)
class Boundstate:
    lam: float
    profile: np.ndarray  # sampled eigenfunction, unit discrete norm


@dataclass(frozen=True)
class SpectralData:
    coefficients: np.ndarray  # (size, n+1), A_0 = 1 continuum coefficients
    boundstates: tuple[Boundstate, ...]
    resonant: bool


_CACHE: dict = {}
_CACHE_LIMIT = 32


def _key(cfg: IntervalConfig, B: BoundaryMatrix, grid: Grid):
    return (cfg.betas.tobytes(), cfg.alphas.tobytes(), B.entries.tobytes(), grid)


def spectral_data(cfg: IntervalConfig, B: BoundaryMatrix, grid: Grid) -> SpectralData:
    key = _key(cfg, B, grid)
    if key in _CACHE:
        return _CACHE[key]
    coeffs, _ = coefficient_grid(cfg, B, grid.lambdas)
    bound, resonant = _boundstates(cfg, B, grid)
    if resonant:
        warnings.warn(
            "boundary condition has real poles in the resolved band; the continuum "
            "transform is inaccurate near them",
            GridResonanceWarning,
            stacklevel=3,
        )
    data = SpectralData(coeffs, tuple(bound), resonant)
    if len(_CACHE) >= _CACHE_LIMIT:
        _CACHE.pop(next(iter(_CACHE)))
    _CACHE[key] = data
    return data


def _boundstates(cfg: IntervalConfig, B: BoundaryMatrix, grid: Grid):
    """Orthonormal sampled eigenfunctions for the point spectrum in the band."""
    if cfg.n < 2:
        return [], False
    half_band = 0.5 / grid.dx
    spec = find_point_spectrum(cfg, B, (-half_band, half_band))
    labels = cfg.component_of(grid.x)
    out, resonant = [], False
    period = 1.0 / grid.dx
    seen: list[float] = []
    for lam, _ in spec.points:
        # on an aligned grid lambda and lambda + 1/dx sample identically
        if grid.aligned and any(abs((lam - s) - period * round((lam - s) / period)) < 1e-9 for s in seen):
            continue
        seen.append(lam)
        sols = [s for s in solve_coefficients(cfg, B, lam) if s.A[0] == 0]
        resonant |= any(s.branch == Branch.OUTSIDE_RANGE for s in sols)
        profiles = []
        for s in sols:
            amp = np.where(labels >= 0, s.A[np.clip(labels, 0, None)], 0.0)
            profiles.append(amp * e(lam * grid.x))
        # Gram-Schmidt in the discrete inner product
        basis: list[np.ndarray] = []
        for p in profiles:
            for q in basis:
                p = p - grid.dx * np.vdot(q, p) * q
            nrm = math.sqrt(grid.dx * np.vdot(p, p).real)
            if nrm > 1e-8:
                basis.append(p / nrm)
        out.extend(Boundstate(lam, q) for q in basis)
    return out, resonant


# ---------------------------------------------------------------------------
# transforms

def _component_spectra(state: GridState) -> np.ndarray:
    """Fourier transforms of ``P_j f`` for every component, shape ``(n+1, size)``."""
    return np.stack([fourier(state.grid, state.component(k)) for k in range(state.cfg.n + 1)])


def forward_transform(cfg: IntervalConfig, B: BoundaryMatrix, f: GridState) -> SpectralFunction:
    """Continuum part ``(V f)(lambda) = sum_j conj(A_j(lambda)) (P_j f)^(lambda)``."""
    data = spectral_data(cfg, B, f.grid)
    spectra = _component_spectra(f)
    vals = np.einsum("lj,jl->l", data.coefficients.conj(), spectra)
    return SpectralFunction(f.grid, vals)


def inverse_transform(
    cfg: IntervalConfig, B: BoundaryMatrix, g: SpectralFunction, horizon: float = 0.0
) -> GridState:
    """``V* g = sum_j P_j (A_j g)^v``."""
    data = spectral_data(cfg, B, g.grid)
    labels = cfg.component_of(g.grid.x)
    out = np.zeros(g.grid.size, dtype=complex)
    for k in range(cfg.n + 1):
        piece = inverse_fourier(g.grid, data.coefficients[:, k] * g.values)
        out[labels == k] = piece[labels == k]
    return GridState(cfg, g.grid, out, horizon)


def _point_part(data: SpectralData, f: GridState, multiplier) -> np.ndarray:
    out = np.zeros(f.grid.size, dtype=complex)
    for bs in data.boundstates:
        weight = multiplier(bs.lam)
        if weight != 0:
            out += weight * f.grid.dx * np.vdot(bs.profile, f.values) * bs.profile
    return out


def evolve(cfg: IntervalConfig, B: BoundaryMatrix, f: GridState, t: float) -> GridState:
    """``U(t) f``: translation to the right with the boundary condition applied at the gaps."""
    if abs(t) > f.horizon + 1e-12:
        raise HorizonError(f"|t| = {abs(t)} exceeds the declared horizon {f.horizon}")
    if t == 0:
        return f
    data = spectral_data(cfg, B, f.grid)
    g = forward_transform(cfg, B, f)
    g = SpectralFunction(g.grid, g.values * e(-g.lambdas * t))
    cont = inverse_transform(cfg, B, g, f.horizon).values
    pts = _point_part(data, f, lambda lam: complex(e(-lam * t)))
    return f.with_values(cont + pts)


def _indicator(lambdas: np.ndarray, intervals) -> np.ndarray:
    mask = np.zeros(lambdas.shape, dtype=bool)
    for lo, hi in intervals:
        mask |= (lambdas >= lo) & (lambdas < hi)
    return mask


def spectral_projection(cfg: IntervalConfig, B: BoundaryMatrix, f: GridState, intervals) -> GridState:
    """``E(S) f`` for ``S`` a finite union of half-open intervals ``[lo, hi)``."""
    intervals = [(float(lo), float(hi)) for lo, hi in intervals]
    data = spectral_data(cfg, B, f.grid)
    g = forward_transform(cfg, B, f)
    g = SpectralFunction(g.grid, np.where(_indicator(g.lambdas, intervals), g.values, 0.0))
    cont = inverse_transform(cfg, B, g, f.horizon).values
    pts = _point_part(data, f, lambda lam: 1.0 if _indicator(np.array([lam]), intervals)[0] else 0.0)
    return f.with_values(cont + pts)


def shannon_kernel(cfg: IntervalConfig, j: int, lam) -> np.ndarray:
    """``Sh_j(lambda) = int_{J_j} e(lambda x) dx`` for a bounded component."""
    left, right = cfg.component_bounds(j)
    if not (np.isfinite(left) and np.isfinite(right)):
        raise ValueError("the Shannon kernel is defined on bounded components only")
    ell, mid = right - left, 0.5 * (left + right)
    lam = np.asarray(lam, dtype=float)
    return ell * np.sinc(lam * ell) * e(lam * mid)


def shannon_identity_check(
    cfg: IntervalConfig, B: BoundaryMatrix, f: GridState, i: int, band_fraction: float = 0.5
) -> float:
    """Sup-norm residual of ``(P_i f)^ = conj(Sh_i) * (|A_i|^2 (P_i f)^)``.

    The right side is a convolution in ``lambda`` over the resolved band,
    evaluated by the rectangle rule on the dual grid (as a Toeplitz product
    through ``fftconvolve``).  Near the band edge the convolution is cut off,
    so the supremum is taken over the central ``band_fraction`` of the band.
    """
    if not 1 <= i <= cfg.n - 1:
        raise ValueError(f"component {i} is not bounded")
    data = spectral_data(cfg, B, f.grid)
    lhs = fourier(f.grid, f.component(i))
    g = np.abs(data.coefficients[:, i]) ** 2 * lhs
    order = np.argsort(f.grid.lambdas)
    size, dlam = f.grid.size, f.grid.dlam
    diffs = dlam * np.arange(-(size - 1), size)
    kernel = np.conj(shannon_kernel(cfg, i, diffs))
    rhs_sorted = fftconvolve(g[order], kernel, mode="full")[size - 1 : 2 * size - 1] * dlam
    inner = np.abs(f.grid.lambdas[order]) <= band_fraction * 0.5 / f.grid.dx
    return float(np.max(np.abs(lhs[order] - rhs_sorted)[inner]))


REGIONS = {"left", "right", "middle"}


def _region_components(cfg: IntervalConfig, region: str):
    if region == "left":
        return [0]
    if region == "right":
        return [cfg.n]
    if region == "middle":
        return list(range(1, cfg.n))
    raise ValueError(f"region must be one of {sorted(REGIONS)}, got {region!r}")


def semigroup_compress(cfg: IntervalConfig, B: BoundaryMatrix, f: GridState, t: float, region: str) -> GridState:
    """``P_r U(t) P_r f`` for the left half-line, right half-line or bounded part."""
    if t < 0:
        raise ValueError("compressed semigroups are defined for t >= 0")
    comps = _region_components(cfg, region)
    return evolve(cfg, B, f.restrict(comps), t).restrict(comps)


def scattering_ratio(cfg: IntervalConfig, B1: BoundaryMatrix, B2: BoundaryMatrix, lambdas) -> np.ndarray:
    """``A_j^(B2) / A_j^(B1)`` on the bounded components, shape ``(len, n-1)``."""
    a1, _ = coefficient_grid(cfg, B1, lambdas)
    a2, _ = coefficient_grid(cfg, B2, lambdas)
    den = a1[..., 1:-1]
    if np.any(np.abs(den) < 1e-10):
        raise ZeroDivisionError("vanishing scattering coefficient for the first boundary matrix")
    return a2[..., 1:-1] / den


def intertwiner_apply(cfg: IntervalConfig, B1: BoundaryMatrix, B2: BoundaryMatrix, f: GridState) -> GridState:
    """``W f = V_{B2}* V_{B1} f``.

    ``W`` is unitary, fixes every state supported in ``J_0`` and satisfies
    ``W U_{B1}(t) = U_{B2}(t) W``.  On a state of the form
    ``P_j (A_j^(B1) h)^v`` it acts as the multiplier ``A_j^(B2) / A_j^(B1)``.
    """
    g = forward_transform(cfg, B1, f)
    return inverse_transform(cfg, B2, g, f.horizon)
