"""Scattering coefficients of generalized eigenfunctions.

A generalized eigenfunction of the momentum operator with boundary matrix
``B`` is a piecewise plane wave ``psi(x) = A_k e(lambda x)`` on ``J_k``.  The
boundary condition becomes the linear system::

    B_ab(lambda) (A_0, ..., A_{n-1}) = (A_1, ..., A_n)

with the twisted matrix ``B_ab(lambda)_ij = b_ij e(lambda (beta_j - alpha_i))``.
Everything here extends to complex ``z`` by analytic continuation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .boundary import DEGENERACY_TOL, BoundaryMatrix
from .intervals import IntervalConfig
from .errors import IllConditionedError, NearDegenerateWarning, PoleProximityError

NEAR_DEGENERACY_TOL = 1e-6
RANGE_TOL = 1e-8
MAX_CONDITION = 1e12


def e(x):
    """``exp(2 pi i x)``, vectorised, complex arguments allowed.

    The real part is reduced mod 1 (exactly) before scaling by ``2 pi``, so
    large arguments lose no more than their own rounding.
    """
    x = np.asarray(x, dtype=complex)
    frac = x.real - np.round(x.real)
    return np.exp(2 * np.pi * (1j * frac - x.imag))


class Branch(str, Enum):
    NONDEGENERATE = "nondegenerate"
    OUTSIDE_RANGE = "degenerate-u-outside-range"
    IN_RANGE = "degenerate-u-in-range"


@dataclass(frozen=True)
class LambdaMatrix:
    """Twisted boundary matrix at one spectral point, with corner views."""

    z: complex
    full: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return self.full[:-1, 0]

    @property
    def corner(self) -> np.ndarray:
        return self.full[:-1, 1:]

    @property
    def c(self) -> complex:
        return complex(self.full[-1, 0])

    @property
    def row(self) -> np.ndarray:
        """Bottom row without its first entry, so ``A_n = c A_0 + row . A'``."""
        return self.full[-1, 1:]

    @property
    def w(self) -> np.ndarray:
        return self.row.conj()


@dataclass(frozen=True)
class ScatteringSolution:
    z: complex
    A: np.ndarray
    branch: Branch
    kernel_dim: int

    def boundary_residual(self, cfg: IntervalConfig, B: BoundaryMatrix) -> float:
        full = twisted_matrix(cfg, B, self.z)
        return float(np.linalg.norm(full @ self.A[:-1] - self.A[1:]))


def _phase_offsets(cfg: IntervalConfig) -> np.ndarray:
    # (beta_j - alpha_i) laid out as an n x n matrix
    return cfg.betas[None, :] - cfg.alphas[:, None]


def _twist(cfg: IntervalConfig, z: np.ndarray) -> np.ndarray:
    """``e(z (beta_j - alpha_i))`` with the oscillating phase formed in extended precision.

    Near a pole the coefficients amplify phase errors by ``1/|1 - b e(zL)|``;
    forming ``Re z * beta_j - Re z * alpha_i`` in long double and reducing it
    mod 1 keeps the phase accurate to double rounding of the result.
    """
    re = z.real.astype(np.longdouble)[..., None, None]
    cycles = re * cfg.betas.astype(np.longdouble)[None, :] - re * cfg.alphas.astype(np.longdouble)[:, None]
    frac = (cycles - np.round(cycles)).astype(float)
    return np.exp(2 * np.pi * (1j * frac - z.imag[..., None, None] * _phase_offsets(cfg)))


def twisted_matrix(cfg: IntervalConfig, B: BoundaryMatrix, z) -> np.ndarray:
    """``B_ab(z)``; a stack of matrices when ``z`` is an array."""
    z = np.asarray(z, dtype=complex)
    return np.asarray(B.entries) * _twist(cfg, z)


def twisted_corner(cfg: IntervalConfig, B: BoundaryMatrix, z) -> np.ndarray:
    return twisted_matrix(cfg, B, z)[..., :-1, 1:]


def lambda_matrix(cfg: IntervalConfig, B: BoundaryMatrix, z) -> LambdaMatrix:
    _check(cfg, B)
    return LambdaMatrix(complex(z), twisted_matrix(cfg, B, complex(z)))


def _check(cfg: IntervalConfig, B: BoundaryMatrix):
    if cfg.n != B.n:
        raise ValueError(f"configuration has n={cfg.n} but boundary matrix is {B.n}x{B.n}")


def det_D(cfg: IntervalConfig, B: BoundaryMatrix, z):
    """``det(I - B'_ab(z))``, vectorised over ``z``."""
    _check(cfg, B)
    m = twisted_corner(cfg, B, z)
    return np.linalg.det(np.eye(cfg.n - 1) - m)


def reduced_det(cfg: IntervalConfig, B: BoundaryMatrix, z):
    """``det(diag(e(z L_j)) - B')``, a trigonometric polynomial depending only on the lengths."""
    z = np.asarray(z, dtype=complex)
    d = e(z[..., None] * cfg.lengths)
    m = np.zeros(z.shape + (cfg.n - 1, cfg.n - 1), dtype=complex)
    idx = np.arange(cfg.n - 1)
    m[..., idx, idx] = d
    return np.linalg.det(m - np.asarray(B.corner))


def det_D_alternate(cfg: IntervalConfig, B: BoundaryMatrix, z):
    """Evaluate ``D(z)`` through the length-only form ``e(z L_tot) det(diag(e(-z L_j)) - B')``."""
    z = np.asarray(z, dtype=complex)
    return e(z * cfg.total_length) * reduced_det(cfg, B, -z)


def reduced_det_derivative(cfg: IntervalConfig, B: BoundaryMatrix, z):
    """``(1/2 pi i) d/dz det(diag(e(z L_j)) - B')`` as ``sum_j L_j e(z L_j) minor_j``, vectorised over ``z``.

    Only the diagonal depends on ``z``, so Jacobi's formula reduces to the
    principal minors with row and column ``j`` removed.
    """
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    lengths = cfg.lengths
    d = e(z[..., None] * lengths)
    idx = np.arange(lengths.size)
    m = np.zeros(z.shape + (lengths.size, lengths.size), dtype=complex)
    m[..., idx, idx] = d
    m = m - np.asarray(B.corner)
    total = np.zeros(z.shape, dtype=complex)
    for j, ell in enumerate(lengths):
        keep = np.delete(idx, j)
        minor = np.linalg.det(m[..., keep[:, None], keep]) if keep.size else 1.0
        total += ell * d[..., j] * minor
    return complex(total) if scalar else total


def det_D_derivative(cfg: IntervalConfig, B: BoundaryMatrix, z) -> complex:
    """``dD/dz`` obtained from the reduced determinant by the chain rule."""
    _check(cfg, B)
    z = complex(z)
    lt = cfg.total_length
    d_red = reduced_det(cfg, B, -z)
    dd_red = reduced_det_derivative(cfg, B, -z)
    # D(z) = e(z L) Dr(-z)  =>  D' = 2 pi i (L e(zL) Dr(-z) - e(zL) (1/2 pi i) Dr'(-z))
    return complex(2j * np.pi * e(z * lt) * (lt * d_red - dd_red))


def resolvent_and_derivative(cfg: IntervalConfig, B: BoundaryMatrix, z):
    """Resolvent ``R = (I - B'_ab(z))^-1`` and its derivative ``dR/dz``.

    The derivative comes from ``(1/2 pi i) dR/dz = R delta(M) R`` where
    ``M = B'_ab(z)`` and ``delta(M) = M L_beta - L_alpha M`` with
    ``L_alpha = diag(alpha_1..alpha_{n-1})`` and ``L_beta = diag(beta_2..beta_n)``.
    """
    _check(cfg, B)
    m = twisted_corner(cfg, B, complex(z))
    a = np.eye(cfg.n - 1) - m
    sigma = np.linalg.svd(a, compute_uv=False)[-1]
    if sigma <= 1e-10:
        raise PoleProximityError(f"z={z} is within {sigma:.1e} of a pole")
    r = np.linalg.inv(a)
    delta = m * cfg.betas[None, 1:] - cfg.alphas[:-1, None] * m
    dr = 2j * np.pi * (r @ delta @ r)
    return r, dr


def solve_coefficients(
    cfg: IntervalConfig,
    B: BoundaryMatrix,
    z,
    normalization: str = "A0_equals_1",
) -> list[ScatteringSolution]:
    """All solutions of the boundary system at ``z``.

    ``A0_equals_1`` returns, in the nondegenerate case, the single solution
    with ``A_0 = 1``.  At a degenerate point it returns the kernel solutions
    ``(0, zeta, <w, zeta>)``, preceded by a particular solution with
    ``A_0 = 1`` when ``u`` lies in the range of ``I - B'``.

    ``kernel_basis`` returns an orthonormal basis of the full solution space
    of the ``n x (n+1)`` system, computed independently by SVD.
    """
    _check(cfg, B)
    z = complex(z)
    lm = lambda_matrix(cfg, B, z)
    n = cfg.n
    if normalization == "kernel_basis":
        return _kernel_basis(lm, n)
    if normalization != "A0_equals_1":
        raise ValueError(f"unknown normalization {normalization!r}")

    if n == 1:
        return [ScatteringSolution(z, np.array([1.0, lm.c]), Branch.NONDEGENERATE, 0)]

    a = np.eye(n - 1) - lm.corner
    _, s, vh = np.linalg.svd(a)
    sigma = s[-1]
    if sigma >= DEGENERACY_TOL:
        if sigma < NEAR_DEGENERACY_TOL:
            warnings.warn(
                f"smallest singular value {sigma:.2e} at z={z} is close to degeneracy",
                NearDegenerateWarning,
                stacklevel=2,
            )
        if s[0] / sigma > MAX_CONDITION:
            raise IllConditionedError(f"condition number {s[0] / sigma:.2e} at z={z}")
        x = np.linalg.solve(a, lm.u)
        A = np.concatenate([[1.0], x, [lm.c + lm.row @ x]])
        return [ScatteringSolution(z, A, Branch.NONDEGENERATE, 0)]

    kernel = vh[s < DEGENERACY_TOL].conj()
    kdim = kernel.shape[0]
    sols = []
    x0, *_ = np.linalg.lstsq(a, lm.u, rcond=None)
    in_range = np.linalg.norm(a @ x0 - lm.u) <= RANGE_TOL * max(np.linalg.norm(lm.u), 1.0)
    if in_range:
        # minimum-norm particular solution is orthogonal to the kernel
        A = np.concatenate([[1.0], x0, [lm.c + lm.row @ x0]])
        sols.append(ScatteringSolution(z, A, Branch.IN_RANGE, kdim))
    branch = Branch.IN_RANGE if in_range else Branch.OUTSIDE_RANGE
    for zeta in kernel:
        A = np.concatenate([[0.0], zeta, [lm.row @ zeta]])
        sols.append(ScatteringSolution(z, A, branch, kdim))
    return sols


def _kernel_basis(lm: LambdaMatrix, n: int) -> list[ScatteringSolution]:
    # rows: B_ab (A_0..A_{n-1}) - (A_1..A_n) = 0
    system = np.zeros((n, n + 1), dtype=complex)
    system[:, :n] = lm.full
    system[:, 1:] -= np.eye(n)
    _, s, vh = np.linalg.svd(system)
    s_full = np.concatenate([s, np.zeros(n + 1 - s.size)])
    basis = vh[s_full < DEGENERACY_TOL].conj()
    kdim = basis.shape[0] - 1
    branch = Branch.NONDEGENERATE if kdim == 0 else Branch.OUTSIDE_RANGE
    if kdim > 0 and np.any(np.abs(basis[:, 0]) > DEGENERACY_TOL):
        branch = Branch.IN_RANGE
    return [ScatteringSolution(lm.z, v, branch, kdim) for v in basis]


def coefficient_grid(cfg: IntervalConfig, B: BoundaryMatrix, lambdas) -> np.ndarray:
    """Vectorised ``A_0 = 1`` coefficients on a grid, shape ``(len(lambdas), n+1)``.

    Points where the corner system is singular fall back to the minimum-norm
    least-squares solution (the continuum eigenfunction orthogonal to any
    boundstates); their indices are returned in the second output.
    """
    _check(cfg, B)
    lambdas = np.asarray(lambdas, dtype=complex)
    n = cfg.n
    full = twisted_matrix(cfg, B, lambdas)
    out = np.empty(lambdas.shape + (n + 1,), dtype=complex)
    out[..., 0] = 1.0
    if n == 1:
        out[..., 1] = full[..., 0, 0]
        return out, np.zeros(0, dtype=int)
    a = np.eye(n - 1) - full[..., :-1, 1:]
    u = full[..., :-1, 0]
    # sigma_min >= |det| / ||a||_F^(n-2); the SVD is only needed where that bound is small
    flat = a.reshape(-1, n - 1, n - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        floor = np.abs(np.linalg.det(flat)) / np.linalg.norm(flat, axis=(1, 2)) ** (n - 2)
    suspect = np.flatnonzero(~(floor >= DEGENERACY_TOL))
    sig = np.linalg.svd(flat[suspect], compute_uv=False)[:, -1] if suspect.size else np.zeros(0)
    bad = suspect[sig < DEGENERACY_TOL]
    a, u = flat, u.reshape(-1, n - 1)
    a_safe = a.copy()
    a_safe[bad] = np.eye(n - 1)
    x = np.linalg.solve(a_safe, u[..., None])[..., 0]
    for k in bad:
        x[k] = np.linalg.lstsq(a[k], u[k], rcond=None)[0]
    x = x.reshape(lambdas.shape + (n - 1,))
    out[..., 1:n] = x
    out[..., n] = full[..., -1, 0] + np.einsum("...j,...j->...", full[..., -1, 1:], x)
    return out, bad


def eigenfunction_eval(cfg: IntervalConfig, B: BoundaryMatrix, lam, x, solution=None):
    """``psi_lambda(x) = A_k e(lambda x)`` on ``J_k``; zero on removed intervals."""
    if solution is None:
        solution = solve_coefficients(cfg, B, lam)[0]
    x = np.asarray(x, dtype=float)
    k = cfg.component_of(x)
    amp = np.where(k >= 0, solution.A[np.clip(k, 0, None)], 0.0)
    return amp * e(solution.z * x)


def boundary_traces(cfg: IntervalConfig, solution: ScatteringSolution):
    """One-sided traces ``(psi(beta_j-), psi(alpha_i+))`` of an eigenfunction."""
    A, z = solution.A, solution.z
    left_of_beta = A[:-1] * e(z * cfg.betas)
    right_of_alpha = A[1:] * e(z * cfg.alphas)
    return left_of_beta, right_of_alpha


def trace_residual(cfg: IntervalConfig, B: BoundaryMatrix, solution: ScatteringSolution) -> float:
    """``||B psi(beta) - psi(alpha)||`` evaluated from the eigenfunction itself."""
    f_beta, f_alpha = boundary_traces(cfg, solution)
    return float(np.linalg.norm(np.asarray(B.entries) @ f_beta - f_alpha))


def gauge_diag_det(cfg: IntervalConfig, B: BoundaryMatrix, g, lam) -> complex:
    """``prod_k (1 - z_k e(lambda L_k))`` where ``g B' g^-1 = diag(z_k)``.

    This equals ``D(lambda)`` when ``g`` commutes with ``diag(L)``, e.g. for a
    diagonal ``g`` or when all lengths are equal.
    """
    _check(cfg, B)
    g = np.asarray(g, dtype=complex)
    ell = np.diag(cfg.lengths)
    if np.linalg.norm(g @ ell - ell @ g) > DEGENERACY_TOL * max(1.0, np.linalg.norm(g)):
        raise ValueError("the gauge does not commute with the diagonal of lengths")
    d = g @ np.asarray(B.corner) @ np.linalg.inv(g)
    off = d - np.diag(np.diag(d))
    if np.linalg.norm(off) > DEGENERACY_TOL:
        raise ValueError(f"g does not diagonalize the corner (off-diagonal norm {np.linalg.norm(off):.2e})")
    zk = np.diag(d)
    return complex(np.prod(1 - zk * e(complex(lam) * cfg.lengths)))
