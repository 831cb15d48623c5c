"""Unitary boundary matrices and their structure.

A boundary matrix ``B`` in U(n) sends the vector of right-end traces
``f(beta_1-), ..., f(beta_n-)`` to the left-start traces
``f(alpha_1+), ..., f(alpha_n+)``.  Its corner layout is::

    B = [[u,  B'],
         [c,  w*]]

with ``u, w`` in C^{n-1}, ``c`` a scalar and ``B'`` the (n-1)x(n-1) upper
right block.  The bottom row of ``B`` (minus its first entry) is ``w*``, so
``w`` is its complex conjugate and ``<w, x> = w* x`` with the inner product
conjugate-linear in the first slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import polar
from scipy.cluster.hierarchy import DisjointSet

UNITARITY_TOL = 1e-10
DEGENERACY_TOL = 1e-8
SUPPORT_TOL = 1e-12


class NotUnitaryError(ValueError):
    pass


def unitarity_residual(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=complex)
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))


@dataclass(frozen=True)
class Corner:
    u: np.ndarray
    corner: np.ndarray
    c: complex
    w: np.ndarray

    def __iter__(self):
        return iter((self.u, self.corner, self.c, self.w))


@dataclass(frozen=True)
class BoundaryMatrix:
    """An ``n x n`` matrix certified unitary at construction.

    Parameters
    ----------
    entries:
        Complex matrix.
    reunitarize:
        Replace the input by the unitary factor of its polar decomposition
        before certification.  Off by default so malformed inputs are reported
        instead of silently repaired.
    """

    entries: np.ndarray
    reunitarize: bool = False
    n: int = field(init=False)
    unitarity_residual: float = field(init=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise NotUnitaryError(f"boundary matrix must be square, got shape {m.shape}")
        if self.reunitarize:
            m, _ = polar(m)
        res = unitarity_residual(m)
        if not res <= UNITARITY_TOL:
            raise NotUnitaryError(
                f"matrix is not unitary: ||B*B - I||_F = {res:.3e} > {UNITARITY_TOL:g}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "n", m.shape[0])
        object.__setattr__(self, "unitarity_residual", res)

    # corner views -------------------------------------------------------
    @property
    def u(self) -> np.ndarray:
        return self.entries[:-1, 0]

    @property
    def corner(self) -> np.ndarray:
        return self.entries[:-1, 1:]

    @property
    def c(self) -> complex:
        return complex(self.entries[-1, 0])

    @property
    def w(self) -> np.ndarray:
        return self.entries[-1, 1:].conj()

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, BoundaryMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    # constructors -------------------------------------------------------
    @classmethod
    def permutation(cls, perm) -> "BoundaryMatrix":
        """Matrix sending basis vector ``j`` to ``perm[j]`` (0-based)."""
        perm = list(perm)
        n = len(perm)
        if sorted(perm) != list(range(n)):
            raise NotUnitaryError(f"{perm} is not a permutation of 0..{n - 1}")
        m = np.zeros((n, n), dtype=complex)
        m[perm, range(n)] = 1.0
        return cls(m)

    @classmethod
    def from_cycles(cls, n: int, cycles) -> "BoundaryMatrix":
        """Permutation matrix from 1-based cycle notation, e.g. ``[(1, 3), (2, 4)]``."""
        perm = list(range(n))
        for cyc in cycles:
            cyc = [int(i) - 1 for i in cyc]
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                perm[a] = b
        return cls.permutation(perm)

    @classmethod
    def diagonal(cls, phases) -> "BoundaryMatrix":
        """``diag(e(theta_1), ..., e(theta_n))``."""
        return cls(np.diag(np.exp(2j * np.pi * np.asarray(phases, dtype=float))))

    @classmethod
    def su2(cls, a: complex, b: complex) -> "BoundaryMatrix":
        """The 2x2 block ``[[a, b], [-conj(b), conj(a)]]``."""
        return cls(su2_block(a, b))

    @classmethod
    def split_su2(cls, a: complex, b: complex) -> "BoundaryMatrix":
        """n=3 matrix whose corner is the SU(2) block, with ``u = w = 0`` and ``c = 1``."""
        m = np.zeros((3, 3), dtype=complex)
        m[:2, 1:] = su2_block(a, b)
        m[2, 0] = 1.0
        return cls(m)

    @classmethod
    def leaky_su2(cls, a: complex, b: complex) -> "BoundaryMatrix":
        """n=3 matrix ``SU(2) (+) 1`` where the block leaks mass between components."""
        m = np.zeros((3, 3), dtype=complex)
        m[:2, :2] = su2_block(a, b)
        m[2, 2] = 1.0
        return cls(m)

    @classmethod
    def template(cls, n: int, c: complex = 1.0) -> "BoundaryMatrix":
        """``[[0, I_{n-1}], [c, 0]]``: every bounded component closes on itself."""
        return cls.phase_template(np.angle(c) / (2 * np.pi), np.zeros(n - 1))

    @classmethod
    def phase_template(cls, c_phase: float, corner_phases) -> "BoundaryMatrix":
        """``[[0, diag(e(theta_k))], [e(theta_0), 0]]``."""
        corner_phases = np.asarray(corner_phases, dtype=float)
        n = corner_phases.size + 1
        m = np.zeros((n, n), dtype=complex)
        m[:-1, 1:] = np.diag(np.exp(2j * np.pi * corner_phases))
        m[-1, 0] = np.exp(2j * np.pi * c_phase)
        return cls(m)

    @classmethod
    def from_corner(cls, u, corner, c, w) -> "BoundaryMatrix":
        n = len(u) + 1
        m = np.zeros((n, n), dtype=complex)
        m[:-1, 0] = u
        m[:-1, 1:] = corner
        m[-1, 0] = c
        m[-1, 1:] = np.conj(w)
        return cls(m)


def su2_block(a: complex, b: complex) -> np.ndarray:
    a, b = complex(a), complex(b)
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > UNITARITY_TOL:
        raise NotUnitaryError(f"|a|^2 + |b|^2 = {abs(a) ** 2 + abs(b) ** 2!r} != 1")
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]])


def corner(B: BoundaryMatrix) -> Corner:
    return Corner(B.u, B.corner, B.c, B.w)


def _smallest_singular(m: np.ndarray) -> tuple[float, np.ndarray]:
    _, s, vh = np.linalg.svd(m)
    return float(s[-1]), vh[-1].conj()


def is_degenerate(B: BoundaryMatrix, tol: float = DEGENERACY_TOL) -> tuple[bool, np.ndarray | None]:
    """Whether 1 is an eigenvalue of the corner; returns a unit eigenvector if so."""
    if B.n < 2:
        return False, None
    sigma, zeta = _smallest_singular(np.eye(B.n - 1) - B.corner)
    if sigma < tol:
        # fix the phase so the largest entry is real positive
        k = int(np.argmax(np.abs(zeta)))
        zeta = zeta * np.exp(-1j * np.angle(zeta[k]))
        return True, zeta
    return False, None


def degenerate_orthogonality_check(B: BoundaryMatrix, zeta, tol: float = UNITARITY_TOL):
    """Return ``(|<u, zeta>|, |<w, zeta>|)``; both vanish for a true fixed vector."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.linalg.norm(B.corner @ zeta - zeta) > DEGENERACY_TOL * max(1.0, np.linalg.norm(zeta)):
        raise ValueError("zeta is not a fixed vector of the corner")
    ru = abs(np.vdot(B.u, zeta))
    rw = abs(np.vdot(B.w, zeta))
    if ru > tol or rw > tol:
        raise ArithmeticError(f"orthogonality violated: |<u,z>|={ru:.2e}, |<w,z>|={rw:.2e}")
    return ru, rw


def is_corner_normal(B: BoundaryMatrix, tol: float = UNITARITY_TOL) -> bool:
    """Commutator test ``B'*B' = B'B'*``, cross-checked against ``u = mu w`` with ``|mu| = 1``."""
    bp = B.corner
    commutator = np.linalg.norm(bp.conj().T @ bp - bp @ bp.conj().T)
    normal = commutator <= tol
    # proportionality criterion: u u* = w w*
    proportional = np.linalg.norm(np.outer(B.u, B.u.conj()) - np.outer(B.w, B.w.conj())) <= tol
    if normal != proportional:
        raise ArithmeticError(
            "normality criteria disagree "
            f"(commutator {commutator:.2e}, proportionality {proportional})"
        )
    return bool(normal)


def gauge_action(g, B: BoundaryMatrix) -> BoundaryMatrix:
    """``[[g u, g B' g^-1], [c, (g w)*]]`` for a unitary ``g`` of size n-1."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (B.n - 1, B.n - 1):
        raise ValueError(f"gauge must be {(B.n - 1, B.n - 1)}, got {g.shape}")
    if unitarity_residual(g) > UNITARITY_TOL:
        raise NotUnitaryError("gauge matrix is not unitary")
    ginv = g.conj().T
    return BoundaryMatrix.from_corner(g @ B.u, g @ B.corner @ ginv, B.c, g @ B.w)


def component_layout(B: BoundaryMatrix) -> np.ndarray:
    """Cyclically shifted matrix ``B S = [[B', u], [w*, c]]``.

    In this layout row ``k`` and column ``k`` (k < n) both refer to the bounded
    component ``J_k``, and index ``n`` refers to the glued pair of half-lines.
    """
    return np.roll(np.asarray(B.entries), -1, axis=1)


@dataclass(frozen=True)
class DecompositionReport:
    permutation: list[int]
    blocks: list[list[int]]
    is_decomposable: bool
    operator_split: bool | None = None


def _support_blocks(m: np.ndarray, tol: float) -> list[list[int]]:
    n = m.shape[0]
    ds = DisjointSet(range(n))
    rows, cols = np.nonzero(np.abs(m) > tol)
    for i, j in zip(rows, cols):
        ds.merge(int(i), int(j))
    blocks = [sorted(s) for s in ds.subsets()]
    blocks.sort(key=lambda b: b[0])
    return blocks


def decompose(B: BoundaryMatrix | np.ndarray, tol: float = SUPPORT_TOL) -> DecompositionReport:
    """Finest simultaneous row/column permutation to block-diagonal form.

    Indices in the report are 1-based.  Accepts either a certified matrix or a
    raw array (used for the shifted component layout).
    """
    m = np.asarray(B.entries if isinstance(B, BoundaryMatrix) else B, dtype=complex)
    blocks = _support_blocks(m, tol)
    for blk in blocks:
        res = unitarity_residual(m[np.ix_(blk, blk)])
        if res > UNITARITY_TOL:
            raise NotUnitaryError(f"block {[i + 1 for i in blk]} is not unitary ({res:.2e})")
    perm = [i for blk in blocks for i in blk]
    split = operator_split_form(B) if isinstance(B, BoundaryMatrix) else None
    return DecompositionReport(
        permutation=[i + 1 for i in perm],
        blocks=[[i + 1 for i in blk] for blk in blocks],
        is_decomposable=len(blocks) > 1,
        operator_split=split,
    )


def bound_blocks(B: BoundaryMatrix) -> list[list[int]]:
    """Groups of bounded components closed under the boundary condition.

    These are the blocks of the component layout that avoid the half-line
    slot ``n``; each of them carries boundstates.
    """
    report = decompose(component_layout(B))
    return [blk for blk in report.blocks if B.n not in blk]


def operator_split_form(B: BoundaryMatrix, tol: float = UNITARITY_TOL) -> bool:
    """True iff ``u = 0``; then also ``w = 0`` and the corner is unitary."""
    u_zero = np.linalg.norm(B.u) <= tol
    w_zero = np.linalg.norm(B.w) <= tol
    corner_unitary = B.n == 1 or unitarity_residual(B.corner) <= 10 * tol
    if not (u_zero == w_zero == corner_unitary):
        raise ArithmeticError(
            f"split criteria disagree: u=0 {u_zero}, w=0 {w_zero}, B' unitary {corner_unitary}"
        )
    return bool(u_zero)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_degenerate(n: int, rng: np.random.Generator) -> tuple[BoundaryMatrix, np.ndarray]:
    """Random unitary whose corner fixes a random unit vector ``zeta``.

    ``B`` must send ``(0, zeta)`` to ``(zeta, 0)``; two Householder reflections
    move ``e_1`` onto those vectors and a random unitary fills the complement.
    """
    zeta = rng.standard_normal(n - 1) + 1j * rng.standard_normal(n - 1)
    zeta /= np.linalg.norm(zeta)
    src = np.concatenate([[0], zeta])
    dst = np.concatenate([zeta, [0]])
    q = np.eye(n, dtype=complex)
    q[1:, 1:] = random_unitary(n - 1, rng)
    m = _householder_to(dst) @ q @ _householder_to(src).conj().T
    return BoundaryMatrix(m), zeta


def _householder_to(v: np.ndarray) -> np.ndarray:
    """Unitary whose first column is the unit vector ``v``."""
    n = v.size
    e1 = np.zeros(n, dtype=complex)
    e1[0] = 1.0
    phase = np.exp(1j * np.angle(v[0])) if abs(v[0]) > 0 else 1.0
    x = e1 - v / phase
    if np.linalg.norm(x) < 1e-14:
        return np.eye(n, dtype=complex) * phase
    x /= np.linalg.norm(x)
    h = np.eye(n, dtype=complex) - 2 * np.outer(x, x.conj())
    # h e1 = v / phase, so rescale the first column
    h[:, 0] *= phase
    return h
