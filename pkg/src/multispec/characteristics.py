"""Direct transport along characteristics on an aligned grid.

Solutions of ``(d/dt + d/dx) f = 0`` move right at unit speed.  Whatever
reaches ``beta_j`` leaves component ``J_{j-1}``; the boundary matrix
redistributes the outgoing traces onto the left ends ``alpha_i``.  On a grid
whose cells tile every component exactly, one time step of length ``dx``
is a shift by one cell plus this redistribution, so the scheme is exact.
"""

from __future__ import annotations

import numpy as np

from .boundary import BoundaryMatrix
from .transform import GridState


def _component_slices(state: GridState) -> list[np.ndarray]:
    labels = state.labels
    slices = []
    for k in range(state.cfg.n + 1):
        idx = np.flatnonzero(labels == k)
        if idx.size and np.any(np.diff(idx) != 1):
            raise ValueError(f"component {k} is not contiguous on the grid")
        slices.append(idx)
    return slices


def transport(B: BoundaryMatrix, f: GridState, t: float) -> GridState:
    """Evolve by ``t >= 0`` (a whole number of cells) with an open box."""
    grid = f.grid
    if not grid.aligned:
        raise ValueError("transport needs a grid aligned with the endpoints")
    steps = t / grid.dx
    if t < 0 or abs(steps - round(steps)) > 1e-9:
        raise ValueError("t must be a non-negative multiple of the grid step")
    steps = int(round(steps))
    slices = _component_slices(f)
    n = f.cfg.n
    bounded = [slices[k] for k in range(1, n)]
    for k, (idx, ell) in enumerate(zip(bounded, f.cfg.lengths), start=1):
        if abs(idx.size * grid.dx - ell) > 1e-9:
            raise ValueError(f"component {k} is not tiled exactly by the grid")
    bmat = np.asarray(B.entries)
    pieces = [f.values[idx].copy() for idx in slices]
    for _ in range(steps):
        outgoing = np.array([p[-1] for p in pieces[:-1]])
        incoming = bmat @ outgoing
        for k, p in enumerate(pieces):
            p[1:] = p[:-1].copy()
            p[0] = 0.0 if k == 0 else incoming[k - 1]
    out = np.zeros(grid.size, dtype=complex)
    for idx, p in zip(slices, pieces):
        out[idx] = p
    return f.with_values(out)


def mass_trajectory(B: BoundaryMatrix, f: GridState, times) -> np.ndarray:
    """Component masses at each time, shape ``(len(times), n+1)``."""
    return np.array([transport(B, f, t).component_mass() for t in times])
