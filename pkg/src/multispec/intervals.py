"""Geometry of the exterior domain.

The domain is the real line with ``n`` closed intervals ``[beta_k, alpha_k]``
removed.  Its connected components are labelled ``0..n``::

    J_0 = (-inf, beta_1),  J_k = (alpha_k, beta_{k+1}),  J_n = (alpha_n, inf)

so ``J_0`` and ``J_n`` are the half-lines and ``J_1..J_{n-1}`` are bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Raised when an interval configuration violates strict interlacing."""


@dataclass(frozen=True)
class RemovedInterval:
    """Marker for a point lying in a removed closed interval ``[beta_k, alpha_k]``.

    ``left`` and ``right`` are the indices of the adjacent components.
    """

    index: int
    left: int
    right: int


@dataclass(frozen=True)
class IntervalConfig:
    """Ordered endpoints ``beta_1 < alpha_1 < beta_2 < ... < beta_n < alpha_n``."""

    betas: np.ndarray
    alphas: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        betas = np.atleast_1d(np.asarray(self.betas, dtype=float)).copy()
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float)).copy()
        if betas.ndim != 1 or alphas.ndim != 1:
            raise ConfigError("betas and alphas must be one-dimensional")
        if betas.size == 0 or betas.size != alphas.size:
            raise ConfigError(
                f"need equally many betas and alphas (got {betas.size} and {alphas.size})"
            )
        if not (np.all(np.isfinite(betas)) and np.all(np.isfinite(alphas))):
            raise ConfigError("endpoints must be finite")
        for k in range(betas.size):
            if not betas[k] < alphas[k]:
                raise ConfigError(
                    f"interlacing violated: beta_{k + 1} < alpha_{k + 1} fails "
                    f"({float(betas[k])!r} >= {float(alphas[k])!r})"
                )
            if k + 1 < betas.size and not alphas[k] < betas[k + 1]:
                raise ConfigError(
                    f"interlacing violated: alpha_{k + 1} < beta_{k + 2} fails "
                    f"({float(alphas[k])!r} >= {float(betas[k + 1])!r})"
                )
        betas.setflags(write=False)
        alphas.setflags(write=False)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "n", int(betas.size))

    @classmethod
    def from_lengths(cls, beta1: float, gaps, lengths) -> "IntervalConfig":
        """Rebuild endpoints from the first endpoint, the gaps and the bounded lengths."""
        gaps = np.asarray(gaps, dtype=float)
        lengths = np.asarray(lengths, dtype=float)
        if lengths.size != gaps.size - 1:
            raise ConfigError("need exactly one fewer length than gaps")
        betas, alphas = [float(beta1)], []
        for k, gap in enumerate(gaps):
            alphas.append(betas[-1] + gap)
            if k < lengths.size:
                betas.append(alphas[-1] + lengths[k])
        return cls(betas, alphas)

    @property
    def lengths(self) -> np.ndarray:
        """Lengths ``L_k = beta_{k+1} - alpha_k`` of the bounded components."""
        return self.betas[1:] - self.alphas[:-1]

    @property
    def gaps(self) -> np.ndarray:
        """Lengths ``G_i = alpha_i - beta_i`` of the removed intervals."""
        return self.alphas - self.betas

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())

    @property
    def total_gap(self) -> float:
        return float(self.gaps.sum())

    def shifted(self, s: float) -> "IntervalConfig":
        return IntervalConfig(self.betas + s, self.alphas + s)

    def component_bounds(self, k: int) -> tuple[float, float]:
        """Open interval ``J_k`` as ``(left, right)``; half-lines use infinities."""
        if not 0 <= k <= self.n:
            raise IndexError(f"component index {k} outside 0..{self.n}")
        left = -np.inf if k == 0 else float(self.alphas[k - 1])
        right = np.inf if k == self.n else float(self.betas[k])
        return left, right

    def component_of(self, x) -> np.ndarray:
        """Vectorised component index; ``-1`` marks points in removed intervals."""
        x = np.asarray(x, dtype=float)
        # number of endpoints <= x in the merged sorted list beta_1, alpha_1, ...
        edges = np.column_stack([self.betas, self.alphas]).ravel()
        pos = np.searchsorted(edges, x, side="left")
        on_edge = np.isin(x, edges)
        inside = (pos % 2 == 0) & ~on_edge
        return np.where(inside, pos // 2, -1)


def classify_point(cfg: IntervalConfig, x: float) -> int | RemovedInterval:
    """Component index of ``x``, or a :class:`RemovedInterval` marker.

    Components are open, so the endpoints themselves land in the marker.
    """
    k = int(cfg.component_of(x))
    if k >= 0:
        return k
    idx = int(np.searchsorted(cfg.alphas, x, side="left"))
    return RemovedInterval(index=idx + 1, left=idx, right=idx + 1)


def lengths_and_gaps(cfg: IntervalConfig) -> tuple[np.ndarray, np.ndarray, float, float]:
    return cfg.lengths, cfg.gaps, cfg.total_length, cfg.total_gap
