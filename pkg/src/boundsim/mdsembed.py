"""2-D virtual coordinates for small node neighborhoods.

Distances come from hop counts (default), from a two-level signal-strength
scheme (strong links 0.5, weak links 1.0, others by weighted shortest
path), or are bypassed entirely when true positions are available.
The embedding itself is classical (double-centering) MDS; the graphs are
tiny, so no drift or folding correction is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import EmbeddingError
from .netmodel import ConnectivityGraph

__all__ = [
    "EmbeddingVariant",
    "LocalEmbedding",
    "hop_distance_matrix",
    "signal_distance_matrix",
    "classical_mds_2d",
]


class EmbeddingVariant(Enum):
    MDS2 = "mds2"  # 2-hop neighborhood, hop distances (default)
    MDS3 = "mds3"  # 3-hop neighborhood, hop distances
    SSMDS = "ssmds"  # 2-hop neighborhood, signal-strength distances
    OPT = "opt"  # true positions, no MDS

    @property
    def hops(self) -> int:
        return 3 if self is EmbeddingVariant.MDS3 else 2


@dataclass
class LocalEmbedding:
    coords: np.ndarray  # (n, 2) virtual coordinates
    center: Optional[int] = None


def _dense_adjacency(sub: ConnectivityGraph) -> np.ndarray:
    a = np.zeros((sub.n, sub.n), dtype=np.float32)
    if sub.m:
        a[sub.edges[:, 0], sub.edges[:, 1]] = 1.0
        a[sub.edges[:, 1], sub.edges[:, 0]] = 1.0
    return a


def hop_distance_matrix(sub: ConnectivityGraph) -> np.ndarray:
    """All-pairs unweighted shortest-path hop counts.

    Raises EmbeddingError if the subgraph is disconnected.
    """
    n = sub.n
    a = _dense_adjacency(sub) + np.eye(n, dtype=np.float32)
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    reach = np.eye(n, dtype=bool)
    k = 0
    while True:
        k += 1
        new = (reach @ a) > 0
        fresh = new & ~reach
        if not fresh.any():
            break
        d[fresh] = k
        reach = new
    if np.isinf(d).any():
        raise EmbeddingError("subgraph is disconnected")
    return d


def signal_distance_matrix(sub: ConnectivityGraph) -> np.ndarray:
    """Pairwise distances from the two-level signal scheme.

    Adjacent pairs get 0.5 (strong) or 1.0 (weak); all other pairs get
    the shortest-path distance in the edge-weighted graph.
    """
    if sub.signal is None:
        raise EmbeddingError("subgraph carries no signal data")
    n = sub.n
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    if sub.m:
        w = np.where(sub.signal == 0, 0.5, 1.0)
        d[sub.edges[:, 0], sub.edges[:, 1]] = w
        d[sub.edges[:, 1], sub.edges[:, 0]] = w
    for k in range(n):  # Floyd-Warshall, n is tiny
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    if np.isinf(d).any():
        raise EmbeddingError("subgraph is disconnected")
    return d


def classical_mds_2d(dist: np.ndarray, center: Optional[int] = None) -> LocalEmbedding:
    """Classical (double-centering) MDS into the plane.

    B = -1/2 J D^2 J with J the centering transform; coordinates come from
    the top-2 eigenpairs, with negative eigenvalues clamped to zero (which
    yields a degenerate axis). The result is unique only up to rotation,
    reflection, and translation.
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if n < 3:
        raise EmbeddingError("need at least 3 points to embed")
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ (dist**2) @ j
    w, v = np.linalg.eigh((b + b.T) / 2.0)
    top = np.clip(w[-2:][::-1], 0.0, None)
    coords = v[:, -2:][:, ::-1] * np.sqrt(top)
    return LocalEmbedding(coords=coords, center=center)
