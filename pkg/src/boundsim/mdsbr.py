"""Boundary classification from local virtual coordinates.

A node embeds its small neighborhood, checks whether the maximum opening
angle between consecutive neighbors exceeds a threshold (optionally
filtering micro-holes via a common-neighbor cone test), and a second,
purely connectivity-based pass prunes marked nodes that do not lie on a
sufficiently long shortest path within the marked subgraph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .mdsembed import (
    EmbeddingVariant,
    LocalEmbedding,
    classical_mds_2d,
    hop_distance_matrix,
    signal_distance_matrix,
)
from .netmodel import ConnectivityGraph, k_hop_subgraph

__all__ = [
    "MdsBrParams",
    "GapInfo",
    "embed_view",
    "max_opening_gaps",
    "cone_is_clear",
    "gap_profile",
    "classify_profile",
    "mdsbr_classify_view",
    "mdsbr_classify_node",
    "mdsbr_refine",
    "mdsbr_refine_stats",
]

BOUNDARY = True
INTERIOR = False


@dataclass(frozen=True)
class MdsBrParams:
    alpha_min: float = 90.0  # degrees
    r_min: int = 3  # 0 disables refinement
    variant: EmbeddingVariant = EmbeddingVariant.MDS2
    micro_hole_filter: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha_min < 360.0:
            raise ValueError("alpha_min must lie in (0, 360)")
        if self.r_min < 0:
            raise ValueError("r_min must be >= 0")


def embed_view(view: ConnectivityGraph, variant: EmbeddingVariant) -> Tuple[LocalEmbedding, ConnectivityGraph]:
    """Virtual coordinates for a gathered neighborhood view.

    If the view is disconnected (possible under QUDG regeneration of
    views), only the center's connected component is embedded; the
    returned subgraph is the part that was embedded.
    """
    dist = view.hop_layers(view.center)
    if np.any(dist < 0):
        view = view.induced(np.flatnonzero(dist >= 0), center=view.center)
    if variant is EmbeddingVariant.OPT:
        if view.positions is None:
            raise ValueError("OPT variant requires true positions")
        return LocalEmbedding(coords=view.positions.copy(), center=view.center), view
    if variant is EmbeddingVariant.SSMDS:
        d = signal_distance_matrix(view)
    else:
        d = hop_distance_matrix(view)
    return classical_mds_2d(d, center=view.center), view


def _polar_angles(emb: LocalEmbedding, u: int, nodes: np.ndarray) -> np.ndarray:
    vec = emb.coords[nodes] - emb.coords[u]
    return np.degrees(np.arctan2(vec[:, 1], vec[:, 0])) % 360.0


def max_opening_gaps(emb: LocalEmbedding, u: int, one_hop: Sequence[int]):
    """All consecutive angular gaps around u, in descending angle.

    Each entry is (angle_degrees, (v, w)) where the gap opens from the ray
    u->v counterclockwise to u->w. With fewer than 2 neighbors a sentinel
    360-degree gap is returned. Angular ties break by node id.
    """
    one_hop = np.asarray(one_hop, dtype=np.int64)
    if len(one_hop) == 0:
        return [(360.0, None)]
    if len(one_hop) == 1:
        v = int(one_hop[0])
        return [(360.0, (v, v))]
    ang = _polar_angles(emb, u, one_hop)
    order = np.lexsort((one_hop, ang))
    nodes = one_hop[order]
    ang = ang[order]
    gaps = np.diff(ang, append=ang[0] + 360.0)
    entries = [
        (float(gaps[i]), (int(nodes[i]), int(nodes[(i + 1) % len(nodes)])))
        for i in range(len(nodes))
    ]
    entries.sort(key=lambda e: (-e[0], e[1]))
    return entries


def cone_is_clear(emb: LocalEmbedding, u: int, v: int, w: int,
                  two_hop_graph: ConnectivityGraph) -> bool:
    """True iff no common graph-neighbor of v and w (other than u) lies
    strictly inside the angular sector from ray u->v swept CCW to u->w."""
    common = np.intersect1d(two_hop_graph.neighbors(v), two_hop_graph.neighbors(w))
    common = common[common != u]
    if len(common) == 0:
        return True
    ang_v = _polar_angles(emb, u, np.array([v]))[0]
    gap = (_polar_angles(emb, u, np.array([w]))[0] - ang_v) % 360.0
    rel = (_polar_angles(emb, u, common) - ang_v) % 360.0
    return not np.any((rel > 0.0) & (rel < gap))


@dataclass(frozen=True)
class GapInfo:
    angle: float
    cone_clear: bool


def gap_profile(view: ConnectivityGraph, variant: EmbeddingVariant) -> List[GapInfo]:
    """Per-gap angle and cone-clearance for a node's gathered view.

    The profile is all a verdict needs, so one embedding can serve many
    (alpha_min, micro_hole_filter) settings.
    """
    u = view.center
    if view.degree(u) < 2:
        return [GapInfo(360.0, True)]
    emb, sub = embed_view(view, variant)
    u = sub.center
    one_hop = sub.neighbors(u)
    if len(one_hop) < 2:
        return [GapInfo(360.0, True)]
    return [
        GapInfo(angle, cone_is_clear(emb, u, v, w, sub))
        for angle, (v, w) in max_opening_gaps(emb, u, one_hop)
    ]


def classify_profile(profile: List[GapInfo], alpha_min: float, micro_hole_filter: bool) -> bool:
    """Boundary iff some gap exceeds alpha_min and (if filtering) its cone
    is clear."""
    return any(
        g.angle > alpha_min and (not micro_hole_filter or g.cone_clear)
        for g in profile
    )


def mdsbr_classify_view(view: ConnectivityGraph, params: MdsBrParams) -> bool:
    return classify_profile(
        gap_profile(view, params.variant), params.alpha_min, params.micro_hole_filter
    )


def mdsbr_classify_node(g: ConnectivityGraph, u: int, params: MdsBrParams) -> bool:
    """Base verdict for one node: True = Boundary, False = Interior."""
    return mdsbr_classify_view(k_hop_subgraph(g, u, params.variant.hops), params)


def marked_neighborhood(sub: ConnectivityGraph, u: int, r_min: int) -> np.ndarray:
    """Nodes within r_min hops of u in the marked-induced subgraph
    (excluding u itself), as local ids of ``sub``."""
    dist = sub.hop_layers(u, r_min)
    near = np.flatnonzero(dist > 0)
    return near


def refine_survives(sub: ConnectivityGraph, u: int, r_min: int) -> Tuple[bool, int]:
    """Whether marked node u stays Boundary, plus |N~| for accounting.

    u survives iff some pair a, b of its marked r_min-hop neighborhood
    (u allowed as endpoint) satisfies d(a,u) + d(u,b) = d(a,b) >= r_min,
    i.e. u lies on a shortest path of length >= r_min in the gathered
    marked neighborhood.
    """
    near = marked_neighborhood(sub, u, r_min)
    size = len(near)
    if size == 0:
        return False, 0
    local = np.concatenate([[u], near])
    small = sub.induced(local, center=u)
    d = hop_distance_matrix(small)
    c = small.center
    through = d[c, :][:, None] + d[c, :][None, :]  # d(a,u) + d(u,b)
    ok = (through == d) & (d >= r_min)
    return bool(ok.any()), size


def mdsbr_refine_stats(g: ConnectivityGraph, marked: Sequence[int],
                       r_min: int) -> Tuple[np.ndarray, np.ndarray]:
    """Single synchronous refinement pass over the marked set.

    Survivors are computed simultaneously from the same input set;
    distances live in the subgraph induced by the marked nodes. Returns
    (surviving ids, per-marked-node gathered-neighborhood sizes |N~|).
    """
    marked = np.unique(np.asarray(list(marked), dtype=np.int64))
    if r_min <= 0 or len(marked) == 0:
        return marked, np.zeros(len(marked), dtype=np.int64)
    sub = g.induced(marked)
    keep = np.zeros(sub.n, dtype=bool)
    sizes = np.zeros(sub.n, dtype=np.int64)
    for u in range(sub.n):
        keep[u], sizes[u] = refine_survives(sub, u, r_min)
    return marked[keep], sizes


def mdsbr_refine(g: ConnectivityGraph, marked: Sequence[int], r_min: int) -> np.ndarray:
    return mdsbr_refine_stats(g, marked, r_min)[0]
