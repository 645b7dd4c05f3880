"""Evaluation-only ground truth from the embedded connectivity graph.

The drawn links are planarized into an arrangement (crossings become
synthetic vertices), faces are traversed via angular ordering, large faces
plus the unbounded exterior are flagged as holes, and nodes are labeled
Mandatory (on a hole's boundary walk), Optional (within one communication
distance of a mandatory node), or Interior.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DegeneracyError
from .netmodel import ConnectivityGraph

__all__ = [
    "GEOM_EPS",
    "Label",
    "Arrangement",
    "Face",
    "GroundTruth",
    "planarize",
    "extract_faces",
    "identify_holes",
    "classify_ground_truth",
    "compute_ground_truth",
]

GEOM_EPS = 1e-9  # incidence tolerance, in units of max communication distance
CROSS_SEP_EPS = 1e-12  # minimum spacing between crossings on one segment


class Label(IntEnum):
    MANDATORY = 0
    OPTIONAL = 1
    INTERIOR = 2


@dataclass
class Face:
    """One face of the arrangement, as a closed boundary walk."""

    walk: np.ndarray  # arrangement vertex ids in traversal order
    perimeter: float
    signed_area: float
    is_outer: bool
    component: int


class Arrangement:
    """Planarization of a drawn graph.

    Vertices 0..n_orig-1 are the original nodes; the rest are crossing
    points. Half-edge 2k runs along sub-segment k, 2k+1 is its twin.
    """

    def __init__(self, vertices, n_orig, sub_start, sub_end, next_he, components):
        self.vertices = vertices
        self.n_orig = n_orig
        self.sub_start = sub_start
        self.sub_end = sub_end
        self.next_he = next_he
        self.components = components  # per arrangement vertex
        self.n_components = int(components.max()) + 1 if len(components) else 0

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.sub_start)

    def he_origin(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h)
        return np.where(h % 2 == 0, self.sub_start[h // 2], self.sub_end[h // 2])

    def he_length(self, h: np.ndarray) -> np.ndarray:
        seg = np.asarray(h) // 2
        return np.linalg.norm(
            self.vertices[self.sub_end[seg]] - self.vertices[self.sub_start[seg]], axis=-1
        )


def _candidate_pairs(p, q, m):
    """Segment index pairs whose unit-size grid cells overlap."""
    lo = np.floor(np.minimum(p, q)).astype(np.int64)
    hi = np.floor(np.maximum(p, q)).astype(np.int64)
    cell_ids, seg_ids = [], []
    # segments are at most 1 long, so each bbox spans <= 2 cells per axis
    for dx in (0, 1):
        for dy in (0, 1):
            cx = lo[:, 0] + dx
            cy = lo[:, 1] + dy
            keep = (cx <= hi[:, 0]) & (cy <= hi[:, 1])
            span = hi[:, 1].max() - lo[:, 1].min() + 2
            cell_ids.append((cx[keep] - lo[:, 0].min()) * span + (cy[keep] - lo[:, 1].min()))
            seg_ids.append(np.flatnonzero(keep))
    cell_ids = np.concatenate(cell_ids)
    seg_ids = np.concatenate(seg_ids)
    order = np.argsort(cell_ids, kind="stable")
    cell_ids, seg_ids = cell_ids[order], seg_ids[order]
    # pair up segments sharing a cell
    starts = np.flatnonzero(np.diff(cell_ids, prepend=cell_ids[0] - 1))
    counts = np.diff(starts, append=len(cell_ids))
    reps = counts * (counts - 1) // 2
    if reps.sum() == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    grp = np.repeat(np.arange(len(starts)), reps)
    within = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
    # enumerate (a, b) with a < b inside each group
    c = np.repeat(counts, reps)
    a = np.floor((2 * c - 1 - np.sqrt((2 * c - 1) ** 2 - 8 * within)) / 2).astype(np.int64)
    b = within - a * (2 * c - a - 1) // 2 + a + 1
    base = np.repeat(starts, reps)
    i, j = seg_ids[base + a], seg_ids[base + b]
    lo_ij, hi_ij = np.minimum(i, j), np.maximum(i, j)
    key = np.unique(lo_ij * m + hi_ij)
    return key // m, key % m


def planarize(g: ConnectivityGraph) -> Arrangement:
    """Arrangement of the drawn links; crossings become synthetic vertices.

    Raises DegeneracyError for coincident nodes, collinear overlapping
    segments, or crossings within GEOM_EPS of each other or of segment
    endpoints (including triple crossings).
    """
    if g.positions is None:
        raise ValueError("planarize requires node positions")
    pos = g.positions
    n, edges = g.n, g.edges
    if n > 1:
        close = cKDTree(pos).query_pairs(GEOM_EPS, output_type="ndarray")
        if len(close):
            raise DegeneracyError(f"coincident nodes {tuple(close[0])}")
    m = len(edges)
    p = pos[edges[:, 0]]
    q = pos[edges[:, 1]]

    if m:
        i, j = _candidate_pairs(p, q, m)
        share = (
            (edges[i, 0] == edges[j, 0]) | (edges[i, 0] == edges[j, 1])
            | (edges[i, 1] == edges[j, 0]) | (edges[i, 1] == edges[j, 1])
        )
        i, j = i[~share], j[~share]
    else:
        i = j = np.empty(0, np.int64)

    r = q[i] - p[i]
    s = q[j] - p[j]
    qp = p[j] - p[i]
    def cross2(a, b):
        return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]

    denom = cross2(r, s)
    cross_qp_r = cross2(qp, r)
    cross_qp_s = cross2(qp, s)
    parallel = np.abs(denom) < 1e-12
    if np.any(parallel):
        # parallel and collinear with overlapping extents -> degenerate
        for k in np.flatnonzero(parallel & (np.abs(cross_qp_r) < GEOM_EPS)):
            rr = r[k] / np.dot(r[k], r[k])
            t_lo, t_hi = sorted((np.dot(p[j[k]] - p[i[k]], rr), np.dot(q[j[k]] - p[i[k]], rr)))
            if t_lo < 1 - GEOM_EPS and t_hi > GEOM_EPS:
                raise DegeneracyError(
                    f"collinear overlapping segments {tuple(edges[i[k]])} and {tuple(edges[j[k]])}"
                )
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(parallel, -1.0, cross_qp_s / denom)
        u = np.where(parallel, -1.0, cross_qp_r / denom)
    len_i = np.linalg.norm(r, axis=1) if len(i) else np.empty(0)
    len_j = np.linalg.norm(s, axis=1) if len(j) else np.empty(0)
    hit = (t > 0) & (t < 1) & (u > 0) & (u < 1)
    near_end = hit & (
        (t * len_i < GEOM_EPS) | ((1 - t) * len_i < GEOM_EPS)
        | (u * len_j < GEOM_EPS) | ((1 - u) * len_j < GEOM_EPS)
    )
    if np.any(near_end):
        k = np.flatnonzero(near_end)[0]
        raise DegeneracyError(
            f"segment {tuple(edges[i[k]])} crosses {tuple(edges[j[k]])} at an endpoint"
        )
    i, j, t, u = i[hit], j[hit], t[hit], u[hit]
    xpts = p[i] + t[:, None] * (q[i] - p[i])
    n_cross = len(i)
    vid = n + np.arange(n_cross)

    vertices = np.vstack([pos, xpts]) if n_cross else pos.copy()

    # chain each original segment through its sorted crossing points
    cseg = np.concatenate([i, j])
    ct = np.concatenate([t, u])
    cvid = np.concatenate([vid, vid])
    order = np.lexsort((ct, cseg))
    cseg, ct, cvid = cseg[order], ct[order], cvid[order]
    counts = np.bincount(cseg, minlength=m)
    seg_len = np.linalg.norm(q - p, axis=1)
    # crossings too close together on one segment (triple crossings).
    # The separation threshold is deliberately tighter than GEOM_EPS: in
    # dense layouts a node sitting ~1e-4 off a link makes all of its
    # incident links cross that link within a narrow window, and pairs of
    # those crossings legitimately land ~1e-10 apart. Their along-segment
    # order is still far above double-precision noise (~1e-15), so only
    # genuinely concurrent crossings should trip this.
    if n_cross:
        same = np.flatnonzero(np.diff(cseg) == 0)
        tooclose = same[(np.diff(ct)[same] * seg_len[cseg[same]]) < CROSS_SEP_EPS]
        if len(tooclose):
            k = cseg[tooclose[0]]
            raise DegeneracyError(f"concurrent crossings on segment {tuple(edges[k])}")

    nsub_per = counts + 1
    total_sub = int(nsub_per.sum())
    if n_cross == 0:
        sub_start, sub_end = edges[:, 0].copy(), edges[:, 1].copy()
    else:
        off_sub = np.concatenate([[0], np.cumsum(nsub_per)])
        off_cross = np.concatenate([[0], np.cumsum(counts)])
        slot_seg = np.repeat(np.arange(m), nsub_per)
        rank = np.arange(total_sub) - off_sub[slot_seg]
        cidx = off_cross[slot_seg] + rank  # crossing index for 'end' when rank < counts
        hi_idx = 2 * n_cross - 1
        sub_start = np.where(rank == 0, edges[slot_seg, 0], cvid[np.clip(cidx - 1, 0, hi_idx)])
        sub_end = np.where(
            rank == counts[slot_seg], edges[slot_seg, 1], cvid[np.clip(cidx, 0, hi_idx)]
        )

    # half-edges: 2k forward along sub-segment k, 2k+1 backward
    H = 2 * total_sub
    origin = np.empty(H, dtype=np.int64)
    target = np.empty(H, dtype=np.int64)
    origin[0::2], target[0::2] = sub_start, sub_end
    origin[1::2], target[1::2] = sub_end, sub_start
    vec = vertices[target] - vertices[origin]
    ang = np.arctan2(vec[:, 1], vec[:, 0])
    order = np.lexsort((ang, origin))
    grp = origin[order]
    is_start = np.empty(len(order), dtype=bool)
    if len(order):
        is_start[0] = True
        is_start[1:] = grp[1:] != grp[:-1]
        dup = ~is_start & (np.abs(np.diff(ang[order], prepend=np.inf)) < 1e-12)
        if np.any(dup):
            v = grp[np.flatnonzero(dup)[0]]
            raise DegeneracyError(f"overlapping segments incident to vertex {v}")
    gstart = np.maximum.accumulate(np.where(is_start, np.arange(len(order)), 0))
    gsize = np.zeros(len(order), dtype=np.int64)
    if len(order):
        starts = np.flatnonzero(is_start)
        sizes = np.diff(starts, append=len(order))
        gsize = np.repeat(sizes, sizes)
    prev_pos = np.where(np.arange(len(order)) == gstart, gstart + gsize - 1,
                        np.arange(len(order)) - 1)
    prev_ccw = np.empty(H, dtype=np.int64)
    prev_ccw[order] = order[prev_pos]
    twin = np.arange(H) ^ 1
    next_he = prev_ccw[twin]

    # connected components of the drawing (isolated nodes included)
    if total_sub:
        adj = coo_matrix(
            (np.ones(total_sub), (sub_start, sub_end)), shape=(len(vertices),) * 2
        )
        _, comp = connected_components(adj, directed=False)
    else:
        comp = np.arange(len(vertices))
    return Arrangement(vertices, n, sub_start, sub_end, next_he, comp)


def extract_faces(arr: Arrangement) -> List[Face]:
    """Faces of the arrangement via next-pointer walks.

    Each connected drawing contributes exactly one face with is_outer=True
    (the one with the most negative signed area); conceptually all outer
    faces form the single unbounded exterior.
    """
    H = len(arr.next_he)
    if H == 0:
        return []
    origin = arr.he_origin(np.arange(H))
    vx = arr.vertices[origin]
    tgt = arr.he_origin(np.arange(H) ^ 1)
    vy = arr.vertices[tgt]
    shoelace = 0.5 * (vx[:, 0] * vy[:, 1] - vy[:, 0] * vx[:, 1])
    lengths = arr.he_length(np.arange(H))

    face_id = np.full(H, -1, dtype=np.int64)
    walks = []
    nxt = arr.next_he
    fid = 0
    for h0 in range(H):
        if face_id[h0] >= 0:
            continue
        walk = []
        h = h0
        while face_id[h] < 0:
            face_id[h] = fid
            walk.append(h)
            h = nxt[h]
        walks.append(np.array(walk))
        fid += 1

    areas = np.bincount(face_id, weights=shoelace, minlength=fid)
    perims = np.bincount(face_id, weights=lengths, minlength=fid)
    comps = arr.components[origin[[w[0] for w in walks]]]
    # the outer walk of each component is its most negative-area face
    outer = np.zeros(fid, dtype=bool)
    for c in np.unique(comps):
        members = np.flatnonzero(comps == c)
        outer[members[np.argmin(areas[members])]] = True
    return [
        Face(
            walk=origin[walks[f]],
            perimeter=float(perims[f]),
            signed_area=float(areas[f]),
            is_outer=bool(outer[f]),
            component=int(comps[f]),
        )
        for f in range(fid)
    ]


def identify_holes(faces: List[Face], h_min: float) -> List[Face]:
    """Bounded faces with perimeter >= h_min, plus the outer face(s)."""
    return [f for f in faces if f.is_outer or f.perimeter >= h_min]


@dataclass
class GroundTruth:
    labels: np.ndarray  # per-node Label
    holes: List[Face]
    h_min: float

    def ids(self, label: Label) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def to_json_dict(self) -> dict:
        return {
            "labels": {str(i): Label(l).name.lower() for i, l in enumerate(self.labels)},
            "hole_perimeters": [f.perimeter for f in self.holes],
            "h_min": self.h_min,
        }


def classify_ground_truth(g: ConnectivityGraph, holes: List[Face]) -> GroundTruth:
    """Mandatory = original nodes on a hole's boundary walk; Optional =
    within distance 1 of a mandatory node; Interior = the rest."""
    labels = np.full(g.n, Label.INTERIOR, dtype=np.int64)
    mand = np.unique(np.concatenate([f.walk for f in holes])) if holes else np.empty(0, np.int64)
    mand = mand[mand < g.n]
    labels[mand] = Label.MANDATORY
    if len(mand):
        rest = np.flatnonzero(labels != Label.MANDATORY)
        if len(rest):
            d, _ = cKDTree(g.positions[mand]).query(g.positions[rest], k=1)
            labels[rest[d <= 1.0]] = Label.OPTIONAL
    return GroundTruth(labels=labels, holes=holes, h_min=np.nan)


def compute_ground_truth(g: ConnectivityGraph, h_min: float = 4.0) -> GroundTruth:
    holes = identify_holes(extract_faces(planarize(g)), h_min)
    gt = classify_ground_truth(g, holes)
    gt.h_min = h_min
    return gt
