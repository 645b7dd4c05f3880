"""Synthetic sensor network generation.

Nodes are placed in a rectangular area (units of maximum communication
distance), optionally avoiding polygonal hole masks, and linked under the
unit disk graph (UDG) or quasi unit disk graph (d-QUDG) model. Everything
is deterministic given a config (including its seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial import cKDTree
import shapely

from .errors import ConfigError, GenerationError

__all__ = [
    "Point",
    "SignalClass",
    "NetworkConfig",
    "ConnectivityGraph",
    "HOLE_PRESETS",
    "hole_preset",
    "spacing_for_degree",
    "sample_positions",
    "link_udg",
    "link_qudg",
    "build_graph",
    "generate_network",
    "k_hop_subgraph",
]

STRONG_RADIUS = 0.5  # links shorter than this carry a strong signal


class Point(NamedTuple):
    x: float
    y: float


class SignalClass(Enum):
    STRONG = "S"
    WEAK = "W"


@dataclass(frozen=True)
class NetworkConfig:
    """Parameters of one synthetic network layout.

    ``spacing`` only applies to perturbed-grid placement; when None it is
    derived from ``target_avg_degree`` via :func:`spacing_for_degree`.
    ``hole_mask`` is a tuple of simple polygons (vertex tuples); nodes
    strictly inside any of them are rejected.
    """

    area_width: float = 30.0
    area_height: float = 30.0
    placement: str = "perturbed_grid"  # or "random"
    spacing: Optional[float] = None
    comm_model: str = "udg"  # or "qudg"
    qudg_d: float = 0.75
    target_avg_degree: float = 12.0
    hole_mask: tuple = ()
    seed: int = 0

    def validate(self) -> None:
        if self.area_width <= 0 or self.area_height <= 0:
            raise ConfigError("area dimensions must be positive")
        if self.placement not in ("perturbed_grid", "random"):
            raise ConfigError(f"unknown placement {self.placement!r}")
        if self.comm_model not in ("udg", "qudg"):
            raise ConfigError(f"unknown comm model {self.comm_model!r}")
        if self.comm_model == "qudg" and not 0.0 <= self.qudg_d <= 1.0:
            raise ConfigError("QUDG d must lie in [0, 1]")
        if self.spacing is not None and self.spacing <= 0:
            raise ConfigError("grid spacing must be positive")
        if self.target_avg_degree <= 0:
            raise ConfigError("target average degree must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for poly in self.hole_mask:
            p = shapely.Polygon(poly)
            if not p.is_valid or not p.is_simple:
                raise ConfigError("hole mask polygons must be simple")
            if not p.within(shapely.box(0, 0, self.area_width, self.area_height)):
                raise ConfigError("hole mask polygons must lie within the area")

    def grid_spacing(self) -> float:
        if self.spacing is not None:
            return self.spacing
        return spacing_for_degree(
            self.target_avg_degree, self.comm_model, self.qudg_d
        )


def spacing_for_degree(d_avg: float, comm_model: str = "udg", qudg_d: float = 0.75) -> float:
    """Grid spacing s such that a perturbed grid reaches ~d_avg.

    A node sees on average rho * A_eff - 1 neighbors at density rho = 1/s^2,
    where A_eff is pi for a UDG and pi*(1+d^2)/2 for a d-QUDG (pairs in the
    uncertainty annulus link with probability one half).
    """
    if comm_model == "qudg":
        a_eff = math.pi * (1.0 + qudg_d**2) / 2.0
    else:
        a_eff = math.pi
    return math.sqrt(a_eff / (d_avg + 1.0))


def _plus_polygon(cx, cy, arm, thick):
    a, t = arm, thick
    return (
        (cx - a, cy - t), (cx - t, cy - t), (cx - t, cy - a), (cx + t, cy - a),
        (cx + t, cy - t), (cx + a, cy - t), (cx + a, cy + t), (cx + t, cy + t),
        (cx + t, cy + a), (cx - t, cy + a), (cx - t, cy + t), (cx - a, cy + t),
    )


def hole_preset(name: str, width: float, height: float) -> tuple:
    """One of the five built-in hole patterns, scaled to the given area."""
    w, h = width, height
    s = min(w, h)
    cx, cy = w / 2.0, h / 2.0
    if name == "cross":
        return (_plus_polygon(cx, cy, 0.25 * s, 0.08 * s),)
    if name == "block":
        b = 0.15 * s
        return (((cx - b, cy - b), (cx + b, cy - b), (cx + b, cy + b), (cx - b, cy + b)),)
    if name == "bars":
        y0, y1 = 0.25 * h, 0.75 * h
        return (
            ((0.22 * w, y0), (0.34 * w, y0), (0.34 * w, y1), (0.22 * w, y1)),
            ((0.66 * w, y0), (0.78 * w, y0), (0.78 * w, y1), (0.66 * w, y1)),
        )
    if name == "ell":
        t = 0.12 * s
        x0, y0 = 0.3 * w, 0.3 * h
        x1, y1 = 0.7 * w, 0.7 * h
        return (((x0, y0), (x1, y0), (x1, y0 + t), (x0 + t, y0 + t), (x0 + t, y1), (x0, y1)),)
    if name == "cee":
        t = 0.10 * s
        x0, y0 = 0.32 * w, 0.28 * h
        x1, y1 = 0.68 * w, 0.72 * h
        return ((
            (x0, y0), (x1, y0), (x1, y0 + t), (x0 + t, y0 + t),
            (x0 + t, y1 - t), (x1, y1 - t), (x1, y1), (x0, y1),
        ),)
    raise ConfigError(f"unknown hole preset {name!r}")


HOLE_PRESETS = ("cross", "block", "bars", "ell", "cee")


# ---------------------------------------------------------------------------
# linking predicates


def link_udg(p, q) -> bool:
    """UDG link rule: distance at most 1 (inclusive)."""
    return math.dist(p, q) <= 1.0


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; wraparound on uint64 is intended
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x


def _pair_coins(seed: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Fair coin per unordered node pair, keyed by (seed, min-id, max-id)."""
    lo = np.minimum(u, v).astype(np.uint64)
    hi = np.maximum(u, v).astype(np.uint64)
    with np.errstate(over="ignore"):
        key = _mix64(np.uint64(seed)) ^ _mix64((lo << np.uint64(32)) | hi)
    return (_mix64(key) & np.uint64(1)).astype(bool)


def link_qudg(p, q, d: float, seed: int, pid: int, qid: int) -> bool:
    """d-QUDG link rule.

    Certain below distance d, impossible above 1, and a fair coin in
    between. The coin is keyed by (seed, min-id, max-id) so both endpoints
    agree and regeneration is reproducible.
    """
    if not 0.0 <= d <= 1.0:
        raise ConfigError("QUDG d must lie in [0, 1]")
    dist = math.dist(p, q)
    if dist <= d:
        return True
    if dist > 1.0:
        return False
    return bool(_pair_coins(seed, np.array([pid]), np.array([qid]))[0])


# ---------------------------------------------------------------------------
# connectivity graph


class ConnectivityGraph:
    """Undirected graph over dense node ids 0..n-1.

    Optionally carries embedded positions (n, 2), a per-edge signal class,
    original node labels (for induced subgraphs) and a marked center node.
    Immutable once built; safe to share read-only.
    """

    def __init__(self, n, edges, positions=None, signal=None, labels=None, center=None):
        self.n = int(n)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        self.edges = np.column_stack([lo, hi])[order]
        if len(self.edges) and (
            np.any(self.edges[:, 0] == self.edges[:, 1])
            or np.any(np.all(np.diff(self.edges, axis=0) == 0, axis=1))
        ):
            raise ValueError("self-loops and duplicate edges are not allowed")
        self.positions = None if positions is None else np.asarray(positions, dtype=float)
        if signal is None:
            self.signal = None
        else:
            self.signal = np.asarray(signal, dtype=np.uint8)[order]
        self.labels = (
            np.arange(self.n, dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
        )
        self.center = center
        # CSR adjacency with sorted neighbor lists
        both_u = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        both_v = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order2 = np.lexsort((both_v, both_u))
        self.indices = both_v[order2]
        counts = np.bincount(both_u, minlength=self.n)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._edge_keys = self.edges[:, 0] * self.n + self.edges[:, 1]

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def avg_degree(self) -> float:
        return 2.0 * self.m / self.n if self.n else 0.0

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return i < len(nb) and nb[i] == v

    def edge_ids(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Indices into self.edges for the given endpoint arrays."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        key = np.minimum(u, v) * self.n + np.maximum(u, v)
        idx = np.searchsorted(self._edge_keys, key)
        if np.any(idx >= len(self._edge_keys)) or np.any(self._edge_keys[idx] != key):
            raise KeyError("edge not present")
        return idx

    def signal_of(self, u: int, v: int) -> SignalClass:
        if self.signal is None:
            raise ValueError("graph carries no signal data")
        idx = self.edge_ids(np.array([u]), np.array([v]))[0]
        return SignalClass.STRONG if self.signal[idx] == 0 else SignalClass.WEAK

    def hop_layers(self, u: int, k: Optional[int] = None) -> np.ndarray:
        """BFS hop distance from u for every node (-1 if unreachable or > k)."""
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[u] = 0
        frontier = [u]
        level = 0
        while frontier and (k is None or level < k):
            level += 1
            nxt = []
            for v in frontier:
                for w in self.neighbors(v):
                    if dist[w] < 0:
                        dist[w] = level
                        nxt.append(int(w))
            frontier = nxt
        return dist

    def induced(self, members: np.ndarray, center: Optional[int] = None) -> "ConnectivityGraph":
        """Induced subgraph on ``members`` (local ids), relabeled 0..k-1.

        ``center`` is a member id (in this graph's numbering) to mark in
        the result.
        """
        members = np.unique(np.asarray(members, dtype=np.int64))
        k = len(members)
        local = np.full(self.n, -1, dtype=np.int64)
        local[members] = np.arange(k)
        sub_edges = []
        for i, v in enumerate(members):
            nb = self.neighbors(v)
            keep = nb[(local[nb] > i)]  # each edge once, v < neighbor locally
            if len(keep):
                sub_edges.append(np.column_stack([np.full(len(keep), i), local[keep]]))
        edges = np.concatenate(sub_edges) if sub_edges else np.empty((0, 2), dtype=np.int64)
        signal = None
        if self.signal is not None and len(edges):
            gids = self.edge_ids(members[edges[:, 0]], members[edges[:, 1]])
            signal = self.signal[gids]
        elif self.signal is not None:
            signal = np.empty(0, dtype=np.uint8)
        return ConnectivityGraph(
            k,
            edges,
            positions=None if self.positions is None else self.positions[members],
            signal=signal,
            labels=self.labels[members],
            center=None if center is None else int(local[center]),
        )

    def __eq__(self, other):
        if not isinstance(other, ConnectivityGraph):
            return NotImplemented
        if self.n != other.n or not np.array_equal(self.edges, other.edges):
            return False
        if not np.array_equal(self.labels, other.labels):
            return False
        if (self.positions is None) != (other.positions is None):
            return False
        if self.positions is not None and not np.array_equal(self.positions, other.positions):
            return False
        if (self.signal is None) != (other.signal is None):
            return False
        if self.signal is not None and not np.array_equal(self.signal, other.signal):
            return False
        return self.center == other.center

    __hash__ = None

    # -- serialization ------------------------------------------------------

    def to_text(self) -> str:
        """Line format: header ``n m``, one ``x y`` per node, one ``u v s``
        per edge with s in {S, W}."""
        if self.positions is None or self.signal is None:
            raise ValueError("text format requires positions and signal data")
        lines = [f"{self.n} {self.m}"]
        for x, y in self.positions:
            lines.append(f"{x:.17g} {y:.17g}")
        for (u, v), s in zip(self.edges, self.signal):
            lines.append(f"{u} {v} {'S' if s == 0 else 'W'}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ConnectivityGraph":
        lines = text.strip().split("\n")
        n, m = (int(t) for t in lines[0].split())
        positions = np.array(
            [[float(t) for t in ln.split()] for ln in lines[1:1 + n]], dtype=float
        ).reshape(n, 2)
        edges, signal = [], []
        for ln in lines[1 + n:1 + n + m]:
            u, v, s = ln.split()
            edges.append((int(u), int(v)))
            signal.append(0 if s == "S" else 1)
        return cls(n, np.array(edges, dtype=np.int64).reshape(-1, 2), positions, signal)

    def to_json_dict(self) -> dict:
        d = {"n": self.n, "edges": self.edges.tolist()}
        if self.positions is not None:
            d["positions"] = self.positions.tolist()
        if self.signal is not None:
            d["signal"] = ["S" if s == 0 else "W" for s in self.signal]
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ConnectivityGraph":
        signal = None
        if "signal" in d:
            signal = [0 if s == "S" else 1 for s in d["signal"]]
        return cls(d["n"], np.array(d["edges"], dtype=np.int64).reshape(-1, 2),
                   d.get("positions"), signal)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "ConnectivityGraph":
        return cls.from_json_dict(json.loads(text))


# ---------------------------------------------------------------------------
# placement


def _inside_any_hole(points: np.ndarray, polygons) -> np.ndarray:
    mask = np.zeros(len(points), dtype=bool)
    for poly in polygons:
        p = shapely.Polygon(poly)
        mask |= shapely.contains_xy(p, points[:, 0], points[:, 1])
    return mask


def sample_positions(config: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    """Node positions under the configured placement strategy.

    Perturbed grid: one point per grid cell at (i*s + U[0,s), j*s + U[0,s));
    cells whose point falls inside a hole mask are skipped. Random: points
    are drawn uniformly (hole-mask rejected) and added until the measured
    average degree under the comm model first reaches the target, checked
    every 100 insertions.
    """
    config.validate()
    if config.placement == "perturbed_grid":
        s = config.grid_spacing()
        ni = int(config.area_width / s + 1e-9)
        nj = int(config.area_height / s + 1e-9)
        ii, jj = np.meshgrid(np.arange(ni), np.arange(nj), indexing="ij")
        base = np.column_stack([ii.ravel() * s, jj.ravel() * s])
        pts = base + rng.uniform(0.0, s, size=base.shape)
        if config.hole_mask:
            pts = pts[~_inside_any_hole(pts, config.hole_mask)]
        return pts
    return _sample_random(config, rng)


def _sample_random(config: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    s_eq = spacing_for_degree(config.target_avg_degree, config.comm_model, config.qudg_d)
    cap = 10 * int(config.area_width / s_eq) * int(config.area_height / s_eq)
    cell = {}  # integer cell -> list of node indices
    pts: list = []
    m = 0  # running edge count under the comm model

    def add_point(p):
        nonlocal m
        i = len(pts)
        cx, cy = int(p[0]), int(p[1])
        cand = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cand.extend(cell.get((cx + dx, cy + dy), ()))
        if cand:
            cand = np.array(cand)
            dist = np.hypot(*(np.asarray(pts)[cand] - p).T)
            if config.comm_model == "udg":
                m += int(np.sum(dist <= 1.0))
            else:
                sure = dist <= config.qudg_d
                maybe = (~sure) & (dist <= 1.0)
                coins = _pair_coins(config.seed, cand[maybe], np.full(maybe.sum(), i))
                m += int(np.sum(sure)) + int(np.sum(coins))
        cell.setdefault((cx, cy), []).append(i)
        pts.append(p)

    batch = 100
    while True:
        added = 0
        while added < batch:
            p = rng.uniform([0, 0], [config.area_width, config.area_height])
            if config.hole_mask and _inside_any_hole(p[None, :], config.hole_mask)[0]:
                continue
            add_point(p)
            added += 1
            if len(pts) > cap:
                raise GenerationError(
                    f"target degree {config.target_avg_degree} unreachable "
                    f"within {cap} nodes (seed {config.seed})"
                )
        if 2.0 * m / len(pts) >= config.target_avg_degree:
            return np.asarray(pts)


# ---------------------------------------------------------------------------
# graph construction


def build_graph(positions: np.ndarray, config: NetworkConfig,
                rng: Optional[np.random.Generator] = None) -> ConnectivityGraph:
    """Connectivity graph over the given positions under the comm model.

    The QUDG coin is keyed by (config.seed, min-id, max-id), so ``rng`` is
    unused; it is accepted for interface symmetry with sample_positions.
    """
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    if n:
        tree = cKDTree(positions)
        pairs = tree.query_pairs(r=1.0, output_type="ndarray")
    else:
        pairs = np.empty((0, 2), dtype=np.int64)
    if config.comm_model == "qudg" and len(pairs):
        dist = np.linalg.norm(positions[pairs[:, 0]] - positions[pairs[:, 1]], axis=1)
        sure = dist <= config.qudg_d
        coins = _pair_coins(config.seed, pairs[:, 0], pairs[:, 1])
        pairs = pairs[sure | coins]
    if len(pairs):
        dist = np.linalg.norm(positions[pairs[:, 0]] - positions[pairs[:, 1]], axis=1)
        signal = (dist >= STRONG_RADIUS).astype(np.uint8)  # 0 strong, 1 weak
    else:
        signal = np.empty(0, dtype=np.uint8)
    return ConnectivityGraph(n, pairs, positions=positions, signal=signal)


def generate_network(config: NetworkConfig) -> ConnectivityGraph:
    """Positions plus links, deterministically from config.seed."""
    rng = np.random.default_rng(config.seed)
    return build_graph(sample_positions(config, rng), config)


def k_hop_subgraph(g: ConnectivityGraph, u: int, k: int) -> ConnectivityGraph:
    """Induced subgraph on all nodes within hop distance k of u (u marked
    as center). Positions and signal data are preserved."""
    if k < 1:
        raise ValueError("k must be >= 1")
    dist = g.hop_layers(u, k)
    return g.induced(np.flatnonzero(dist >= 0), center=u)
