"""Synchronous round-based execution, message accounting, and experiments.

The harness gathers per-node neighborhood views round by round, hands the
classifiers nothing but those views, tallies the messages each phase would
cost, scores verdicts against geometric ground truth, and aggregates batches
of independently-seeded trials into a report with CSV/JSON output.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .ecbr import (
    DEFAULT_MIS_THRESHOLD,
    INTERIOR_MIN_CIRCLE,
    ecbr_refine,
    max_tight_circle,
    mis_reduce,
    representative_graph,
    ring_subgraph,
)
from .errors import EvaluationError
from .groundtruth import GroundTruth, Label, compute_ground_truth
from .mdsbr import classify_profile, gap_profile, mdsbr_refine_stats
from .mdsembed import EmbeddingVariant
from .netmodel import ConnectivityGraph, NetworkConfig, generate_network

__all__ = [
    "MessageLedger",
    "AlgorithmSpec",
    "TrialRow",
    "MetricsReport",
    "run_gather_phase",
    "evaluate",
    "run_experiment",
    "run_experiments",
    "circle_length_histogram",
    "rows_to_csv",
    "write_csv",
    "default_workers",
]

WORKERS_ENV = "BOUNDSIM_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _parallel_map(fn: Callable, items: Sequence, workers: Optional[int]):
    """Order-preserving map; results do not depend on the worker count."""
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) < 2 * workers:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# message accounting


class MessageLedger:
    """Per-phase, per-node sent-message counts and peak payload sizes.

    Payload size is measured in node ids carried by the largest message a
    node sent during the phase.
    """

    def __init__(self):
        self.counts: Dict[str, np.ndarray] = {}
        self.payloads: Dict[str, np.ndarray] = {}

    def record_phase(self, phase: str, counts: np.ndarray, payloads: np.ndarray):
        counts = np.asarray(counts, dtype=np.int64)
        payloads = np.asarray(payloads, dtype=np.int64)
        if (counts < 0).any() or (payloads < 0).any():
            raise ValueError("message counts and payloads must be nonnegative")
        self.counts[phase] = counts
        self.payloads[phase] = payloads

    def max_count(self, phase: str) -> int:
        c = self.counts[phase]
        return int(c.max()) if len(c) else 0

    def max_payload(self, phase: str) -> int:
        p = self.payloads[phase]
        return int(p.max()) if len(p) else 0

    def assert_bound(self, phase: str, limit: int):
        got = self.max_count(phase)
        if got > limit:
            raise AssertionError(
                f"phase {phase!r}: {got} messages from one node, limit {limit}"
            )

    def to_json_dict(self) -> dict:
        return {
            phase: {
                "max_messages": self.max_count(phase),
                "max_payload": self.max_payload(phase),
            }
            for phase in self.counts
        }


def run_gather_phase(g: ConnectivityGraph, k: int,
                     workers: Optional[int] = None
                     ) -> Tuple[List[ConnectivityGraph], MessageLedger]:
    """Simulate k synchronous aggregation rounds.

    Every round each node broadcasts everything it has heard so far, so
    after round i a node knows its closed i-hop neighborhood. The returned
    views are the induced subgraphs on those k-hop neighborhoods, centered
    on their owner; the ledger charges each node k messages, the largest
    being its closed (k-1)-hop neighborhood.
    """
    if k < 1:
        raise ValueError("need at least one round")
    n = g.n
    a = sp.csr_matrix(
        (np.ones(2 * g.m, dtype=bool),
         (np.concatenate([g.edges[:, 0], g.edges[:, 1]]),
          np.concatenate([g.edges[:, 1], g.edges[:, 0]]))),
        shape=(n, n),
    ) if g.m else sp.csr_matrix((n, n), dtype=bool)
    known = sp.identity(n, dtype=bool, format="csr")
    payload = np.ones(n, dtype=np.int64)  # round 1 broadcast: own id
    for _ in range(k - 1):
        known = (known + a @ known).astype(bool)
        payload = np.maximum(payload, np.diff(known.indptr))
    final = (known + a @ known).astype(bool)

    def build(u: int) -> ConnectivityGraph:
        members = final.indices[final.indptr[u]:final.indptr[u + 1]]
        return g.induced(members, center=u)

    views = _parallel_map(build, range(n), workers)
    ledger = MessageLedger()
    ledger.record_phase("gather", np.full(n, k, dtype=np.int64), payload)
    return views, ledger


# ---------------------------------------------------------------------------
# evaluation


def evaluate(gt: GroundTruth, boundary: np.ndarray
             ) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """Score a verdict vector against ground truth.

    ``boundary`` is a boolean array, True = classified Boundary. Returns
    (mandatory_fn_pct, optional_interior_pct, interior_fp_pct); a class
    with no ground-truth members yields None, never 0.
    """
    boundary = np.asarray(boundary, dtype=bool)
    if len(boundary) != len(gt.labels):
        raise EvaluationError(
            f"verdicts cover {len(boundary)} nodes, ground truth {len(gt.labels)}"
        )

    def pct(mask, bad):
        return 100.0 * np.mean(bad[mask]) if mask.any() else None

    lab = gt.labels
    return (
        pct(lab == Label.MANDATORY, ~boundary),
        pct(lab == Label.OPTIONAL, ~boundary),
        pct(lab == Label.INTERIOR, boundary),
    )


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class AlgorithmSpec:
    """Everything needed to run one classifier variant in a batch."""

    kind: str  # "mdsbr" | "ecbr"
    refined: bool = True
    # angle-test knobs
    alpha_min: float = 90.0
    r_min: int = 3
    variant: EmbeddingVariant = EmbeddingVariant.MDS2
    micro_hole_filter: bool = True
    # circle-test knobs
    gamma: float = 1.0
    circle_threshold: int = INTERIOR_MIN_CIRCLE
    use_mis_reduction: bool = False
    mis_threshold: int = DEFAULT_MIS_THRESHOLD
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("mdsbr", "ecbr"):
            raise ValueError(f"unknown algorithm kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        base = "MDS-BR" if self.kind == "mdsbr" else "EC-BR"
        return base + ("-Ref" if self.refined else "")


@dataclass
class TrialRow:
    seed: int
    algorithm: str
    refined: bool
    mandatory_fn_pct: Optional[float]
    optional_interior_pct: Optional[float]
    interior_fp_pct: Optional[float]
    nodes: int
    edges: int
    d_avg_measured: float


def _mean(vals: List[Optional[float]]) -> Optional[float]:
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


@dataclass
class MetricsReport:
    algorithm: str
    refined: bool
    trials: int
    rows: List[TrialRow]
    mandatory_fn_pct: Optional[float]
    optional_interior_pct: Optional[float]
    interior_fp_pct: Optional[float]
    d_max: int
    ledger_max: Dict[str, Dict[str, int]]
    circle_length_histogram: Optional[Dict[int, int]] = None
    avg_marked_neighborhood_size: Optional[float] = None

    def to_json_dict(self) -> dict:
        d = {
            "algorithm": self.algorithm,
            "refined": self.refined,
            "trials": self.trials,
            "mandatory_fn_pct": self.mandatory_fn_pct,
            "optional_interior_pct": self.optional_interior_pct,
            "interior_fp_pct": self.interior_fp_pct,
            "d_max": self.d_max,
            "ledger_max": self.ledger_max,
            "rows": [vars(r).copy() for r in self.rows],
        }
        if self.circle_length_histogram is not None:
            d["circle_length_histogram"] = {
                str(k): v for k, v in sorted(self.circle_length_histogram.items())
            }
        if self.avg_marked_neighborhood_size is not None:
            d["avg_marked_neighborhood_size"] = self.avg_marked_neighborhood_size
        return d


def circle_length_histogram(g: ConnectivityGraph,
                            workers: Optional[int] = None) -> Dict[int, int]:
    """Per-node max tight circle lengths, bucketed (0 = ring is acyclic)."""
    if g.n == 0:
        return {}
    lengths = _parallel_map(
        lambda u: max_tight_circle(ring_subgraph(g, u)[1]), range(g.n), workers
    )
    vals, cnts = np.unique(np.asarray(lengths), return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, cnts)}


class _TrialCache:
    """One generated trial plus lazily-shared per-node intermediates.

    Several algorithm specs score the same trial; the expensive parts
    (gathered views, gap profiles per embedding variant, circle lengths)
    are computed once and reused.
    """

    def __init__(self, config: NetworkConfig, seed: int, h_min: float,
                 workers: Optional[int]):
        self.workers = workers
        cfg = NetworkConfig(**{**vars(config), "seed": seed})
        self.seed = seed
        self.g = generate_network(cfg)
        self.gt = compute_ground_truth(self.g, h_min=h_min)
        self._views: Dict[int, Tuple[List[ConnectivityGraph], MessageLedger]] = {}
        self._profiles: Dict[EmbeddingVariant, list] = {}
        self._circles: Dict[Tuple[bool, int], np.ndarray] = {}

    def views(self, k: int):
        if k not in self._views:
            self._views[k] = run_gather_phase(self.g, k, self.workers)
        return self._views[k]

    def gap_profiles(self, variant: EmbeddingVariant):
        if variant not in self._profiles:
            views, _ = self.views(variant.hops)
            self._profiles[variant] = _parallel_map(
                lambda v: gap_profile(v, variant), views, self.workers
            )
        return self._profiles[variant]

    def circle_lengths(self, reduced: bool, threshold: int) -> np.ndarray:
        key = (reduced, 0)  # exact lengths; threshold only thresholds
        if key not in self._circles:
            views, _ = self.views(2)

            def one(view: ConnectivityGraph) -> int:
                _, ring = ring_subgraph(view, view.center)
                if not reduced:
                    return max_tight_circle(ring)
                chosen = mis_reduce(ring, np.arange(ring.n))
                return max_tight_circle(representative_graph(ring, chosen))

            self._circles[key] = np.asarray(
                _parallel_map(one, views, self.workers), dtype=np.int64
            )
        return self._circles[key]


def _run_spec_on_trial(cache: _TrialCache, spec: AlgorithmSpec):
    """Returns (boundary bool array, ledger, extras dict)."""
    g = cache.g
    ledger = MessageLedger()
    extras: dict = {}
    if spec.kind == "mdsbr":
        _, gather_ledger = cache.views(spec.variant.hops)
        ledger.record_phase("gather", gather_ledger.counts["gather"],
                            gather_ledger.payloads["gather"])
        profiles = cache.gap_profiles(spec.variant)
        marked = np.array([
            classify_profile(p, spec.alpha_min, spec.micro_hole_filter)
            for p in profiles
        ], dtype=bool)
        if spec.refined and spec.r_min > 0:
            ids = np.flatnonzero(marked)
            kept, sizes = mdsbr_refine_stats(g, ids, spec.r_min)
            counts = np.zeros(g.n, dtype=np.int64)
            counts[ids] = spec.r_min
            payloads = np.zeros(g.n, dtype=np.int64)
            payloads[ids] = sizes + 1
            ledger.record_phase("refine", counts, payloads)
            extras["marked_neighborhood_sizes"] = sizes
            marked = np.zeros(g.n, dtype=bool)
            marked[kept] = True
    else:
        _, gather_ledger = cache.views(2)
        ledger.record_phase("gather", gather_ledger.counts["gather"],
                            gather_ledger.payloads["gather"])
        threshold = spec.mis_threshold if spec.use_mis_reduction else spec.circle_threshold
        lengths = cache.circle_lengths(spec.use_mis_reduction, threshold)
        marked = lengths < threshold
        extras["circle_lengths"] = lengths
        if spec.refined:
            kept = ecbr_refine(g, np.flatnonzero(marked), spec.gamma)
            marked = np.zeros(g.n, dtype=bool)
            marked[kept] = True
    return marked, ledger, extras


_LEDGER_LIMITS = {"gather": lambda spec: spec.variant.hops if spec.kind == "mdsbr" else 2,
                  "refine": lambda spec: spec.r_min}


def _check_ledger(ledger: MessageLedger, spec: AlgorithmSpec):
    for phase in ledger.counts:
        ledger.assert_bound(phase, _LEDGER_LIMITS[phase](spec))


def run_experiments(config: NetworkConfig, specs: Sequence[AlgorithmSpec],
                    trials: int, base_seed: int = 0, h_min: float = 4.0,
                    workers: Optional[int] = None) -> List[MetricsReport]:
    """Run several algorithm variants over one shared batch of trials.

    Trials are generated for seeds base_seed .. base_seed+trials-1; every
    spec is scored on every trial. Per-trial intermediates are shared
    across specs, so sweeping a parameter costs little more than one run.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    acc = {i: {"rows": [], "ledger": {}, "hist": {}, "nbh": []}
           for i in range(len(specs))}
    d_max = 0
    for t in range(trials):
        seed = base_seed + t
        try:
            cache = _TrialCache(config, seed, h_min, workers)
        except Exception as exc:
            raise type(exc)(f"trial seed {seed}: {exc}") from exc
        g = cache.g
        d_max = max(d_max, int(g.degrees.max()) if g.n else 0)
        for i, spec in enumerate(specs):
            marked, ledger, extras = _run_spec_on_trial(cache, spec)
            _check_ledger(ledger, spec)
            fn, oi, fp = evaluate(cache.gt, marked)
            acc[i]["rows"].append(TrialRow(
                seed=seed, algorithm=spec.label, refined=spec.refined,
                mandatory_fn_pct=fn, optional_interior_pct=oi,
                interior_fp_pct=fp, nodes=g.n, edges=g.m,
                d_avg_measured=g.avg_degree(),
            ))
            led = acc[i]["ledger"]
            for phase in ledger.counts:
                cur = led.setdefault(phase, {"max_messages": 0, "max_payload": 0})
                cur["max_messages"] = max(cur["max_messages"], ledger.max_count(phase))
                cur["max_payload"] = max(cur["max_payload"], ledger.max_payload(phase))
            if "circle_lengths" in extras:
                vals, cnts = np.unique(extras["circle_lengths"], return_counts=True)
                for v, c in zip(vals, cnts):
                    acc[i]["hist"][int(v)] = acc[i]["hist"].get(int(v), 0) + int(c)
            if "marked_neighborhood_sizes" in extras:
                acc[i]["nbh"].extend(extras["marked_neighborhood_sizes"].tolist())
    reports = []
    for i, spec in enumerate(specs):
        a = acc[i]
        rows = a["rows"]
        reports.append(MetricsReport(
            algorithm=spec.label,
            refined=spec.refined,
            trials=trials,
            rows=rows,
            mandatory_fn_pct=_mean([r.mandatory_fn_pct for r in rows]),
            optional_interior_pct=_mean([r.optional_interior_pct for r in rows]),
            interior_fp_pct=_mean([r.interior_fp_pct for r in rows]),
            d_max=d_max,
            ledger_max=a["ledger"],
            circle_length_histogram=a["hist"] if spec.kind == "ecbr" else None,
            avg_marked_neighborhood_size=(
                float(np.mean(a["nbh"])) if a["nbh"] else None
            ),
        ))
    return reports


def run_experiment(config: NetworkConfig, spec: AlgorithmSpec, trials: int,
                   base_seed: int = 0, h_min: float = 4.0,
                   workers: Optional[int] = None) -> MetricsReport:
    return run_experiments(config, [spec], trials, base_seed, h_min, workers)[0]


# ---------------------------------------------------------------------------
# output


CSV_COLUMNS = ["seed", "algorithm", "refined", "mandatory_fn_pct",
               "optional_interior_pct", "interior_fp_pct", "nodes", "edges",
               "d_avg_measured"]


def _cell(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def rows_to_csv(reports: Sequence[MetricsReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        for r in rep.rows:
            w.writerow([_cell(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(reports: Sequence[MetricsReport], path: str):
    with open(path, "w", newline="") as f:
        f.write(rows_to_csv(reports))


def write_json_report(reports: Sequence[MetricsReport], path: str):
    with open(path, "w") as f:
        json.dump([r.to_json_dict() for r in reports], f, indent=2, sort_keys=True)
        f.write("\n")
