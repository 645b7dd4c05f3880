"""Command-line front end.

Subcommands: generate a network file, classify its nodes, evaluate batches
of trials against ground truth, render an SVG, or dump the circle-length
histogram. Everything is driven by a schema-checked JSON config plus flag
overrides; all outputs are deterministic given their inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Dict, List, Optional

import jsonschema
import numpy as np

from .ecbr import (
    DEFAULT_MIS_THRESHOLD,
    INTERIOR_MIN_CIRCLE,
    ecbr_refine,
    max_tight_circle,
    mis_reduce,
    representative_graph,
    ring_subgraph,
)
from .errors import BoundsimError, ConfigError
from .groundtruth import Label, compute_ground_truth
from .harness import (
    AlgorithmSpec,
    circle_length_histogram,
    run_experiments,
    rows_to_csv,
    write_json_report,
)
from .mdsbr import MdsBrParams, mdsbr_classify_node, mdsbr_refine
from .mdsembed import EmbeddingVariant
from .netmodel import (
    HOLE_PRESETS,
    ConnectivityGraph,
    NetworkConfig,
    generate_network,
    hole_preset,
)

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "network": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "area_width": {"type": "number", "exclusiveMinimum": 0},
                "area_height": {"type": "number", "exclusiveMinimum": 0},
                "placement": {"enum": ["perturbed_grid", "random"]},
                "spacing": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "comm_model": {"enum": ["udg", "qudg"]},
                "qudg_d": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "target_avg_degree": {"type": "number", "exclusiveMinimum": 0},
                "holes": {
                    "type": "array",
                    "items": {"enum": list(HOLE_PRESETS)},
                },
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "mdsbr": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha_min": {"type": "number", "exclusiveMinimum": 0,
                              "exclusiveMaximum": 360},
                "r_min": {"type": "integer", "minimum": 0},
                "variant": {"enum": ["mds2", "mds3", "ssmds", "opt"]},
                "micro_hole_filter": {"type": "boolean"},
            },
        },
        "ecbr": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "circle_threshold": {"type": "integer", "minimum": 3},
                "gamma": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "use_mis_reduction": {"type": "boolean"},
                "mis_threshold": {"type": "integer", "minimum": 3},
            },
        },
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "base_seed": {"type": "integer", "minimum": 0},
                "h_min": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "csv_path": {"type": "string"},
                "json_path": {"type": "string"},
                "svg_path": {"type": "string"},
            },
        },
    },
}


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise ConfigError(f"{path}: {loc}: {exc.message}") from exc
    return doc


def network_config(doc: dict) -> NetworkConfig:
    net = dict(doc.get("network", {}))
    holes = net.pop("holes", ["cross"])
    kwargs = dict(net)
    w = kwargs.get("area_width", 30.0)
    h = kwargs.get("area_height", 30.0)
    kwargs["hole_mask"] = tuple(
        poly for name in holes for poly in hole_preset(name, w, h)
    )
    return NetworkConfig(**kwargs)


def mdsbr_params(doc: dict) -> MdsBrParams:
    sec = doc.get("mdsbr", {})
    return MdsBrParams(
        alpha_min=sec.get("alpha_min", 90.0),
        r_min=sec.get("r_min", 3),
        variant=EmbeddingVariant(sec.get("variant", "mds2")),
        micro_hole_filter=sec.get("micro_hole_filter", True),
    )


def read_graph(path: str) -> ConnectivityGraph:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        if text.lstrip().startswith("{"):
            return ConnectivityGraph.from_json(text)
        return ConnectivityGraph.from_text(text)
    except (ValueError, KeyError, IndexError) as exc:
        raise ConfigError(f"{path}: unreadable graph file: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    doc = load_config(args.config)
    cfg = network_config(doc)
    if args.seed is not None:
        cfg = NetworkConfig(**{**vars(cfg), "seed": args.seed})
    g = generate_network(cfg)
    out = g.to_json() + "\n" if args.format == "json" else g.to_text()
    if args.out:
        with open(args.out, "w") as f:
            f.write(out)
    else:
        sys.stdout.write(out)
    print(f"n={g.n} m={g.m} d_avg={g.avg_degree():.3f}", file=sys.stderr)
    return 0


def _ecbr_lengths(g: ConnectivityGraph, use_mis: bool) -> np.ndarray:
    def one(u: int) -> int:
        _, ring = ring_subgraph(g, u)
        if not use_mis:
            return max_tight_circle(ring)
        chosen = mis_reduce(ring, np.arange(ring.n))
        return max_tight_circle(representative_graph(ring, chosen))
    return np.array([one(u) for u in range(g.n)], dtype=np.int64)


def cmd_classify(args) -> int:
    doc = load_config(args.config)
    g = read_graph(args.graph)
    result: Dict[str, object] = {"algorithm": args.alg, "refined": args.refine}
    if args.alg == "mdsbr":
        params = mdsbr_params(doc)
        if args.alpha_min is not None:
            params = MdsBrParams(alpha_min=args.alpha_min, r_min=params.r_min,
                                 variant=params.variant,
                                 micro_hole_filter=params.micro_hole_filter)
        marked = np.array(
            [mdsbr_classify_node(g, u, params) for u in range(g.n)], dtype=bool
        )
        if args.refine:
            kept = mdsbr_refine(g, np.flatnonzero(marked), params.r_min)
            marked = np.zeros(g.n, dtype=bool)
            marked[kept] = True
    else:
        sec = doc.get("ecbr", {})
        use_mis = sec.get("use_mis_reduction", False)
        threshold = (sec.get("mis_threshold", DEFAULT_MIS_THRESHOLD) if use_mis
                     else sec.get("circle_threshold", INTERIOR_MIN_CIRCLE))
        lengths = _ecbr_lengths(g, use_mis)
        marked = lengths < threshold
        if args.refine:
            kept = ecbr_refine(g, np.flatnonzero(marked), sec.get("gamma", 1.0))
            marked = np.zeros(g.n, dtype=bool)
            marked[kept] = True
        if args.emit_lengths:
            result["circle_lengths"] = {str(u): int(v) for u, v in enumerate(lengths)}
    result["verdicts"] = {
        str(u): ("boundary" if marked[u] else "interior") for u in range(g.n)
    }
    out = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_evaluate(args) -> int:
    doc = load_config(args.config)
    cfg = network_config(doc)
    exp = doc.get("experiment", {})
    trials = exp.get("trials", 25)
    base_seed = exp.get("base_seed", 0)
    h_min = exp.get("h_min", 4.0)
    specs: List[AlgorithmSpec] = []
    if "mdsbr" in doc or "ecbr" not in doc:
        p = mdsbr_params(doc)
        specs.append(AlgorithmSpec(
            kind="mdsbr", refined=p.r_min > 0, alpha_min=p.alpha_min,
            r_min=p.r_min, variant=p.variant,
            micro_hole_filter=p.micro_hole_filter,
        ))
    if "ecbr" in doc or "mdsbr" not in doc:
        sec = doc.get("ecbr", {})
        common = dict(
            kind="ecbr",
            gamma=sec.get("gamma", 1.0),
            circle_threshold=sec.get("circle_threshold", INTERIOR_MIN_CIRCLE),
            use_mis_reduction=sec.get("use_mis_reduction", False),
            mis_threshold=sec.get("mis_threshold", DEFAULT_MIS_THRESHOLD),
        )
        specs.append(AlgorithmSpec(refined=False, **common))
        specs.append(AlgorithmSpec(refined=True, **common))
    reports = run_experiments(cfg, specs, trials, base_seed, h_min)
    out = doc.get("output", {})
    csv_text = rows_to_csv(reports)
    if "csv_path" in out:
        with open(out["csv_path"], "w", newline="") as f:
            f.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    if "json_path" in out:
        write_json_report(reports, out["json_path"])
    for r in reports:
        def fmt(v):
            return "NA" if v is None else f"{v:.2f}"
        print(f"{r.algorithm}: mandatory_fn={fmt(r.mandatory_fn_pct)}% "
              f"optional_interior={fmt(r.optional_interior_pct)}% "
              f"interior_fp={fmt(r.interior_fp_pct)}%", file=sys.stderr)
    return 0


_GT_COLORS = {Label.MANDATORY: "#d62728", Label.OPTIONAL: "#ff9f40",
              Label.INTERIOR: "#9aa0a6"}


def render_svg(g: ConnectivityGraph, classes: List[str],
               colors: Dict[str, str], draw_edges: bool) -> str:
    """Nodes as fixed-radius circles colored by class name, in id order."""
    if g.positions is None:
        raise BoundsimError("rendering needs node positions")
    pos = g.positions
    pad = 1.0
    x0, y0 = pos.min(axis=0) - pad
    x1, y1 = pos.max(axis=0) + pad
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{x0:.3f} {y0:.3f} {x1 - x0:.3f} {y1 - y0:.3f}" '
        f'width="800" height="{800 * (y1 - y0) / (x1 - x0):.0f}">',
        f'<rect x="{x0:.3f}" y="{y0:.3f}" width="{x1 - x0:.3f}" '
        f'height="{y1 - y0:.3f}" fill="white"/>',
    ]
    if draw_edges:
        lines.append('<g stroke="#d0d0d0" stroke-width="0.03">')
        for u, v in g.edges:
            lines.append(
                f'<line x1="{pos[u, 0]:.4f}" y1="{pos[u, 1]:.4f}" '
                f'x2="{pos[v, 0]:.4f}" y2="{pos[v, 1]:.4f}"/>'
            )
        lines.append("</g>")
    for u in range(g.n):
        c = colors[classes[u]]
        lines.append(
            f'<circle cx="{pos[u, 0]:.4f}" cy="{pos[u, 1]:.4f}" r="0.15" '
            f'fill="{c}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_render(args) -> int:
    g = read_graph(args.graph)
    if args.verdicts:
        with open(args.verdicts) as f:
            doc = json.load(f)
        verdicts = doc["verdicts"]
        classes = [verdicts[str(u)] for u in range(g.n)]
        colors = {"boundary": "#d62728", "interior": "#9aa0a6"}
    else:
        gt = compute_ground_truth(g, h_min=args.h_min)
        names = {Label.MANDATORY: "mandatory", Label.OPTIONAL: "optional",
                 Label.INTERIOR: "interior"}
        classes = [names[Label(l)] for l in gt.labels]
        colors = {names[k]: v for k, v in _GT_COLORS.items()}
    svg = render_svg(g, classes, colors, args.edges)
    if args.out:
        with open(args.out, "w") as f:
            f.write(svg)
    else:
        sys.stdout.write(svg)
    return 0


def cmd_hist(args) -> int:
    g = read_graph(args.graph)
    h = circle_length_histogram(g)
    out = json.dumps({str(k): v for k, v in sorted(h.items())},
                     indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(out)
    else:
        sys.stdout.write(out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="boundsim",
        description="Synthetic sensor-network boundary recognition toolkit.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a network file")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("classify", help="classify nodes of a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--alg", required=True, choices=["mdsbr", "ecbr"])
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--alpha-min", type=float, dest="alpha_min")
    p.add_argument("--emit-lengths", action="store_true")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="run a batch experiment")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", help="render a graph as SVG")
    p.add_argument("--graph", required=True)
    p.add_argument("--verdicts", help="verdict JSON from `classify`")
    p.add_argument("--h-min", type=float, default=4.0, dest="h_min")
    p.add_argument("--edges", action="store_true", help="draw the edge layer")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("hist", help="circle-length histogram of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hist)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BoundsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
