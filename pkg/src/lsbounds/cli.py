"""Command-line front end.

Subcommands::

    lsbounds spectrum <edgelist>
    lsbounds bound <config.json>
    lsbounds sweep <config.json> [--rows out.csv] [--aggregate agg.csv] [--svg out.svg]
    lsbounds verify <config.json>
    lsbounds frontier <config.json> [--out out.csv]

Configs are JSON; CSV output uses a header row, '.' decimals and
shortest-roundtrip float formatting, and is byte-identical for identical
config + seed (rows are sorted before writing, so the worker pool never
changes the artifact). The LSB_THREADS environment variable caps the sweep
worker pool. Exit codes: 0 success, 1 input/config error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bounds import BallSpec, check_radii, maximize_R_parallel, nod_structure
from .equilibrium import find_singular_parameter
from .errors import InputError, NumericalError
from .graphs import (
    SWEEP_CSV_HEADER,
    adjacency_spectrum,
    build_nod_model,
    generate_random_regular,
    load_edge_list,
    make_sweep_record,
    nod_bound,
)
from .models import ModelKind, model_from_dict, singular_point
from .verify import verify_implicit_map

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


def _thread_count() -> int:
    raw = os.environ.get("LSB_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise InputError(f"LSB_THREADS must be an integer, got {raw!r}") from None
        if value < 1:
            raise InputError("LSB_THREADS must be at least 1")
        return value
    return os.cpu_count() or 1


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc


def _resolve_instance(cfg: dict):
    """Build (model, singular point) from a config.

    Either a graph-based consensus instance ({graph, d, kind}) or a generic
    model ({model, p_range, x_init?, steps?}) whose singular parameter is
    located along the continued equilibrium branch.
    """
    if "graph" in cfg:
        spec = cfg["graph"]
        if isinstance(spec, str):
            graph = load_edge_list(spec)
        elif isinstance(spec, dict):
            try:
                graph = generate_random_regular(
                    int(spec["n"]), int(spec["k"]), int(spec.get("seed", 0))
                )
            except KeyError as exc:
                raise InputError(f"graph object needs n and k: missing {exc}") from exc
        else:
            raise InputError("graph must be an edge-list path or an {n, k, seed} object")
        if "d" not in cfg:
            raise InputError("graph-based configs need a decay value d")
        kind = ModelKind(cfg.get("kind", "hopfield"))
        return build_nod_model(graph, float(cfg["d"]), kind)
    if "model" in cfg:
        model = model_from_dict(cfg["model"])
        if "p_range" not in cfg:
            raise InputError("model-based configs need p_range to locate the singular point")
        p_range = cfg["p_range"]
        x_init = np.asarray(cfg.get("x_init", np.zeros(model.n)), dtype=float)
        steps = int(cfg.get("steps", 50))
        x_star, p_star = find_singular_parameter(model, x_init, p_range, steps=steps)
        return model, singular_point(model, x_star, p_star)
    raise InputError("config must contain either 'graph' or 'model'")


def cmd_spectrum(args) -> int:
    graph = load_edge_list(args.edgelist)
    eig = graph.spectrum
    k_text = str(graph.degree) if graph.degree is not None else "irregular"
    lam1 = float(eig[0])
    lam2 = float(eig[1]) if graph.n > 1 else float("nan")
    lam_min = float(eig[-1])
    lam_prime = max(abs(lam2), abs(lam_min))
    line = (
        f"n={graph.n} k={k_text} lambda1={lam1!r} lambda2={lam2!r} "
        f"lambda_min={lam_min!r} lambda_prime={lam_prime!r}"
    )
    print(line)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("n,k,lambda1,lambda2,lambda_min,lambda_prime\n")
            fh.write(
                f"{graph.n},{k_text},{lam1!r},{lam2!r},{lam_min!r},{lam_prime!r}\n"
            )
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = _load_config(args.config)
    model, sp = _resolve_instance(cfg)
    budget = int(cfg.get("budget", 4096))
    seed = int(cfg.get("seed", 0))
    force_sampled = bool(cfg.get("force_generic", False))

    if "radii" in cfg:
        radii = cfg["radii"]
        ball = BallSpec(float(radii["r_par"]), float(radii["r_perp"]))
        cert = check_radii(model, sp, ball, budget=budget, seed=seed,
                           force_sampled=force_sampled)
    else:
        r_perp = float(cfg.get("r_perp", 1.0))
        r_par = maximize_R_parallel(
            model, sp, r_perp, budget=budget, seed=seed,
            tol=float(cfg.get("tol", 0.01)), force_sampled=force_sampled,
        )
        cert = check_radii(model, sp, BallSpec(r_par, r_perp), budget=budget,
                           seed=seed, force_sampled=force_sampled)

    payload = cert.to_json_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    verdict = "feasible" if cert.feasible else "infeasible"
    print(
        f"{verdict} ball: r_par={cert.ball.r_par:g} r_perp={cert.ball.r_perp:g} "
        f"margin={cert.margin:g} method={cert.method.value}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cell_seed(base: int, n: int, k: int, index: int) -> int:
    # deterministic across processes (unlike the builtin hash)
    digest = zlib.crc32(f"{n}:{k}:{index}".encode())
    return (base + digest) & 0x7FFFFFFF


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    try:
        n_values = [int(v) for v in cfg["n_values"]]
        k_values = [int(v) for v in cfg["k_values"]]
        d = float(cfg["d"])
    except KeyError as exc:
        raise InputError(f"sweep config missing {exc}") from exc
    per_cell = int(cfg.get("graphs_per_cell", 100))
    seed_base = int(cfg.get("seed", 0))

    tasks = []
    for n in n_values:
        for k in k_values:
            if k >= n:
                logger.info("skipping cell n=%d k=%d: degree must be below n", n, k)
                continue
            if (n * k) % 2 != 0:
                logger.info("skipping cell n=%d k=%d: n*k is odd", n, k)
                continue
            for index in range(per_cell):
                tasks.append((n, k, index, _cell_seed(seed_base, n, k, index)))

    def run(task):
        n, k, index, seed = task
        return (n, k, index), make_sweep_record(n, k, d, seed)

    results = {}
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        for key, record in pool.map(run, tasks):
            results[key] = record

    ordered = [results[key] for key in sorted(results)]
    rows = [SWEEP_CSV_HEADER] + [rec.csv_row() for rec in ordered]
    text = "\n".join(rows) + "\n"
    if args.rows:
        with open(args.rows, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    aggregates = _aggregate(ordered)
    if args.aggregate:
        with open(args.aggregate, "w", encoding="utf-8") as fh:
            fh.write(_aggregate_csv(aggregates))
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(_sweep_svg(aggregates))
    return EXIT_OK


def _aggregate(records):
    cells = {}
    for rec in records:
        cells.setdefault((rec.n, rec.k), []).append(rec.r_par_bound)
    out = []
    for (n, k) in sorted(cells):
        values = np.asarray(cells[(n, k)])
        if values.max() == values.min():
            # a cell with a unique graph (e.g. complete) has exactly zero spread
            out.append((n, k, float(values[0]), 0.0))
        else:
            out.append((n, k, float(values.mean()), float(values.std())))
    return out


def _aggregate_csv(aggregates) -> str:
    lines = ["n,k,mean_r_par,std_r_par"]
    for n, k, mean, std in aggregates:
        lines.append(f"{n},{k},{mean!r},{std!r}")
    return "\n".join(lines) + "\n"


def _sweep_svg(aggregates) -> str:
    """Minimal two-panel error-bar chart: mean bound vs n (one series per k)
    and vs k (one series per n)."""
    width, height, margin = 460, 360, 55
    panels = [
        ("varying size n (series: degree k)", 1, 0),
        ("varying degree k (series: size n)", 0, 1),
    ]
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{2 * width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">'
    ]
    for panel_idx, (title, group_field, x_field) in enumerate(panels):
        x0 = panel_idx * width
        pts = [(row[x_field], row[group_field], row[2], row[3]) for row in aggregates]
        if not pts:
            continue
        xs = sorted({p[0] for p in pts})
        groups = sorted({p[1] for p in pts})
        ymax = max(p[2] + p[3] for p in pts) * 1.15 or 1.0
        xmin, xmax = min(xs), max(xs)
        span = (xmax - xmin) or 1.0

        def sx(v, x0=x0):
            return x0 + margin + (v - xmin) / span * (width - 2 * margin)

        def sy(v, ymax=ymax):
            return height - margin - v / ymax * (height - 2 * margin)

        parts.append(
            f'<text x="{x0 + width / 2:.1f}" y="20" text-anchor="middle">{title}</text>'
        )
        parts.append(
            f'<line x1="{x0 + margin}" y1="{height - margin}" x2="{x0 + width - margin}" '
            f'y2="{height - margin}" stroke="black"/>'
            f'<line x1="{x0 + margin}" y1="{margin}" x2="{x0 + margin}" '
            f'y2="{height - margin}" stroke="black"/>'
        )
        for v in xs:
            parts.append(
                f'<text x="{sx(v):.1f}" y="{height - margin + 16}" '
                f'text-anchor="middle">{v}</text>'
            )
        for frac in (0.0, 0.5, 1.0):
            yv = frac * ymax
            parts.append(
                f'<text x="{x0 + margin - 6}" y="{sy(yv) + 4:.1f}" '
                f'text-anchor="end">{yv:.3g}</text>'
            )
        for gi, group in enumerate(groups):
            color = palette[gi % len(palette)]
            series = sorted(p for p in pts if p[1] == group)
            coords = " ".join(f"{sx(p[0]):.1f},{sy(p[2]):.1f}" for p in series)
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}"/>'
            )
            for p in series:
                cx, cy = sx(p[0]), sy(p[2])
                lo, hi = sy(max(p[2] - p[3], 0.0)), sy(p[2] + p[3])
                parts.append(
                    f'<line x1="{cx:.1f}" y1="{lo:.1f}" x2="{cx:.1f}" y2="{hi:.1f}" '
                    f'stroke="{color}"/>'
                    f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="2.5" fill="{color}"/>'
                )
            parts.append(
                f'<text x="{x0 + width - margin + 4}" '
                f'y="{margin + 14 * gi + 10}" fill="{color}">{group}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    fraction = float(cfg.get("ball_fraction", 0.5))
    if fraction <= 0:
        raise InputError("ball_fraction must be positive")
    grid = int(cfg.get("grid", 11))
    starts = int(cfg.get("starts", 5))
    seed = int(cfg.get("seed", 0))
    model, sp = _resolve_instance(cfg)

    r_perp_base = float(cfg.get("r_perp", 1.0))
    nod = nod_structure(model, sp)
    if nod is not None:
        r_par_cert = nod.r_par_supremum
    else:
        r_par_cert = maximize_R_parallel(
            model, sp, r_perp_base, budget=int(cfg.get("budget", 4096)), seed=seed
        )
    ball = BallSpec(fraction * r_par_cert, fraction * r_perp_base)
    report = verify_implicit_map(model, sp, ball, grid=grid, starts=starts, seed=seed)
    print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_frontier(args) -> int:
    cfg = _load_config(args.config)
    model, sp = _resolve_instance(cfg)
    budget = int(cfg.get("budget", 2048))
    seed = int(cfg.get("seed", 0))
    force_sampled = bool(cfg.get("force_generic", False))

    def axis(key):
        spec = cfg.get(key)
        if spec is None:
            raise InputError(f"frontier config needs {key!r}")
        if isinstance(spec, dict):
            return np.linspace(
                float(spec["min"]), float(spec["max"]), int(spec["count"])
            )
        return np.asarray([float(v) for v in spec])

    lines = ["r_par,r_perp,margin,feasible,method"]
    for r_par in (float(v) for v in axis("r_par_values")):
        for r_perp in (float(v) for v in axis("r_perp_values")):
            cert = check_radii(
                model, sp, BallSpec(r_par, r_perp),
                budget=budget, seed=seed, force_sampled=force_sampled,
            )
            lines.append(
                f"{r_par!r},{r_perp!r},{cert.margin!r},"
                f"{str(cert.feasible).lower()},{cert.method.value}"
            )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsbounds",
        description="Validity radii for reduced-order bifurcation analysis "
        "of Hopfield and firing-rate networks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="adjacency spectrum of an edge list")
    p.add_argument("edgelist")
    p.add_argument("--csv", help="also write a one-row CSV")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bound", help="compute a feasibility certificate")
    p.add_argument("config")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="Monte Carlo sweep of the consensus bound")
    p.add_argument("config")
    p.add_argument("--rows", help="per-graph CSV path (default: stdout)")
    p.add_argument("--aggregate", help="per-cell mean/std CSV path")
    p.add_argument("--svg", help="error-bar chart path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="implicit-map oracle on certified balls")
    p.add_argument("config")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("frontier", help="margin over a grid of radii")
    p.add_argument("config")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_frontier)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
