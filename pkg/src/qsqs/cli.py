"""Command-line interface.

Subcommands: ``suppress`` (run a scheme over a detection file), ``eval``
(mAP / log-average miss rate), ``bench`` (sweep pre-suppression threshold
and variable cap, CSV out), ``solver-compare`` (samplers vs the exhaustive
oracle on random instances, CSV out), and ``dump-qubo`` (emit the
objective matrices the pipeline would solve).

Exit codes: 0 success, 1 validation or domain error, 2 I/O error.  Every
stochastic path is derived from ``--seed``, so outputs are reproducible.
A configuration file, when given, overrides the corresponding flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .evaluation import ApMode, EvalReport, evaluate
from .exceptions import InvalidInputError, QsqsError
from .io import (DetectionFile, ImageDetections, load_config,
                 load_detections, load_ground_truth, save_detections)
from .qubo import build_q, qubo_energy
from .solvers import (EXHAUSTIVE_MAX_VARS, AnnealingSampler, GreedySampler,
                      TabuSampler, pick_solution, random_qubo,
                      solve_exhaustive)
from .suppression import Scheme, SuppressionConfig, nms, suppress_image

_AP_MODES = {m.value: m for m in ApMode}


def _parse_scheme(name: str) -> Scheme:
    try:
        return Scheme(name)
    except ValueError:
        raise InvalidInputError(
            f"unknown scheme {name!r}; valid schemes: "
            + ", ".join(sorted(s.value for s in Scheme))) from None


def _image_seed(seed: int, image_index: int) -> int:
    return int(np.random.SeedSequence([seed, image_index]).generate_state(1)[0])


def _effective_config(args) -> SuppressionConfig:
    base = SuppressionConfig(scheme=_parse_scheme(args.scheme))
    if getattr(args, "config", None):
        return load_config(args.config, base=base)
    return base


def _suppress_file(detections: DetectionFile, cfg: SuppressionConfig,
                   seed: int, reads: int, sweeps: int, jobs: int = 1,
                   ) -> tuple[DetectionFile, list[float]]:
    """Run one scheme over every image; returns output and per-image seconds."""

    def run(item):
        index, image = item
        solver = AnnealingSampler(reads=reads, sweeps=sweeps,
                                  random_state=_image_seed(seed, index))
        start = time.perf_counter()
        out = suppress_image(image.boxes, cfg, solver)
        elapsed = time.perf_counter() - start
        return ImageDetections(image_id=image.image_id, boxes=tuple(out)), elapsed

    items = list(enumerate(detections.images))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]
    images = tuple(r[0] for r in results)
    return DetectionFile(images=images), [r[1] for r in results]


def _cmd_suppress(args) -> int:
    cfg = _effective_config(args)
    detections = load_detections(args.detections)
    suppressed, _ = _suppress_file(detections, cfg, args.seed, args.reads,
                                   args.sweeps, args.jobs)
    save_detections(suppressed, args.out)
    return 0


def _write_curves(report: EvalReport, prefix: str) -> None:
    with open(f"{prefix}.pr.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "recall", "precision"])
        for class_id in sorted(report.per_class):
            entry = report.per_class[class_id]
            for recall, precision in zip(entry.recall, entry.precision):
                writer.writerow([class_id, repr(recall), repr(precision)])
    with open(f"{prefix}.fppi.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fppi", "miss_rate"])
        for fppi, miss_rate in report.fppi_curve:
            writer.writerow([repr(fppi), repr(miss_rate)])


def _cmd_eval(args) -> int:
    detections = load_detections(args.detections)
    ground_truth = load_ground_truth(args.ground_truth)
    report = evaluate(detections.by_image(), ground_truth.images,
                      iou_threshold=args.iou, mode=_AP_MODES[args.ap_mode])
    payload = report.to_json_dict()
    payload["metric"] = args.metric
    print(json.dumps(payload, indent=2))
    if args.curves:
        _write_curves(report, args.curves)
    return 0


def _parse_grid(text: str) -> tuple[list[float], list[int]]:
    """Parse ``Nt=START:STEP:STOP,cap=START:STEP:STOP`` into value lists."""
    values: dict[str, list[float]] = {}
    for term in text.split(","):
        key, eq, rest = term.partition("=")
        pieces = rest.split(":")
        if not eq or len(pieces) != 3:
            raise InvalidInputError(
                f"malformed grid term {term!r}; expected KEY=START:STEP:STOP")
        if key not in ("Nt", "cap"):
            raise InvalidInputError(f"unknown grid key {key!r}; expected Nt, cap")
        if key in values:
            raise InvalidInputError(f"duplicate grid key {key!r}")
        try:
            start, step, stop = (float(p) for p in pieces)
        except ValueError:
            raise InvalidInputError(f"non-numeric grid term {term!r}") from None
        if step <= 0 or stop < start:
            raise InvalidInputError(
                f"grid term {term!r} must have positive step and stop >= start")
        count = int((stop - start) / step + 1e-9) + 1
        values[key] = [round(start + i * step, 10) for i in range(count)]
    if set(values) != {"Nt", "cap"}:
        raise InvalidInputError("grid must define exactly the keys Nt and cap")
    caps = []
    for v in values["cap"]:
        if abs(v - round(v)) > 1e-9:
            raise InvalidInputError(f"cap value {v} is not an integer")
        caps.append(int(round(v)))
    return values["Nt"], caps


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _cmd_bench(args) -> int:
    nts, caps = _parse_grid(args.grid)
    cfg = _effective_config(args)
    detections = load_detections(args.detections)
    ground_truth = load_ground_truth(args.ground_truth)
    rows = []
    for nt in nts:
        for cap in caps:
            cell = replace(cfg, pre_nms_threshold=nt, qubit_cap=cap)
            suppressed, seconds = _suppress_file(detections, cell, args.seed,
                                                 args.reads, args.sweeps, args.jobs)
            report = evaluate(suppressed.by_image(), ground_truth.images,
                              iou_threshold=args.iou)
            value = report.mean_ap if args.metric == "map" else report.lamr
            mean_ms = 1000.0 * sum(seconds) / max(len(seconds), 1)
            rows.append([repr(nt), cap, repr(value), repr(mean_ms)])
    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(["n_t", "qubit_cap", args.metric, "mean_image_ms"])
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _parse_n_vars(text: str) -> list[int]:
    try:
        ns = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InvalidInputError(f"--n-vars {text!r} must be a comma-separated "
                                "list of integers") from None
    if not ns or any(n < 1 for n in ns):
        raise InvalidInputError("--n-vars needs positive integers")
    return ns


def _cmd_solver_compare(args) -> int:
    ns = _parse_n_vars(args.n_vars)
    if not args.no_oracle:
        over = [n for n in ns if n > EXHAUSTIVE_MAX_VARS]
        if over:
            raise InvalidInputError(
                f"n={over[0]} exceeds the exhaustive oracle cap of "
                f"{EXHAUSTIVE_MAX_VARS}; pass --no-oracle to skip it")
    rows = []
    for n in ns:
        for k in range(args.instances):
            instance_seed = _image_seed(args.seed, n * 100003 + k)
            instance = random_qubo(n, seed=instance_seed)
            optimum = None
            if not args.no_oracle:
                optimum = solve_exhaustive(instance).best.energy
            solvers = [
                ("greedy", GreedySampler(random_state=k)),
                ("tabu", TabuSampler(random_state=k)),
                ("anneal", AnnealingSampler(reads=args.reads, random_state=k)),
            ]
            for name, sampler in solvers:
                start = time.perf_counter()
                best = qubo_energy(instance, pick_solution(sampler.sample(instance)))
                elapsed_ms = 1000.0 * (time.perf_counter() - start)
                matched = "" if optimum is None else int(abs(best - optimum) <= 1e-9)
                rows.append([f"n{n}-i{k}", n, name, repr(best),
                             "" if optimum is None else repr(optimum),
                             matched, repr(elapsed_ms)])
    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(["instance_id", "n", "solver", "best_energy",
                         "optimum_energy", "matched_optimum", "wall_time_ms"])
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_dump_qubo(args) -> int:
    cfg = _effective_config(args)
    detections = load_detections(args.detections)
    entries = []
    for image in detections.images:
        if args.image is not None and image.image_id != args.image:
            continue
        by_class: dict[int, list] = {}
        for box in image.boxes:
            by_class.setdefault(box.class_id, []).append(box)
        for class_id in sorted(by_class):
            if args.class_id is not None and class_id != args.class_id:
                continue
            survivors = nms(by_class[class_id], cfg.pre_nms_threshold)[:cfg.qubit_cap]
            enh = replace(cfg.enh, enabled=cfg.scheme is Scheme.QSQS_ENH)
            instance = build_q(survivors, cfg.weights, enh)
            entries.append({"image_id": image.image_id, "class_id": class_id,
                            "qubo": instance.to_json_dict()})
    payload = {"format_version": 1, "qubos": entries}
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsqs",
        description="QUBO-based suppression of redundant detections, "
                    "with evaluation and benchmarking tools.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common_suppression(p):
        p.add_argument("--detections", required=True, help="detection JSON file")
        p.add_argument("--scheme", default="qsqs",
                       help="nms, soft-nms, qqs, qsqs, or qsqs-enh (default qsqs)")
        p.add_argument("--config", default=None,
                       help="configuration JSON; its fields override flags")
        p.add_argument("--seed", type=int, default=0,
                       help="master seed for all stochastic steps (default 0)")
        p.add_argument("--reads", type=int, default=1000,
                       help="annealer reads per objective (default 1000)")
        p.add_argument("--sweeps", type=int, default=150,
                       help="annealer sweeps per read (default 150)")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker threads over images (default 1)")

    p = sub.add_parser("suppress", help="run a suppression scheme over a file")
    add_common_suppression(p)
    p.add_argument("--out", required=True, help="output detection JSON file")
    p.set_defaults(handler=_cmd_suppress)

    p = sub.add_parser("eval", help="evaluate detections against ground truth")
    p.add_argument("--detections", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--metric", choices=["map", "lamr"], default="map")
    p.add_argument("--iou", type=float, default=0.5,
                   help="matching IoU threshold (default 0.5)")
    p.add_argument("--ap-mode", choices=sorted(_AP_MODES), default="all-point",
                   help="average-precision mode (default all-point)")
    p.add_argument("--curves", default=None, metavar="PREFIX",
                   help="also write PREFIX.pr.csv and PREFIX.fppi.csv")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("bench", help="sweep pre-NMS threshold and variable cap")
    add_common_suppression(p)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--grid", required=True,
                   help="sweep syntax Nt=START:STEP:STOP,cap=START:STEP:STOP; "
                        "grid values override config and flags")
    p.add_argument("--metric", choices=["map", "lamr"], default="map")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser("solver-compare",
                       help="benchmark samplers against the exhaustive oracle")
    p.add_argument("--n-vars", required=True,
                   help="comma-separated variable counts, e.g. 9,15")
    p.add_argument("--instances", type=int, default=100,
                   help="instances per variable count (default 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reads", type=int, default=1000,
                   help="annealer reads (default 1000)")
    p.add_argument("--no-oracle", action="store_true",
                   help="skip the exhaustive oracle (required above its cap)")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(handler=_cmd_solver_compare)

    p = sub.add_parser("dump-qubo",
                       help="emit the per-image, per-class objective matrices")
    p.add_argument("--detections", required=True)
    p.add_argument("--scheme", default="qsqs")
    p.add_argument("--config", default=None)
    p.add_argument("--image", default=None, help="restrict to one image_id")
    p.add_argument("--class-id", type=int, default=None,
                   help="restrict to one class")
    p.add_argument("--out", default=None, help="JSON path (default stdout)")
    p.set_defaults(handler=_cmd_dump_qubo)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except QsqsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())
