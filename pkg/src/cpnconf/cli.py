"""Command-line entry point: ``cpnconf validate-model | check | generate | reference-model``.

Exit codes: 0 success, 1 violations/deviations (see each command), 2 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .diagnostics import aggregate, export_enhanced_model, write_summary_json
from .errors import CPNError, ModelError
from .eventlog import read_log, write_log
from .modelfile import dumps_model, load_model, model_hash
from .replay import replay_log
from .report import write_deviations, write_fitness
from .trading import SimConfig, build_reference_model, load_config, simulate
from .validation import validate_conservative_workflow, validate_syntax

log = logging.getLogger("cpnconf")

EXIT_OK, EXIT_DEVIATIONS, EXIT_INPUT = 0, 1, 2
REFERENCE = "reference"


@dataclass
class RunManifest:
    command: str
    inputs: dict = field(default_factory=dict)
    seed: Optional[int] = None
    model_hash: Optional[str] = None
    traces: int = 0
    events: int = 0
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")


def _load_model(spec: str):
    if spec == REFERENCE:
        return build_reference_model()
    return load_model(spec)


def _model_report(cpn):
    report = validate_syntax(cpn)
    if report.ok:
        report.extend(validate_conservative_workflow(cpn))
    return report


def cmd_validate_model(args) -> int:
    try:
        cpn = _load_model(args.model)
    except OSError as exc:
        print(f"error: cannot read {args.model}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelError as exc:
        print(f"error: {args.model}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = _model_report(cpn)
    for v in report:
        print(v)
    if report.ok:
        print(f"{args.model}: valid conservative-workflow net "
              f"({len(cpn.places)} places, {len(cpn.transitions)} transitions)")
        return EXIT_OK
    print(f"{len(report)} violation(s)")
    return EXIT_DEVIATIONS


def cmd_check(args) -> int:
    started = time.perf_counter()
    try:
        cpn = _load_model(args.model)
        report = _model_report(cpn)
        if not report.ok:
            print(f"error: model {args.model} is not a valid conservative-workflow net:\n{report}", file=sys.stderr)
            return EXIT_INPUT
        if not cpn.initial_marking.is_empty():
            print("error: replay needs a model with an empty initial marking", file=sys.stderr)
            return EXIT_INPUT
        event_log = read_log(args.log, cpn)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CPNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    replay = replay_log(cpn, event_log, jobs=args.jobs)
    for trace_id, reasons in replay.skipped:
        print(f"warning: skipped trace {trace_id}: {'; '.join(reasons)}", file=sys.stderr)
    summary = aggregate(replay.results, cpn)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "deviations": out / "deviations.tsv",
        "fitness": out / "fitness.csv",
        "diagnostics": out / "diagnostics.json",
        "model": out / "enhanced_model.dot",
    }
    write_deviations(replay.results, paths["deviations"])
    write_fitness(replay.results, paths["fitness"])
    write_summary_json(summary, paths["diagnostics"])
    export_enhanced_model(cpn, summary, paths["model"])

    kinds = Counter()
    for r in replay.results:
        kinds.update(d.kind.code for d in r.deviations)
    total = sum(kinds.values())
    print(f"traces replayed: {len(replay.results)} (skipped {len(replay.skipped)})")
    print("deviations: " + " ".join(f"{c}={kinds.get(c, 0)}" for c in ("CF", "RV", "RC", "NT")) + f" total={total}")
    print(f"jumps j={summary.jumps} transfers k={summary.transfers} fitness={summary.fitness:.4f}")
    for m in summary.measures.values():
        if m.total and m.measure < 1.0:
            print(f"  local measure {m.activity}: {m.measure:.2f}")

    manifest = RunManifest(
        "check",
        {"model": str(args.model), "log": str(args.log)},
        seed=event_log.meta.get("seed"),
        model_hash=model_hash(cpn),
        traces=len(event_log),
        events=event_log.event_count,
        outputs=[str(p) for p in paths.values()],
        wall_time_s=round(time.perf_counter() - started, 3),
    )
    manifest.write(out / "manifest.json")
    if args.fail_on_deviation and total:
        return EXIT_DEVIATIONS
    return EXIT_OK


_FLAG_TO_FIELD = {
    "traces": "traces",
    "buy": "buy_orders_per_trace",
    "sell": "sell_orders_per_trace",
    "seed": "rng_seed",
    "skip_buy": "skip_submission_rate_buy",
    "skip_sell": "skip_submission_rate_sell",
    "deadlock_rate": "sell_deadlock_rate",
    "corruption_rate": "corruption_rate",
    "rule_violation_rate": "rule_violation_rate",
}


def cmd_generate(args) -> int:
    started = time.perf_counter()
    try:
        data = {}
        if args.config:
            data = load_config(args.config).to_dict()
        elif args.faithful:
            data = SimConfig.faithful().to_dict()
        if args.skip_submission_rate is not None:
            data["skip_submission_rate_buy"] = data["skip_submission_rate_sell"] = args.skip_submission_rate
        for flag, name in _FLAG_TO_FIELD.items():
            value = getattr(args, flag)
            if value is not None:
                data[name] = value
        cfg = SimConfig.from_dict(data)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: invalid generator config: {exc}", file=sys.stderr)
        return EXIT_INPUT

    event_log, injected = simulate(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_log(event_log, out)
    n = len(event_log)
    print(f"wrote {n} traces, {event_log.event_count} events"
          + (f" ({event_log.event_count / n:.2f} per trace)" if n else "") + f" to {out}")
    print(f"injected: skipped submissions={injected.skipped_submissions} deadlocks={injected.deadlocks} "
          f"corruptions={injected.corruptions} priority breaches={injected.priority_breaches}")
    manifest = RunManifest(
        "generate",
        {"config": str(args.config) if args.config else None, "settings": cfg.to_dict()},
        seed=cfg.rng_seed,
        traces=n,
        events=event_log.event_count,
        outputs=[str(out)],
        wall_time_s=round(time.perf_counter() - started, 3),
    )
    manifest.write(out.with_name(out.name + ".manifest.json"))
    return EXIT_OK


def cmd_reference_model(args) -> int:
    text = dumps_model(build_reference_model())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpnconf", description="Conformance checking with colored Petri nets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-model", help="check a model file for structural violations")
    p.add_argument("model", nargs="?", default=None, help=f"model JSON file, or '{REFERENCE}'")
    p.add_argument("--model", dest="model_opt", default=None)
    p.set_defaults(func=cmd_validate_model)

    p = sub.add_parser("check", help="replay a log on a model and write deviation reports")
    p.add_argument("--model", default=REFERENCE, help=f"model JSON file (default: {REFERENCE})")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fail-on-deviation", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("generate", help="simulate an order book and write a JSONL event log")
    p.add_argument("--config", help="JSON file with generator settings")
    p.add_argument("--faithful", action="store_true", help="start from a fault-free configuration")
    p.add_argument("--out", required=True)
    p.add_argument("--traces", type=int)
    p.add_argument("--buy", type=int, help="buy orders per trace")
    p.add_argument("--sell", type=int, help="sell orders per trace")
    p.add_argument("--seed", type=int)
    p.add_argument("--skip-submission-rate", type=float, help="applies to both sides")
    p.add_argument("--skip-buy", type=float)
    p.add_argument("--skip-sell", type=float)
    p.add_argument("--deadlock-rate", type=float)
    p.add_argument("--corruption-rate", type=float)
    p.add_argument("--rule-violation-rate", type=float)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reference-model", help="print the bundled order-book model as JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reference_model)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CPNCONF_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate-model":
        args.model = args.model_opt or args.model
        if args.model is None:
            parser.error("validate-model needs a model path")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
