"""Command-line entry point.

Every subcommand prints its JSON payload on stdout, optionally writes it
(or a CSV table) to ``--out``, and records a run manifest next to the
output (``<out>.manifest.json``) or in the working directory
(``<command>.manifest.json``).  Exit codes: 0 success, 2 bad input, 1
internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__, experiments, sim
from .errors import InvalidArgumentError
from .exit_time import ExitSpec, exit_stats
from .ftl_value import ftl_value, mpr_value
from .model import ProblemConfig
from .strategy_b import strategy_b_value

DEFAULTS = {"mu": 1.0, "epsilon": 0.4, "x0": [2.0, 1.4, 0.0]}


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None
    version: str
    outputs: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    finished_at: str = ""

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2) + "\n", encoding="utf-8")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="ProblemConfig JSON file")
    p.add_argument("--mu", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--x0", type=_floats, help="comma-separated, non-increasing")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, help="output file (.json or .csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ftlscan", description="Sequential search with follow-the-leader scanning.")
    parser.add_argument("--version", action="version", version=f"ftlscan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("value", help="analytic expected FTL time")
    _add_config(p)
    _add_out(p)

    p = sub.add_parser("simulate", help="Monte Carlo search times")
    _add_config(p)
    _add_out(p)
    p.add_argument("--policy", choices=["ftl", "fixed", "strategy_b"], default="ftl")
    p.add_argument("--index", type=int, default=0, help="box for the fixed policy (0-based)")
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--path-csv", type=Path, help="dump one recorded path (replicate 0)")

    p = sub.add_parser("exit", help="two-barrier exit statistics")
    _add_out(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--sigma2", type=float, default=1.0)

    p = sub.add_parser("strategy-b", help="analytic Strategy B time for three boxes")
    _add_config(p)
    _add_out(p)

    p = sub.add_parser("scan", help="grid scan of FTL minus Strategy B")
    _add_out(p)
    p.add_argument("--epsilon", type=float, default=0.4)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--x1", type=_floats, default=[1.5, 2.5], help="min,max")
    p.add_argument("--x2", type=_floats, default=[1.0, 1.8], help="min,max")
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("table1", help="five-row FTL vs Strategy B comparison (x100)")
    _add_out(p)

    p = sub.add_parser("klimko", help="FTL values from two priors sharing the leader")
    _add_out(p)
    p.add_argument("--epsilons", type=_floats, default=[0.1, 0.2, 0.3])
    p.add_argument("--mu", type=float, default=1.0)

    p = sub.add_parser("invariants", help="quick invariance and path-construction checks")
    _add_config(p)
    _add_out(p)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _resolve_config(args) -> ProblemConfig:
    merged = dict(DEFAULTS)
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidArgumentError("config must be a JSON object")
        merged.update({k: data[k] for k in ("mu", "epsilon", "x0") if k in data})
    for key in ("mu", "epsilon", "x0"):
        if getattr(args, key, None) is not None:
            merged[key] = getattr(args, key)
    return ProblemConfig.from_dict(merged)


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _dumps(payload) -> str:
    return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"


def _cmd_value(args, params):
    cfg = _resolve_config(args)
    params["effective_config"] = cfg.to_dict()
    res = ftl_value(cfg)
    return res.to_dict(), None


def _cmd_simulate(args, params):
    cfg = _resolve_config(args)
    if args.reps < 2:
        raise InvalidArgumentError("--reps must be at least 2")
    if args.threads < 1:
        raise InvalidArgumentError("--threads must be positive")
    policy = {"ftl": sim.Policy.ftl(), "fixed": sim.Policy.fixed(args.index),
              "strategy_b": sim.Policy.strategy_b()}[args.policy]
    params["effective_config"] = cfg.to_dict()
    est = sim.estimate_mean_time(cfg, policy, args.dt, args.reps, args.seed, threads=args.threads)
    payload = {"policy": args.policy, **est.to_dict()}
    extra = []
    if args.path_csv is not None:
        rec = sim.simulate_path(cfg, policy, args.dt, sim.replicate_seed(args.seed, 0))
        rec.to_csv(args.path_csv)
        extra.append(str(args.path_csv))
    return payload, None, extra


def _cmd_exit(args, params):
    spec = ExitSpec(args.x, args.a, args.b, args.lam, args.sigma2)
    return exit_stats(spec).to_dict(), None


def _cmd_strategy_b(args, params):
    cfg = _resolve_config(args)
    params["effective_config"] = cfg.to_dict()
    res = strategy_b_value(cfg)
    payload = res.to_dict()
    payload["e_ftl"] = ftl_value(cfg).value
    return payload, None


def _cmd_scan(args, params):
    if len(args.x1) != 2 or len(args.x2) != 2:
        raise InvalidArgumentError("--x1 and --x2 take min,max")
    grid = experiments.ScanGrid(args.x1[0], args.x1[1], args.x2[0], args.x2[1], args.step)
    cells = experiments.scan_counterexamples(args.epsilon, args.mu, grid, threads=args.threads)
    payload = [asdict(c) for c in cells]
    return payload, cells


def _cmd_table1(args, params):
    rows = experiments.reproduce_table1()
    return [asdict(r) for r in rows], rows


def _cmd_klimko(args, params):
    rows = experiments.klimko_check(args.epsilons, args.mu)
    return [{**asdict(r), "diff": r.diff, "b_faster": r.b_faster} for r in rows], rows


def _cmd_invariants(args, params):
    cfg = _resolve_config(args)
    params["effective_config"] = cfg.to_dict()
    v = ftl_value(cfg).value
    shifted = [ftl_value(cfg.shifted(c)).value for c in (-3.0, 5.0)]
    scaled = ftl_value(ProblemConfig(2.0 * cfg.mu, cfg.epsilon, tuple(x / 2.0 for x in cfg.x0))).value
    report = sim.theorem1_probe(sim.build_driftless_paths(cfg.n_boxes, 1.0, 1e-3, args.seed))
    payload = {
        "value": v,
        "translation_rel_err": max(abs(s - v) for s in shifted) / v if v else 0.0,
        "rescaling_rel_err": abs(4.0 * scaled - v) / v if v else 0.0,
        "tie_value": mpr_value(cfg.n_boxes, cfg.mu, cfg.epsilon),
        "path_checks": {k: asdict(c) for k, c in report.checks.items()},
    }
    return payload, None


COMMANDS = {
    "value": _cmd_value,
    "simulate": _cmd_simulate,
    "exit": _cmd_exit,
    "strategy-b": _cmd_strategy_b,
    "scan": _cmd_scan,
    "table1": _cmd_table1,
    "klimko": _cmd_klimko,
    "invariants": _cmd_invariants,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    try:
        result = COMMANDS[args.command](args, params)
        payload, records = result[0], result[1]
        extra = result[2] if len(result) > 2 else []
        text = _dumps(payload)
        outputs = list(extra)
        if args.out is not None:
            if args.out.suffix.lower() == ".csv":
                if records is None:
                    raise InvalidArgumentError(f"{args.command} has no tabular output; use .json")
                args.out.write_text(experiments.records_to_csv(records), encoding="utf-8", newline="\n")
            else:
                args.out.write_text(text, encoding="utf-8", newline="\n")
            outputs.insert(0, str(args.out))
        sys.stdout.write(text)
    except InvalidArgumentError as exc:
        print(f"ftlscan {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"ftlscan {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest_path = (Path(str(args.out) + ".manifest.json") if args.out is not None
                     else Path(f"{args.command}.manifest.json"))
    RunManifest(args.command, params, params.get("seed"), __version__, outputs,
                round(time.perf_counter() - start, 6),
                time.strftime("%Y-%m-%dT%H:%M:%S%z")).write(manifest_path)
    return 0


def main() -> None:
    sys.exit(run())
