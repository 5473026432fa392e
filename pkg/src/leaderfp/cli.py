"""``leaderfp`` command line: classify maps, iterate, certify bounds, emit reports.

Exit codes: 0 when every task succeeded, 1 when a task errored or contradicted
the instance's ground truth, 2 for usage or config errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .errors import ConfigError, LeaderFPError
from .gallery import list_instances
from .picard import DEFAULT_CAUCHY_TOL, DEFAULT_MAX_ITER, iterate
from .runner import ExperimentConfig, dumps, run

GRAMMAR_HELP = """\
expression grammar (see GRAMMAR.md):
  expr    := 'if' cmp 'then' expr 'else' expr | sum
  cmp     := sum ('<' | '<=' | '=' | '>=' | '>') sum
  sum     := term (('+' | '-') term)*
  term    := unary (('*' | '/') unary)*
  unary   := '-' unary | power
  power   := atom ('^' unary)?          (right-associative)
  atom    := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
  func    := min | max | abs;  variables: t, n, x1..xd
"""


def _instance_arg(value: str):
    path = Path(value)
    if path.suffix == ".json" and path.exists():
        return json.loads(path.read_text())
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leaderfp",
        description="Numerical checks for Leader-type contractions on b-metric spaces.",
        epilog=GRAMMAR_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list built-in instances")
    p.add_argument("--match", help="only names containing this substring")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", required=True,
                        help="registered instance name, or a .json file with an inline definition")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=10_000, help="sample size (default 10000)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    sub.add_parser("axioms", parents=[common], help="check the b-metric axioms and domain invariance")

    p = sub.add_parser("classify", parents=[common], help="test contraction classes over an epsilon grid")
    p.add_argument("--epsilon", type=float, nargs="+", help="epsilon grid (default: standard grid)")
    p.add_argument("--delta-ladder", type=float, nargs="+", help="absolute delta values to try")
    p.add_argument("--r-max", type=int, default=64)

    p = sub.add_parser("iterate", parents=[common], help="run Picard iteration")
    p.add_argument("--x0", type=float, nargs="+", help="start point coordinates")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--tol", type=float, default=DEFAULT_CAUCHY_TOL, help="Cauchy tolerance")

    for name, text in (("certify", "compute and verify the retract bound"),
                       ("profile", "first-entry profile of B(z, K) into B(z, eps)")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--k-radius", type=float, help="outer radius K")

    p = sub.add_parser("run", help="run a JSON experiment config")
    p.add_argument("-c", "--config", required=True, help="config file")
    p.add_argument("--seed", type=int, help="override sampling seed")
    p.add_argument("--out", help="override output path")
    p.add_argument("--format", choices=("json", "csv"), help="override output format")
    return parser


def _config_from_args(args) -> dict:
    task: dict = {"kind": args.command}
    if args.command == "classify":
        if args.epsilon:
            task["epsilons"] = args.epsilon
        if args.delta_ladder:
            task["delta_ladder"] = args.delta_ladder
        task["r_max"] = args.r_max
    elif args.command == "iterate":
        if args.x0:
            task["x0"] = args.x0
        task["max_iter"] = args.max_iter
        task["tol"] = args.tol
    elif args.command in ("certify", "profile"):
        if args.epsilon is not None:
            task["epsilon"] = args.epsilon
        if args.k_radius is not None:
            task["K"] = args.k_radius
    return {
        "instance": _instance_arg(args.instance),
        "sampling": {"seed": args.seed, "count": args.samples},
        "tasks": [task],
        "output": {"format": args.format, "path": args.out},
    }


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _iterate_csv(config: ExperimentConfig, path: str | None) -> int:
    task = config.tasks[0]
    inst = config.instance
    x0 = task.get("x0", list(inst.x0))
    orbit, _ = iterate(inst.map, x0, max_iter=int(task.get("max_iter", DEFAULT_MAX_ITER)),
                       cauchy_tol=float(task.get("tol", DEFAULT_CAUCHY_TOL)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(orbit.header())
    gt = inst.ground_truth
    w.writerows(orbit.rows(gt.fixed_point if gt.fixed_point is not None else gt.picard_limit))
    _emit(buf.getvalue(), path)
    return 0


def _run_config(data: dict) -> int:
    config = ExperimentConfig.from_dict(data)
    if config.output_format == "csv":
        kinds = {t["kind"] for t in config.tasks}
        if len(config.tasks) == 1 and kinds == {"iterate"}:
            return _iterate_csv(config, config.output_path)
        if config.output_path is None:
            raise ConfigError("csv output with several tasks needs an output path")
        # orbits go next to the report, one file per iterate task
        base = Path(config.output_path)
        for i, task in enumerate(config.tasks):
            if task["kind"] == "iterate":
                task["csv_path"] = str(base.with_name(f"{base.stem}_task{i}.csv"))
        config.output_path = str(base.with_suffix(".json"))
    report = run(config)
    _emit(dumps(report.to_dict()), config.output_path)
    for t in report.payload["tasks"]:
        if t["status"] != "ok":
            print(f"{t['kind']}: {t['status']}: {t.get('error') or '; '.join(t['problems'])}",
                  file=sys.stderr)
    return report.exit_code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "list":
            for name, summary in list_instances(args.match):
                print(f"{name:26s} {summary}")
            return 0
        if args.command == "run":
            try:
                data = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            if args.seed is not None:
                data.setdefault("sampling", {})["seed"] = args.seed
            if args.out is not None or args.format is not None:
                out = data.setdefault("output", {})
                if args.out is not None:
                    out["path"] = args.out
                if args.format is not None:
                    out["format"] = args.format
            return _run_config(data)
        if args.format == "csv" and args.command != "iterate":
            raise ConfigError("csv output is available for iterate only; use run -c for mixed reports")
        return _run_config(_config_from_args(args))
    except (ConfigError, LeaderFPError) as exc:
        print(f"leaderfp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
