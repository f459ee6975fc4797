"""Command-line entry point.

Subcommands:
    run <config.json>    simulate one configuration, write the JSON report
    sweep <sweep.json>   vary the partition count, write a CSV of load metrics
    verify <suite>       run a named verification suite

Exit codes: 0 success, 1 verification failure, 2 invalid configuration.

``--seed`` and ``--out`` override the ``RAMPAGG_SEED`` / ``RAMPAGG_OUT``
environment variables, which in turn override values from the config file.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import ConfigInvalid, RampAggError, TooManyDropouts
from .harness import RunConfig, simulate
from .protocol import derive_seed
from .verify import SUITES, run_suite

ENV_SEED = "RAMPAGG_SEED"
ENV_OUT = "RAMPAGG_OUT"


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config file: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigInvalid("config file: top level must be a JSON object")
    return data


def _resolve_seed(flag_seed, config_seed: int) -> int:
    if flag_seed is not None:
        return flag_seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigInvalid(f"{ENV_SEED}: not an integer: {env!r}") from None
    return config_seed


def _resolve_out(flag_out) -> str:
    if flag_out is not None:
        return flag_out
    return os.environ.get(ENV_OUT, ".")


def _print_summary(report) -> None:
    loads = report.loads
    print(f"users={report.config.n_users} prime={report.prime}")
    print(f"aggregate length={len(report.aggregate)}")
    print(f"r_server={loads.r_server} ({float(loads.r_server):.6g} of model length)")
    print(f"r_user_max={loads.r_user_max} r_user_avg={loads.r_user_avg}")
    print(
        f"edges={report.total_edges} silent={report.silent_edges} "
        f"delay={report.delay}"
    )


def cmd_run(args) -> int:
    data = _load_json(args.config)
    config = RunConfig.from_dict(data)
    config = config.replace(master_seed=_resolve_seed(args.seed, config.master_seed))
    out_dir = _resolve_out(args.out)
    report, result = simulate(config)
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    transcript_path = os.path.join(out_dir, "transcript.csv")
    with open(transcript_path, "w", encoding="utf-8", newline="") as fh:
        result.transcript.to_csv(fh)
    _print_summary(report)
    print(f"report: {report_path}")
    print(f"transcript: {transcript_path}")
    return 0


def _sweep_task(config: RunConfig, k: int, rep: int):
    run = config.replace(
        k_parts=k, master_seed=derive_seed(config.master_seed, f"sweep:{k}:{rep}")
    )
    report, _ = simulate(run)
    return {
        "k_parts": k,
        "repetition": rep,
        "r_server": float(report.loads.r_server),
        "r_user_max": float(report.loads.r_user_max),
        "edges": report.total_edges,
        "delay": report.delay,
    }


def cmd_sweep(args) -> int:
    data = _load_json(args.sweep)
    for key in ("base", "k_values"):
        if key not in data:
            raise ConfigInvalid(f"sweep spec: missing field {key!r}")
    unknown = set(data) - {"base", "k_values", "repetitions", "out_csv"}
    if unknown:
        raise ConfigInvalid(f"sweep spec: unknown fields {sorted(unknown)}")
    base = RunConfig.from_dict(data["base"])
    base = base.replace(master_seed=_resolve_seed(args.seed, base.master_seed))
    k_values = data["k_values"]
    if not isinstance(k_values, list) or not all(
        isinstance(k, int) and not isinstance(k, bool) for k in k_values
    ):
        raise ConfigInvalid("sweep spec: k_values must be a list of integers")
    repetitions = data.get("repetitions", 1)
    if not isinstance(repetitions, int) or isinstance(repetitions, bool):
        raise ConfigInvalid("sweep spec: repetitions must be an integer")
    if repetitions < 1:
        raise ConfigInvalid("sweep spec: repetitions must be at least 1")
    out_csv = data.get("out_csv", "sweep.csv")
    if not isinstance(out_csv, str) or not out_csv:
        raise ConfigInvalid("sweep spec: out_csv must be a non-empty path")

    tasks = []
    for k in k_values:
        try:
            base.replace(k_parts=k).resolve()
        except ConfigInvalid as exc:
            print(f"skipping k_parts={k}: {exc}", file=sys.stderr)
            continue
        for rep in range(repetitions):
            tasks.append((k, rep))

    if args.jobs and args.jobs > 1 and tasks:
        ks = [k for k, _ in tasks]
        reps = [rep for _, rep in tasks]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_task, [base] * len(tasks), ks, reps))
    else:
        rows = [_sweep_task(base, k, rep) for k, rep in tasks]

    out_dir = _resolve_out(args.out)
    os.makedirs(out_dir, exist_ok=True)
    path = out_csv if os.path.isabs(out_csv) else os.path.join(out_dir, out_csv)
    fields = ["k_parts", "repetition", "r_server", "r_user_max", "edges", "delay"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    print(f"{len(rows)} rows -> {path}")
    return 0


def cmd_verify(args) -> int:
    results = run_suite(args.suite)
    failures = 0
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name} ({check.elapsed:.2f}s): {check.detail}")
        if not check.passed:
            failures += 1
    if failures:
        print(f"{failures} of {len(results)} checks failed", file=sys.stderr)
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rampagg",
        description="Grouped secret-sharing aggregation simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration")
    p_run.add_argument("config", help="path to a RunConfig JSON file")
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--out", help="output directory (default: current)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep partition counts")
    p_sweep.add_argument("sweep", help="path to a sweep spec JSON file")
    p_sweep.add_argument("--seed", type=int, help="override the master seed")
    p_sweep.add_argument("--out", help="output directory (default: current)")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite", choices=sorted(SUITES))
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TooManyDropouts as exc:
        print(f"error: unrecoverable dropout pattern: {exc}", file=sys.stderr)
        return 2
    except RampAggError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
