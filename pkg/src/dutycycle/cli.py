"""Command-line front end.

Subcommands:
  generate   synthesize a seeded two-device binary trace CSV
  ingest     threshold a raw readings CSV into a binary trace CSV
  run        run the offline and/or online scheduler on one trace pair
  verify     run a verification suite and exit 0 only if it passes

Exit codes: 0 success, 1 verification failure, 2 usage or data error. All
randomness flows from --seed; without the flag the DUTYCYCLE_SEED
environment variable applies, then a fixed default, never wall-clock time.
Every report embeds the fully resolved configuration for reproducibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .graph import build_graph
from .harness import (
    verify_bins,
    verify_expected_cat,
    verify_optimality,
    verify_ratio_bound,
)
from .metrics import compute_heterogeneity, pair_metrics, ratio_online_to_offline
from .offline import offline_duty_cycle
from .online import OnlineConfig, OnlineMode, online_duty_cycle
from .traces import (
    DEFAULT_SEED,
    ArrivalModel,
    TraceFormatError,
    estimate_prob,
    generate_pair,
    read_pair_csv,
    read_raw_csv,
    threshold_trace,
    write_pair_csv,
)

ENV_SEED = "DUTYCYCLE_SEED"
DEFAULT_ETA = 0.75
DEFAULT_PERIOD = 600  # ten hours of one-minute slots, the usual field setup


def _probability(text: str) -> float:
    value = float(text)
    if not (0.0 <= value <= 1.0):
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text}")
    return value


def _efficiency(text: str) -> float:
    value = float(text)
    if not (0.0 < value <= 1.0):
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0.0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise SystemExit(f"error: {ENV_SEED} must be an integer, got {env!r}") from exc
    return DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dutycycle",
        description="Duty-cycling simulator for pairs of energy-harvesting devices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a seeded two-device binary trace CSV")
    gen.add_argument("--period", type=_positive_int, default=DEFAULT_PERIOD,
                     help="slots per period (default 600, one-minute slots over 10 hours)")
    gen.add_argument("--prob", type=_probability, required=True,
                     help="per-slot harvest probability for both devices")
    gen.add_argument("--seed", type=int, default=None, help="RNG seed")
    gen.add_argument("--out", required=True, help="output CSV path (slot,b_u,b_v)")

    ing = sub.add_parser("ingest", help="threshold raw readings into a binary trace CSV")
    ing.add_argument("--raw", required=True, help="raw CSV path (slot,device_id,reading)")
    ing.add_argument("--threshold", type=_positive_float, required=True,
                     help="usability threshold in volts; readings >= threshold give b=1")
    ing.add_argument("--period", type=_positive_int, required=True, help="slots per period")
    ing.add_argument("--out", required=True, help="output CSV path (slot,b_u,b_v)")

    run = sub.add_parser("run", help="run scheduler(s) over one trace pair")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", help="binary trace CSV (slot,b_u,b_v)")
    src.add_argument("--prob", type=_probability, help="synthesize traces with this probability")
    run.add_argument("--period", type=_positive_int, default=DEFAULT_PERIOD,
                     help="period length for synthesized traces (default 600)")
    run.add_argument("--eta", type=_efficiency, default=DEFAULT_ETA,
                     help="charging efficiency (default 0.75)")
    run.add_argument("--algo", choices=("offline", "online", "both"), default="both")
    run.add_argument("--mode", choices=("matching", "slotsim"), default="matching",
                     help="online bookkeeping mode")
    run.add_argument("--seed", type=int, default=None, help="RNG seed")
    run.add_argument("--format", choices=("json", "csv"), default="json")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", choices=("t1", "t2", "t4", "bins", "all"), required=True,
                     help="t1: offline optimality vs oracle; t2: mean CAT vs the "
                          "closed-form reference; t4: online/offline ratio bound; "
                          "bins: occupancy concentration")
    ver.add_argument("--trials", type=_positive_int, default=None,
                     help="trial count override (suite defaults: t1 500, others 10000)")
    ver.add_argument("--seed", type=int, default=None, help="RNG seed")
    return parser


def cmd_generate(args) -> int:
    seed = _resolve_seed(args.seed)
    model = ArrivalModel(prob_harvest=args.prob, period_len=args.period, seed=seed)
    trace_u, trace_v = generate_pair(model)
    try:
        write_pair_csv(trace_u, trace_v, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 2
    config = {"command": "generate", "period": args.period, "prob": args.prob,
              "seed": seed, "out": args.out}
    print(f"# config: {json.dumps(config, sort_keys=True)}")
    print(f"wrote {args.period} slots for devices u,v to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    try:
        raws = read_raw_csv(args.raw)
    except OSError as exc:
        print(f"error: cannot read {args.raw}: {exc}", file=sys.stderr)
        return 2
    except TraceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if len(raws) != 2:
        print(
            f"error: {args.raw}: need exactly two device ids for a pair, "
            f"found {sorted(raws)}",
            file=sys.stderr,
        )
        return 2
    id_u, id_v = sorted(raws)
    try:
        trace_u = threshold_trace(raws[id_u], args.threshold, args.period)
        trace_v = threshold_trace(raws[id_v], args.threshold, args.period)
        write_pair_csv(trace_u, trace_v, args.out)
    except (TraceFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 2
    config = {"command": "ingest", "raw": args.raw, "threshold": args.threshold,
              "period": args.period, "out": args.out,
              "device_u": id_u, "device_v": id_v}
    print(f"# config: {json.dumps(config, sort_keys=True)}")
    print(f"wrote thresholded pair ({id_u} -> u, {id_v} -> v) to {args.out}")
    return 0


def cmd_run(args) -> int:
    seed = _resolve_seed(args.seed)
    if args.trace is not None:
        try:
            trace_u, trace_v = read_pair_csv(args.trace)
        except OSError as exc:
            print(f"error: cannot read {args.trace}: {exc}", file=sys.stderr)
            return 2
        except TraceFormatError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        prob_active = None  # estimate from each device's own history
        source = {"trace": args.trace, "period": trace_u.period_len}
    else:
        model = ArrivalModel(prob_harvest=args.prob, period_len=args.period, seed=seed)
        trace_u, trace_v = generate_pair(model)
        prob_active = args.prob
        source = {"prob": args.prob, "period": args.period}

    config = {
        "command": "run",
        "algo": args.algo,
        "eta": args.eta,
        "mode": args.mode,
        "seed": seed,
        "format": args.format,
        **source,
    }
    payload: dict = {"config": config}
    rows = []

    offline = None
    if args.algo in ("offline", "both"):
        offline = offline_duty_cycle(build_graph(trace_u, trace_v, args.eta))
        payload["offline"] = offline.to_json_dict()
        rows.append(
            pair_metrics("pair1/offline", trace_u, trace_v, offline.cat_total, offline.sat_total)
        )
    online = None
    if args.algo in ("online", "both"):
        cfg = OnlineConfig(
            prob_active=prob_active, eta=args.eta, seed=seed, mode=OnlineMode(args.mode)
        )
        online = online_duty_cycle(trace_u, trace_v, cfg)
        payload["online"] = online.to_json_dict()
        rows.append(
            pair_metrics(
                f"pair1/online[{args.mode}]", trace_u, trace_v,
                online.cat_total, online.sat_total,
            )
        )
    if offline is not None and online is not None:
        payload["pair"] = {
            "ratio": ratio_online_to_offline(online, offline),
            "heterogeneity": compute_heterogeneity(trace_u, trace_v),
            "p_hat_u": estimate_prob(trace_u),
            "p_hat_v": estimate_prob(trace_v),
        }

    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(f"# config: {json.dumps(config, sort_keys=True)}")
        print(rows[0].CSV_HEADER)
        for row in rows:
            print(row.to_csv_row())
        if "pair" in payload:
            print(f"# ratio: {payload['pair']['ratio']!r}")
    return 0


def _print_suite(result: dict) -> None:
    suite = result["suite"]
    if suite == "t1":
        print(
            f"t1 optimality: {result['trials']} instances at period "
            f"{result['period_len']}, mismatches={len(result['mismatches'])}"
        )
        for bad in result["mismatches"][:10]:
            print(f"  instance {bad['instance']}: offline={bad['offline']} oracle={bad['oracle']}")
    elif suite == "t2":
        for cell in result["cells"]:
            print(
                f"t2 p={cell['p']:g}: mean_cat={cell['mean_cat']:.3f} "
                f"(stderr {cell['stderr']:.3f}) expected={cell['expected']:.1f} "
                f"gap={cell['relative_gap'] * 100:+.2f}% within_1pct={cell['within_1pct']}"
            )
    elif suite == "t4":
        for cell in result["cells"]:
            print(
                f"t4 p={cell['p']:g} {cell['mode']}: ratio_of_means={cell['ratio_of_means']:.4f} "
                f"bound={cell['bound']:.4f} mean_ratio={cell['mean_ratio']:.4f} "
                f"(stderr {cell['ratio_stderr']:.5f}) ok={cell['bound_satisfied']} "
                f"dominated={cell['offline_dominates']}"
            )
    elif suite == "bins":
        rep = result["report"]
        print(
            f"bins n={rep['n_balls']} m={rep['n_bins']} |A|={rep['subset_size']} "
            f"eps={rep['epsilon']:g}: freq={rep['empirical_freq']:.4f} "
            f"bound={rep['prob_bound']:.4f} mean_S={rep['empirical_mean']:.3f} "
            f"exact={rep['exact_mean']:.3f} rel_err={rep['mean_rel_error'] * 100:.3f}%"
        )
    print(f"suite {suite}: {'PASS' if result['passed'] else 'FAIL'}")


def cmd_verify(args) -> int:
    seed = _resolve_seed(args.seed)
    config = {"command": "verify", "suite": args.suite, "trials": args.trials, "seed": seed}
    print(f"# config: {json.dumps(config, sort_keys=True)}")
    suites = {
        "t1": lambda: verify_optimality(trials=args.trials or 500, seed=seed),
        "t2": lambda: verify_expected_cat(trials=args.trials or 10_000, seed=seed),
        "t4": lambda: verify_ratio_bound(trials=args.trials or 10_000, seed=seed),
        "bins": lambda: verify_bins(trials=args.trials or 10_000, seed=seed),
    }
    names = list(suites) if args.suite == "all" else [args.suite]
    all_pass = True
    for name in names:
        result = suites[name]()
        _print_suite(result)
        all_pass = all_pass and result["passed"]
    return 0 if all_pass else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "run":
            return cmd_run(args)
        return cmd_verify(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
