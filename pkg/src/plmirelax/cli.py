"""Command-line front end.

Commands: check (relaxation verdict for an instance file), compare
(randomized relaxation comparison), demo-counterexample (the embedded
separating instance), oracle (the verification battery), sweep (the (a, b)
stabilization map).  Exit codes: 0 success or feasible, 1 infeasible or
property violation, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .oracle import (
    counterexample_trial,
    implication_violations,
    lemma3_suite,
    quadrant_counts,
    run_trials,
    soundness_violations,
    verify_plmi_on_grid,
    young_suite,
)
from .plmi import SchemaError, counterexample_instance, load_instance, save_instance
from .relaxation import check_constant, generate_naive, generate_theorem1, generate_tuan
from .sdp import SolverOptions, Status
from .stabilization import (
    FeasibilityMap,
    example_system,
    normalize_kind,
    sweep,
    synthesis_to_json,
    validate_controller,
    write_feasible_points,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMFAIL = 3

_GENERATORS = {"naive": generate_naive, "tuan": generate_tuan, "thm1": generate_theorem1}


def _int_list(text: str):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _range_triple(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps with numeric parts, got {text!r}")


def _kind_list(text: str):
    try:
        return tuple(dict.fromkeys(normalize_kind(k) for k in text.split(",") if k))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def load_config(path: str) -> dict:
    """key = value lines, # comments; keys match flag names."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


_CASTS = {
    "tol": float,
    "seed": int,
    "trials": int,
    "grid_order": int,
    "r": _int_list,
    "n": _int_list,
    "eps_feas": float,
    "max_iter": int,
    "var_bound": float,
    "jobs": int,
    "a": _range_triple,
    "b": _range_triple,
    "kinds": _kind_list,
    "samples": int,
    "kind": str,
    "out": str,
}


def _resolve(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill unset flags from the config file, then from hard defaults."""
    config = {}
    if getattr(args, "config", None):
        config = load_config(args.config)
    for name, default in defaults.items():
        if getattr(args, name, None) is not None:
            continue
        if name in config:
            value = _CASTS[name](config[name])
        else:
            value = default
        setattr(args, name, value)
    return args


def _emit(payload: dict, as_json: bool, lines) -> None:
    if as_json:
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _verdict_lines(title: str, verdict) -> list:
    lines = [title]
    for label, value in verdict.per_constraint:
        lines.append(f"  {label:<12} max_eig = {value: .12g}")
    state = "feasible" if verdict.feasible else "infeasible"
    lines.append(f"  verdict: {state}, worst {verdict.worst[0]} = {verdict.worst[1]:.12g}")
    return lines


def cmd_check(args) -> int:
    _resolve(args, {"tol": 1e-9, "kind": "thm1"})
    try:
        with open(args.instance, "r", encoding="utf-8") as fh:
            inst = load_instance(fh.read())
    except OSError as e:
        print(f"error: cannot read instance: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as e:
        print(f"error: bad instance file: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        kind = normalize_kind(args.kind)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    verdict = check_constant(_GENERATORS[kind](inst), args.tol)
    _emit(
        verdict.to_json(),
        args.json,
        _verdict_lines(f"{kind} relaxation of {args.instance} (r={inst.r}, n={inst.n})", verdict),
    )
    return EXIT_OK if verdict.feasible else EXIT_VIOLATION


def cmd_demo(args) -> int:
    _resolve(args, {"tol": 1e-9, "grid_order": 200})
    inst = counterexample_instance()
    thm1 = check_constant(generate_theorem1(inst), args.tol)
    tuan = check_constant(generate_tuan(inst), args.tol)
    grid = verify_plmi_on_grid(inst, args.grid_order)
    lines = ["embedded r=3, n=1 instance separating the two relaxations", ""]
    lines += _verdict_lines("pattern family (all twelve constraints):", thm1)
    lines.append("")
    lines.append(
        f"pair family verdict: {'feasible' if tuan.feasible else 'infeasible'}, "
        f"worst {tuan.worst[0]} = {tuan.worst[1]:.12g}"
    )
    lines.append("")
    lines.append(
        f"grid audit: order {grid.grid_order}, {grid.points_checked} points, "
        f"worst max eigenvalue {grid.worst_value:.12g} at h = "
        f"({', '.join(f'{v:.6g}' for v in grid.worst_point.h)}) -> "
        f"{'negative everywhere' if grid.passed else 'VIOLATION'}"
    )
    holds = thm1.feasible and not tuan.feasible and grid.passed
    lines.append("")
    lines.append(
        "conclusion: pattern family accepts, pair family rejects, grid confirms negativity"
        if holds
        else "conclusion: demonstration FAILED"
    )
    payload = {
        "thm1": thm1.to_json(),
        "tuan": tuan.to_json(),
        "grid": {
            "order": grid.grid_order,
            "points": grid.points_checked,
            "worst_value": grid.worst_value,
            "worst_point": [float(v) for v in grid.worst_point.h],
            "passed": grid.passed,
        },
        "holds": holds,
    }
    _emit(payload, args.json, lines)
    return EXIT_OK if holds else EXIT_VIOLATION


def _quadrant_lines(counts: dict, trials: int) -> list:
    return [
        f"trials: {trials}",
        f"  pair feasible,   pattern feasible:   {counts['tt']}",
        f"  pair feasible,   pattern infeasible: {counts['tf']}",
        f"  pair infeasible, pattern feasible:   {counts['ft']}",
        f"  pair infeasible, pattern infeasible: {counts['ff']}",
    ]


def cmd_compare(args) -> int:
    _resolve(
        args,
        {"trials": 1000, "seed": 0, "r": (2, 3, 4), "n": (1, 2, 3), "grid_order": 60, "tol": 1e-9},
    )
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    outcomes = run_trials(args.trials, args.seed, args.r, args.n, args.grid_order, args.tol)
    counts = quadrant_counts(outcomes)
    implication_bad = implication_violations(outcomes)
    soundness_bad = soundness_violations(outcomes)
    lines = _quadrant_lines(counts, args.trials)
    lines.append(f"implication violations (pair ok, pattern not): {len(implication_bad)}")
    lines.append(f"soundness violations (pattern ok, grid not):   {len(soundness_bad)}")
    payload = {
        "trials": args.trials,
        "seed": args.seed,
        "quadrants": counts,
        "implication_violations": len(implication_bad),
        "soundness_violations": len(soundness_bad),
    }
    ok = not implication_bad and not soundness_bad
    if not ok:
        offending = (implication_bad + soundness_bad)[0]
        payload["offending_seed"] = offending.seed
        payload["offending_instance"] = json.loads(save_instance(offending.instance))
        lines.append(f"offending instance (seed {offending.seed}): {save_instance(offending.instance)}")
    _emit(payload, args.json, lines)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_oracle(args) -> int:
    _resolve(
        args,
        {"trials": 500, "seed": 0, "r": (2, 3, 4), "n": (1, 2, 3), "grid_order": 60, "tol": 1e-9},
    )
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    young = young_suite()
    lemma3 = lemma3_suite(args.trials, args.seed)
    outcomes = run_trials(args.trials, args.seed, args.r, args.n, args.grid_order, args.tol)
    counts = quadrant_counts(outcomes)
    implication_bad = implication_violations(outcomes)
    soundness_bad = soundness_violations(outcomes)
    forced = counterexample_trial(args.grid_order, args.tol)
    forced_ok = (not forced.tuan_feasible) and forced.thm1_feasible and forced.oracle_pass
    ok = (
        not young["violations"]
        and not young["equality_errors"]
        and lemma3["worst_relative_residual"] <= 1e-12
        and not implication_bad
        and not soundness_bad
        and forced_ok
    )
    payload = {
        "young": {
            "checked": young["checked"],
            "violations": len(young["violations"]),
            "equality_errors": len(young["equality_errors"]),
        },
        "exchange_identity": lemma3,
        "trials": {
            "count": args.trials,
            "seed": args.seed,
            "quadrants": counts,
            "implication_violations": len(implication_bad),
            "soundness_violations": len(soundness_bad),
        },
        "embedded_counterexample": {
            "tuan_feasible": forced.tuan_feasible,
            "thm1_feasible": forced.thm1_feasible,
            "oracle_pass": forced.oracle_pass,
            "ok": forced_ok,
        },
        "ok": ok,
    }
    lines = [
        f"Young sweep: {young['checked']} checks, {len(young['violations'])} violations, "
        f"{len(young['equality_errors'])} equality errors",
        f"exchange identity: {lemma3['draws']} draws, worst relative residual "
        f"{lemma3['worst_relative_residual']:.3g}",
    ]
    lines += _quadrant_lines(counts, args.trials)
    lines.append(f"implication violations: {len(implication_bad)}")
    lines.append(f"soundness violations:   {len(soundness_bad)}")
    lines.append(f"embedded counterexample behaves as expected: {'yes' if forced_ok else 'NO'}")
    lines.append(f"overall: {'ok' if ok else 'VIOLATION'}")
    _emit(payload, args.json, lines)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    return EXIT_OK if ok else EXIT_VIOLATION


def _status_counts(fmap: FeasibilityMap) -> dict:
    out = {kind: {"feasible": 0, "infeasible": 0, "numfail": 0} for kind in fmap.kinds}
    for cell in fmap.cells.values():
        for kind, o in cell.items():
            out[kind][o.status.value] += 1
    return out


def cmd_sweep(args) -> int:
    _resolve(
        args,
        {
            "a": (0.0, 5.0, 26),
            "b": (0.0, 5.0, 26),
            "kinds": ("tuan", "thm1"),
            "seed": 0,
            "eps_feas": None,
            "max_iter": 100,
            "var_bound": None,
            "jobs": 1,
            "samples": 10000,
            "out": ".",
        },
    )
    import os

    os.makedirs(args.out, exist_ok=True)
    opts = SolverOptions(
        eps_feas=args.eps_feas, max_iter=args.max_iter, var_bound=args.var_bound, seed=args.seed
    )

    def progress(done, total):
        if not args.json and (done % 50 == 0 or done == total):
            print(f"  {done}/{total} cells", file=sys.stderr)

    fmap = sweep(args.a, args.b, args.kinds, opts, jobs=args.jobs, progress=progress)
    csv_path = os.path.join(args.out, "sweep.csv")
    write_sweep_csv(fmap, csv_path)
    point_files = write_feasible_points(fmap, args.out)

    counts = _status_counts(fmap)
    total = len(fmap.cells) * len(fmap.kinds)
    all_numfail = all(
        o.status is Status.NumericalFailure for c in fmap.cells.values() for o in c.values()
    )

    validation_failures = 0
    controllers = []
    if args.validate or args.save_controllers:
        for (ia, ib), cell in sorted(fmap.cells.items()):
            for kind, o in cell.items():
                if o.status is not Status.Feasible:
                    continue
                a = float(fmap.a_values[ia])
                b = float(fmap.b_values[ib])
                if args.validate:
                    rep = validate_controller(
                        example_system(a, b), o.result, samples=args.samples, seed=args.seed
                    )
                    if not rep.sampling_passed:
                        validation_failures += 1
                        print(
                            f"sampling violation at a={a} b={b} kind={kind}: "
                            f"max eig {rep.sampling_worst:.3g} at h={rep.sampling_worst_h}",
                            file=sys.stderr,
                        )
                if args.save_controllers:
                    name = f"controller_{kind}_a{ia}_b{ib}.json"
                    path = os.path.join(args.out, name)
                    with open(path, "w", encoding="utf-8") as fh:
                        json.dump(synthesis_to_json(o.result), fh, indent=2)
                    controllers.append(name)

    payload = {
        "a_values": [float(v) for v in fmap.a_values],
        "b_values": [float(v) for v in fmap.b_values],
        "kinds": list(fmap.kinds),
        "counts": counts,
        "csv": csv_path,
        "points": point_files,
        "validation_failures": validation_failures if args.validate else None,
        "controllers": controllers if args.save_controllers else None,
    }
    lines = [f"sweep: {len(fmap.a_values)} x {len(fmap.b_values)} cells, kinds {', '.join(fmap.kinds)}"]
    for kind, c in counts.items():
        lines.append(
            f"  {kind:<6} feasible {c['feasible']:>4}  infeasible {c['infeasible']:>4}  "
            f"numfail {c['numfail']:>4}"
        )
    lines.append(f"wrote {csv_path}")
    for pf in point_files:
        lines.append(f"wrote {pf}")
    if args.validate:
        lines.append(f"sampling validation failures: {validation_failures}")
    if args.save_controllers:
        lines.append(f"saved {len(controllers)} controller files")
    _emit(payload, args.json, lines)
    if total and all_numfail:
        return EXIT_NUMFAIL
    if validation_failures:
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plmirelax",
        description="Relaxations of double convex-sum matrix inequalities: "
        "checkers, oracles, and controller synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--config", help="key = value config file; flags override it")

    p = sub.add_parser("check", help="run one relaxation on an instance file")
    common(p)
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.add_argument("--kind", choices=["naive", "tuan", "thm1", "theorem1"], help="relaxation (default thm1)")
    p.add_argument("--tol", type=float, help="definiteness tolerance (default 1e-9)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compare", help="randomized comparison of the relaxations")
    common(p)
    p.add_argument("--trials", type=int, help="number of random instances (default 1000)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--r", type=_int_list, help="rule counts to cycle, e.g. 2,3,4")
    p.add_argument("--n", type=_int_list, help="block sizes to cycle, e.g. 1,2,3")
    p.add_argument("--grid-order", dest="grid_order", type=int, help="audit grid order (default 60)")
    p.add_argument("--tol", type=float, help="definiteness tolerance (default 1e-9)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("demo-counterexample", help="the embedded separating instance")
    common(p)
    p.add_argument("--tol", type=float, help="definiteness tolerance (default 1e-9)")
    p.add_argument("--grid-order", dest="grid_order", type=int, help="audit grid order (default 200)")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("oracle", help="verification battery: inequalities, identity, trials")
    common(p)
    p.add_argument("--trials", type=int, help="random draws per battery stage (default 500)")
    p.add_argument("--seed", type=int, help="base seed (default 0)")
    p.add_argument("--r", type=_int_list, help="rule counts to cycle")
    p.add_argument("--n", type=_int_list, help="block sizes to cycle")
    p.add_argument("--grid-order", dest="grid_order", type=int, help="audit grid order (default 60)")
    p.add_argument("--tol", type=float, help="definiteness tolerance (default 1e-9)")
    p.add_argument("--report", help="write the JSON summary here as well")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="synthesize over the (a, b) plane")
    common(p)
    p.add_argument("--a", type=_range_triple, help="a range lo:hi:steps (default 0:5:26)")
    p.add_argument("--b", type=_range_triple, help="b range lo:hi:steps (default 0:5:26)")
    p.add_argument("--kinds", type=_kind_list, help="comma list of tuan,thm1,naive (default tuan,thm1)")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("--seed", type=int, help="seed for validation sampling (default 0)")
    p.add_argument("--eps-feas", dest="eps_feas", type=float, help="feasibility margin threshold")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="solver iteration cap (default 100)")
    p.add_argument("--var-bound", dest="var_bound", type=float, help="decision-vector bound (default 1e4)")
    p.add_argument("--samples", type=int, help="validation sample count (default 10000)")
    p.add_argument("--validate", action="store_true", help="sampling-check every feasible cell")
    p.add_argument(
        "--save-controllers", dest="save_controllers", action="store_true",
        help="write per-cell controller JSON files",
    )
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
