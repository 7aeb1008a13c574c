"""Command-line driver.

Four subcommands: ``gen`` (write a random instance), ``solve`` (run
seeded trajectories), ``enumerate`` (exact history tree with the
termination bound check), ``bound`` (failure budget and success bound
from raw parameters).

Machine-readable JSON goes to stdout (canonical form: sorted keys, floats
at 17 significant digits, byte-stable for fixed inputs); diagnostics go
to stderr.  Exit codes: 0 ok, 2 input error, 3 invariant violation,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, analysis
from .errors import InvariantViolation, NodeCapExceeded
from .instance import (
    QsatInstance,
    from_dimacs,
    gen_random_instance,
    instance_from_obj,
    instance_to_obj,
    lll_margin,
    qubit_degree_condition,
    validate_instance,
)
from .rng import ALGORITHM_ID, split_seed
from .serialize import canonical_dumps, digest
from .solver import RunParams, RunStatus, enumerate_histories, run_trajectory

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_RESOURCE = 4


def _emit(obj) -> None:
    sys.stdout.write(canonical_dumps(obj) + "\n")


def _diag(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_instance(path: str) -> QsatInstance:
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() in (".cnf", ".dimacs"):
        return from_dimacs(text)
    return instance_from_obj(json.loads(text))


def _worker_count() -> int:
    env = os.environ.get("QLLL_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    inst = gen_random_instance(args.n, args.m, args.k, args.seed, diagonal=args.diagonal)
    payload = canonical_dumps(instance_to_obj(inst)) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
        _diag(f"wrote instance ({inst.m} projectors on {inst.n} qubits) to {args.out}")
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def _run_one_trial(inst, epsilon, base_seed, index, N, assert_monotone):
    params = RunParams.for_instance(
        inst,
        epsilon,
        split_seed(base_seed, index),
        N=N,
        assert_monotone=assert_monotone,
    )
    result = run_trajectory(inst, params)
    return {
        "trial": index,
        "seed": params.seed,
        "status": result.status.value,
        "t": result.log.t,
        "terminated": result.log.terminated,
        "measurements": len(result.log.bits),
        "log": result.log.bitstring(),
        "max_energy": max(result.energies),
        "extracted": list(result.extracted),
    }


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    report = validate_instance(inst)
    if not report.passed:
        _diag(f"invalid instance: {report.summary()}")
        return EXIT_INPUT

    margin = lll_margin(inst)
    if not margin.holds:
        _diag(
            f"warning: degree condition violated (margin {margin.margin:.4f} bits); "
            "running without a success guarantee"
        )
    try:
        bound_report = analysis.choose_N(inst.m, inst.k, inst.d, inst.r, args.epsilon)
        N = bound_report.N
        success_lower = bound_report.success_lower_bound
    except ValueError:
        N = RunParams.for_instance(inst, args.epsilon, args.seed).N
        success_lower = 0.0

    started = time.perf_counter()
    workers = _worker_count()
    indices = range(args.trials)
    if workers == 1 or args.trials == 1:
        trials = [
            _run_one_trial(inst, args.epsilon, args.seed, i, N, args.assert_monotone)
            for i in indices
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trials = list(
                pool.map(
                    lambda i: _run_one_trial(
                        inst, args.epsilon, args.seed, i, N, args.assert_monotone
                    ),
                    indices,
                )
            )
    elapsed = time.perf_counter() - started

    successes = sum(1 for t in trials if t["status"] == RunStatus.SUCCESS.value)
    qd = qubit_degree_condition(inst)
    record = {
        "schema": "qlll.solve.v1",
        "tool_version": __version__,
        "instance_digest": digest(instance_to_obj(inst)),
        "params": {
            "epsilon": args.epsilon,
            "N": N,
            "T": inst.m + N * inst.d,
            "seed": args.seed,
            "trials": args.trials,
            "rng": ALGORITHM_ID,
            "assert_monotone": bool(args.assert_monotone),
        },
        "degrees": {
            "projector_degree": inst.d,
            "qubit_degree": inst.qubit_degree,
            "margin_bits": margin.margin,
            "margin_holds": margin.holds,
            "qubit_degree_condition_holds": qd.holds,
        },
        "success_lower_bound": success_lower,
        "trials": trials,
        "aggregate": {
            "trials": args.trials,
            "successes": successes,
            "success_rate": successes / args.trials,
        },
    }
    if args.timings:
        record["timings"] = {"total_s": elapsed}
    _diag(f"ran {args.trials} trial(s) in {elapsed:.3f}s on {workers} worker(s)")
    _emit(record)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    inst = _load_instance(args.instance)
    report = validate_instance(inst)
    if not report.passed:
        _diag(f"invalid instance: {report.summary()}")
        return EXIT_INPUT

    if args.initial.lower() == "averaged":
        initial = "AVERAGED"
    else:
        parts = args.initial.split(",")
        if len(parts) != 2:
            _diag("--initial must be 'averaged' or 'XBITS,YBITS'")
            return EXIT_INPUT
        initial = (parts[0], parts[1])

    params = RunParams.for_instance(inst, epsilon=0.5, seed=0, N=args.N)

    def tree_payload(tree, partial: bool):
        leaves = [
            {
                "log": leaf.log.bitstring(),
                "t": leaf.log.t,
                "terminated": leaf.log.terminated,
                "probability": leaf.probability,
                "x": leaf.x,
                "y_blocks": list(leaf.y_blocks),
                "extracted": list(leaf.extracted),
            }
            for leaf in tree.leaves
        ]
        payload = {
            "schema": "qlll.enumerate.v1",
            "tool_version": __version__,
            "instance_digest": digest(instance_to_obj(inst)),
            "params": {
                "N": args.N,
                "initial": args.initial.lower(),
                "node_cap": args.node_cap,
            },
            "leaves": leaves,
            "leaf_count": len(leaves),
            "node_count": tree.node_count,
            "total_probability": tree.total_probability(),
            "pruned_mass": tree.pruned_mass,
            "p_budget_exhausted": tree.exhausted_probability(),
            "partial": partial,
        }
        if initial == "AVERAGED" and not partial:
            bound = analysis.verify_termination_bound(
                tree, inst.m, inst.k, inst.d, inst.r, args.N, strict=False
            )
            payload["bound"] = bound.bound
            payload["bound_holds"] = bound.holds
        return payload

    try:
        tree = enumerate_histories(
            inst, params, initial, node_cap=args.node_cap, store_states=False
        )
    except NodeCapExceeded as exc:
        _diag(str(exc))
        if exc.partial_tree is not None:
            _emit(tree_payload(exc.partial_tree, partial=True))
        return EXIT_RESOURCE

    _emit(tree_payload(tree, partial=False))
    return EXIT_OK


def cmd_bound(args) -> int:
    report = analysis.choose_N(args.m, args.k, args.d, args.r, args.epsilon)
    _emit(
        {
            "schema": "qlll.bound.v1",
            "tool_version": __version__,
            "inputs": {
                "m": args.m,
                "k": args.k,
                "d": args.d,
                "r": args.r,
                "epsilon": args.epsilon,
            },
            "margin": report.margin,
            "a": report.a,
            "b": report.b,
            "N": report.N,
            "T": report.T,
            "success_lower_bound": report.success_lower_bound,
        }
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlll",
        description="Constructive solver for commuting k-QSAT instances "
        "under the local lemma degree condition.",
    )
    parser.add_argument("--version", action="version", version=f"qlll {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random commuting instance")
    p.add_argument("--n", type=int, required=True, help="qubit count")
    p.add_argument("--m", type=int, required=True, help="projector count")
    p.add_argument("--k", type=int, required=True, help="locality")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--diagonal",
        action="store_true",
        help="skip the basis conjugation (classical instance, exportable as DIMACS)",
    )
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run seeded trajectories")
    p.add_argument("--instance", required=True, help="instance file (.json or .cnf)")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument(
        "--assert-monotone",
        action="store_true",
        help="check after every fix that satisfied projectors stayed satisfied",
    )
    p.add_argument(
        "--timings", action="store_true", help="embed wall-clock timings in the record"
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("enumerate", help="exact history-tree enumeration")
    p.add_argument("--instance", required=True)
    p.add_argument("--N", type=int, required=True, help="failure budget")
    p.add_argument(
        "--initial",
        default="averaged",
        help="'averaged' or 'XBITS,YBITS' basis strings (x: n bits, y: k*N bits)",
    )
    p.add_argument("--node-cap", type=int, default=200_000)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("bound", help="failure budget for a target error")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_bound)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NodeCapExceeded as exc:
        _diag(str(exc))
        return EXIT_RESOURCE
    except InvariantViolation as exc:
        _diag(f"invariant violation: {exc}")
        return EXIT_INVARIANT
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        _diag(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
