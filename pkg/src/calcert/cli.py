"""Command-line front end.

Subcommands: certify a data file, simulate named state families, sweep a
noise parameter to its detection threshold, emit the detection-region grid,
and run the self-test suite.  Verdicts go to stdout as JSON; sweeps and
region grids go to stdout as CSV ('.' decimal, '\\n' line endings, 17
significant digits); diagnostics go to stderr.

Exit codes: 0 entangled, 10 inconclusive, 11 separable model exhibited,
2 bad input or configuration, 1 self-test failure.  The strictness tolerance
defaults to 1e-9 and can be overridden by --epsilon or the CALCERT_EPSILON
environment variable (the flag wins).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import criteria, datamatrix, oracles, selftest

EXIT_INPUT_ERROR = 2
EXIT_SELFTEST_FAILURE = 1
STATUS_EXIT_CODES = {
    criteria.ENTANGLED: 0,
    criteria.INCONCLUSIVE: 10,
    criteria.SEPARABLE_MODEL: 11,
}

SCENARIO_TOKENS = {
    "sharp-orthogonal": "sharp-orthogonal",
    "sharp": "sharp-nonorthogonal",
    "sharp-nonorthogonal": "sharp-nonorthogonal",
    "unsharp-orthogonal": "unsharp-orthogonal",
    "qubit": "qubit-uncharacterized",
    "qubit-uncharacterized": "qubit-uncharacterized",
    "dimension": "dimension-bounded",
    "dimension-bounded": "dimension-bounded",
}

SWEEP_BISECTION_TOL = 1e-9  # well under the printed 6 decimals, so output is stable


class InputError(Exception):
    """Bad file, flag, or configuration; maps to exit code 2."""


def _resolve_epsilon(flag_value: float | None) -> float:
    if flag_value is None:
        env = os.environ.get("CALCERT_EPSILON")
        if env is None:
            return criteria.EPS_DEFAULT
        try:
            flag_value = float(env)
        except ValueError:
            raise InputError(f"CALCERT_EPSILON is not a number: {env!r}") from None
    if not np.isfinite(flag_value) or flag_value <= 0.0:
        raise InputError(f"strictness tolerance must be a positive finite number, got {flag_value}")
    return flag_value


def _resolve_scenario(token: str, dimension: int | None) -> criteria.Scenario:
    kind = SCENARIO_TOKENS.get(token)
    if kind is None:
        raise InputError(f"unknown scenario {token!r}; choose from {sorted(set(SCENARIO_TOKENS))}")
    if kind == "dimension-bounded":
        if dimension is None:
            raise InputError("scenario 'dimension' requires --d")
        if dimension < 2:
            raise InputError(f"--d must be at least 2, got {dimension}")
        return criteria.dimension_bounded(dimension)
    if dimension is not None and dimension != 2:
        raise InputError(f"scenario {token!r} is a qubit assumption; --d {dimension} conflicts")
    return criteria.Scenario(kind)


def _load_input(path: str) -> datamatrix.DataMatrix:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        return datamatrix.load_data_matrix(text)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def _real_rows(mat: np.ndarray) -> list:
    return [[float(x) for x in row] for row in np.asarray(mat, dtype=float)]


def _complex_doc(mat: np.ndarray) -> dict:
    arr = np.asarray(mat, dtype=complex)
    return {"re": _real_rows(arr.real), "im": _real_rows(arr.imag)}


def _write_witness(witness: oracles.SeparableWitness, path: str) -> None:
    doc = {
        "state": _complex_doc(witness.state.mat),
        "measurements_a": [_complex_doc(ob.mat) for ob in witness.measurements_a],
        "measurements_b": [_complex_doc(ob.mat) for ob in witness.measurements_b],
        "data": _real_rows(witness.data),
        "reproduction_error": float(witness.reproduction_error),
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise InputError(f"cannot write witness file {path}: {exc}") from None


def cmd_certify(args: argparse.Namespace) -> int:
    epsilon = _resolve_epsilon(args.epsilon)
    scenario = _resolve_scenario(args.scenario, args.d)
    D = _load_input(args.input)
    try:
        verdict = criteria.certify(D, scenario, eps=epsilon)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    doc = verdict.to_dict()
    if verdict.witness is not None:
        witness_path = args.witness_file or args.input + ".witness.json"
        _write_witness(verdict.witness, witness_path)
        doc["witness_file"] = witness_path
    print(json.dumps(doc))
    return STATUS_EXIT_CODES[verdict.status]


def cmd_simulate(args: argparse.Namespace) -> int:
    _resolve_epsilon(args.epsilon)
    if not 0.0 <= args.p <= 1.0:
        raise InputError(f"--p must lie in [0, 1], got {args.p}")
    if args.state == "werner":
        try:
            D = selftest.werner_data_matrix(args.p, args.settings)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        D = selftest.bfp_data_matrix(args.p)
    text = datamatrix.to_json(D)
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise InputError(f"cannot write {args.output}: {exc}") from None
    else:
        print(text)
    return 0


def _sweep_builder(args: argparse.Namespace):
    if args.family == "werner":
        settings = args.settings
        return lambda p: selftest.werner_data_matrix(p, settings)
    return selftest.bfp_data_matrix


def cmd_sweep(args: argparse.Namespace) -> int:
    epsilon = _resolve_epsilon(args.epsilon)
    if args.steps < 2:
        raise InputError(f"--steps must be at least 2, got {args.steps}")
    d = args.d if args.d is not None else (2 if args.family == "werner" else 4)
    if d < 2:
        raise InputError(f"--d must be at least 2, got {d}")
    build = _sweep_builder(args)
    if args.criterion == "det":
        evaluate = lambda D: criteria.det_criterion(D, d, eps=epsilon)  # noqa: E731
    else:
        evaluate = lambda D: criteria.ccnr_corollary(D.mat, eps=epsilon)  # noqa: E731
    lines = ["p,value,status"]
    try:
        for p in np.linspace(0.0, 1.0, args.steps):
            verdict = evaluate(build(float(p)))
            lines.append(f"{float(p):.17g},{verdict.value:.17g},{verdict.status}")
        threshold = oracles.threshold_bisection(build, evaluate, 0.0, 1.0, tol=SWEEP_BISECTION_TOL)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lines.append(f"threshold,{threshold:.6f}")
    print("\n".join(lines))
    return 0


def cmd_region(args: argparse.Namespace) -> int:
    epsilon = _resolve_epsilon(args.epsilon)
    if args.resolution < 2:
        raise InputError(f"--resolution must be at least 2, got {args.resolution}")
    rows = criteria.region_rows(args.resolution, eps=epsilon)
    lines = ["lambda1,lambda2,case1,case2,case3,case4,det_qubit,det_qutrit"]
    for row in rows:
        flags = ",".join(str(int(x)) for x in row[2:])
        lines.append(f"{row[0]:.17g},{row[1]:.17g},{flags}")
    print("\n".join(lines))
    return 0


def cmd_selftest(args: argparse.Namespace) -> int:
    _resolve_epsilon(args.epsilon)
    only = tuple(args.only) if args.only else None
    if only:
        unknown = [cid for cid in only if cid not in selftest.CHECKS]
        if unknown:
            raise InputError(f"unknown checks: {unknown}; known: {sorted(selftest.CHECKS)}")
    results = selftest.run_all(quick=args.quick, only=only)
    width = max(len(r.check_id) for r in results)
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        print(f"{mark}  {res.check_id:<{width}}  {res.elapsed:7.2f}s  {res.detail}", file=sys.stderr)
    failed = [r.check_id for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_SELFTEST_FAILURE
    print(f"all {len(results)} checks passed", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calcert",
        description="Certify bipartite entanglement from measured correlation data "
        "under partial knowledge of the measurement devices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_epsilon(p):
        p.add_argument(
            "--epsilon",
            type=float,
            default=None,
            help="strictness tolerance for threshold comparisons (default 1e-9; "
            "env CALCERT_EPSILON also accepted)",
        )

    p = sub.add_parser("certify", help="certify a data-matrix or probability JSON file")
    p.add_argument("input", help="path to the input JSON document")
    p.add_argument(
        "--scenario",
        required=True,
        help="device assumption: sharp-orthogonal | sharp | unsharp-orthogonal | "
        "qubit | dimension (dimension needs --d)",
    )
    p.add_argument("--d", type=int, default=None, help="Hilbert-space dimension bound")
    p.add_argument(
        "--witness-file",
        default=None,
        help="where to write the separable-model witness (default INPUT.witness.json)",
    )
    add_epsilon(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", help="emit the data matrix of a named state family")
    p.add_argument("--state", required=True, choices=("werner", "bfp"))
    p.add_argument("--p", type=float, required=True, help="white-noise weight in [0, 1]")
    p.add_argument(
        "--settings",
        default="xyz",
        help="Pauli axes for werner (e.g. xyz or xz); bfp always uses the 15 product settings",
    )
    p.add_argument("-o", "--output", default=None, help="write to this file instead of stdout")
    add_epsilon(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep the noise parameter and bisect the detection threshold")
    p.add_argument("--family", required=True, choices=("werner", "bfp"))
    p.add_argument("--criterion", default="det", choices=("det", "ccnr"))
    p.add_argument("--settings", default="xyz", help="Pauli axes for the werner family")
    p.add_argument("--d", type=int, default=None, help="dimension bound (default 2 werner, 4 bfp)")
    p.add_argument("--steps", type=int, default=21, help="number of sweep points (default 21)")
    add_epsilon(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("region", help="emit per-criterion detection flags on the singular-value grid")
    p.add_argument("--resolution", type=int, default=128, help="grid points per axis (default 128)")
    add_epsilon(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("selftest", help="run the verification suite")
    p.add_argument("--quick", action="store_true", help="subsample for a fast smoke run")
    p.add_argument(
        "--only",
        action="append",
        default=None,
        metavar="CHECK",
        help="run only this check (repeatable)",
    )
    add_epsilon(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
