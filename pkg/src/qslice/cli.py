"""Command-line interface: slice, max-sharpe, count and compare subcommands.

JSON on stdout is the stable machine interface and is byte-identical for
identical (arguments, seed). Diagnostics go to stderr. Exit codes: 0 on
success (an empty selection is a success), 1 on input errors, 2 when the
solution search timed out while counting insisted solutions exist.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import portfolio as pf
from .comparators import ComparatorLayout, eq_circuit, gt_circuit, lt_circuit
from .oracles import single_list_oracle, two_list_oracle
from .search import (
    m_detect,
    m_exact,
    quantum_counting,
    t_for_resolution,
)
from .sim import apply, new_basis_state


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qslice",
        description="Grover-based portfolio slicing and maximum-Sharpe selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="frontier CSV path")
        p.add_argument("--resolution", type=float, default=0.01,
                       help="resolving power d (default 0.01)")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--backend", choices=("dense", "effective"),
                       default="effective")
        p.add_argument("--output", choices=("json", "text"), default="json")

    p = sub.add_parser("slice", help="select ids by return/risk thresholds")
    common(p)
    p.add_argument("--return-min", type=float, required=True)
    p.add_argument("--risk-max", type=float, required=True)

    p = sub.add_parser("max-sharpe", help="find the maximum-Sharpe id")
    common(p)
    p.add_argument("--repeat", type=int, default=3,
                   help="adaptive-search repetitions (default 3)")
    p.add_argument("--rf", type=float, default=0.0,
                   help="risk-free rate (default 0)")

    p = sub.add_parser("count", help="count ids matching a threshold condition")
    common(p)
    p.add_argument("--return-min", type=float, default=None)
    p.add_argument("--risk-max", type=float, default=None)
    p.add_argument("--mode", choices=("exact", "detect"), default="exact")

    p = sub.add_parser("compare", help="debug an n-bit comparator on (a, b)")
    p.add_argument("n", type=int)
    p.add_argument("a", type=int)
    p.add_argument("b", type=int)
    p.add_argument("--output", choices=("json", "text"), default="json")
    return parser


def _emit(payload: dict, output: str) -> None:
    if output == "json":
        print(json.dumps(payload, sort_keys=True))
    else:
        for key in sorted(payload):
            print(f"{key}: {payload[key]}")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _load(args: argparse.Namespace) -> tuple[pf.FrontierTable, int]:
    d = args.resolution
    if not 0.0 < d <= 1.0:
        raise ValueError(f"--resolution must lie in (0, 1], got {d}")
    t = t_for_resolution(d)
    if t < 1:
        raise ValueError(f"--resolution {d} gives no usable comparator bits")
    with open(args.input, "r", encoding="utf-8", newline="") as handle:
        return pf.load_frontier(handle, t), t


def _count_payload(est) -> dict:
    return {
        "m": est.m,
        "b": est.b,
        "M_est": est.m_est,
        "M_rounded": est.m_rounded,
        "delta_m_bound": est.bound,
    }


def cmd_slice(args: argparse.Namespace) -> int:
    try:
        table, _ = _load(args)
        for name in ("return_min", "risk_max"):
            v = getattr(args, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"--{name.replace('_', '-')} must lie in [0, 1)")
        rng = np.random.default_rng(args.seed)
        result = pf.slice_portfolios(
            table, args.return_min, args.risk_max, rng, args.backend
        )
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = {
        "selected_ids": sorted(result.ids),
        "count_estimate": _count_payload(result.enumeration.count_estimate),
        "oracle_calls": result.enumeration.oracle_calls,
        "qubit_layout": result.layout,
        "seed": args.seed,
        "backend": args.backend,
    }
    _emit(payload, args.output)
    return 0


def cmd_max_sharpe(args: argparse.Namespace) -> int:
    try:
        table, _ = _load(args)
        if args.repeat < 1:
            raise ValueError("--repeat must be >= 1")
        rng = np.random.default_rng(args.seed)
        result = pf.max_sharpe(table, args.rf, rng, args.repeat, args.backend)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    payload = {
        "id": result.id,
        "sharpe_raw": result.sharpe_raw,
        "oracle_calls_total": result.gas.oracle_calls,
        "repetitions": args.repeat,
        "qubit_layout": result.layout,
        "seed": args.seed,
        "backend": args.backend,
    }
    _emit(payload, args.output)
    return 0


def cmd_count(args: argparse.Namespace) -> int:
    try:
        table, t = _load(args)
        if args.return_min is None and args.risk_max is None:
            raise ValueError("count needs --return-min and/or --risk-max")
        for name in ("return_min", "risk_max"):
            v = getattr(args, name)
            if v is not None and not 0.0 <= v < 1.0:
                raise ValueError(f"--{name.replace('_', '-')} must lie in [0, 1)")
        if args.return_min is not None and args.risk_max is not None:
            oracle = two_list_oracle(
                table.returns,
                table.sigmas,
                pf.quantize(args.return_min, t),
                pf.quantize(args.risk_max, t),
            )
        elif args.return_min is not None:
            oracle = single_list_oracle(
                table.returns, pf.quantize(args.return_min, t), "gt"
            )
        else:
            oracle = single_list_oracle(
                table.sigmas, pf.quantize(args.risk_max, t), "lt"
            )
        rng = np.random.default_rng(args.seed)
        pick_m = m_exact if args.mode == "exact" else m_detect
        est = quantum_counting(oracle, pick_m(oracle.index_size), rng, args.backend)
        doubled = False
        if est.m_rounded > oracle.index_size / 2:
            oracle = oracle.doubled()
            doubled = True
            est = quantum_counting(oracle, pick_m(oracle.index_size), rng, args.backend)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    payload = {
        "m_used": est.m,
        "b": est.b,
        "M_est": est.m_est,
        "M_rounded": est.m_rounded,
        "delta_m_bound": est.bound,
        "mode": args.mode,
        "class": est.classify(),
        "doubled": doubled,
        "qubit_layout": oracle.layout.to_dict(),
        "seed": args.seed,
        "backend": args.backend,
    }
    _emit(payload, args.output)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    n, a, b = args.n, args.a, args.b
    if n < 1:
        return _fail("n must be >= 1")
    if not (0 <= a < (1 << n) and 0 <= b < (1 << n)):
        return _fail(f"a and b must fit in {n} bits")
    layout = ComparatorLayout(n)
    simulated = {}
    for name, builder in (("gt", gt_circuit), ("lt", lt_circuit), ("eq", eq_circuit)):
        circuit = builder(n)
        basis = a | (b << n)
        state = apply(new_basis_state(circuit.num_qubits, basis), circuit)
        outcome = int(np.argmax(state.probabilities()))
        simulated[name] = (outcome >> layout.outcome_qubit) & 1
    classical = {"gt": int(a > b), "lt": int(a < b), "eq": int(a == b)}
    agree = simulated == classical
    payload = {
        "n": n,
        "a": a,
        "b": b,
        "simulated": simulated,
        "classical": classical,
        "agree": agree,
        "qubit_layout": {"num_qubits": layout.num_qubits},
    }
    _emit(payload, args.output)
    return 0 if agree else 1


_COMMANDS = {
    "slice": cmd_slice,
    "max-sharpe": cmd_max_sharpe,
    "count": cmd_count,
    "compare": cmd_compare,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
