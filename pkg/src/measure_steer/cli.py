"""``measure-steer`` command line interface.

Figure commands write CSV curves; the other commands write one JSON
object. Every output carries a run manifest (embedded under ``manifest``
for JSON, as a ``<out>.manifest.json`` sidecar for CSV files).

Exit codes: 0 success, 2 invalid input, 3 failed internal cross-check.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from datetime import datetime, timezone
from typing import Dict, List, Sequence

import numpy as np

from . import __version__
from .chain import (
    MAX_OPTIMIZE_STEPS,
    MeasurementChain,
    OptimizerConfig,
    check_gain_conditions,
    greedy_chain,
    optimize_chain,
    run_chain,
)
from .qubit import (
    BasisAngles,
    DensityMatrix,
    InvalidStateError,
    PureState,
    TargetFrame,
    frame_coefficients,
)
from .single_step import (
    optimal_overlap_closed,
    p_max_closed,
    p_one_step_expanded,
)
from .stochastic import (
    PolarizerCascade,
    cascade_as_chain,
    cascade_flux,
    equal_spacing_cascade,
    simulate_trajectories,
)

EXIT_INVALID = 2
EXIT_INVARIANT = 3


class CrossCheckError(RuntimeError):
    """Generated data failed an analytic cross-check."""


def fmt(x: float) -> str:
    if abs(x) < 1e-15:
        x = 0.0
    return f"{x:.9g}"


def rounded(x: float) -> float:
    return float(fmt(x))


def _label(v: float) -> str:
    return f"{v:g}"


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _ints(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _grid(step: float, stop: float = 1.0) -> np.ndarray:
    if not 0 < step <= stop:
        raise InvalidStateError(f"grid step must lie in (0, {stop}], got {step}")
    n = int(round(stop / step))
    return np.round(np.linspace(0.0, n * step, n + 1), 12)


def manifest(command: str, params: Dict, seed: int) -> Dict:
    return {
        "command": command,
        "parameters": params,
        "seed": seed,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


# figure data


def fig1_table(p_targets: Sequence[float], gamma: float, grid_step: float):
    """Single-step success probability against ``|<0|zeta>|^2``.

    The coherence is taken real and positive and the intermediate basis
    phase is fixed at pi. The exact optimum of each curve is added to the
    overlap grid so the curve maximum is attained on a row.
    """
    frame = TargetFrame.computational()
    xs = set(_grid(grid_step).tolist())
    xs.update(round(float(optimal_overlap_closed(p, gamma)), 15) for p in p_targets)
    xs = sorted(xs)
    header = ["overlap_sq"]
    header += [f"p_one_step_pt{_label(p)}" for p in p_targets]
    header += [f"p_direct_pt{_label(p)}" for p in p_targets]
    cols = [xs]
    for p in p_targets:
        coeffs = frame_coefficients(DensityMatrix.from_parameters(p, gamma), frame)
        curve = [p_one_step_expanded(coeffs, BasisAngles.from_overlap(x, math.pi)) for x in xs]
        if abs(max(curve) - p_max_closed(p, gamma)) > 1e-9:
            raise CrossCheckError(f"fig1 curve for p_target={p} misses the closed-form maximum")
        cols.append(curve)
    for p in p_targets:
        cols.append([p] * len(xs))
    return header, cols


def fig2_table(gammas: Sequence[float], grid_step: float):
    ps = _grid(grid_step)
    header = ["p_target"]
    header += [f"p_max_g{_label(g)}" for g in gammas]
    header += [f"overlap_sq_g{_label(g)}" for g in gammas]
    cols = [ps.tolist()]
    for g in gammas:
        cols.append(np.atleast_1d(p_max_closed(ps, g)).tolist())
    for g in gammas:
        cols.append(np.atleast_1d(optimal_overlap_closed(ps, g)).tolist())
    for g, col in zip(gammas, cols[1 : 1 + len(gammas)]):
        if g == 1 and not np.allclose(col, ps / 2 + 0.5, atol=1e-12):
            raise CrossCheckError("fig2 gamma=1 optimum is not the line p/2 + 1/2")
        if g == 0 and not np.allclose(col, np.maximum(ps, 0.5), atol=1e-12):
            raise CrossCheckError("fig2 gamma=0 optimum is not max(p, 1/2)")
    return header, cols


def fig3_table(
    n_values: Sequence[int],
    gammas: Sequence[float],
    p_grid_step: float,
    config: OptimizerConfig,
):
    """Optimized and greedy chain success against the initial target population.

    For each ``N`` after the first, the best ``N - 1`` chain extended by a
    repeat of its last basis is added as a start, so the optimum cannot
    drop when an observable is added.
    """
    frame = TargetFrame.computational()
    ns = sorted(set(n_values))
    if not ns or ns[0] < 1 or ns[-1] > MAX_OPTIMIZE_STEPS:
        raise InvalidStateError(f"N values must lie in [1, {MAX_OPTIMIZE_STEPS}]")
    ps = _grid(p_grid_step)
    header = ["p_target"]
    cols = [ps.tolist()]
    for g in gammas:
        opt = {n: [] for n in ns}
        greedy = {n: [] for n in ns}
        for p in ps:
            rho = DensityMatrix.from_parameters(float(p), g)
            prev = None
            for n in ns:
                seeds = []
                if prev is not None:
                    ext = prev
                    while len(ext) < n:
                        ext = ext.extended(ext.steps[-1])
                    seeds.append(ext)
                chain, value = optimize_chain(rho, frame, n, config, seeds)
                prev = chain
                opt[n].append(value)
                greedy[n].append(run_chain(rho, frame, greedy_chain(rho, frame, n)).p_success)
        for n in ns:
            header += [f"opt_g{_label(g)}_n{n}", f"greedy_g{_label(g)}_n{n}"]
            cols += [opt[n], greedy[n]]
        if 1 in opt and np.max(np.abs(np.array(opt[1]) - p_max_closed(ps, g))) > 1e-4:
            raise CrossCheckError(f"fig3 N=1 column for gamma={g} misses the closed form")
        for a, b in zip(ns, ns[1:]):
            if np.any(np.array(opt[b]) < np.array(opt[a]) - 1e-9):
                raise CrossCheckError(f"fig3 optimum for gamma={g} decreases from N={a} to N={b}")
    return header, cols


def _check_probabilities(header, cols):
    for name, col in zip(header, cols):
        if name.startswith(("p_", "opt_", "greedy_")) and not name == "p_target":
            if any(v < -1e-12 or v > 1 + 1e-12 for v in col):
                raise CrossCheckError(f"column {name} leaves [0, 1]")


def table_csv(header, cols) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*cols):
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


# single runs


def _frame_from_args(args) -> TargetFrame:
    if args.target is None:
        return TargetFrame.computational()
    theta, phi = args.target
    return TargetFrame.from_target(PureState.from_bloch(theta, phi))


def _state_from_args(args, frame: TargetFrame) -> DensityMatrix:
    if args.rho is not None:
        r00, r11, re01, im01 = args.rho
        return DensityMatrix(r00, r11, complex(re01, im01))
    if args.p_target is None:
        raise InvalidStateError("specify the initial state with --p-target or --rho")
    return DensityMatrix.from_parameters(args.p_target, args.gamma, args.phase, frame)


def _chain_from_args(args, rho, frame, config) -> MeasurementChain:
    if args.greedy is not None:
        return greedy_chain(rho, frame, args.greedy)
    if args.optimal is not None:
        return optimize_chain(rho, frame, args.optimal, config)[0]
    return MeasurementChain(tuple(BasisAngles(a, b) for a, b in args.step or ()))


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(
        random_starts=args.random_starts,
        max_evals_per_start=args.max_evals,
        convergence_tol=args.tol,
        seed=args.seed,
        threads=args.threads,
    )


def _chain_json(chain: MeasurementChain):
    return [{"alpha": rounded(s.alpha), "beta": rounded(s.beta)} for s in chain]


def chain_report(rho, frame, chain) -> Dict:
    res = run_chain(rho, frame, chain)
    gains = []
    prev = rho
    for k in range(len(chain) - 1):
        check = check_gain_conditions(
            prev, frame, chain.steps[k].realize(frame), chain.steps[k + 1].realize(frame)
        )
        gains.append(
            {
                "step": k + 1,
                "branch_0_dominant": check.branch_0_dominant,
                "transfer_improves": check.transfer_improves,
                "guaranteed_positive": check.guaranteed_positive,
            }
        )
        prev = res.intermediate_states[k]
    return {
        "p_direct": rounded(frame_coefficients(rho, frame).p_target),
        "p_success": rounded(res.p_success),
        "chain": _chain_json(chain),
        "step_probs": [rounded(p) for p in res.step_probs],
        "hs_distances": [rounded(d) for d in res.hs_distances],
        "gain_conditions": gains,
    }


def run_command(args) -> Dict:
    """Execute one single-run command and return its report (without manifest)."""
    if args.command == "polarizer":
        scale = math.pi / 180 if args.degrees else 1.0
        if args.equal_spacing is not None:
            cascade = equal_spacing_cascade(args.equal_spacing)
        else:
            start = math.pi / 2 if args.input_angle is None else args.input_angle * scale
            stop = 0.0 if args.target_angle is None else args.target_angle * scale
            cascade = PolarizerCascade(tuple(a * scale for a in args.angles or ()), start, stop)
        rho, frame, chain = cascade_as_chain(cascade)
        return {
            "angles": [rounded(a) for a in cascade.angles],
            "input_angle": rounded(cascade.input_angle),
            "target_angle": rounded(cascade.target_angle),
            "flux": rounded(cascade_flux(cascade)),
            "chain_success": rounded(run_chain(rho, frame, chain).p_success),
        }
    frame = _frame_from_args(args)
    rho = _state_from_args(args, frame)
    config = _config(args)
    if args.command == "chain":
        return chain_report(rho, frame, _chain_from_args(args, rho, frame, config))
    if args.command == "optimize":
        chain, value = optimize_chain(rho, frame, args.n, config)
        greedy = greedy_chain(rho, frame, args.n)
        report = chain_report(rho, frame, chain)
        report["greedy_chain"] = _chain_json(greedy)
        report["greedy_p_success"] = rounded(run_chain(rho, frame, greedy).p_success)
        return report
    if args.command == "mc":
        chain = _chain_from_args(args, rho, frame, config)
        est = simulate_trajectories(rho, frame, chain, args.shots, args.seed, args.threads)
        return {
            "p_hat": rounded(est.p_hat),
            "std_err": rounded(est.std_err),
            "shots": est.shots,
            "p_exact": rounded(run_chain(rho, frame, chain).p_success),
            "chain": _chain_json(chain),
        }
    raise ValueError(f"unknown command {args.command}")


# argument parsing


def _pair(text: str):
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers: {text!r}")
    return tuple(vals)


def _quad(text: str):
    vals = _floats(text)
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("expected r00,r11,re01,im01")
    return tuple(vals)


def _global_flags(parser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=d(0), help="RNG seed (default 0)")
    parser.add_argument("--threads", type=int, default=d(1), help="worker threads")
    parser.add_argument("--out", default=d(None), help="output file (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default=d(None))


def _state_flags(parser):
    parser.add_argument("--p-target", type=float, help="<zeta|rho|zeta>")
    parser.add_argument("--gamma", type=float, default=1.0, help="coherence ratio (default 1)")
    parser.add_argument("--phase", type=float, default=0.0, help="phase of <zeta|rho|zeta_perp>")
    parser.add_argument("--rho", type=_quad, help="explicit entries r00,r11,re01,im01")
    parser.add_argument("--target", type=_pair, help="target Bloch angles theta,phi")


def _optimizer_flags(parser):
    parser.add_argument("--random-starts", type=int, default=32)
    parser.add_argument("--max-evals", type=int, default=2000)
    parser.add_argument("--tol", type=float, default=1e-7)


def _chain_flags(parser):
    g = parser.add_mutually_exclusive_group()
    g.add_argument("--step", type=_pair, action="append", help="basis angles alpha,beta (repeatable)")
    g.add_argument("--greedy", type=int, metavar="N")
    g.add_argument("--optimal", type=int, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measure-steer",
        description="Drive a qubit toward a target state with projective measurements only.",
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig1", help="success vs overlap for one intermediate measurement")
    p.add_argument("--p-targets", type=_floats, default=[0.0, 0.5, 0.9])
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--grid-step", type=float, default=0.001)

    p = sub.add_parser("fig2", help="closed-form optimum and optimal overlap")
    p.add_argument("--gammas", type=_floats, default=[0.0, 0.4, 0.7, 1.0])
    p.add_argument("--grid-step", type=float, default=0.001)

    p = sub.add_parser("fig3", help="optimized chain success for several N")
    p.add_argument("--n-values", type=_ints, default=[1, 2, 3])
    p.add_argument("--gammas", type=_floats, default=[1.0, 0.0])
    p.add_argument("--p-grid-step", type=float, default=0.05)
    _optimizer_flags(p)

    p = sub.add_parser("chain", help="evaluate a measurement chain")
    _state_flags(p)
    _chain_flags(p)
    _optimizer_flags(p)

    p = sub.add_parser("optimize", help="optimize a chain of N observables")
    _state_flags(p)
    p.add_argument("--n", type=int, required=True)
    _optimizer_flags(p)

    p = sub.add_parser("mc", help="Monte Carlo trajectories of a chain")
    _state_flags(p)
    _chain_flags(p)
    _optimizer_flags(p)
    p.add_argument("--shots", type=int, default=100_000)

    p = sub.add_parser("polarizer", help="flux through a polarizer cascade")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--equal-spacing", type=int, metavar="N")
    g.add_argument("--angles", type=_floats)
    p.add_argument("--input-angle", type=float, help="default vertical")
    p.add_argument("--target-angle", type=float, help="default horizontal")
    p.add_argument("--degrees", action="store_true", help="angles given in degrees")

    for action in sub.choices.values():
        _global_flags(action, suppress=True)
    return parser


def _params(args) -> Dict:
    skip = {"command", "seed", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    figure = args.command in ("fig1", "fig2", "fig3")
    fmt_out = args.format or ("csv" if figure else "json")
    try:
        if args.threads < 1:
            raise InvalidStateError("--threads must be at least 1")
        if args.command == "fig1":
            header, cols = fig1_table(args.p_targets, args.gamma, args.grid_step)
        elif args.command == "fig2":
            header, cols = fig2_table(args.gammas, args.grid_step)
        elif args.command == "fig3":
            header, cols = fig3_table(args.n_values, args.gammas, args.p_grid_step, _config(args))
        else:
            report = run_command(args)
        meta = manifest(args.command, _params(args), args.seed)
        if figure:
            _check_probabilities(header, cols)
            if fmt_out == "csv":
                text = table_csv(header, cols)
            else:
                rows = [[rounded(v) for v in row] for row in zip(*cols)]
                text = json.dumps({"columns": header, "rows": rows, "manifest": meta}) + "\n"
        elif fmt_out == "csv":
            flat = [(k, v) for k, v in report.items() if isinstance(v, (int, float))]
            text = "key,value\n" + "".join(f"{k},{fmt(v)}\n" for k, v in flat)
        else:
            report["manifest"] = meta
            text = json.dumps(report, indent=2) + "\n"
        _write(text, args.out)
        if args.out is not None and fmt_out == "csv":
            _write(json.dumps(meta, indent=2) + "\n", args.out + ".manifest.json")
    except (InvalidStateError, ValueError) as exc:
        print(f"measure-steer: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CrossCheckError as exc:
        print(f"measure-steer: cross-check failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"measure-steer: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
