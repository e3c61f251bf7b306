"""Command-line front end.

Exit codes: 0 success or pass, 1 verification failure, 2 bad input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import closed_forms as cf
from . import operators as ops
from . import states as st
from . import witness as wt
from .maxent import (
    MAX_ORACLE_SITES,
    ConvergenceError,
    SolverConfig,
    level_entropies,
    regularize,
    regularized_spectrum,
)
from .report import RunReport, dumps, error_object
from .tensor import DensityMatrix, fidelity_with_ket, max_abs, partial_trace_array, trace_distance

log = logging.getLogger("qorrel")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
ORACLE_TELESCOPING_TOL = 1e-4
ANALYTIC_TELESCOPING_TOL = 1e-9


class InputError(ValueError):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QORREL_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(func, items):
    items = list(items)
    workers = min(_threads(), len(items)) or 1
    if workers == 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


# -- family construction ------------------------------------------------------

@dataclass
class FamilyCase:
    family: str
    n: int
    m: int | None
    params: dict
    state: DensityMatrix
    family_params: st.FamilyParams | None
    alpha: float | None = None

    def analytic(self) -> cf.CorrelationSpectrum:
        if self.family == "ghz1":
            return cf.theorem1_spectrum(self.family_params)
        if self.family == "ghz2":
            return cf.theorem2_spectrum(self.family_params)
        return cf.theorem3_spectrum(self.n, self.alpha)


def _require(value, name: str):
    if value is None:
        raise InputError(f"--{name} is required for this family")
    return value


def build_case(family: str, n: int, m=None, theta=None, phi=None, alpha=None,
               coeff_file=None) -> FamilyCase:
    if n is None or n < 2:
        raise InputError("--n must be at least 2")
    if family == "ghz1":
        if coeff_file:
            fp = st.FamilyParams.from_coefficients(n, st.load_coefficients(coeff_file))
            state = st.ghz1(fp)
            params = {"c": fp.c, "theta": fp.theta, "phi": fp.phi}
        else:
            theta, phi = _require(theta, "theta"), _require(phi, "phi")
            state = st.ghz1_pure(n, theta, phi)
            amp = np.array([np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)])
            fp = st.FamilyParams(n=n, c=np.outer(amp, amp))
            params = {"theta": theta, "phi": phi, "pure": True}
        return FamilyCase("ghz1", n, None, params, state, fp)
    if family == "ghz2":
        m = _require(m, "m")
        if coeff_file:
            fp = st.FamilyParams.from_coefficients(n, st.load_coefficients(coeff_file), m=m)
            params = {"c": fp.c, "theta": fp.theta, "phi": fp.phi}
        else:
            fp = st.FamilyParams.pure(n, _require(theta, "theta"), _require(phi, "phi"), m=m)
            params = {"theta": theta, "phi": phi, "pure": True}
        return FamilyCase("ghz2", n, m, params, st.ghz2(fp), fp)
    if family == "ms":
        alpha = _require(alpha, "alpha")
        return FamilyCase("ms", n, None, {"alpha": alpha}, st.ms_state(n, alpha), None, alpha)
    raise InputError(f"unknown family {family!r}")


def _spectrum_block(sp: cf.CorrelationSpectrum) -> dict:
    return {str(k): v for k, v in sp.values.items()}


def _oracle(state: DensityMatrix, config: SolverConfig) -> cf.CorrelationSpectrum:
    if state.n > MAX_ORACLE_SITES:
        raise InputError(f"the oracle supports n <= {MAX_ORACLE_SITES}")
    return regularized_spectrum(state, config)


# -- subcommands ----------------------------------------------------------------

def cmd_spectrum(args, config: SolverConfig) -> tuple[dict, list[dict], int]:
    case = build_case(args.family, args.n, args.m, args.theta, args.phi, args.alpha, args.coeff_file)
    if args.method == "oracle":
        sp = _oracle(case.state, config)
        residuals = {"max_marginal_mismatch": sp.metadata["max_residual"],
                     "telescoping": abs(sp.level_sum() - sp.total)}
        extra = {"epsilon_sequence": sp.metadata["epsilon_sequence"]}
    else:
        sp = case.analytic()
        tc = cf.total_correlation(case.state)
        residuals = {"telescoping": abs(sp.level_sum() - sp.total),
                     "total_vs_state": abs(sp.total - tc)}
        extra = {"metadata": sp.metadata}
    payload = {
        "family": case.family, "n": case.n, "m": case.m, "params": case.params,
        "method": args.method, "spectrum": _spectrum_block(sp), "total": sp.total,
        "residuals": residuals, **extra,
    }
    rows = [{"family": case.family, "n": case.n, "method": args.method, "level": k, "value": v}
            for k, v in sp.values.items()]
    return payload, rows, EXIT_OK


def _verify_cells(theorem: int, n: int, m, grid: int) -> list[dict]:
    if grid < 1:
        raise InputError("--grid must be positive")
    if theorem in (1, 2):
        thetas = np.linspace(0.2, np.pi / 4, grid) if grid > 1 else [np.pi / 4]
        phis = np.linspace(0.0, np.pi / 4, grid) if grid > 1 else [np.pi / 4]
        fam = "ghz1" if theorem == 1 else "ghz2"
        return [{"family": fam, "n": n, "m": m, "theta": float(t), "phi": float(p)}
                for t in thetas for p in phis]
    if theorem == 3:
        alphas = np.linspace(0.3, ops.ALPHA_MAX, grid) if grid > 1 else [ops.ALPHA_MAX]
        return [{"family": "ms", "n": n, "alpha": float(a)} for a in alphas]
    raise InputError("--theorem must be 1, 2 or 3")


def _verify_one(cell: dict, config: SolverConfig, tol: float) -> dict:
    case = build_case(cell["family"], cell["n"], cell.get("m"), cell.get("theta"),
                      cell.get("phi"), cell.get("alpha"))
    t0 = time.perf_counter()
    ana = case.analytic()
    orc = regularized_spectrum(case.state, config)
    diffs = {k: abs(ana.values[k] - orc.values[k]) for k in ana.values}
    tele_a = abs(ana.level_sum() - cf.total_correlation(case.state))
    tele_o = orc.metadata["max_telescoping_error"]
    ok = (max(diffs.values()) <= tol and tele_a <= ANALYTIC_TELESCOPING_TOL
          and tele_o <= ORACLE_TELESCOPING_TOL)
    out = {
        "params": {k: v for k, v in cell.items() if k not in ("family", "n")},
        "analytic": _spectrum_block(ana), "oracle": _spectrum_block(orc),
        "abs_diff": {str(k): v for k, v in diffs.items()}, "max_abs_diff": max(diffs.values()),
        "telescoping_analytic": tele_a, "telescoping_oracle": tele_o,
        "max_marginal_mismatch": orc.metadata["max_residual"], "pass": bool(ok),
        "seconds": time.perf_counter() - t0,
    }
    if cell["family"] == "ghz2":
        middle = [k for k, v in orc.values.items() if k not in (2, case.n) and abs(v) > tol]
        out["oracle_middle_levels"] = middle
        out["analytic_middle_level"] = ana.metadata["middle_level"]
        out["printed_label"] = ana.metadata["printed_label"]
    return out


def cmd_verify(args, config: SolverConfig) -> tuple[dict, list[dict], int]:
    if args.n > MAX_ORACLE_SITES:
        raise InputError(f"oracle comparisons need n <= {MAX_ORACLE_SITES}")
    if args.theorem == 2 and args.m is None:
        raise InputError("--m is required for theorem 2")
    tol = args.tol if args.tol is not None else 1e-2
    cells = _verify_cells(args.theorem, args.n, args.m, args.grid)
    results = _parallel_map(lambda c: _verify_one(c, config, tol), cells)
    passed = all(r["pass"] for r in results)
    payload = {"theorem": args.theorem, "n": args.n, "m": args.m, "grid": args.grid,
               "tol": tol, "cells": results, "pass": passed,
               "max_abs_diff": max(r["max_abs_diff"] for r in results)}
    if args.theorem == 2:
        levels = sorted({k for r in results for k in r["oracle_middle_levels"]})
        payload["oracle_middle_levels"] = levels
        payload["printed_label"] = args.m
        if levels and levels != [args.m]:
            log.warning("middle correlation found at level(s) %s, not at the printed label m=%d",
                        levels, args.m)
    rows = []
    for r in results:
        for k in r["analytic"]:
            rows.append({"theorem": args.theorem, **r["params"], "level": int(k),
                         "analytic": r["analytic"][k], "oracle": r["oracle"][k],
                         "abs_diff": r["abs_diff"][k], "pass": r["pass"]})
    if args.no_timings:
        for r in results:
            r.pop("seconds", None)
    return payload, rows, EXIT_OK if passed else EXIT_FAIL


def _max_marginal_residual(a: np.ndarray, b: np.ndarray, n: int, level: int) -> float:
    worst = 0.0
    for keep in itertools.combinations(range(1, n + 1), level):
        worst = max(worst, max_abs(partial_trace_array(a, keep, n) - partial_trace_array(b, keep, n)))
    return worst


def _limit_rows(family: str, gammas, n: int, fp: st.FamilyParams | None, alpha) -> list[dict]:
    rows = []
    if family == "ghz1":
        target = st.ghz1(fp).data
        limit = st.diagonal_companion("ghz1", fp).data
        make, level = (lambda g: st.sigma_g(g, fp)), n - 1
    elif family == "ghz2":
        target = st.ghz2(fp).data
        limit = st.diagonal_companion("ghz2", fp).data
        make, level = (lambda g: st.sigma_2(g, fp)), n - fp.m - 1
    elif family == "ghz2-tau":
        target = st.ghz2(fp).data
        limit = st.diagonal_companion("ghz2", fp, keep02=True).data
        make, level = (lambda g: st.tau_2(g, fp)), n - 1
    elif family == "ms":
        target = st.ms_state(n, alpha).data
        limit = st.diagonal_companion("ms", st.FamilyParams(n=n, alpha=alpha)).data
        make, level = (lambda g: st.sigma_s(g, n, alpha)), n - 2
    elif family == "ms-exp":
        target = limit = st.ms_state(n, alpha).data
        make, level = (lambda g: st.ms_exp_limit(g, n, alpha)), n
    else:
        raise InputError(f"unknown limit family {family!r}")
    psi = st.ms_ket(n, alpha) if family == "ms-exp" else None
    for g in gammas:
        s = make(float(g)).data
        row = {"gamma": float(g), "trace_distance": trace_distance(s, limit), "level": level}
        row["marginal_residual"] = (_max_marginal_residual(s, target, n, level)
                                    if level >= 1 else None)
        if psi is not None:
            row["fidelity"] = fidelity_with_ket(s, psi)
        rows.append(row)
    return rows


def cmd_limits(args, config: SolverConfig) -> tuple[dict, list[dict], int]:
    fam = args.family
    n = args.n
    fp = None
    if fam in ("ghz1", "ghz2", "ghz2-tau"):
        m = args.m if fam != "ghz1" else None
        if fam != "ghz1" and m is None:
            raise InputError("--m is required for the second family")
        if args.coeff_file:
            fp = st.FamilyParams.from_coefficients(n, st.load_coefficients(args.coeff_file), m=m)
        else:
            fp = st.FamilyParams(n=n, theta=_require(args.theta, "theta"),
                                 phi=_require(args.phi, "phi"), m=m)
            if args.c02 is not None:
                fp = fp.with_coherence(0, 2, complex(args.c02))
    else:
        _require(args.alpha, "alpha")
        if n < 3:
            raise InputError("MS limits need n >= 3")
    gammas = sorted(args.gammas)
    rows = _limit_rows(fam, gammas, n, fp, args.alpha)
    dists = [r["trace_distance"] for r in rows]
    monotone = all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    payload = {"family": fam, "n": n, "m": args.m,
               "params": {"theta": args.theta, "phi": args.phi, "alpha": args.alpha,
                          "c02": args.c02},
               "rows": rows, "monotone": monotone, "final_trace_distance": dists[-1]}
    return payload, rows, EXIT_OK if monotone else EXIT_FAIL


def cmd_witness(args, config: SolverConfig) -> tuple[dict, list[dict], int]:
    n = args.n
    tol = args.tol if args.tol is not None else 1e-10
    if args.family == "ms":
        alpha = args.alpha if args.alpha is not None else 0.7
        psi = st.ms_ket(n, alpha)
        cert = wt.ueme_check(ops.ms_generator(n, alpha), psi)
        found = wt.find_projector_pair(psi, n)
        payload = {"family": "ms", "n": n, "params": {"alpha": alpha},
                   "ueme": {"holds": cert.holds, "top_eigenvalue": cert.top_eigenvalue,
                            "gap": cert.gap, "fidelity": cert.fidelity,
                            "max_support": cert.operator.max_support},
                   "basis_aligned_projector_pair_found": found is not None,
                   "pass": bool(cert.holds)}
        rows = [{"family": "ms", "n": n, "gap": cert.gap, "fidelity": cert.fidelity,
                 "holds": cert.holds}]
        return payload, rows, EXIT_OK if cert.holds else EXIT_FAIL
    theta = args.theta if args.theta is not None else 0.5
    phi = args.phi if args.phi is not None else 0.4
    if args.family == "ghz1-pure":
        psi, pair = st.ghz1_ket(n, theta, phi), wt.ghz1_pair(n)
        params = {"theta": theta, "phi": phi}
    elif args.family == "ghz2-pure":
        m = _require(args.m, "m")
        psi, pair = st.ghz2_ket(n, m, theta, phi), wt.ghz2_pair(n)
        params = {"theta": theta, "phi": phi, "m": m}
    else:
        raise InputError(f"unknown witness family {args.family!r}")
    rep = wt.witness_expectation_test(psi, pair, args.samples, args.seed)
    ok = rep.holds(tol)
    payload = {"family": args.family, "n": n, "params": params, "samples": rep.samples,
               "max_deviation": rep.max_deviation, "overlap": rep.overlap, "tol": tol,
               "pass": bool(ok)}
    rows = [{"family": args.family, "n": n, "samples": rep.samples,
             "max_deviation": rep.max_deviation, "pass": ok}]
    return payload, rows, EXIT_OK if ok else EXIT_FAIL


def cmd_oracle_dump(args, config: SolverConfig) -> tuple[dict, list[dict], int]:
    case = build_case(args.family, args.n, args.m, args.theta, args.phi, args.alpha, args.coeff_file)
    if case.n > MAX_ORACLE_SITES:
        raise InputError(f"the oracle supports n <= {MAX_ORACLE_SITES}")
    entries, rows = [], []
    for eps in config.epsilon_schedule:
        results = level_entropies(regularize(case.state, eps), config)
        for level, r in results.items():
            if args.level is not None and level != args.level:
                continue
            item = {"eps": eps, "level": level, "entropy": r.entropy, "residual": r.residual,
                    "iterations": r.iterations}
            if args.with_params:
                item["dual_params"] = r.dual_params
            entries.append(item)
            rows.append({k: v for k, v in item.items() if k != "dual_params"})
    payload = {"family": case.family, "n": case.n, "m": case.m, "params": case.params,
               "method": "oracle", "levels": entries}
    return payload, rows, EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "limits": cmd_limits,
    "witness": cmd_witness,
    "oracle-dump": cmd_oracle_dump,
}


def _family_args(p: argparse.ArgumentParser, families) -> None:
    p.add_argument("--family", required=True, choices=families)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--coeff-file")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float)
    common.add_argument("--no-timings", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qorrel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qorrel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="correlation spectrum of a family state")
    _family_args(p, ("ghz1", "ghz2", "ms"))
    p.add_argument("--method", choices=("analytic", "oracle"), default="analytic")

    p = sub.add_parser("verify", parents=[common], help="compare closed forms with the oracle")
    p.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--grid", type=int, default=3)

    p = sub.add_parser("limits", parents=[common], help="gamma sweeps of the exponential states")
    p.add_argument("--family", required=True, choices=("ghz1", "ghz2", "ghz2-tau", "ms", "ms-exp"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--c02", help="complex coherence, e.g. 0.2 or 0.1+0.05j")
    p.add_argument("--coeff-file")
    p.add_argument("--gammas", type=float, nargs="+", default=[0.0, 5.0, 10.0, 20.0, 30.0])

    p = sub.add_parser("witness", parents=[common], help="projector-flip and UEME checks")
    p.add_argument("--family", required=True, choices=("ghz1-pure", "ghz2-pure", "ms"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--samples", type=int, default=100)

    p = sub.add_parser("oracle-dump", parents=[common], help="per-level maxent solver output")
    _family_args(p, ("ghz1", "ghz2", "ms"))
    p.add_argument("--level", type=int)
    p.add_argument("--with-params", action="store_true")
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = SolverConfig()
    t0 = time.perf_counter()
    try:
        payload, rows, code = COMMANDS[args.command](args, config)
    except ConvergenceError as exc:
        _emit(dumps(error_object("numerical", str(exc), residual=exc.residual,
                                 iterations=exc.iterations)), args.out)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        _emit(dumps(error_object("input", str(exc))), args.out)
        return EXIT_INPUT
    except np.linalg.LinAlgError as exc:
        _emit(dumps(error_object("numerical", str(exc))), args.out)
        return EXIT_NUMERIC
    timings = None if args.no_timings else {"total_seconds": time.perf_counter() - t0}
    report = RunReport(["qorrel", *argv], payload, args.seed, __version__, timings, rows)
    _emit(report.to_csv() if args.format == "csv" else report.to_json(), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
