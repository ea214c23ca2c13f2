"""Command-line surface: verify, rates, solve.

Every number in the outputs comes from a library call that the test suite
also exercises.  Exit codes: 0 pass, 1 assertion failure, 2 configuration
or resolution error.  MACORR_THREADS caps FFT parallelism (default 1, which
also makes the verify JSON bitwise reproducible for a fixed seed).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import suites
from .driver import Schedule, cc_l1_norm, nash_kuiper, weak_residual
from .errors import MacorrError, ParameterError, ResolutionError
from .fields import Grid2, ScalarField, defect, sup_norm
from .fldio import read_field, write_field
from .heatmap import write_heatmap


@dataclass
class RunConfig:
    command: str
    n: int = 256
    big_k: int = 2
    n_rounds: int = 2
    gamma: float = 0.1
    sigma: float = 2.0
    l: float = 0.5
    theta: float = 0.5
    sigma0: float = 1.2
    margin: float = 1.0
    f_spec: str = "sinsin"
    out: str = "."
    seed: int = 0
    target_defect: float = 0.0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="macorr",
        description="Convex-integration engine for the periodic 2-D von Karman / "
        "Monge-Ampere system: identity verification, rate experiments, end-to-end solves.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("verify", "run all module identity/property suites"),
        ("rates", "run the decay/growth rate sweeps, write CSV + fitted slopes"),
        ("solve", "run the full Nash-Kuiper pipeline on a right-hand side f"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--n", type=int, default=256, help="grid points per axis (power of two)")
        p.add_argument("--K", dest="big_k", type=int, default=2, help="quadruple steps per stage")
        p.add_argument("--N", dest="n_rounds", type=int, default=2, help="cancellation rounds")
        p.add_argument("--gamma", type=float, default=0.1)
        p.add_argument("--sigma", type=float, default=2.0, help="stage ratio lam*l")
        p.add_argument("--l", type=float, default=0.5, help="mollification scale (schedule start)")
        p.add_argument("--theta", type=float, default=0.5, help="per-stage shrink factor of l")
        p.add_argument("--sigma0", type=float, default=1.2, help="admissibility floor for lam^(1-gamma)*l")
        p.add_argument("--margin", type=float, default=1.0, help="subsolution strictness margin")
        p.add_argument("--f", dest="f_spec", default="sinsin", help="rhs: sinsin | zero | sin3 | path.fld")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--target-defect", dest="target_defect", type=float, default=0.0)
    return ap


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def cmd_verify(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    lam = max(int(round(cfg.sigma / cfg.l)), 1)
    try:
        payload = suites.verify_all(n=cfg.n, seed=cfg.seed, lam=lam)
    except (ResolutionError, ParameterError) as err:
        failure = {
            "all_pass": False,
            "error": {"type": type(err).__name__, "message": str(err)},
            "config": {"n": cfg.n, "seed": cfg.seed, "lam": lam},
        }
        _write_json(out_dir / "verify.json", failure)
        print(f"verify: configuration/resolution failure: {err}", file=sys.stderr)
        return 2
    payload["config"] = {"n": cfg.n, "seed": cfg.seed, "lam": lam}
    _write_json(out_dir / "verify.json", payload)
    for name, s in sorted(payload["suites"].items()):
        print(f"{'PASS' if s['pass'] else 'FAIL'}  {name}")
        if not s["pass"]:
            for cname, c in s["checks"].items():
                if not c["pass"]:
                    print(f"      failed check: {cname} = {c}")
    print(f"verify: {'all suites pass' if payload['all_pass'] else 'FAILURES'}")
    return 0 if payload["all_pass"] else 1


def _feasible_sigmas(n: int, mu_j: int, n_rounds: int) -> list[int]:
    budget = n // 4
    out = []
    for s in (2, 4, 8):
        mu_jp1 = mu_j * s * round(s ** (n_rounds / 2.0))
        if 2 * (mu_jp1 + 2 * mu_j * s) + 32 <= budget:
            out.append(s)
    return out


def cmd_rates(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    try:
        kal = suites.kallen_rate_sweep(n=cfg.n, seed=cfg.seed, gamma=max(cfg.gamma, 0.3))
        with open(out_dir / "kallen_rates.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["n_rounds", "ratio", "sup_residual"])
            for key, res in kal["results"].items():
                nr = int(key[1:])
                for ratio, sup in zip((4, 8, 16), res["sups"]):
                    wr.writerow([nr, ratio, repr(sup)])
        summary["kallen"] = {
            k: {"slope": v["slope"], "stderr": v["stderr"], "ci95_halfwidth": 1.96 * v["stderr"]}
            for k, v in kal["results"].items()
        }
        summary["kallen"]["pass"] = kal["pass"]

        sigmas = _feasible_sigmas(cfg.n, 2, cfg.n_rounds)
        if len(sigmas) >= 2:
            qs = suites.quadstep_sweep(
                n=cfg.n, seed=cfg.seed, sigmas=tuple(sigmas), n_rounds=cfg.n_rounds, gamma=cfg.gamma
            )
            with open(out_dir / "quadstep_rates.csv", "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["sigma", "defect_sup"])
                for s, d in zip(sigmas, qs["sups"]):
                    wr.writerow([s, repr(d)])
            summary["quadstep"] = {"slope": qs["slope"], "pass": qs["pass"], "sigmas": sigmas}
        else:
            summary["quadstep"] = {"skipped": f"grid n={cfg.n} too small for the sweep"}

        lam = max(int(round(cfg.sigma / cfg.l)), 2)
        need = 2 * math.ceil((lam * cfg.l) ** (2 + 1.5 * cfg.n_rounds) / cfg.l) + 64
        if need <= cfg.n // 4:
            st = suites.stage_exponent_experiment(
                n=cfg.n, seed=cfg.seed, l=cfg.l, lam=lam, n_rounds=cfg.n_rounds, gamma=cfg.gamma
            )
            with open(out_dir / "stage_rates.csv", "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(["K", "defect_vs_mollified"])
                wr.writerow([1, repr(st["defects"]["K1"])])
                wr.writerow([2, repr(st["defects"]["K2"])])
            summary["stage"] = {
                "delta_decay": st["delta_decay"],
                "delta_growth": st["delta_growth"],
                "pass": st["pass"],
            }
        else:
            summary["stage"] = {"skipped": f"grid n={cfg.n} too small for K=2 ladder"}
    except (ResolutionError, ParameterError) as err:
        _write_json(out_dir / "rates_summary.json", {"error": str(err)})
        print(f"rates: configuration/resolution failure: {err}", file=sys.stderr)
        return 2
    _write_json(out_dir / "rates_summary.json", summary)
    ok = all(
        section.get("pass", True) for section in summary.values() if isinstance(section, dict)
    )
    for name, section in sorted(summary.items()):
        print(f"{name}: {json.dumps(section, sort_keys=True)}")
    return 0 if ok else 1


def _load_rhs(cfg: RunConfig, grid: Grid2) -> ScalarField:
    if cfg.f_spec.endswith(".fld"):
        f = read_field(cfg.f_spec)
        if not isinstance(f, ScalarField):
            raise ParameterError(f"{cfg.f_spec}: right-hand side must be a scalar field")
        if f.grid.n != grid.n:
            raise ParameterError(f"{cfg.f_spec}: grid size {f.grid.n} != requested n {grid.n}")
        return f
    return suites.named_rhs(grid, cfg.f_spec)


def cmd_solve(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = Grid2(cfg.n)
    try:
        f = _load_rhs(cfg, grid)
        sched = Schedule(
            l0=cfg.l,
            theta=cfg.theta,
            sigma0=cfg.sigma0,
            gamma=cfg.gamma,
            q_max=3,
            target_defect=cfg.target_defect,
        )
        sol = nash_kuiper(
            f, cfg.big_k, cfg.n_rounds, cfg.gamma, sched, margin=cfg.margin
        )
    except (ResolutionError, ParameterError) as err:
        print(f"solve: configuration error: {err}", file=sys.stderr)
        return 2

    write_field(out_dir / "v.fld", sol.v)
    write_field(out_dir / "w.fld", sol.w)
    for q, (vq, wq) in enumerate(zip(sol.v_iterates, sol.w_iterates), start=1):
        write_heatmap(out_dir / f"v1_stage{q}.ppm", vq.c1.values)
        write_heatmap(out_dir / f"v2_stage{q}.ppm", vq.c2.values)
        d = defect(vq, wq, sol.a_target)
        mag = np.sqrt(d.e11.values ** 2 + 2 * d.e12.values ** 2 + d.e22.values ** 2)
        write_heatmap(out_dir / f"defect_stage{q}.ppm", mag)

    d_final = sol.report.defect_history[-1]
    wk = suites.weak_residual_battery(sol.v, f, d_final, seed=cfg.seed)
    payload = {
        "exponents": sol.report.to_dict(),
        "stages": [r.to_dict() for r in sol.stage_reports],
        "weak_residuals": {
            "residuals": wk["residuals"],
            "bounds": wk["bounds"],
            "dominated": wk["pass"],
        },
        "reduction": (
            sol.report.defect_history[0] / d_final if d_final > 0 else float("inf")
        ),
    }
    _write_json(out_dir / "report.json", payload)
    print(
        f"solve: {sol.report.stages_run} stage(s); defect "
        f"{sol.report.defect_history[0]:.4g} -> {d_final:.4g} "
        f"(reduction {payload['reduction']:.3g}x); {sol.report.stop_reason}"
    )
    print(f"solve: weak residuals dominated: {wk['pass']}; outputs in {out_dir}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    cfg = RunConfig(**vars(args))
    try:
        if cfg.command == "verify":
            return cmd_verify(cfg)
        if cfg.command == "rates":
            return cmd_rates(cfg)
        if cfg.command == "solve":
            return cmd_solve(cfg)
    except MacorrError as err:
        print(f"{cfg.command}: error: {err}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    raise SystemExit(main())
