"""End-to-end Nash-Kuiper loop: subsolution, stages, weak form, Hoelder probes.

The driver turns a mean-zero right-hand side f into a strict subsolution
A = (phi + c) Id of the weak Monge-Ampere problem, iterates stages under a
geometric mollification schedule, verifies the distributional identity
against test functions, and tracks empirical C^{1,alpha} seminorms across
the iterates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CalibrationError, ParameterError
from .fields import (
    AffineVectorField,
    ScalarField,
    SymMatField2,
    VectorField2,
    cm_norm,
    curl_curl,
    defect,
    derivative_stack,
    grad,
    holder_seminorm,
    integrate,
    metric_pullback,
    poisson_solve,
    sup_norm,
)
from .fitting import fit_loglog
from .stage import StageParams, StageReport, run_stage


def alpha_star(big_k: int, n_rounds: int, s: int, beta: float) -> float:
    """Achievable Hoelder exponent min{(s+beta)/2, S/(S+2J)}, J=K+N, S=KN."""
    big_s = big_k * n_rounds
    big_j = big_k + n_rounds
    return min((s + beta) / 2.0, big_s / (big_s + 2.0 * big_j))


def build_subsolution(
    f: ScalarField, margin: float
) -> tuple[SymMatField2, VectorField2, AffineVectorField]:
    """Strict subsolution (A, v=0, w=0) with curl curl A = -f and A >= margin*Id.

    A = (phi + c) Id where Laplacian(phi) = -f (zero-mean spectral solve) and
    c = margin + 2 sup|phi|.  f must be mean-zero (torus solvability).
    """
    if margin <= 0.0:
        raise ParameterError(f"margin must be positive, got {margin}")
    mean = f.mean()
    if abs(mean) > 1e-12 * max(sup_norm(f), 1.0):
        raise ParameterError(
            f"right-hand side must be mean-zero on the torus; mean = {mean:.6e}"
        )
    phi = poisson_solve(-1.0 * f)
    c = margin + 2.0 * sup_norm(phi)
    a = SymMatField2.scalar_identity(phi + c)
    grid = f.grid
    return a, VectorField2.zeros(grid), AffineVectorField.zeros(grid)


@dataclass(frozen=True)
class Schedule:
    """Geometric mollification scales with minimal admissible frequencies.

    l_{q+1} = theta * l_q; lam_q is the smallest integer with
    lam^(1-gamma) * l_q >= sigma0 and lam * l_q > 1.
    """

    l0: float
    theta: float
    sigma0: float
    gamma: float
    q_max: int
    target_defect: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise ParameterError(f"theta must lie in (0,1), got {self.theta}")
        if not (0.0 < self.l0 < math.pi):
            raise ParameterError(f"l0 must lie in (0, pi), got {self.l0}")
        if self.q_max < 1:
            raise ParameterError("need at least one scheduled stage")
        if self.sigma0 < 1.0:
            raise ParameterError("sigma0 must be >= 1")

    def entries(self) -> list[tuple[float, int]]:
        out = []
        l = self.l0
        for _ in range(self.q_max):
            lam = max(
                math.ceil((self.sigma0 / l) ** (1.0 / (1.0 - self.gamma)) - 1e-12),
                math.floor(1.0 / l) + 1,
            )
            out.append((l, lam))
            l *= self.theta
        return out


@dataclass
class ExponentReport:
    """Per-stage norms, Hoelder probe table, and the exponent arithmetic."""

    defect_history: list[float]
    hess_history: list[float]
    holder_alphas: list[float]
    holder_table: list[list[float]]  # [stage][alpha]
    holder_flags: dict[str, str]
    fitted_r: float | None
    theoretical_r: float
    alpha_star: float
    converged: bool
    non_convergent_pairs: int
    stages_run: int
    stop_reason: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def holder_diagnostics(
    iterates: list[VectorField2], alphas: list[float], growth_tol: float = 1.05
) -> tuple[list[list[float]], dict[str, str]]:
    """C^{1,alpha} seminorms of the gradient per iterate, flagged by trend.

    An exponent is flagged "growing" when the last ratio of consecutive
    seminorms exceeds growth_tol, "bounded" otherwise; a single iterate has
    no trend and counts as bounded.
    """
    table: list[list[float]] = []
    for v in iterates:
        gs = [grad(v.c1), grad(v.c2)]
        row = []
        for alpha in alphas:
            row.append(max(holder_seminorm(g, alpha) for g in gs))
        table.append(row)
    flags: dict[str, str] = {}
    for j, alpha in enumerate(alphas):
        series = [row[j] for row in table]
        if len(series) < 2 or series[-2] <= 0.0:
            flags[f"{alpha:.6g}"] = "bounded"
            continue
        ratio = series[-1] / series[-2]
        flags[f"{alpha:.6g}"] = "growing" if ratio > growth_tol else "bounded"
    return table, flags


def curl_curl_test_matrix(psi: ScalarField) -> SymMatField2:
    """The matrix pairing partner of psi: (d22 psi, -d12 psi; -d12 psi, d11 psi)."""
    d22, d12, d11 = derivative_stack(psi, [(0, 2), (1, 1), (2, 0)])
    return SymMatField2(d22, -1.0 * d12, d11)


def cc_l1_norm(psi: ScalarField) -> float:
    """Integral of |d22 psi| + 2|d12 psi| + |d11 psi| (pairing weights)."""
    d22, d12, d11 = derivative_stack(psi, [(0, 2), (1, 1), (2, 0)])
    h2 = psi.grid.h ** 2
    return float(
        (np.abs(d22.values) + 2.0 * np.abs(d12.values) + np.abs(d11.values)).sum() * h2
    )


def weak_residual(
    v: VectorField2, f: ScalarField, tests: list[ScalarField]
) -> list[float]:
    """|int (-1/2 (grad v)^T grad v) : cc(psi) - int f psi| per test function.

    Since the symmetric-gradient part pairs to zero, each residual equals the
    pairing of the defect with cc(psi) and is dominated by
    sup|D| * ||cc(psi)||_L1.
    """
    mp = metric_pullback(v)
    h2 = v.grid.h ** 2
    out = []
    for psi in tests:
        cc = curl_curl_test_matrix(psi)
        pairing = (
            mp.e11.values * cc.e11.values
            + 2.0 * mp.e12.values * cc.e12.values
            + mp.e22.values * cc.e22.values
        ).sum() * h2
        out.append(abs(-0.5 * float(pairing) - float((f.values * psi.values).sum() * h2)))
    return out


@dataclass
class SolveResult:
    v: VectorField2
    w: AffineVectorField
    a_target: SymMatField2
    report: ExponentReport
    stage_reports: list[StageReport]
    v_iterates: list[VectorField2] = field(default_factory=list)
    w_iterates: list[AffineVectorField] = field(default_factory=list)


def nash_kuiper(
    f: ScalarField,
    big_k: int,
    n_rounds: int,
    gamma: float,
    schedule: Schedule,
    margin: float = 1.0,
    s: int = 1,
    beta: float = 0.9,
    c_mult: float = 2.0,
    cbar_floor: float = 2.0,
    probe_alphas: list[float] | None = None,
    max_sigma0_doublings: int = 2,
) -> SolveResult:
    """Iterate stages from the flat subsolution until target/q_max/resolution.

    Per-stage defects and Hoelder seminorms are recorded; non-convergence
    (defect ratio >= 0.9 across consecutive stages) is reported, not raised.
    A stage that fails its positivity guards triggers one sigma0 doubling
    (rebuilding the remaining schedule) before giving up.
    """
    a_target, v, w = build_subsolution(f, margin)
    astar = alpha_star(big_k, n_rounds, s, beta)
    if probe_alphas is None:
        probe_alphas = [0.8 * astar, astar, 1.0]

    defects = [sup_norm(defect(v, w, a_target))]
    hesses: list[float] = []
    iterates: list[VectorField2] = []
    w_iterates: list[AffineVectorField] = []
    stage_reports: list[StageReport] = []
    stop_reason = "q_max reached"
    sigma0 = schedule.sigma0
    doublings = 0

    q = 0
    entries = schedule.entries()
    while q < len(entries):
        l_q, lam_q = entries[q]
        majorant = max(cm_norm(v, 2), cm_norm(w, 2), 1.0)
        try:
            params = StageParams(
                big_k=big_k,
                n_rounds=n_rounds,
                gamma=gamma,
                l=l_q,
                lam=lam_q,
                majorant=majorant,
                s=s,
                beta=beta,
                sigma0=sigma0,
                c_mult=c_mult,
                cbar_floor=cbar_floor,
            )
            v, w, rep = run_stage(v, w, a_target, params)
        except CalibrationError:
            if doublings >= max_sigma0_doublings:
                stop_reason = f"calibration failed at stage {q} after {doublings} sigma0 doublings"
                break
            doublings += 1
            sigma0 *= 2.0
            entries = Schedule(
                l0=l_q,
                theta=schedule.theta,
                sigma0=sigma0,
                gamma=schedule.gamma,
                q_max=schedule.q_max - q,
                target_defect=schedule.target_defect,
            ).entries()
            entries = [(None, None)] * q + entries  # keep absolute indexing
            continue
        except ParameterError as err:
            stop_reason = f"stage {q} not resolvable: {err}"
            break
        stage_reports.append(rep)
        defects.append(rep.defect_final)
        hesses.append(rep.hess_v_sup)
        iterates.append(v)
        w_iterates.append(w)
        q += 1
        if schedule.target_defect > 0.0 and rep.defect_final <= schedule.target_defect:
            stop_reason = f"target defect reached at stage {q}"
            break

    table, flags = holder_diagnostics(iterates, probe_alphas) if iterates else ([], {})
    non_conv = sum(
        1 for d0, d1 in zip(defects, defects[1:]) if d0 > 0 and d1 / d0 >= 0.9
    )
    fitted_r = None
    if len(hesses) >= 2 and all(h > 0 for h in hesses) and all(d > 0 for d in defects[1:]):
        qs = list(range(1, len(hesses) + 1))
        growth = fit_loglog(qs, hesses).slope if len(hesses) > 1 else 0.0
        decay = fit_loglog(qs, defects[1:]).slope
        if decay < 0:
            fitted_r = growth / (-decay)
    report = ExponentReport(
        defect_history=defects,
        hess_history=hesses,
        holder_alphas=probe_alphas,
        holder_table=table,
        holder_flags=flags,
        fitted_r=fitted_r,
        theoretical_r=(big_k + n_rounds) / (big_k * n_rounds),
        alpha_star=astar,
        converged=bool(
            defects[-1] <= schedule.target_defect
            if schedule.target_defect > 0
            else non_conv == 0
        ),
        non_convergent_pairs=non_conv,
        stages_run=len(stage_reports),
        stop_reason=stop_reason,
    )
    return SolveResult(
        v=v,
        w=w,
        a_target=a_target,
        report=report,
        stage_reports=stage_reports,
        v_iterates=iterates,
        w_iterates=w_iterates,
    )
