"""One stage: mollify, build the frequency ladder, run K quadruple steps.

Per stage the defect against the mollified target drops by a factor
sigma^(K*N) (sigma = lam * l) while second derivatives grow like
sigma^(K+N); the mollification contributes an extra l^(s+beta) error
against the true target.  These two exponents are the stage's contract and
what the rate experiments measure.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

from .errors import CalibrationError, ParameterError
from .fields import (
    AffineVectorField,
    ScalarField,
    SymMatField2,
    VectorField2,
    cm_norm,
    defect,
    derivative_stack,
    mollify,
    sup_norm,
)
from .quadstep import DefectReport, QuadParams, quad_step


@dataclass(frozen=True)
class StageParams:
    """K quadruple steps at mollification scale l and stage frequency lam.

    ``majorant`` must dominate max(|v|_2, |w|_2, 1); ``s``/``beta`` declare
    the regularity class of the target field (s + beta < 2).
    """

    big_k: int
    n_rounds: int
    gamma: float
    l: float
    lam: int
    majorant: float
    s: int = 1
    beta: float = 0.9
    sigma0: float = 1.0
    c_mult: float = 2.0
    cbar_floor: float = 2.0
    positivity_floor: float = 1e-12

    def __post_init__(self):
        if self.big_k < 1 or self.n_rounds < 1:
            raise ParameterError("need K >= 1 and N >= 1")
        if not (0.0 < self.gamma < 1.0):
            raise ParameterError(f"gamma must lie in (0,1), got {self.gamma}")
        if self.lam < 1 or int(self.lam) != self.lam:
            raise ParameterError("stage frequency must be a positive integer")
        if not (0.0 < self.l < math.pi):
            raise ParameterError(f"mollification scale must lie in (0, pi), got {self.l}")
        if self.sigma <= 1.0:
            raise ParameterError(f"need sigma = lam*l > 1, got {self.sigma:.4g}")
        if self.lam ** (1.0 - self.gamma) * self.l < self.sigma0:
            raise ParameterError(
                f"lam^(1-gamma)*l = {self.lam ** (1 - self.gamma) * self.l:.4g} "
                f"below sigma0 = {self.sigma0}"
            )
        if self.s not in (0, 1) or not (0.0 < self.beta <= 1.0) or self.s + self.beta >= 2.0:
            raise ParameterError("regularity class needs s in {0,1}, beta in (0,1], s+beta < 2")
        if self.majorant < 1.0:
            raise ParameterError("majorant must be >= 1")

    @property
    def sigma(self) -> float:
        return self.lam * self.l


@dataclass(frozen=True)
class FrequencyLadder:
    """mu_0..mu_K and lam_1..lam_K, integers, interleaved.

    Before rounding: mu_0 = 1/l, lam_1 = sigma/l (the stage frequency),
    mu_j = sigma^(j+(j+1)N/2)/l, lam_j = sigma^(j(1+N/2))/l for j >= 2, so
    that mu_1/lam_1 = (lam_1/mu_0)^N = sigma^N, mu_j/lam_j = sigma^(N/2)
    for j >= 2, and lam_(j+1)/mu_j = sigma throughout.
    """

    mu: tuple[int, ...]
    lam: tuple[int, ...]  # lam[0] unused placeholder = mu[0]

    def interleaved(self) -> bool:
        seq = [self.mu[0]]
        for j in range(1, len(self.mu)):
            seq += [self.lam[j], self.mu[j]]
        return all(a <= b for a, b in zip(seq, seq[1:]))

    def to_dict(self) -> dict:
        return {"mu": list(self.mu), "lam": list(self.lam[1:])}


def ladder(p: StageParams) -> FrequencyLadder:
    sigma, l, n_r = p.sigma, p.l, p.n_rounds
    mu = [math.ceil(1.0 / l - 1e-9)]
    lam = [mu[0]]
    for j in range(1, p.big_k + 1):
        if j == 1:
            lam.append(int(p.lam))
        else:
            lam.append(math.ceil(sigma ** (j * (1.0 + n_r / 2.0)) / l - 1e-9))
        mu.append(math.ceil(sigma ** (j + (j + 1) * n_r / 2.0) / l - 1e-9))
    out = FrequencyLadder(mu=tuple(mu), lam=tuple(lam))
    if not out.interleaved():
        raise ParameterError(f"frequency ladder not interleaved after rounding: {out}")
    return out


@dataclass
class StageReport:
    defect_initial: float          # |D| of the inputs against the true target
    defect_final: float            # |D~| of the outputs against the true target
    defect_mollified_initial: float  # |D_0| against the mollified target
    defect_mollified_final: float    # |D_K| against the mollified target
    mollification_gap: float       # |A - A*phi_l|
    dv_c1: float
    dw_c1: float
    hess_v_sup: float
    hess_w_sup: float
    c_tilde: list[float]
    step_reports: list[DefectReport]
    ladder: FrequencyLadder
    wall_time: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ladder"] = self.ladder.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _hess_sup(f) -> float:
    comps = f.periodic.components if isinstance(f, AffineVectorField) else f.components
    best = 0.0
    for c in comps:
        for d in derivative_stack(c, [(2, 0), (1, 1), (0, 2)]):
            best = max(best, sup_norm(d))
    return best


def run_stage(
    v: VectorField2,
    w: AffineVectorField,
    a_target: SymMatField2,
    p: StageParams,
    dump_dir=None,
    check_intermediate: bool = False,
):
    """Mollify, run the ladder of K quadruple steps, report the stage bounds.

    On a positivity/pinching failure the stage restarts with a doubled
    defect-scale multiplier (twice), matching the rule that the scale
    constants are only ever "large enough".
    """
    grid = v.grid
    need = max(cm_norm(v, 2), cm_norm(w, 2), 1.0)
    if p.majorant < need * (1.0 - 1e-9):
        raise ParameterError(
            f"majorant {p.majorant} below max(|v|_2, |w|_2, 1) = {need:.4g}"
        )
    lad = ladder(p)
    top = 2 * lad.mu[-1] + 2 * lad.lam[-1]
    if top > grid.max_active_freq:
        raise ParameterError(
            f"ladder exceeds resolution: quadratic band estimate {top} "
            f"> budget {grid.max_active_freq} (n = {grid.n})"
        )

    t0 = time.perf_counter()
    v0 = mollify(v, p.l)
    w0 = mollify(w, p.l)
    a0 = mollify(a_target, p.l)
    moll_gap = sup_norm(a_target - a0)
    d0_true = sup_norm(defect(v, w, a_target))
    d0 = sup_norm(defect(v0, w0, a0))

    c_mult = p.c_mult
    last_err: CalibrationError | None = None
    for _attempt in range(3):
        try:
            c_tilde = c_mult * (d0 + (p.l * p.majorant) ** 2)
            b_budget = c_tilde
            c_list = [c_tilde]
            vj, wj = v0, w0
            reports: list[DefectReport] = []
            for j in range(p.big_k):
                mu_jm1 = lad.mu[j - 1] if j >= 1 else lad.mu[0]
                lam_j = lad.lam[j] if j >= 1 else lad.mu[0]
                qp = QuadParams(
                    gamma=p.gamma,
                    n_rounds=p.n_rounds,
                    mu_jm1=mu_jm1,
                    lam_j=lam_j,
                    mu_j=lad.mu[j],
                    lam_jp1=lad.lam[j + 1],
                    mu_jp1=lad.mu[j + 1],
                    c_tilde=c_tilde,
                    b_budget=b_budget,
                    cbar_floor=p.cbar_floor,
                    positivity_floor=p.positivity_floor,
                )
                vj, wj, rep = quad_step(vj, wj, a0, qp, check_intermediate=check_intermediate)
                reports.append(rep)
                if dump_dir is not None:
                    from .fldio import write_field

                    write_field(f"{dump_dir}/v_step{j + 1}.fld", vj)
                    write_field(f"{dump_dir}/w_step{j + 1}.fld", wj)
                b_budget = c_tilde
                if j == 0:
                    c_tilde = c_tilde / (lad.mu[1] / lad.lam[1])
                else:
                    c_tilde = c_tilde / (lad.mu[j + 1] / lad.lam[j + 1]) ** 2
                if j + 2 <= p.big_k:
                    # integer rounding of the ladder can jitter the balance
                    # constraint (b_budget/c_tilde)^(1/2) <= min ratio; clamp
                    # the scale so the next step stays admissible
                    cap = lad.mu[j + 1] / lad.lam[j + 1]
                    if j + 2 < len(lad.mu):
                        cap = min(cap, lad.mu[j + 2] / lad.lam[j + 2])
                    c_tilde = max(c_tilde, b_budget / cap ** 2)
                c_list.append(c_tilde)
            last_err = None
            break
        except CalibrationError as err:
            last_err = err
            c_mult *= 2.0
    if last_err is not None:
        raise last_err

    report = StageReport(
        defect_initial=d0_true,
        defect_final=sup_norm(defect(vj, wj, a_target)),
        defect_mollified_initial=d0,
        defect_mollified_final=reports[-1].defect_sup,
        mollification_gap=moll_gap,
        dv_c1=cm_norm(vj - v, 1),
        dw_c1=cm_norm(wj - w, 1),
        hess_v_sup=_hess_sup(vj),
        hess_w_sup=_hess_sup(wj),
        c_tilde=c_list,
        step_reports=reports,
        ladder=lad,
        wall_time=time.perf_counter() - t0,
    )
    return vj, wj, report
