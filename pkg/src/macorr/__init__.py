"""Numerical convex integration for the periodic 2-D von Karman system.

Constructs approximate solution pairs (v, w) of
    1/2 (grad v)^T grad v + sym grad w = A
on the flat torus (equivalently, weak solutions of the two-codimension
Monge-Ampere equation), via corrugation steps, integration-by-parts defect
cancellation, an amplitude iteration, and a Nash-Kuiper outer loop, and
verifies the predicted decay/growth exponents and algebraic identities.
"""

from .errors import CalibrationError, MacorrError, ParameterError, ResolutionError
from .fields import (
    AffineVectorField,
    Grid2,
    ScalarField,
    SymMatField2,
    VectorField2,
    cm_norm,
    commutator,
    curl_curl,
    defect,
    derivative,
    grad,
    hessian,
    holder_seminorm,
    integrate,
    metric_pullback,
    mollify,
    poisson_solve,
    sup_norm,
    sym_grad,
)
from .profiles import GAMMA, GAMMA_BAR, GAMMA_DBAR, GAMMA_TILDE_M1, TrigProfile, antiderivative
from .decompose import diagonal_decompose
from .corrugate import corrugation_step, step_residual
from .ibp import IbpOutput, ibp_coefficients, ibp_decompose
from .kallen import KallenParams, calibrate_cbar, kallen_iterate
from .quadstep import DefectReport, QuadParams, anisotropy_report, quad_step
from .stage import FrequencyLadder, StageParams, StageReport, ladder, run_stage
from .driver import (
    ExponentReport,
    Schedule,
    alpha_star,
    build_subsolution,
    holder_diagnostics,
    nash_kuiper,
    weak_residual,
)
from .fldio import read_field, write_field

__version__ = "0.1.0"
