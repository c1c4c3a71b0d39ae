"""Congruent numbers with large minimal canonical height.

Sieves for the special set T_theta(X), 2-descent on d y^2 = x^3 - x,
canonical heights, and the counting experiments built on them.
"""

from .curve import (
    INFINITY,
    CurvePoint,
    EtaResult,
    EtaStatus,
    add,
    canonical_height,
    double,
    eta,
    is_torsion,
    naive_x_height,
    on_curve,
    scalar_mul,
    torsion_points,
)
from .descent import (
    DescentQuadruple,
    NCountResult,
    count_N,
    enumerate_quadruples,
    point_to_quadruple,
    quadruple_to_point,
)
from .errors import BudgetError, DepthError
from .experiments import (
    CongruentVerdict,
    TheoremArithmetic,
    Verdict,
    congruent_proportion,
    eta_table,
    theorem_arithmetic,
    tunnell_classify,
    verify_lemma_E,
    verify_lemma_T,
)
from .sieve import (
    DensityReport,
    MobiusSegment,
    TSetRecord,
    count_T,
    enumerate_T,
    mertens_window_sum,
    mobius_segment,
    predicted_T,
    squarefree_progression_count,
)

__version__ = "0.1.0"
