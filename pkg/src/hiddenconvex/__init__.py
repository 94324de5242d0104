"""Stochastic optimization under hidden convexity.

Projected stochastic (sub-)gradient methods with regime-prescribed
schedules, Moreau-envelope convergence certificates, a zoo of test
problems with explicit convex reformulations, and structural diagnostics.
"""

from .algorithms import (MANUAL, PSGD_CONVEX, PSGD_STRONGLY_CONVEX,
                         PSGDM_CONVEX, PSGDM_STRONGLY_CONVEX, SM_CONVEX,
                         SM_STRONGLY_CONVEX, Schedule, make_schedule,
                         post_batch_size, postprocess_minibatch, run_psgd,
                         run_psgdm, run_sm, validate_schedule)
from .core import (ConstantBundle, HiddenConvexProblem, IterationRecord,
                   eval_objective, map_forward, map_inverse,
                   sample_stochastic_gradient)
from .envelope import (ProxResult, blend_with_optimum, momentum_lyapunov,
                       moreau_lyapunov, prox, prox_reference_1d)
from .geometry import FeasibleSet, box, intervals, project, stationarity_measure
from .problems import (CATALOG, build, build_cosine, build_neg_square,
                       build_posynomial, build_revenue_truncation,
                       build_rosenbrock_chain)
from .rng import RandomSource

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "ConstantBundle", "FeasibleSet", "HiddenConvexProblem",
    "IterationRecord", "MANUAL", "PSGD_CONVEX", "PSGD_STRONGLY_CONVEX",
    "PSGDM_CONVEX", "PSGDM_STRONGLY_CONVEX", "ProxResult", "RandomSource",
    "SM_CONVEX", "SM_STRONGLY_CONVEX", "Schedule", "blend_with_optimum",
    "box", "build", "build_cosine", "build_neg_square", "build_posynomial",
    "build_revenue_truncation", "build_rosenbrock_chain", "eval_objective",
    "intervals", "make_schedule", "map_forward", "map_inverse",
    "momentum_lyapunov", "moreau_lyapunov", "post_batch_size",
    "postprocess_minibatch", "project", "prox", "prox_reference_1d",
    "run_psgd", "run_psgdm", "run_sm", "sample_stochastic_gradient",
    "stationarity_measure", "validate_schedule",
]
