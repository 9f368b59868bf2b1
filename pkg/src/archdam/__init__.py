"""Pareto shape optimisation of double-curvature arch dams.

Modules: ``geometry`` (parametric shape, volume, constraints), ``modal``
(hexahedral finite-element modal analysis), ``mocss`` and ``nsga2``
(multi-objective optimisers), ``mtdm`` (tournament decision making) and
``harness`` (configs, records, export). Hot loops live in ``kernels`` and run
under numba unless ``ARCHDAM_NUMBA=0``.
"""

from .geometry import CanyonProfile, DamShape, DesignVector, make_shape, morrow_point_canyon, morrow_point_design
from .modal import MaterialProps, modal_analysis
from .mocss import CssParams, optimize
from .mtdm import DEFAULT_SCENARIOS, Scenario, global_rank
from .nsga2 import Nsga2Params, nsga2_optimize
from .pareto import ParetoArchive, hypervolume_2d, pareto_rank
from .problems import ZDT1, DamProblem, ProblemSpec, SpherePair

__all__ = [
    "CanyonProfile", "DamShape", "DesignVector", "make_shape", "morrow_point_canyon", "morrow_point_design",
    "MaterialProps", "modal_analysis", "CssParams", "optimize", "DEFAULT_SCENARIOS", "Scenario", "global_rank",
    "Nsga2Params", "nsga2_optimize", "ParetoArchive", "hypervolume_2d", "pareto_rank", "ZDT1", "DamProblem",
    "ProblemSpec", "SpherePair",
]
