"""Planning toolkit for sliced O-RAN deployments over two-stage TWDM-PON
front/mid-haul with open access-edge servers.

Pipeline: generate a scenario, associate UEs to radio units (exact
branch-and-bound or Lagrangian-relaxation heuristic), design the optical
front/mid-haul and DU/CU server placement (greedy or exact at oracle
scale), then price the plan and compare against an OTN mesh baseline.
"""

__version__ = "0.1.0"

from .errors import InfeasibleError, OranPlanError, ParameterError, StructuralInfeasibility

__all__ = [
    "InfeasibleError",
    "OranPlanError",
    "ParameterError",
    "StructuralInfeasibility",
    "__version__",
]
