"""Classical bounds, quantum values and facet tightening for
permutation-invariant two-body Bell inequalities."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BellCoefficients,
    Scenario,
    ScenarioError,
    canonical_form,
    flatten,
    functional_value,
    load_inequality,
    save_inequality,
    unflatten,
)
from .classical import (  # noqa: E402
    ClassicalResult,
    EnumerationBudgetError,
    Vertex,
    classical_bound,
    classical_bound_exact,
    classical_bound_tetra,
    enumerate_vertices,
    saturating_vertices,
)
from .kernels import BACKEND, available_backends  # noqa: E402
from .quantum import (  # noqa: E402
    QuantumOptions,
    QuantumSolution,
    bell_operator,
    collective_spin,
    grad_alpha,
    grad_theta,
    ground_state,
    quantum_value,
)
from .tighten import (  # noqa: E402
    FacetCertificate,
    TightenOptions,
    TightenResult,
    affine_rank,
    certify_facet,
    project_out,
    ratio,
    rationalize,
    tighten,
)

__all__ = [name for name in dir() if not name.startswith("_")]
