"""Validity radii for Lyapunov-Schmidt reduction at singular equilibria of
Hopfield-type and firing-rate-type networks.

The package computes the four scalars controlling where a reduced
bifurcation model provably agrees with the full system, certifies ball
radii around a singular equilibrium, specializes everything in closed form
for consensus bifurcations on k-regular graphs, and cross-checks certified
regions with an independent Newton oracle for the implicit map.
"""

from .bounds import (
    BallSpec,
    BoundCertificate,
    CertificateMethod,
    check_radii,
    estimate_L_parallel,
    estimate_L_perp,
    m_parallel,
    m_perp,
    maximize_R_parallel,
    nod_structure,
    xi_parallel_norm,
    xi_perp_norm,
)
from .equilibrium import classify_singularity, find_singular_parameter, solve_equilibrium
from .errors import (
    AssumptionViolationError,
    BracketError,
    ConvergenceError,
    DegenerateBoundError,
    EdgeListError,
    GraphGenerationError,
    InputError,
    NotSingularError,
    NumericalError,
)
from .graphs import (
    Graph,
    SweepRecord,
    adjacency_spectrum,
    build_nod_model,
    generate_random_regular,
    graph_from_adjacency,
    load_edge_list,
    nod_bound,
    parse_edge_list,
)
from .models import (
    ACTIVATIONS,
    Activation,
    LOGISTIC,
    ModelKind,
    NetworkModel,
    SingularPoint,
    TANH,
    evaluate,
    gamma,
    jacobian_p,
    jacobian_x,
    model_from_dict,
    model_hash,
    model_to_dict,
    singular_point,
)
from .spectral import (
    SingularDecomposition,
    decompose_singular,
    projections,
    spectral_norm,
)
from .verify import (
    VerificationReport,
    compare_full_vs_branch,
    consensus_branch,
    solve_complementary,
    verify_implicit_map,
)

__version__ = "0.1.0"
