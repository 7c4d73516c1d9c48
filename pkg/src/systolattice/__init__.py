"""Successive minima, exterior-power norms and systoles of flat tori."""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    DegenerateLatticeError,
    LatticeFormatError,
    OptimizerError,
    ReductionError,
    SystolatticeError,
)
from .exterior import (
    PVector,
    compound_matrix,
    exterior_power_lattice,
    hodge_star,
    index_table,
    wedge,
    wedge_indices,
    wedge_vectors,
)
from .lattice import (
    Lattice,
    dual,
    hexagonal,
    integer_lattice,
    lll_reduce,
    lll_transform,
    load_lattice,
    random_lattice,
    save_lattice,
)
from .minima import (
    MinimaProfile,
    enumerate_points,
    minima_basis,
    shortest_vector,
    successive_minima,
    transference_products,
)
from .norms import EUCLIDEAN, NormSpec, OptimizerOptions, comass, mass
from .torus import FlatTorus, SystoleReport, codim1_systole, conformal_systole, l2_homology_minima, stable_systole
from .verifiers import (
    Certificate,
    SearchOptions,
    search_dual_critical,
    verify_banaszczyk_general,
    verify_corollary_c,
    verify_corollary_d,
    verify_hermite,
    verify_minkowski,
    verify_theorem_81,
    verify_theorem_a,
    verify_theorem_b,
    verify_theorem_e,
    verify_transference,
)
