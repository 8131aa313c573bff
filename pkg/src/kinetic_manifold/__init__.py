"""Center-manifold reduction and small shock profiles for steady relaxation systems."""

from .center_manifold import (
    CanonicalFrame,
    CenterManifoldExpansion,
    PicardConfig,
    build_canonical,
    graph_Jc,
    normal_form,
    picard_solve,
    reduced_field,
    taylor_expand,
)
from .chapman_enskog import Classification, classify, equilibrium_graph, flux, rankine_hugoniot, viscosity
from .errors import (
    ClassificationError,
    ContractionError,
    ConvergenceError,
    DecompositionError,
    HypothesisError,
    KineticError,
    ModelError,
    ProfileError,
)
from .grid import GridFunction, uniform_grid
from .linear import (
    Decomposition,
    apply_K,
    apply_K0,
    apply_volterra,
    build_decomposition,
    green_apply,
    linear_center_solution,
    solve_inhomogeneous,
    trichotomy_project,
)
from .model import (
    HypothesisReport,
    KineticModel,
    apply_dQ,
    apply_Q,
    dump_model,
    generate_synthetic,
    load_model,
    verify_hypotheses,
)
from .profiles import (
    Profile,
    ProfileConfig,
    burgers_exact,
    ce2_profile,
    compare_profiles,
    epsilon_sweep,
    ldg_fiber_check,
    relaxation_profile,
)
from .registry import registry_model, registry_names
from .weighted import WeightParams, default_weights, norm_h1w, norm_l2w, norm_z

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
