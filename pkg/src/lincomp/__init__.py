"""Linear competition processes: limit sets, spectra, simulation and drift diagnostics."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    InteractionMatrix,
    Mode,
    ModelParseError,
    ModelSpec,
    ModelValidationError,
    PopulationState,
    SurvivorSet,
    load_model,
    parse_model,
    save_model,
    validate_model,
)
from .graph import build_graph, enumerate_limit_sets, scc_decompose, source_subgraphs  # noqa: E402
from .spectral import perron_root, min_real_eigenpair, full_spectrum, compute_u, spectral_summary  # noqa: E402
from .dynamics import simulate, first_extinction, dtmc_step, ctmc_step, urn_step  # noqa: E402

__all__ = [
    "InteractionMatrix",
    "Mode",
    "ModelParseError",
    "ModelSpec",
    "ModelValidationError",
    "PopulationState",
    "SurvivorSet",
    "load_model",
    "parse_model",
    "save_model",
    "validate_model",
    "build_graph",
    "enumerate_limit_sets",
    "scc_decompose",
    "source_subgraphs",
    "perron_root",
    "min_real_eigenpair",
    "full_spectrum",
    "compute_u",
    "spectral_summary",
    "simulate",
    "first_extinction",
    "dtmc_step",
    "ctmc_step",
    "urn_step",
]
