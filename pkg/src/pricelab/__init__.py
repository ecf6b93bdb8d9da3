"""pricelab: a numerical laboratory for late-time tails on black-hole backgrounds.

Per-mode 1+1 evolution in tortoise coordinates, exact Kerr/Schwarzschild
geometry, weighted local-energy norms with dyadic cone decompositions, a
flat-space rectangle-integral oracle, and decay-exponent fitting -- tied
together by a config-driven experiment runner.
"""

from .geometry import (
    BlackHoleParams,
    MetricComponents,
    SlicingSpec,
    TrappedSetQuery,
    horizon_radii,
    inverse_tortoise,
    metric_bl,
    reference_slicing,
    tortoise,
    trapped_polynomial,
    trapped_root,
    validate_slicing,
)
from .reduction import (
    RadialPotential,
    ReductionSource,
    mode_source_envelope,
    normal_form_check,
    oned_reduction,
    rw_potential,
)
from .evolver import (
    GridSpec,
    InitialData,
    ModeField,
    PerturbationSpec,
    Trajectory,
    build_time_dependent_potential,
    energy,
    evolve,
    photon_sphere_window,
)
from .analysis import (
    ConeRegion,
    DyadicRegion,
    GridField,
    NormSpec,
    SymbolClassSpec,
    WeightScheme,
    apply_vector_field,
    bracket,
    commutator_residual,
    commutator_residual_flat,
    cone_partition,
    duality_pairing,
    le_norm,
    sobolev_check,
    symbol_class_check,
)
from .tailfit import (
    CurveSeries,
    DecayFit,
    envelope_fit,
    fit_tail,
    local_power_index,
    plateau,
)

__version__ = "0.1.0"
