"""Numerical laboratory for a charged oscillator in a random zero-point field."""

from ._version import __version__
from .dynamics import EnsembleStats, ForceModel, Trajectory, energy_series, integrate_bm, run_ensemble
from .energy_balance import (
    BalanceReport,
    absorbed_power,
    einstein_A,
    net_rate,
    radiated_power,
    simulate_balance,
)
from .experiments import ExperimentConfig, RunManifest, load_config, parse_config, run, sweep
from .field_quantization import (
    LadderPair,
    ModeLabel,
    build_quadrature_matrices,
    ladder_from_quadratures,
    mode_hamiltonians,
    multimode_commutators,
)
from .hierarchy import (
    GreenKernel,
    HierarchySolution,
    build_green_kernel,
    first_order_response,
    hierarchy_consistency,
    second_order_response,
    solve_hierarchy,
    solve_zeroth,
)
from .matrix_mechanics import ResponseMatrices, bilinear_form, commutator, sho_response_matrices, trk_sum
from .units import PhysicalScale, UnitSystem, dissipation_time, electron_scale, make_scale, natural_scale
from .zpf import (
    FieldModeSet,
    FieldSpec,
    build_mode_set,
    estimate_autocorrelation,
    eval_field,
    sample_field,
    vacuum_energy_density,
)

__all__ = [name for name in dir() if not name.startswith("_")]
