"""Numerical laboratory for the quartic-corrected Sherrington-Kirkpatrick toy model."""

__version__ = "0.1.0"

from .model import (
    CouplingMatrix,
    MagnetizationBand,
    ModelParams,
    SpinConfiguration,
    hamiltonian,
    interaction_field,
    log_base_measure,
    mix_seed,
    sample_couplings,
)
from .enumeration import EnumerationResult, band_derivative, enumerate_exact, overlap_second_moment
from .moments import MomentReport, first_moment, second_moment_exact, second_moment_rate
from .theory import (
    band_tail_bound,
    beta_at,
    beta_c,
    binary_entropy,
    envelope,
    exact_band_complement_mass,
    max_bound,
    negativity_window,
    solve_m_star,
    theory_constants,
)
from .disorder import (
    DisorderPlan,
    MCConfig,
    QuenchedEstimate,
    concentration_diagnostics,
    mc_free_energy,
    quenched_free_energy,
)
