"""Measurement-protected quantum key distribution: twirling, discrimination,
security thresholds and Monte Carlo protocol runs for qubit channels."""

from .channels import DepolarizingChannel, KrausChannel, PauliChannel, apply, pauli_from_ptm, ptm, y_flip
from .discrimination import Ensemble, Measurement, brute_force_optimal, guess_prob, guess_prob_through, helstrom
from .protocol import AdConfig, SimulationConfig, SimulationReport, ad_exact_stats, advantage_distillation, analytic_qber, run
from .qubit import BlochVector, DensityMatrix, PauliTransferMatrix, Unitary2, conjugate, trace_distance
from .security import (
    THRESHOLDS,
    BellDiagonalState,
    bb84_channel,
    is_entangled,
    mp_oneway_relation,
    mp_qber,
    mp_twoway_threshold,
    oneway_key_rate,
    qber,
    shared_state,
    twoway_distillable,
)
from .twirl import TwirlSet, depolarizing_fit, standard_2design, three_element_sets, twirl

__version__ = "0.1.0"
