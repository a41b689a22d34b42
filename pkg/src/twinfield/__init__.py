"""Ideal twin-field QKD and a deferred-announcement eavesdropping attack,
simulated over a truncated Fock space."""

from .analysis import KeyRateReport, TallySheet, compute_qber, eve_information, key_rate, single_photon_fraction
from .attack import EveConfig, EveRoundRecord, Stage, attack_round, eve_acceptance_probability
from .fock import (
    NULL_OUTCOME,
    FilterSpec,
    FockVector,
    TwoModeState,
    apply_filter,
    bs_output_amplitudes,
    bs_transform_fock,
    coherent_vector,
    phase_shift,
    project_onto,
)
from .protocol import SIGNAL, Decoy, Outcome, ProtocolConfig, RoundInput
from .runner import run, simulate

__version__ = "0.1.0"
