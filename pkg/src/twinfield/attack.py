"""Eve as an untrusted Charlie: crude detection, deferred announcement,
photon-number filtering, and bit recovery once the phases are public.

Each round owns an :class:`EveRoundRecord` that walks forward through
:class:`Stage`. Records are immutable; every step returns a new record.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    AnnounceBeforeStep4,
    BothPortsNonVacuum,
    DisclosureMismatch,
    DomainError,
    WrongStage,
)
from .fock import (
    NULL_OUTCOME,
    FilterSpec,
    FockVector,
    apply_filter,
    coherent_vector,
    overlap,
    phase_shift,
    project_onto,
)
from .protocol import (
    DetectionAnnouncement,
    IntensityClass,
    Outcome,
    ProtocolConfig,
    RoundInput,
    port_amplitudes,
)

# Alice bit 0 ends up in the "+" state once the phase is unwound.
PLUS_BIT = 0
CERTAINTY_TOLERANCE = 1e-12
KEPT_LEVELS = (1, 2)


class Stage(enum.IntEnum):
    REJECTED = 0
    STORED1 = 1
    STORED2 = 2
    STORED4 = 3
    ANNOUNCED = 4
    RESOLVED = 5


_NEXT = {
    Stage.STORED1: {Stage.STORED2, Stage.REJECTED},
    Stage.STORED2: {Stage.STORED4, Stage.REJECTED},
    Stage.STORED4: {Stage.ANNOUNCED},
    Stage.ANNOUNCED: {Stage.RESOLVED},
    Stage.REJECTED: set(),
    Stage.RESOLVED: set(),
}


@dataclass(frozen=True)
class EveConfig:
    mu_filter: float

    def __post_init__(self):
        if not 0.0 < self.mu_filter < 1.0:
            raise DomainError(f"mu_filter={self.mu_filter!r} must be in (0,1)")

    @classmethod
    def for_protocol(cls, config: ProtocolConfig) -> EveConfig:
        return cls(config.mu)

    @property
    def filter(self) -> FilterSpec:
        return FilterSpec({1: math.sqrt(self.mu_filter), 2: 1.0})


@dataclass(frozen=True)
class Disclosure:
    """What Alice and Bob reveal after the detection announcements."""

    round_id: int
    rho: float
    intensity_class: IntensityClass

    @classmethod
    def of(cls, round: RoundInput) -> Disclosure:
        return cls(round.round_id, round.rho, round.intensity_class)


@dataclass(frozen=True)
class EveRoundRecord:
    round_id: int
    stage: Stage
    clicked_port: Outcome = Outcome.NO_CLICK
    stored_state: FockVector | None = None
    bit_guess: int | None = None
    guess_certain: bool = False
    # Success probability of every stage attempted so far.
    stage_probabilities: tuple[float, ...] = ()
    announcement: Outcome | None = None
    intensity_class: IntensityClass | None = None

    def __post_init__(self):
        has_state = self.stage in (Stage.STORED1, Stage.STORED2, Stage.STORED4, Stage.ANNOUNCED)
        if has_state != (self.stored_state is not None):
            raise WrongStage(f"stored_state presence inconsistent with stage {self.stage.name}")
        if (self.bit_guess is not None) and self.stage is not Stage.RESOLVED:
            raise WrongStage("bit_guess only exists once the record is resolved")

    def advance(self, stage: Stage, **changes) -> EveRoundRecord:
        if stage not in _NEXT[self.stage]:
            raise WrongStage(f"illegal transition {self.stage.name} -> {stage.name}")
        return replace(self, stage=stage, **changes)

    def reject(self, prob: float) -> EveRoundRecord:
        return self.advance(
            Stage.REJECTED,
            stored_state=None,
            stage_probabilities=self.stage_probabilities + (prob,),
        )


def _require(record: EveRoundRecord, stage: Stage, op: str) -> None:
    if record.stage is not stage:
        raise WrongStage(f"{op} needs stage {stage.name}, record is at {record.stage.name}")


def eve_step0_interfere(round: RoundInput, config: ProtocolConfig) -> tuple[complex, complex]:
    """Honest interference at the beam splitter; returns ``(d1_port, d0_port)``."""
    return port_amplitudes(round, config)


def eve_step1_crude_detect(
    port_amplitudes: tuple[complex, complex],
    cutoff: int,
    rng: np.random.Generator,
    round_id: int = 0,
) -> EveRoundRecord:
    """Vacuum / non-vacuum measurement on the lit output port.

    On a click the port state is stored with its vacuum component removed.
    Nothing is announced here.
    """
    d1_amp, d0_amp = port_amplitudes
    if d1_amp and d0_amp:
        raise BothPortsNonVacuum(f"round {round_id}: both ports lit ({d1_amp}, {d0_amp})")
    if d0_amp:
        port, amp = Outcome.D0, d0_amp
    elif d1_amp:
        port, amp = Outcome.D1, d1_amp
    else:
        return EveRoundRecord(round_id, Stage.REJECTED, stage_probabilities=(0.0,))

    p_click = -math.expm1(-abs(amp) ** 2)
    if rng.random() >= p_click:
        return EveRoundRecord(round_id, Stage.REJECTED, stage_probabilities=(p_click,))
    _, state = project_onto(coherent_vector(amp, cutoff), range(1, cutoff + 1))
    return EveRoundRecord(
        round_id,
        Stage.STORED1,
        clicked_port=port,
        stored_state=state,
        stage_probabilities=(p_click,),
    )


def eve_step2_project(record: EveRoundRecord, rng: np.random.Generator) -> EveRoundRecord:
    """Project the stored state onto span{|1>, |2>} or its complement."""
    _require(record, Stage.STORED1, "step 2")
    prob, state = project_onto(record.stored_state, KEPT_LEVELS)
    if state is NULL_OUTCOME or rng.random() >= prob:
        return record.reject(prob)
    return record.advance(
        Stage.STORED2,
        stored_state=state,
        stage_probabilities=record.stage_probabilities + (prob,),
    )


def eve_step34_filter(
    record: EveRoundRecord, eve_config: EveConfig, rng: np.random.Generator
) -> EveRoundRecord:
    """Unitary |1> -> sqrt(mu)|1> + sqrt(1-mu)|m0> then discard the |m0> branch.

    Implemented as the diagonal filter {1: sqrt(mu), 2: 1}.
    """
    _require(record, Stage.STORED2, "steps 3-4")
    prob, state = apply_filter(record.stored_state, eve_config.filter)
    if state is NULL_OUTCOME or rng.random() >= prob:
        return record.reject(prob)
    return record.advance(
        Stage.STORED4,
        stored_state=state,
        stage_probabilities=record.stage_probabilities + (prob,),
    )


def eve_announce(record: EveRoundRecord) -> tuple[DetectionAnnouncement, EveRoundRecord]:
    """Public click report, allowed only once filtering has finished.

    A rejected record announces no click and stays rejected; a stored one
    reports the port that originally fired and moves to ANNOUNCED.
    """
    if record.stage is Stage.REJECTED:
        if record.announcement is not None:
            raise WrongStage(f"round {record.round_id} already announced")
        return (
            DetectionAnnouncement(record.round_id, Outcome.NO_CLICK),
            replace(record, announcement=Outcome.NO_CLICK),
        )
    if record.stage in (Stage.STORED1, Stage.STORED2):
        raise AnnounceBeforeStep4(
            f"round {record.round_id}: announcement deferred until filtering ends "
            f"(stage {record.stage.name})"
        )
    _require(record, Stage.STORED4, "announce")
    return (
        DetectionAnnouncement(record.round_id, record.clicked_port),
        record.advance(Stage.ANNOUNCED, announcement=record.clicked_port),
    )


def plus_minus_basis(cutoff: int) -> tuple[FockVector, FockVector]:
    """(|1> + |2>)/sqrt2 and (-|1> + |2>)/sqrt2."""
    s = 1 / math.sqrt(2)
    plus = np.zeros(cutoff + 1, dtype=complex)
    minus = np.zeros(cutoff + 1, dtype=complex)
    plus[1], plus[2] = s, s
    minus[1], minus[2] = -s, s
    return FockVector(plus), FockVector(minus)


def discriminate(state: FockVector) -> tuple[float, float]:
    """Outcome probabilities of the projective measurement onto the +/- pair."""
    plus, minus = plus_minus_basis(state.cutoff)
    return abs(overlap(plus, state)) ** 2, abs(overlap(minus, state)) ** 2


def eve_step5_resolve(
    record: EveRoundRecord,
    disclosed: Disclosure,
    rng: np.random.Generator | None = None,
) -> EveRoundRecord:
    """Undo the disclosed phase and read out the bit of a signal round.

    With ``rng`` the +/- measurement outcome is sampled; without it the more
    likely outcome is taken. Decoy-round states are dropped unmeasured.
    """
    _require(record, Stage.ANNOUNCED, "step 5")
    if disclosed.round_id != record.round_id:
        raise DisclosureMismatch(
            f"disclosure for round {disclosed.round_id} applied to round {record.round_id}"
        )
    if not disclosed.intensity_class.is_signal:
        return record.advance(
            Stage.RESOLVED, stored_state=None, intensity_class=disclosed.intensity_class
        )

    unwound = phase_shift(record.stored_state, -disclosed.rho)
    p_plus, p_minus = discriminate(unwound)
    if rng is None:
        plus = p_plus >= p_minus
    else:
        plus = rng.random() < p_plus / (p_plus + p_minus)
    guess = PLUS_BIT if plus else 1 - PLUS_BIT
    return record.advance(
        Stage.RESOLVED,
        stored_state=None,
        bit_guess=guess,
        guess_certain=max(p_plus, p_minus) >= 1.0 - CERTAINTY_TOLERANCE,
        intensity_class=disclosed.intensity_class,
    )


def eve_acceptance_probability(incident_intensity: float, mu_filter: float) -> float:
    """Unconditional probability that Eve ends up announcing a click.

    With lam = 2 * incident_intensity at the lit port this is
    exp(-lam) * (mu_filter * lam + lam**2 / 2).
    """
    for name, v in (("incident_intensity", incident_intensity), ("mu_filter", mu_filter)):
        if not 0.0 < v < 1.0:
            raise DomainError(f"{name}={v!r} must be in (0,1)")
    lam = 2.0 * incident_intensity
    return math.exp(-lam) * (mu_filter * lam + lam * lam / 2.0)


@dataclass
class RoundResult:
    """Everything an attacked round leaves behind once Step 5 is done."""

    announcement: DetectionAnnouncement
    record: EveRoundRecord
    stored4: FockVector | None


def attack_round(
    round: RoundInput,
    config: ProtocolConfig,
    eve_config: EveConfig,
    rng: np.random.Generator,
) -> RoundResult:
    """Run Steps 0-5 on one round, including the public phase disclosure."""
    record = eve_step1_crude_detect(
        eve_step0_interfere(round, config), config.cutoff, rng, round.round_id
    )
    if record.stage is Stage.STORED1:
        record = eve_step2_project(record, rng)
    if record.stage is Stage.STORED2:
        record = eve_step34_filter(record, eve_config, rng)
    stored4 = record.stored_state if record.stage is Stage.STORED4 else None
    announcement, record = eve_announce(record)
    if record.stage is Stage.ANNOUNCED:
        record = eve_step5_resolve(record, Disclosure.of(round), rng)
    return RoundResult(announcement, record, stored4)
