"""Ideal twin-field QKD rounds: Alice, Bob, an honest Charlie, and sifting.

The model is the infinitesimal phase-slice limit: Alice and Bob always apply
the same random global phase and choose the same intensity class, and there
are no channel, alignment or detector imperfections.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, RoundIdMismatch
from .fock import DEFAULT_CUTOFF, bs_output_amplitudes

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IntensityClass:
    """``decoy=None`` is the signal class, otherwise an index into the decoy list."""

    decoy: int | None = None

    def __lt__(self, other: IntensityClass) -> bool:
        return self._key() < other._key()

    def _key(self) -> int:
        return -1 if self.decoy is None else self.decoy

    @property
    def is_signal(self) -> bool:
        return self.decoy is None

    @property
    def label(self) -> str:
        return "signal" if self.decoy is None else f"decoy{self.decoy}"

    def __str__(self) -> str:
        return self.label


SIGNAL = IntensityClass()


def Decoy(index: int) -> IntensityClass:
    return IntensityClass(int(index))


def _in_unit_interval(x: float) -> bool:
    return 0.0 < x < 1.0


@dataclass(frozen=True)
class ProtocolConfig:
    mu: float
    decoy_intensities: tuple[float, ...] = ()
    p_signal: float = 0.9
    rounds: int = 1
    cutoff: int = DEFAULT_CUTOFF
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "decoy_intensities", tuple(float(v) for v in self.decoy_intensities))
        problems = self.violations()
        if problems:
            raise ConfigError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not _in_unit_interval(self.mu):
            out.append(f"mu={self.mu!r}: intensity must be in (0,1)")
        for i, nu in enumerate(self.decoy_intensities):
            if not _in_unit_interval(nu):
                out.append(f"decoy[{i}]={nu!r}: intensity must be in (0,1)")
        if len(set(self.decoy_intensities)) != len(self.decoy_intensities):
            out.append("decoy intensities must be pairwise distinct")
        if self.mu in self.decoy_intensities:
            out.append("decoy intensities must differ from mu")
        if not 0.0 < self.p_signal <= 1.0:
            out.append(f"p_signal={self.p_signal!r}: must be in (0,1]")
        if int(self.rounds) != self.rounds or self.rounds < 1:
            out.append(f"rounds={self.rounds!r}: must be an integer >= 1")
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            # level 2 must exist for the attack's {|1>,|2>} subspace
            out.append(f"cutoff={self.cutoff!r}: must be an integer >= 2")
        return out

    @property
    def classes(self) -> list[IntensityClass]:
        return [SIGNAL] + [Decoy(i) for i in range(len(self.decoy_intensities))]

    def intensity(self, cls: IntensityClass) -> float:
        if cls.decoy is None:
            return self.mu
        try:
            return self.decoy_intensities[cls.decoy]
        except IndexError:
            raise ConfigError(f"no decoy class {cls.decoy}") from None

    def as_dict(self) -> dict:
        return {
            "mu": self.mu,
            "decoy_intensities": list(self.decoy_intensities),
            "p_signal": self.p_signal,
            "rounds": self.rounds,
            "cutoff": self.cutoff,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class PulseSetting:
    bit: int
    intensity_class: IntensityClass
    rho: float

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ConfigError(f"bit must be 0 or 1, got {self.bit!r}")
        if not 0.0 <= self.rho < TWO_PI:
            raise ConfigError(f"rho={self.rho!r} not in [0, 2pi)")


@dataclass(frozen=True)
class RoundInput:
    round_id: int
    alice: PulseSetting
    bob: PulseSetting

    def __post_init__(self):
        if self.alice.rho != self.bob.rho:
            raise ConfigError("ideal protocol requires identical random phases")
        if self.alice.intensity_class != self.bob.intensity_class:
            raise ConfigError("ideal protocol requires matching intensity classes")

    @property
    def rho(self) -> float:
        return self.alice.rho

    @property
    def intensity_class(self) -> IntensityClass:
        return self.alice.intensity_class


class Outcome(enum.Enum):
    NO_CLICK = "none"
    D0 = "D0"
    D1 = "D1"

    @property
    def clicked(self) -> bool:
        return self is not Outcome.NO_CLICK


@dataclass(frozen=True)
class DetectionAnnouncement:
    round_id: int
    outcome: Outcome


def encode_pulse(setting: PulseSetting, config: ProtocolConfig) -> complex:
    """Coherent amplitude (-1)^bit * sqrt(intensity) * exp(i rho)."""
    amp = math.sqrt(config.intensity(setting.intensity_class))
    sign = -1.0 if setting.bit else 1.0
    return sign * amp * complex(math.cos(setting.rho), math.sin(setting.rho))


def _sample_class(config: ProtocolConfig, rng: np.random.Generator) -> IntensityClass:
    n_decoys = len(config.decoy_intensities)
    if n_decoys == 0 or rng.random() < config.p_signal:
        return SIGNAL
    return Decoy(int(rng.integers(n_decoys)))


def make_round(config: ProtocolConfig, rng: np.random.Generator, round_id: int = 0) -> RoundInput:
    """Draw one round: independent uniform bits, a shared phase and class."""
    cls = _sample_class(config, rng)
    rho = float(rng.uniform(0.0, TWO_PI))
    a_bit, b_bit = (int(b) for b in rng.integers(0, 2, size=2))
    return RoundInput(
        round_id,
        PulseSetting(a_bit, cls, rho),
        PulseSetting(b_bit, cls, rho),
    )


def make_rounds(
    config: ProtocolConfig, rng: np.random.Generator, n: int, first_id: int = 0
) -> list[RoundInput]:
    """Vectorized equivalent of calling :func:`make_round` ``n`` times.

    Draws come from the generator in a different order than repeated
    ``make_round`` calls, so the two are statistically but not bitwise equal.
    """
    n_decoys = len(config.decoy_intensities)
    if n_decoys:
        is_signal = rng.random(n) < config.p_signal
        decoy_idx = rng.integers(n_decoys, size=n)
    else:
        is_signal = np.ones(n, dtype=bool)
        decoy_idx = np.zeros(n, dtype=int)
    rho = rng.uniform(0.0, TWO_PI, size=n)
    bits = rng.integers(0, 2, size=(n, 2))
    classes = [SIGNAL] + [Decoy(i) for i in range(n_decoys)]
    out = []
    for i in range(n):
        cls = SIGNAL if is_signal[i] else classes[1 + int(decoy_idx[i])]
        r = float(rho[i])
        out.append(
            RoundInput(
                first_id + i,
                PulseSetting(int(bits[i, 0]), cls, r),
                PulseSetting(int(bits[i, 1]), cls, r),
            )
        )
    return out


def port_amplitudes(round: RoundInput, config: ProtocolConfig) -> tuple[complex, complex]:
    """Beam-splitter outputs ``(d1_port, d0_port)`` for the round's pulse pair."""
    return bs_output_amplitudes(encode_pulse(round.alice, config), encode_pulse(round.bob, config))


def charlie_detect(
    round: RoundInput, config: ProtocolConfig, rng: np.random.Generator
) -> tuple[DetectionAnnouncement, int]:
    """Honest threshold detection, also returning the detected photon number.

    Photon numbers are Poisson in each output port; a port clicks when it
    holds at least one photon, i.e. with probability 1 - exp(-|amp|^2).
    """
    d1_amp, d0_amp = port_amplitudes(round, config)
    n1 = int(rng.poisson(abs(d1_amp) ** 2)) if d1_amp else 0
    n0 = int(rng.poisson(abs(d0_amp) ** 2)) if d0_amp else 0
    assert not (n0 and n1), "double click is impossible with matched phases"
    if n0:
        return DetectionAnnouncement(round.round_id, Outcome.D0), n0
    if n1:
        return DetectionAnnouncement(round.round_id, Outcome.D1), n1
    return DetectionAnnouncement(round.round_id, Outcome.NO_CLICK), 0


def honest_charlie_measure(
    round: RoundInput, config: ProtocolConfig, rng: np.random.Generator
) -> DetectionAnnouncement:
    return charlie_detect(round, config, rng)[0]


def sift(round: RoundInput, announcement: DetectionAnnouncement) -> tuple[int, int] | None:
    """Key bits kept by Alice and Bob; Bob flips his bit after a D0 click."""
    if announcement.round_id != round.round_id:
        raise RoundIdMismatch(
            f"announcement for round {announcement.round_id} applied to round {round.round_id}"
        )
    if announcement.outcome is Outcome.NO_CLICK:
        return None
    bob_bit = round.bob.bit
    if announcement.outcome is Outcome.D0:
        bob_bit ^= 1
    return round.alice.bit, bob_bit
