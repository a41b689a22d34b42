"""Tallies and the derived figures of merit: gain, QBER, Eve's information,
single-photon fraction and a decoy-style key rate."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import (
    DomainError,
    EmptyHistogram,
    InconsistentBundle,
    NoAcceptedRounds,
    NoSiftedBits,
)
from .protocol import SIGNAL, IntensityClass, Outcome


@dataclass(frozen=True)
class RoundOutcome:
    """Per-round facts handed to :func:`accumulate`.

    ``photon_number`` is the photon-number readout of the state behind a
    click (Charlie's detected pulse, or Eve's stored state after filtering);
    ``p1`` is the exact probability of that readout being one photon.
    """

    round_id: int
    intensity_class: IntensityClass
    outcome: Outcome
    announcement_round_id: int
    sifted: tuple[int, int] | None = None
    eve_guess: int | None = None
    photon_number: int | None = None
    p1: float | None = None


@dataclass
class ClassTally:
    sent: int = 0
    clicks: int = 0
    d0: int = 0
    d1: int = 0
    sifted: int = 0
    bit_errors: int = 0
    eve_accepted: int = 0
    eve_correct_guesses: int = 0
    photon_histogram: Counter = field(default_factory=Counter)
    # exact rational sum keeps merges associative and commutative
    p1_sum: Fraction = Fraction(0)
    p1_count: int = 0
    p1_min: float = math.inf
    p1_max: float = -math.inf

    def __add__(self, other: ClassTally) -> ClassTally:
        return ClassTally(
            sent=self.sent + other.sent,
            clicks=self.clicks + other.clicks,
            d0=self.d0 + other.d0,
            d1=self.d1 + other.d1,
            sifted=self.sifted + other.sifted,
            bit_errors=self.bit_errors + other.bit_errors,
            eve_accepted=self.eve_accepted + other.eve_accepted,
            eve_correct_guesses=self.eve_correct_guesses + other.eve_correct_guesses,
            photon_histogram=self.photon_histogram + other.photon_histogram,
            p1_sum=self.p1_sum + other.p1_sum,
            p1_count=self.p1_count + other.p1_count,
            p1_min=min(self.p1_min, other.p1_min),
            p1_max=max(self.p1_max, other.p1_max),
        )

    @property
    def gain(self) -> float:
        return self.clicks / self.sent if self.sent else 0.0

    def check(self) -> None:
        if self.clicks > self.sent or self.bit_errors > self.sifted:
            raise InconsistentBundle("tally counters out of order")
        if self.eve_correct_guesses > self.eve_accepted:
            raise InconsistentBundle("more correct guesses than accepted rounds")


@dataclass
class TallySheet:
    classes: dict[IntensityClass, ClassTally] = field(default_factory=dict)

    def __getitem__(self, cls: IntensityClass) -> ClassTally:
        return self.classes.setdefault(cls, ClassTally())

    def merge(self, other: TallySheet) -> TallySheet:
        out = {}
        for cls in set(self.classes) | set(other.classes):
            out[cls] = self.classes.get(cls, ClassTally()) + other.classes.get(cls, ClassTally())
        return TallySheet(dict(sorted(out.items())))

    __add__ = merge

    def __eq__(self, other) -> bool:
        if not isinstance(other, TallySheet):
            return NotImplemented
        keys = set(self.classes) | set(other.classes)
        return all(
            self.classes.get(k, ClassTally()) == other.classes.get(k, ClassTally()) for k in keys
        )


def accumulate(tally: TallySheet, bundle: RoundOutcome) -> TallySheet:
    """Fold one round into ``tally`` (in place) and return it."""
    if bundle.announcement_round_id != bundle.round_id:
        raise InconsistentBundle(
            f"announcement {bundle.announcement_round_id} does not belong to round {bundle.round_id}"
        )
    if (bundle.sifted is not None) != bundle.outcome.clicked:
        raise InconsistentBundle(f"round {bundle.round_id}: sifted bits must accompany a click")
    if bundle.eve_guess is not None and bundle.sifted is None:
        raise InconsistentBundle(f"round {bundle.round_id}: Eve guessed an unsifted bit")

    t = tally[bundle.intensity_class]
    t.sent += 1
    if bundle.outcome is Outcome.D0:
        t.d0 += 1
    elif bundle.outcome is Outcome.D1:
        t.d1 += 1
    if bundle.sifted is not None:
        t.clicks += 1
        t.sifted += 1
        alice, bob = bundle.sifted
        t.bit_errors += alice != bob
    if bundle.eve_guess is not None:
        t.eve_accepted += 1
        t.eve_correct_guesses += bundle.eve_guess == bundle.sifted[0]
    if bundle.photon_number is not None:
        t.photon_histogram[bundle.photon_number] += 1
    if bundle.p1 is not None:
        t.p1_sum += Fraction(bundle.p1)
        t.p1_count += 1
        t.p1_min = min(t.p1_min, bundle.p1)
        t.p1_max = max(t.p1_max, bundle.p1)
    return tally


def _select(tally: TallySheet | ClassTally, cls: IntensityClass) -> ClassTally:
    return tally if isinstance(tally, ClassTally) else tally.classes.get(cls, ClassTally())


def compute_qber(tally: TallySheet | ClassTally, cls: IntensityClass = SIGNAL) -> float:
    t = _select(tally, cls)
    if t.sifted == 0:
        raise NoSiftedBits(f"no sifted bits in class {cls}")
    return t.bit_errors / t.sifted


def single_photon_fraction(
    tally: TallySheet | ClassTally, cls: IntensityClass = SIGNAL, analytic: bool = False
) -> float:
    """Fraction of raw bits carried by exactly one photon.

    By default this is read from the sampled photon-number histogram. With
    ``analytic=True`` the exact per-round probabilities are averaged instead.
    """
    t = _select(tally, cls)
    if analytic:
        if t.p1_count == 0:
            raise EmptyHistogram(f"no analytic single-photon data in class {cls}")
        return float(t.p1_sum / t.p1_count)
    total = sum(t.photon_histogram.values())
    if total == 0:
        raise EmptyHistogram(f"no photon-number readouts in class {cls}")
    return t.photon_histogram.get(1, 0) / total


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def key_rate(q1: float, e1: float, qber: float, f: float = 1.0) -> float:
    """Secure bits per sifted bit, q1 * (1 - H(e1)) - f * H(qber), floored at 0."""
    for name, v in (("q1", q1), ("e1", e1), ("qber", qber)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name}={v!r} must be in [0,1]")
    return max(0.0, q1 * (1.0 - binary_entropy(e1)) - f * binary_entropy(qber))


def eve_information(tally: TallySheet | ClassTally, cls: IntensityClass = SIGNAL) -> float:
    t = _select(tally, cls)
    if t.eve_accepted == 0:
        raise NoAcceptedRounds(f"Eve resolved no rounds in class {cls}")
    return t.eve_correct_guesses / t.eve_accepted


@dataclass
class KeyRateReport:
    mode: str
    config: dict
    per_class: dict[str, dict]
    qber: float | None
    single_photon_fraction: float | None
    key_rate: float | None
    eve_accuracy: float | None
    gain_ratio_honest_over_attacked: float | None = None

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "config": self.config,
            "per_class": self.per_class,
            "qber": self.qber,
            "single_photon_fraction": self.single_photon_fraction,
            "key_rate": self.key_rate,
            "eve_accuracy": self.eve_accuracy,
            "gain_ratio_honest_over_attacked": self.gain_ratio_honest_over_attacked,
        }

    def signal_gain(self) -> float:
        return self.per_class[SIGNAL.label]["gain"]


def _maybe(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (NoSiftedBits, EmptyHistogram, NoAcceptedRounds):
        return None


def make_report(
    tally: TallySheet, mode: str, config: Mapping, classes: list[IntensityClass] | None = None
) -> KeyRateReport:
    """Summarize a tally; quantities without data come out as ``None``."""
    classes = classes if classes is not None else sorted(tally.classes)
    per_class = {}
    for cls in classes:
        t = tally.classes.get(cls, ClassTally())
        t.check()
        per_class[cls.label] = {"sent": t.sent, "clicks": t.clicks, "gain": t.gain}

    qber = _maybe(compute_qber, tally)
    q1 = _maybe(single_photon_fraction, tally)
    rate = key_rate(q1, 0.0, qber) if q1 is not None and qber is not None else None
    return KeyRateReport(
        mode=mode,
        config=dict(config),
        per_class=per_class,
        qber=qber,
        single_photon_fraction=q1,
        key_rate=rate,
        eve_accuracy=_maybe(eve_information, tally),
    )
