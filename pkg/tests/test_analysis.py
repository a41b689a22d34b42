import math
from collections import Counter

import numpy as np
import pytest

from twinfield.analysis import (
    ClassTally,
    RoundOutcome,
    TallySheet,
    accumulate,
    binary_entropy,
    compute_qber,
    eve_information,
    key_rate,
    make_report,
    single_photon_fraction,
)
from twinfield.errors import (
    DomainError,
    EmptyHistogram,
    InconsistentBundle,
    NoAcceptedRounds,
    NoSiftedBits,
)
from twinfield.protocol import SIGNAL, Decoy, Outcome, ProtocolConfig
from twinfield.runner import simulate


def bundle(rid, outcome=Outcome.NO_CLICK, cls=SIGNAL, **kw):
    return RoundOutcome(rid, cls, outcome, rid, **kw)


def random_bundles(rng, n):
    out = []
    for i in range(n):
        cls = SIGNAL if rng.random() < 0.7 else Decoy(int(rng.integers(2)))
        if rng.random() < 0.3:
            bits = (int(rng.integers(2)), int(rng.integers(2)))
            guess = int(rng.integers(2)) if rng.random() < 0.5 else None
            p1 = float(rng.random())
            out.append(bundle(i, Outcome.D0, cls, sifted=bits, eve_guess=guess,
                              photon_number=int(rng.integers(1, 4)), p1=p1))
        else:
            out.append(bundle(i, cls=cls))
    return out


def fold(bundles):
    t = TallySheet()
    for b in bundles:
        accumulate(t, b)
    return t


def test_accumulate_no_click():
    t = accumulate(TallySheet(), bundle(0))
    assert t[SIGNAL].sent == 1 and t[SIGNAL].clicks == 0


def test_accumulate_click_counts():
    t = fold([bundle(0, Outcome.D1, sifted=(1, 1), eve_guess=1, photon_number=2, p1=0.5),
              bundle(1, Outcome.D0, sifted=(0, 1))])
    c = t[SIGNAL]
    assert (c.sent, c.clicks, c.d0, c.d1, c.sifted, c.bit_errors) == (2, 2, 1, 1, 2, 1)
    assert (c.eve_accepted, c.eve_correct_guesses) == (1, 1)
    assert c.photon_histogram == Counter({2: 1})


def test_accumulate_rejects_inconsistent_bundles():
    with pytest.raises(InconsistentBundle):
        accumulate(TallySheet(), RoundOutcome(0, SIGNAL, Outcome.NO_CLICK, 1))
    with pytest.raises(InconsistentBundle):
        accumulate(TallySheet(), bundle(0, Outcome.D0))
    with pytest.raises(InconsistentBundle):
        accumulate(TallySheet(), bundle(0, sifted=(0, 0)))
    with pytest.raises(InconsistentBundle):
        accumulate(TallySheet(), bundle(0, eve_guess=1))


def test_merge_commutative_and_associative(rng):
    bundles = random_bundles(rng, 3000)
    a, b, c = fold(bundles[:700]), fold(bundles[700:2000]), fold(bundles[2000:])
    assert a.merge(b) == b.merge(a)
    assert a.merge(b).merge(c) == a.merge(b.merge(c))
    assert a.merge(b).merge(c) == fold(bundles)


def test_merge_any_partition(rng):
    bundles = random_bundles(rng, 2000)
    whole = fold(bundles)
    for _ in range(20):
        cuts = sorted(rng.choice(np.arange(1, len(bundles)), size=4, replace=False))
        parts = np.split(np.arange(len(bundles)), cuts)
        order = rng.permutation(len(parts))
        acc = TallySheet()
        for i in order:
            acc = acc.merge(fold([bundles[j] for j in parts[i]]))
        assert acc == whole


def test_qber():
    t = TallySheet()
    t.classes[SIGNAL] = ClassTally(sent=100, clicks=100, sifted=100, bit_errors=1)
    assert compute_qber(t) == 0.01
    with pytest.raises(NoSiftedBits):
        compute_qber(TallySheet())


def test_single_photon_fraction():
    t = ClassTally(photon_histogram=Counter({1: 7, 2: 3}))
    assert single_photon_fraction(t) == 0.7
    with pytest.raises(EmptyHistogram):
        single_photon_fraction(ClassTally())
    with pytest.raises(EmptyHistogram):
        single_photon_fraction(ClassTally(), analytic=True)


def test_eve_information():
    assert eve_information(ClassTally(eve_accepted=100, eve_correct_guesses=50)) == 0.5
    with pytest.raises(NoAcceptedRounds):
        eve_information(ClassTally())


def test_eve_information_random_guess_baseline(rng):
    n = 20_000
    bundles = [bundle(i, Outcome.D0, sifted=(b, b), eve_guess=int(rng.integers(2)))
               for i, b in enumerate(rng.integers(0, 2, n).tolist())]
    info = eve_information(fold(bundles))
    assert abs(info - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_binary_entropy():
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
    assert binary_entropy(0.5) == 1
    assert binary_entropy(0.11) == pytest.approx(0.4999159, abs=1e-6)


@pytest.mark.parametrize(
    "q1,e1,qber,expected",
    [(0.5, 0, 0, 0.5), (0.5, 0.5, 0, 0.0), (1, 0, 0, 1.0), (0.5, 0, 0.5, 0.0),
     (0.8, 0.11, 0.0, 0.8 * (1 - 0.4999159))],
)
def test_key_rate(q1, e1, qber, expected):
    assert key_rate(q1, e1, qber) == pytest.approx(expected, abs=1e-6)


def test_key_rate_domain_and_bound(rng):
    with pytest.raises(DomainError):
        key_rate(1.2, 0, 0)
    with pytest.raises(DomainError):
        key_rate(0.5, -0.1, 0)
    for q1, e1, e in rng.uniform(size=(500, 3)):
        assert 0 <= key_rate(q1, e1, e) <= q1


def test_report_fields_and_nulls():
    t = fold([bundle(0, Outcome.D0, sifted=(0, 0), photon_number=1, p1=0.5)])
    r = make_report(t, "honest", {"mu": 0.1}, [SIGNAL, Decoy(0)])
    d = r.as_dict()
    assert list(d) == ["mode", "config", "per_class", "qber", "single_photon_fraction",
                       "key_rate", "eve_accuracy", "gain_ratio_honest_over_attacked"]
    assert d["per_class"] == {"signal": {"sent": 1, "clicks": 1, "gain": 1.0},
                              "decoy0": {"sent": 0, "clicks": 0, "gain": 0.0}}
    assert d["qber"] == 0 and d["single_photon_fraction"] == 1.0 and d["key_rate"] == 1.0
    assert d["eve_accuracy"] is None and d["gain_ratio_honest_over_attacked"] is None


def test_attacked_signal_gain():
    cfg = ProtocolConfig(mu=0.1, rounds=40_000, seed=3)
    t = simulate(cfg, ("attack",))["attack"]
    p = 0.0327492301231192739832079271304
    assert abs(t[SIGNAL].gain - p) <= 3 * math.sqrt(p * (1 - p) / 40_000)


def test_attacked_run_identities():
    cfg = ProtocolConfig(mu=0.1, decoy_intensities=(0.05,), rounds=20_000, seed=11)
    t = simulate(cfg, ("attack",))["attack"]
    assert eve_information(t) == 1.0
    assert compute_qber(t) == 0.0
    q1 = single_photon_fraction(t)
    assert key_rate(q1, 0.0, compute_qber(t)) == q1
    assert t[SIGNAL].p1_min == pytest.approx(0.5, abs=1e-12)
    assert t[SIGNAL].p1_max == pytest.approx(0.5, abs=1e-12)


def test_honest_gains():
    cfg = ProtocolConfig(mu=0.1, decoy_intensities=(0.05, 0.02), p_signal=0.5,
                         rounds=40_000, seed=5)
    t = simulate(cfg, ("honest",))["honest"]
    for cls in cfg.classes:
        c = t[cls]
        p = 1 - math.exp(-2 * cfg.intensity(cls))
        assert abs(c.gain - p) <= 3 * math.sqrt(p * (1 - p) / c.sent)
    assert compute_qber(t) == 0.0
