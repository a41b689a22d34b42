"""Seeded, batched Monte-Carlo runs of the honest and attacked protocols.

Rounds are generated in fixed-size batches. Every batch gets its own
``SeedSequence`` child, split into independent streams for round
generation, honest detection, Eve, and diagnostics. The honest and attacked
runs therefore see identical rounds, and results do not depend on how many
worker processes are used.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import KeyRateReport, RoundOutcome, TallySheet, accumulate, make_report
from .attack import EveConfig, attack_round
from .fock import sample_photon_number
from .protocol import ProtocolConfig, charlie_detect, make_rounds, port_amplitudes, sift

log = logging.getLogger(__name__)

BATCH_SIZE = 8192
MODES = ("honest", "attack")


def _streams(seed: int, batch: int) -> list[np.random.Generator]:
    child = np.random.SeedSequence(seed, spawn_key=(batch,))
    return [np.random.default_rng(s) for s in child.spawn(4)]


def _honest_outcome(round, config, rng) -> RoundOutcome:
    ann, n_photons = charlie_detect(round, config, rng)
    sifted = sift(round, ann)
    p1 = None
    if sifted is not None:
        lam = max(abs(a) ** 2 for a in port_amplitudes(round, config))
        p1 = lam / math.expm1(lam)
    return RoundOutcome(
        round.round_id,
        round.intensity_class,
        ann.outcome,
        ann.round_id,
        sifted=sifted,
        photon_number=n_photons if sifted is not None else None,
        p1=p1,
    )


def _attack_outcome(round, config, eve_config, rng, diag_rng) -> RoundOutcome:
    res = attack_round(round, config, eve_config, rng)
    sifted = sift(round, res.announcement)
    photon_number = p1 = None
    if res.stored4 is not None:
        # Counterfactual readout: photon number of the filtered state Eve holds.
        photon_number = sample_photon_number(res.stored4, diag_rng)
        p1 = float(abs(res.stored4[1]) ** 2)
    return RoundOutcome(
        round.round_id,
        round.intensity_class,
        res.announcement.outcome,
        res.announcement.round_id,
        sifted=sifted,
        eve_guess=res.record.bit_guess,
        photon_number=photon_number,
        p1=p1,
    )


def simulate_batch(
    config: ProtocolConfig, batch: int, modes: tuple[str, ...] = MODES
) -> dict[str, TallySheet]:
    first = batch * BATCH_SIZE
    n = min(BATCH_SIZE, config.rounds - first)
    round_rng, honest_rng, eve_rng, diag_rng = _streams(config.seed, batch)
    rounds = make_rounds(config, round_rng, n, first_id=first)
    eve_config = EveConfig.for_protocol(config)

    out = {}
    if "honest" in modes:
        tally = TallySheet()
        for r in rounds:
            accumulate(tally, _honest_outcome(r, config, honest_rng))
        out["honest"] = tally
    if "attack" in modes:
        tally = TallySheet()
        for r in rounds:
            accumulate(tally, _attack_outcome(r, config, eve_config, eve_rng, diag_rng))
        out["attack"] = tally
    return out


def _batch_job(args):
    return simulate_batch(*args)


def simulate(
    config: ProtocolConfig, modes: tuple[str, ...] = MODES, workers: int = 1
) -> dict[str, TallySheet]:
    """Run ``config.rounds`` rounds and return one merged tally per mode."""
    n_batches = -(-config.rounds // BATCH_SIZE)
    jobs = [(config, b, modes) for b in range(n_batches)]
    totals = {m: TallySheet() for m in modes}

    if workers > 1 and n_batches > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_batch_job, jobs)
            for b, res in enumerate(results):
                for m in modes:
                    totals[m] = totals[m].merge(res[m])
                log.info("batch %d/%d done", b + 1, n_batches)
    else:
        for b, job in enumerate(jobs):
            res = _batch_job(job)
            for m in modes:
                totals[m] = totals[m].merge(res[m])
            log.info("batch %d/%d done", b + 1, n_batches)
    return totals


def run(
    config: ProtocolConfig, mode: str = "both", workers: int = 1
) -> list[KeyRateReport]:
    """Simulate and summarize. ``mode="both"`` returns [honest, attack]."""
    modes = MODES if mode == "both" else (mode,)
    if any(m not in MODES for m in modes):
        raise ValueError(f"unknown mode {mode!r}")
    tallies = simulate(config, modes, workers)
    reports = [make_report(tallies[m], m, config.as_dict(), config.classes) for m in modes]
    if mode == "both":
        honest, attacked = reports
        attacked_gain = attacked.signal_gain()
        ratio = honest.signal_gain() / attacked_gain if attacked_gain else None
        for r in reports:
            r.gain_ratio_honest_over_attacked = ratio
    return reports
