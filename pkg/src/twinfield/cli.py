"""Command-line front end: ``twinfield --mu 0.1 --rounds 100000 --mode both``.

Reports go to stdout (or ``--out``) as JSON or CSV; progress goes to stderr.
Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass

from .analysis import KeyRateReport
from .errors import TwinFieldError
from .fock import DEFAULT_CUTOFF
from .protocol import ProtocolConfig
from .runner import run as run_protocol

log = logging.getLogger("twinfield")

CSV_COLUMNS = [
    "mode",
    "class",
    "intensity",
    "sent",
    "clicks",
    "gain",
    "qber",
    "single_photon_fraction",
    "key_rate",
    "eve_accuracy",
    "gain_ratio_honest_over_attacked",
    "mu",
    "p_signal",
    "rounds",
    "cutoff",
    "seed",
]


@dataclass(frozen=True)
class RunSpec:
    mode: str
    config: ProtocolConfig
    format: str = "json"
    out: str | None = None
    workers: int = 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="twinfield",
        description="Simulate ideal twin-field QKD with and without the deferred-announcement attack.",
    )
    p.add_argument("--mode", choices=["honest", "attack", "both"], default="both")
    p.add_argument("--mu", type=float, required=True, help="signal intensity per side, in (0,1)")
    p.add_argument(
        "--decoy", type=float, action="append", default=[], metavar="NU",
        help="decoy intensity in (0,1); repeat for several classes",
    )
    p.add_argument("--p-signal", type=float, default=0.9, help="probability of a signal round")
    p.add_argument("--rounds", type=int, default=100_000)
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="Fock-space truncation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def _violations(ns: argparse.Namespace) -> list[str]:
    out = []
    if not 0.0 < ns.mu < 1.0:
        out.append(f"--mu {ns.mu}: intensity must be in (0,1)")
    for nu in ns.decoy:
        if not 0.0 < nu < 1.0:
            out.append(f"--decoy {nu}: intensity must be in (0,1)")
    if len(set(ns.decoy)) != len(ns.decoy):
        out.append("--decoy: intensities must be pairwise distinct")
    if ns.mu in ns.decoy:
        out.append(f"--decoy {ns.mu}: must differ from --mu")
    if not 0.0 < ns.p_signal <= 1.0:
        out.append(f"--p-signal {ns.p_signal}: must be in (0,1]")
    if ns.rounds < 1:
        out.append(f"--rounds {ns.rounds}: must be >= 1")
    if ns.cutoff < 2:
        out.append(f"--cutoff {ns.cutoff}: must be >= 2")
    if ns.workers < 1:
        out.append(f"--workers {ns.workers}: must be >= 1")
    return out


def parse_args(argv: list[str] | None = None) -> RunSpec:
    parser = build_parser()
    ns = parser.parse_args(argv)
    problems = _violations(ns)
    if problems:
        parser.error("\n  ".join(problems))
    if ns.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(name)s: %(message)s")
    config = ProtocolConfig(
        mu=ns.mu,
        decoy_intensities=tuple(ns.decoy),
        p_signal=ns.p_signal,
        rounds=ns.rounds,
        cutoff=ns.cutoff,
        seed=ns.seed,
    )
    return RunSpec(ns.mode, config, ns.format, ns.out, ns.workers)


def run(spec: RunSpec) -> list[KeyRateReport]:
    return run_protocol(spec.config, spec.mode, spec.workers)


def to_json(reports: list[KeyRateReport]) -> str:
    """One report object, or a two-element [honest, attack] list for mode both."""
    payload = [r.as_dict() for r in reports]
    if len(payload) == 1:
        payload = payload[0]
    return json.dumps(payload, indent=2) + "\n"


def to_csv(reports: list[KeyRateReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        cfg = r.config
        intensities = [cfg["mu"]] + list(cfg["decoy_intensities"])
        for i, (label, stats) in enumerate(r.per_class.items()):
            writer.writerow({
                "mode": r.mode,
                "class": label,
                "intensity": intensities[i],
                **stats,
                "qber": r.qber,
                "single_photon_fraction": r.single_photon_fraction,
                "key_rate": r.key_rate,
                "eve_accuracy": r.eve_accuracy,
                "gain_ratio_honest_over_attacked": r.gain_ratio_honest_over_attacked,
                **{k: cfg[k] for k in ("mu", "p_signal", "rounds", "cutoff", "seed")},
            })
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    spec = parse_args(argv)
    try:
        reports = run(spec)
    except TwinFieldError as exc:
        print(f"twinfield: error: {exc}", file=sys.stderr)
        return 1
    text = to_json(reports) if spec.format == "json" else to_csv(reports)
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            fh.write(text)
        log.info("wrote %s", spec.out)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
