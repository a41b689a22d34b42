"""Truncated Fock-space states and the handful of operators the attack needs.

Single-mode states are stored as dense amplitude vectors over photon numbers
``0..cutoff``. Two-mode states exist only to run the exact beam-splitter
unitary, which the rest of the package treats as a brute-force reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from scipy.special import gammainc

from .errors import (
    DomainError,
    EmptySubspace,
    IndexBeyondCutoff,
    InvalidCutoff,
    TailMassExceeded,
    WeightOutOfRange,
)

DEFAULT_CUTOFF = 20
TAIL_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12


class _NullOutcome:
    """Marker returned in place of a state when a branch has zero probability."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NULL_OUTCOME"

    def __bool__(self) -> bool:
        return False


NULL_OUTCOME = _NullOutcome()


def _frozen_complex(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.ndim != ndim:
        raise DomainError(f"expected a {ndim}-d amplitude array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("amplitudes must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FockVector:
    """Pure single-mode state truncated at ``cutoff`` photons."""

    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen_complex(self.amps, 1)
        if amps.size < 2:
            raise InvalidCutoff(f"cutoff must be >= 1, got {amps.size - 1}")
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(self.norm_squared() - 1.0) > NORM_TOLERANCE:
            raise DomainError(
                f"state flagged normalized but has squared norm {self.norm_squared()!r}"
            )

    @property
    def cutoff(self) -> int:
        return self.amps.size - 1

    @classmethod
    def basis(cls, k: int, cutoff: int = DEFAULT_CUTOFF) -> FockVector:
        if cutoff < 1:
            raise InvalidCutoff(f"cutoff must be >= 1, got {cutoff}")
        if not 0 <= k <= cutoff:
            raise IndexBeyondCutoff(f"photon number {k} outside 0..{cutoff}")
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[k] = 1.0
        return cls(amps)

    @classmethod
    def from_amplitudes(cls, amps, cutoff: int | None = None) -> FockVector:
        """Normalize ``amps`` (zero-padded to ``cutoff``) into a state."""
        amps = np.asarray(amps, dtype=complex)
        if cutoff is not None:
            if cutoff + 1 < amps.size:
                raise IndexBeyondCutoff("more amplitudes than the cutoff allows")
            amps = np.pad(amps, (0, cutoff + 1 - amps.size))
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise DomainError("cannot normalize the zero vector")
        return cls(amps / norm)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        """Photon-number distribution |a_k|^2."""
        p = np.abs(self.amps) ** 2
        return p / p.sum()

    def __getitem__(self, k: int) -> complex:
        return complex(self.amps[k])

    def __len__(self) -> int:
        return self.amps.size

    def allclose(self, other: FockVector, atol: float = 1e-10) -> bool:
        return self.cutoff == other.cutoff and bool(
            np.allclose(self.amps, other.amps, rtol=0.0, atol=atol)
        )


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Joint pure state of two modes, ``amps[k_a, k_b]``."""

    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen_complex(self.amps, 2)
        if amps.shape[0] != amps.shape[1]:
            raise DomainError(f"grid must be square, got {amps.shape}")
        if amps.shape[0] < 2:
            raise InvalidCutoff(f"cutoff must be >= 1, got {amps.shape[0] - 1}")
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(self.norm_squared() - 1.0) > NORM_TOLERANCE:
            raise DomainError(
                f"state flagged normalized but has squared norm {self.norm_squared()!r}"
            )

    @property
    def cutoff(self) -> int:
        return self.amps.shape[0] - 1

    @classmethod
    def product(cls, a: FockVector, b: FockVector) -> TwoModeState:
        if a.cutoff != b.cutoff:
            raise DomainError("both modes must share one cutoff")
        grid = np.outer(a.amps, b.amps)
        return cls(grid, normalized=a.normalized and b.normalized)

    @classmethod
    def basis(cls, k_a: int, k_b: int, cutoff: int = DEFAULT_CUTOFF) -> TwoModeState:
        if not (0 <= k_a <= cutoff and 0 <= k_b <= cutoff):
            raise IndexBeyondCutoff(f"|{k_a},{k_b}> outside cutoff {cutoff}")
        grid = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        grid[k_a, k_b] = 1.0
        return cls(grid)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def inner(self, other: TwoModeState) -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amps, other.amps))

    def beyond_total_cutoff_mass(self) -> float:
        """Probability carried by |k_a, k_b> with k_a + k_b > cutoff."""
        n = self.cutoff + 1
        ka, kb = np.indices((n, n))
        return float(np.sum(np.abs(self.amps[ka + kb > self.cutoff]) ** 2))


def _check_cutoff(cutoff: int) -> None:
    if int(cutoff) != cutoff or cutoff < 1:
        raise InvalidCutoff(f"cutoff must be an integer >= 1, got {cutoff!r}")


def poisson_tail(mean_photons: float, cutoff: int) -> float:
    """P(n > cutoff) for a Poisson photon-number distribution."""
    if mean_photons == 0:
        return 0.0
    # P(N > k) equals the regularized lower incomplete gamma P(k + 1, mean)
    return float(gammainc(cutoff + 1, mean_photons))


def coherent_vector(
    alpha: complex, cutoff: int = DEFAULT_CUTOFF, tail_tolerance: float = TAIL_TOLERANCE
) -> FockVector:
    """Truncated coherent state |alpha>, renormalized over ``0..cutoff``.

    Raises TailMassExceeded when the photon-number mass above the cutoff is
    larger than ``tail_tolerance``.
    """
    _check_cutoff(cutoff)
    alpha = complex(alpha)
    mean = abs(alpha) ** 2
    tail = poisson_tail(mean, cutoff)
    if tail > tail_tolerance:
        raise TailMassExceeded(
            f"|alpha|^2={mean:g} loses {tail:.3e} beyond cutoff {cutoff} "
            f"(tolerance {tail_tolerance:g})"
        )
    k = np.arange(1, cutoff + 1)
    # a_k = a_{k-1} * alpha / sqrt(k)
    ratios = np.concatenate(([1.0 + 0j], alpha / np.sqrt(k)))
    amps = np.cumprod(ratios) * math.exp(-mean / 2)
    return FockVector(amps / np.linalg.norm(amps))


def bs_output_amplitudes(alpha_a: complex, alpha_b: complex) -> tuple[complex, complex]:
    """Coherent amplitudes leaving the 50:50 beam splitter.

    Returns ``(d1_port, d0_port)`` = ``((a + b)/sqrt2, (a - b)/sqrt2)``.
    """
    s = math.sqrt(2.0)
    return (complex(alpha_a + alpha_b) / s, complex(alpha_a - alpha_b) / s)


@lru_cache(maxsize=None)
def _bs_block(total: int) -> np.ndarray:
    """Beam-splitter matrix on the block of fixed total photon number.

    Entry ``[p, n_a]`` is the amplitude of |p, total-p> produced by the
    input |n_a, total-n_a>. Combinatorial sums are done in exact integers.
    """
    block = np.zeros((total + 1, total + 1))
    for n_a in range(total + 1):
        n_b = total - n_a
        coeffs = [0] * (total + 1)
        for i in range(n_a + 1):
            ci = math.comb(n_a, i)
            for j in range(n_b + 1):
                sign = -1 if (n_b - j) % 2 else 1
                coeffs[i + j] += sign * ci * math.comb(n_b, j)
        for p, c in enumerate(coeffs):
            if c:
                q = total - p
                scale = math.factorial(p) * math.factorial(q) / (
                    math.factorial(n_a) * math.factorial(n_b) * 2**total
                )
                block[p, n_a] = c * math.sqrt(scale)
    block.flags.writeable = False
    return block


def bs_transform_fock(
    state: TwoModeState, tail_tolerance: float = TAIL_TOLERANCE
) -> TwoModeState:
    """Exact beam-splitter unitary a+ -> (a+ + b+)/sqrt2, b+ -> (a+ - b+)/sqrt2.

    Acts block by block on total photon number, so only components with
    ``k_a + k_b <= cutoff`` are representable; the rest must carry less than
    ``tail_tolerance`` probability.
    """
    lost = state.beyond_total_cutoff_mass()
    if lost > tail_tolerance:
        raise TailMassExceeded(
            f"{lost:.3e} probability above total photon number {state.cutoff}"
        )
    cutoff = state.cutoff
    out = np.zeros_like(state.amps)
    for total in range(cutoff + 1):
        n_a = np.arange(total + 1)
        column = state.amps[n_a, total - n_a]
        if not np.any(column):
            continue
        out[n_a, total - n_a] = _bs_block(total) @ column
    return TwoModeState(out, normalized=False)


def project_onto(
    state: FockVector, kept: Iterable[int]
) -> tuple[float, FockVector | _NullOutcome]:
    """Projective measurement onto span{|k> : k in kept}.

    Returns the outcome probability and the renormalized post-measurement
    state, or NULL_OUTCOME when the probability is zero.
    """
    kept = sorted(set(int(k) for k in kept))
    if not kept:
        raise EmptySubspace("kept subspace is empty")
    if kept[0] < 0 or kept[-1] > state.cutoff:
        raise IndexBeyondCutoff(f"kept levels {kept} outside 0..{state.cutoff}")
    restricted = np.zeros_like(state.amps)
    restricted[kept] = state.amps[kept]
    mass = float(np.sum(np.abs(restricted) ** 2))
    prob = mass / state.norm_squared()
    if mass <= 0.0:
        return 0.0, NULL_OUTCOME
    return prob, FockVector(restricted / math.sqrt(mass))


@dataclass(frozen=True)
class FilterSpec:
    """Photon-number-diagonal Kraus operator sum_k w_k |k><k|.

    Levels missing from ``weights`` are filtered out entirely.
    """

    weights: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, w in self.weights.items():
            w = float(w)
            if int(k) != k or k < 0:
                raise DomainError(f"photon number must be a non-negative integer, got {k!r}")
            if not (0.0 <= w <= 1.0) or math.isnan(w):
                raise WeightOutOfRange(f"weight {w!r} for |{k}> not in [0, 1]")
            clean[int(k)] = w
        object.__setattr__(self, "weights", clean)

    @classmethod
    def identity(cls, cutoff: int) -> FilterSpec:
        return cls({k: 1.0 for k in range(cutoff + 1)})

    def diagonal(self, cutoff: int) -> np.ndarray:
        d = np.zeros(cutoff + 1)
        for k, w in self.weights.items():
            if k <= cutoff:
                d[k] = w
        return d

    def then(self, other: FilterSpec) -> FilterSpec:
        """Filter equivalent to applying ``self`` and then ``other``."""
        keys = set(self.weights) & set(other.weights)
        return FilterSpec({k: self.weights[k] * other.weights[k] for k in keys})


def apply_filter(
    state: FockVector, filt: FilterSpec
) -> tuple[float, FockVector | _NullOutcome]:
    """Apply a diagonal filter and keep the successful branch.

    The acceptance probability is sum_k w_k^2 |a_k|^2; the failure branch
    is discarded.
    """
    filtered = state.amps * filt.diagonal(state.cutoff)
    mass = float(np.sum(np.abs(filtered) ** 2))
    prob = mass / state.norm_squared()
    if mass <= 0.0:
        return 0.0, NULL_OUTCOME
    return prob, FockVector(filtered / math.sqrt(mass))


def phase_shift(state: FockVector, theta: float) -> FockVector:
    """Per-photon phase shift: a_k -> exp(i k theta) a_k."""
    k = np.arange(state.cutoff + 1)
    return FockVector(state.amps * np.exp(1j * k * theta), normalized=state.normalized)


def overlap(a: FockVector, b: FockVector) -> complex:
    """<a|b>."""
    if a.cutoff != b.cutoff:
        raise DomainError("states have different cutoffs")
    return complex(np.vdot(a.amps, b.amps))


def same_ray(a: FockVector, b: FockVector, atol: float = 1e-10) -> bool:
    """Amplitude-wise equality once the global phase of ``b`` is aligned to ``a``."""
    ov = overlap(b, a)
    if abs(ov) == 0:
        return False
    aligned = b.amps * (ov / abs(ov))
    return bool(np.allclose(a.amps, aligned, rtol=0.0, atol=atol))


def sample_photon_number(state: FockVector, rng: np.random.Generator) -> int:
    """Draw the outcome of an ideal photon-number-resolving measurement."""
    return int(rng.choice(state.cutoff + 1, p=state.probabilities()))
