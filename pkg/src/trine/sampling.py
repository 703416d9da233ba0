"""Skip-gram training pairs and power-law negative sampling with exclusion buckets."""

from __future__ import annotations

import logging

import numpy as np

from .errors import SamplerError
from .graph import N_PARTIES, Node, TripartiteGraph
from .walks import TypedCorpus

log = logging.getLogger(__name__)

DEFAULT_POWER = 0.75

# Attempt budget per requested sample before declaring the party degenerate.
_MAX_ATTEMPTS_PER_SAMPLE = 100


def context_pairs(seq: list[int], window: int) -> list[tuple[int, int]]:
    """All ordered (center, context) pairs within ``window`` positions.

    For every position i and every j != i with |i - j| <= window, emits
    (seq[i], seq[j]). A singleton sequence yields no pairs.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    n = len(seq)
    pairs = []
    for i in range(n):
        for j in range(max(0, i - window), min(n, i + window + 1)):
            if j != i:
                pairs.append((seq[i], seq[j]))
    return pairs


def window_partners(seq: list[int], pos: int, window: int) -> list[int]:
    """Context nodes of one occurrence: the window around ``pos``, excluding it."""
    return seq[max(0, pos - window):pos] + seq[pos + 1:pos + window + 1]


class NegativeSampler:
    """Per-party unigram tables plus per-node co-occurrence exclusion buckets.

    The proposal distribution over a party is corpus occurrence counts raised
    to ``power``; a node's bucket is every same-party node that co-occurred
    with it inside the window anywhere in the typed corpus. Draws reject the
    center itself and its bucket.
    """

    # Below this admissible probability mass, rejection is replaced by exact
    # sampling from the renormalized restricted table (same distribution).
    _REJECTION_MIN_MASS = 0.25

    def __init__(self, cumulative: list[np.ndarray], exclusions: list[dict[int, set[int]]],
                 power: float, window: int):
        self._cumulative = cumulative
        self._probs = [np.diff(c, prepend=0.0) for c in cumulative]
        self._exclusions = exclusions
        self._mass_cache: dict[Node, float] = {}
        self._restricted_cache: dict[Node, np.ndarray] = {}
        self.power = power
        self.window = window

    @classmethod
    def build(cls, typed: TypedCorpus, g: TripartiteGraph, power: float = DEFAULT_POWER,
              window: int = 5) -> "NegativeSampler":
        if power <= 0:
            raise ValueError(f"power must be positive, got {power}")
        cumulative = []
        exclusions: list[dict[int, set[int]]] = []
        for p in range(N_PARTIES):
            n = g.counts[p]
            counts = typed.occurrence_counts(p, n).astype(np.float64)
            if n > 0 and counts.sum() == 0:
                log.warning(
                    "party %s has an empty corpus; negative sampling falls back to uniform",
                    g.schema.party_names[p],
                )
                probs = np.full(n, 1.0 / n)
            elif n > 0:
                probs = counts ** power
                probs /= probs.sum()
            else:
                probs = np.zeros(0)
            cumulative.append(np.cumsum(probs))
            buckets: dict[int, set[int]] = {}
            for seq in typed.sequences(p):
                for i, center in enumerate(seq):
                    bucket = buckets.setdefault(center, set())
                    bucket.update(window_partners(seq, i, window))
            exclusions.append(buckets)
        return cls(cumulative, exclusions, power, window)

    def table_probabilities(self, party: int) -> np.ndarray:
        """The proposal distribution for one party (sums to 1)."""
        return self._probs[party].copy()

    def exclusion_bucket(self, node: Node) -> frozenset[int]:
        return frozenset(self._exclusions[node.party].get(node.index, ()))

    def available_mass(self, center: Node) -> float:
        """Probability mass of nodes admissible as negatives for this center."""
        cached = self._mass_cache.get(center)
        if cached is not None:
            return cached
        probs = self._probs[center.party]
        excluded = float(probs[center.index]) if center.index < len(probs) else 0.0
        for z in self._exclusions[center.party].get(center.index, ()):
            excluded += probs[z]
        mass = max(1.0 - excluded, 0.0)
        self._mass_cache[center] = mass
        return mass

    def has_negatives(self, center: Node) -> bool:
        """Whether any admissible node carries probability mass for this center.

        On small parties a node's bucket can cover everything that occurs in
        the corpus; callers use this to skip negative sampling instead of
        tripping the degenerate-party error.
        """
        return self.available_mass(center) > 1e-12

    def _restricted_cumulative(self, center: Node) -> np.ndarray:
        cum = self._restricted_cache.get(center)
        if cum is None:
            probs = self._probs[center.party].copy()
            probs[center.index] = 0.0
            excl = list(self._exclusions[center.party].get(center.index, ()))
            if excl:
                probs[excl] = 0.0
            probs /= probs.sum()
            cum = np.cumsum(probs)
            self._restricted_cache[center] = cum
        return cum

    def sample(self, center: Node, ns: int, rng: np.random.Generator) -> list[int]:
        """Draw ``ns`` negatives (with replacement) for ``center``.

        Rejection against the party table is used while the admissible mass is
        large; for heavily excluded centers the draw switches to the exact
        renormalized restricted table (the same conditional distribution).
        Raises :class:`SamplerError` when no admissible mass remains.
        """
        if ns == 0:
            return []
        mass = self.available_mass(center)
        if mass <= 1e-12:
            raise SamplerError(
                f"no negatives available for {center}: its exclusion bucket covers "
                "every node with probability mass (degenerate party)"
            )
        if mass < self._REJECTION_MIN_MASS:
            cum = self._restricted_cumulative(center)
            picks = np.searchsorted(cum, rng.random(ns), side="right")
            return [min(int(z), len(cum) - 1) for z in picks]
        cum = self._cumulative[center.party]
        excl = self._exclusions[center.party].get(center.index, ())
        out: list[int] = []
        attempts = 0
        budget = _MAX_ATTEMPTS_PER_SAMPLE * ns
        while len(out) < ns:
            if attempts >= budget:
                raise SamplerError(
                    f"could not draw {ns} negatives for {center} after {attempts} attempts; "
                    "the party is degenerate (all probability mass excluded)"
                )
            attempts += 1
            z = min(int(np.searchsorted(cum, rng.random(), side="right")), len(cum) - 1)
            if z == center.index or z in excl:
                continue
            out.append(z)
        return out
