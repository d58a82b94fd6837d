"""Turning span scores into ranked answer predictions.

A :class:`SpanDistribution` holds every candidate span with its probability,
kept sorted so the argmax and top-k are a deterministic prefix.  Builders
cover the three decoding families (independent product, joint softmax,
conditional beam), and two inference-time filters reshape a distribution
without renormalizing it: a length cutoff and surface-form aggregation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .numerics import MASK_VALID, ScoreMatrix, _check_finite_vector, log_softmax, span_mask, vectorize
from .objectives import ConditionalParams, SpanTarget, conditional_end_scores

DEFAULT_MAX_SPAN_LENGTH = 30
DEFAULT_SURFACE_TOP_K = 100
DEFAULT_BEAM_WIDTH = 10


@dataclass
class SpanDistribution:
    """Probabilities over candidate spans, sorted for deterministic decoding.

    ``entries`` are ``(start, end, probability)`` triples in descending
    probability order, ties broken by earlier start then earlier end.
    ``normalization`` is the current total mass: 1.0 for a freshly built
    distribution, less once a filter has zeroed spans.  ``raw_mass`` records
    the unnormalized mass the entries covered at construction (the product
    mass over valid spans, or a beam's joint-factorized candidate mass), so
    ``probability * raw_mass`` recovers pre-normalization values.
    """

    entries: list
    raw_mass: float = 1.0
    normalization: float = field(init=False)

    def __post_init__(self) -> None:
        cleaned = []
        for start, end, prob in self.entries:
            prob = float(prob)
            if not np.isfinite(prob) or prob < 0.0:
                raise InvalidInputError(f"bad span probability {prob!r}")
            cleaned.append((int(start), int(end), prob))
        cleaned.sort(key=lambda entry: (-entry[2], entry[0], entry[1]))
        self.entries = cleaned
        self.normalization = math.fsum(entry[2] for entry in cleaned)

    def __len__(self) -> int:
        return len(self.entries)

    def top_span(self) -> tuple[int, int]:
        """The argmax span under the deterministic tie-break."""
        start, end, _ = self.entries[0]
        return start, end

    def probability(self, start: int, end: int) -> float:
        for s, e, p in self.entries:
            if (s, e) == (start, end):
                return p
        return 0.0


@dataclass(frozen=True)
class Prediction:
    """One ranked answer: the span, its recovered text, and its probability."""

    span: SpanTarget
    text: str
    probability: float


def span_text(passage, start: int, end: int) -> str:
    """Surface string covered by a token span, whitespace-trimmed.

    ``passage`` is either an object exposing ``span_text(start, end)`` (the
    dataset passage type does, via character offsets) or a plain token
    sequence, in which case tokens are joined with single spaces.
    """
    if hasattr(passage, "span_text"):
        return passage.span_text(start, end)
    return " ".join(passage[start : end + 1]).strip()


def independent_distribution(
    start_scores: np.ndarray, end_scores: np.ndarray, policy: str = MASK_VALID
) -> SpanDistribution:
    """Distribution of P(start) * P(end) products over unmasked spans.

    The products over valid spans do not sum to one (mass on masked cells is
    dropped), so entries are renormalized; the dropped-mass total survives in
    ``raw_mass``.
    """
    start_scores = _check_finite_vector(start_scores)
    end_scores = _check_finite_vector(end_scores)
    if start_scores.size != end_scores.size:
        raise InvalidInputError("start/end score lengths differ")
    p_start = np.exp(log_softmax(start_scores))
    p_end = np.exp(log_softmax(end_scores))
    mask = span_mask(start_scores.size, policy)
    grid = np.outer(p_start, p_end)
    rows, cols = np.nonzero(mask)
    probs = grid[rows, cols]
    raw = math.fsum(probs)
    entries = list(zip(rows.tolist(), cols.tolist(), (probs / raw).tolist()))
    return SpanDistribution(entries, raw_mass=raw)


def joint_distribution(scores: ScoreMatrix) -> SpanDistribution:
    """Softmax over every unmasked span score."""
    flat, index_map = vectorize(scores)
    probs = np.exp(log_softmax(flat))
    entries = [(i, j, p) for (i, j), p in zip(index_map, probs.tolist())]
    return SpanDistribution(entries, raw_mass=1.0)


def beam_decode(
    start_scores: np.ndarray,
    h: np.ndarray,
    params: ConditionalParams,
    k: int = DEFAULT_BEAM_WIDTH,
) -> SpanDistribution:
    """Approximate conditional decoding over the top-k starts.

    The top-k start positions by start probability each contribute their
    top-k conditional end positions, scoring candidates by
    P(start) * P(end | start).  The (up to) k^2 candidates are normalized
    over themselves for ranking; ``raw_mass`` keeps their joint-factorized
    total, so raw probabilities are ``probability * raw_mass``.  With k = L
    this enumerates every pair exactly.
    """
    if k < 1:
        raise InvalidInputError(f"beam width must be >= 1, got {k}")
    start_scores = _check_finite_vector(start_scores)
    length = start_scores.size
    width = min(k, length)
    start_logp = log_softmax(start_scores)
    top_starts = np.argsort(-start_logp, kind="stable")[:width]

    candidates = []
    for i in top_starts.tolist():
        end_logp = log_softmax(conditional_end_scores(h, i, params))
        top_ends = np.argsort(-end_logp, kind="stable")[:width]
        for j in top_ends.tolist():
            candidates.append((i, j, math.exp(start_logp[i] + end_logp[j])))

    raw = math.fsum(prob for _, _, prob in candidates)
    entries = [(i, j, prob / raw) for i, j, prob in candidates]
    return SpanDistribution(entries, raw_mass=raw)


def length_filter(dist: SpanDistribution, zeta: int = DEFAULT_MAX_SPAN_LENGTH) -> SpanDistribution:
    """Zero every span strictly longer than ``zeta`` boundary steps.

    Length is measured as ``end - start``; zeroed mass is *not*
    redistributed, so the result's ``normalization`` drops below 1.
    """
    if zeta < 0:
        raise InvalidInputError(f"length threshold must be >= 0, got {zeta}")
    entries = [
        (s, e, 0.0 if e - s > zeta else p) for s, e, p in dist.entries
    ]
    return SpanDistribution(entries, raw_mass=dist.raw_mass)


def surface_form_filter(
    dist: SpanDistribution, passage, k: int = DEFAULT_SURFACE_TOP_K
) -> SpanDistribution:
    """Pool same-string mass within the top-k spans.

    Among the k highest-ranked spans, the probability of every span covering
    the same surface string is summed into that string's most probable
    position; the other positions drop to zero.  Spans below the top-k are
    untouched, and the total top-k mass is conserved.
    """
    if k < 1:
        raise InvalidInputError(f"top-k cutoff must be >= 1, got {k}")
    head = dist.entries[:k]
    tail = dist.entries[k:]
    groups: dict[str, list] = {}
    for s, e, p in head:
        groups.setdefault(span_text(passage, s, e), []).append((s, e, p))
    entries = list(tail)
    for spans in groups.values():
        # Entries arrive rank-ordered, so the first holds the group's mass.
        best_s, best_e, _ = spans[0]
        entries.append((best_s, best_e, math.fsum(p for _, _, p in spans)))
        entries.extend((s, e, 0.0) for s, e, _ in spans[1:])
    return SpanDistribution(entries, raw_mass=dist.raw_mass)


def apply_filters(
    dist: SpanDistribution,
    passage,
    pipeline: str,
    zeta: int = DEFAULT_MAX_SPAN_LENGTH,
    k: int = DEFAULT_SURFACE_TOP_K,
) -> SpanDistribution:
    """Run the named filter pipeline: "none", "lf", or "lf+sf".

    Surface-form aggregation always runs on a length-filtered distribution;
    there is no SF-only pipeline.
    """
    if pipeline == "none":
        return dist
    if pipeline == "lf":
        return length_filter(dist, zeta)
    if pipeline == "lf+sf":
        return surface_form_filter(length_filter(dist, zeta), passage, k)
    raise InvalidInputError(f"unknown filter pipeline {pipeline!r}")


def top_k(dist: SpanDistribution, k: int, passage=None) -> list[Prediction]:
    """The k highest-probability predictions under the deterministic order.

    Inverted candidates (end before start, possible in raw beam output) are
    not extractable answers and are skipped.  Texts are recovered from the
    passage when one is supplied.
    """
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    predictions = []
    for s, e, p in dist.entries:
        if e < s:
            continue
        text = span_text(passage, s, e) if passage is not None else ""
        predictions.append(Prediction(SpanTarget(s, e), text, p))
        if len(predictions) == k:
            break
    return predictions


@dataclass(frozen=True)
class CrossBoundaryReport:
    """Whether each decoder's argmax straddles two answer regions."""

    independent_span: tuple[int, int]
    joint_span: tuple[int, int]
    independent_crosses: bool
    joint_crosses: bool


def _region_of(position: int, regions) -> int | None:
    for idx, (lo, hi) in enumerate(regions):
        if lo <= position <= hi:
            return idx
    return None


def span_crosses(span: tuple[int, int], regions) -> bool:
    """True when the span's boundaries fall in two different regions."""
    a = _region_of(span[0], regions)
    b = _region_of(span[1], regions)
    return a is not None and b is not None and a != b


def cross_boundary_check(
    start_scores: np.ndarray,
    end_scores: np.ndarray,
    joint_scores: ScoreMatrix,
    regions,
) -> CrossBoundaryReport:
    """Compare independent and joint argmax spans against answer regions.

    ``regions`` lists inclusive (low, high) token ranges, one per candidate
    answer.  A span crosses when its boundaries fall in different regions —
    the failure mode the independent product is prone to and a span-level
    softmax is not.
    """
    indep = independent_distribution(start_scores, end_scores).top_span()
    joint = joint_distribution(joint_scores).top_span()
    return CrossBoundaryReport(
        independent_span=indep,
        joint_span=joint,
        independent_crosses=span_crosses(indep, regions),
        joint_crosses=span_crosses(joint, regions),
    )


def two_region_fixture(rng: np.random.Generator, length: int | None = None):
    """Randomized logits with two answer regions that trap the product decoder.

    Start mass peaks in the first region, end mass peaks in the second, so
    the product argmax pairs them across regions; the joint score matrix
    peaks inside the first region.  Returns ``(start_scores, end_scores,
    joint ScoreMatrix, regions)``.
    """
    if length is None:
        length = int(rng.integers(12, 21))
    if length < 8:
        raise InvalidInputError("two-region fixtures need length >= 8")
    # Four cut points carve out two disjoint in-order regions.
    cuts = np.sort(rng.choice(length, size=4, replace=False))
    while cuts[1] + 1 >= cuts[2]:  # keep a gap between the regions
        cuts = np.sort(rng.choice(length, size=4, replace=False))
    region_a = (int(cuts[0]), int(cuts[1]))
    region_b = (int(cuts[2]), int(cuts[3]))

    i1 = int(rng.integers(region_a[0], region_a[1] + 1))
    j1 = int(rng.integers(i1, region_a[1] + 1))
    i2 = int(rng.integers(region_b[0], region_b[1] + 1))
    j2 = int(rng.integers(i2, region_b[1] + 1))

    noise = 0.05
    start = rng.normal(0.0, noise, size=length)
    end = rng.normal(0.0, noise, size=length)
    start[i1] += 6.0   # first-region start dominates
    start[i2] += 5.0
    end[j2] += 6.0     # second-region end dominates
    end[j1] += 5.0

    joint = rng.normal(0.0, noise, size=(length, length))
    joint[i1, j1] += 9.0   # joint peak stays inside one region
    joint[i2, j2] += 8.0
    return start, end, ScoreMatrix.from_values(joint), (region_a, region_b)
