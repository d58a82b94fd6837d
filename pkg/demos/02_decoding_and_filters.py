"""Decoding a span distribution and cleaning it up with filters.

Once a model scores spans, decoding turns the scores into ranked answers.
This script compares the three decoders (product-of-boundaries, joint
softmax, conditional beam) on one fixture and then shows the two filters
that make the ranked list sensible: a length cutoff and surface-form
pooling, which merges spans that render to the same answer string.

Run:  python3 demos/02_decoding_and_filters.py
"""

import numpy as np

from spanobj.decoding import (
    apply_filters,
    beam_decode,
    independent_distribution,
    joint_distribution,
    length_filter,
    surface_form_filter,
    top_k,
)
from spanobj.numerics import ScoreMatrix
from spanobj.objectives import ConditionalParams

rng = np.random.default_rng(2)

# A passage whose tokens repeat, so different spans can cover the same text.
tokens = ["the", "red", "fox", "and", "the", "red", "hen"]
LENGTH = len(tokens)

start_scores = rng.normal(size=LENGTH)
end_scores = rng.normal(size=LENGTH)
span_scores = ScoreMatrix.from_values(rng.normal(size=(LENGTH, LENGTH)))

print("tokens:", " ".join(f"{i}:{t}" for i, t in enumerate(tokens)), "\n")

# --- Three decoders -------------------------------------------------------
indep = independent_distribution(start_scores, end_scores)
joint = joint_distribution(span_scores)
d = 4
h = rng.normal(size=(d, LENGTH))
cond = beam_decode(
    start_scores,
    h,
    ConditionalParams(
        w=rng.normal(size=(d, 2 * d)) / np.sqrt(2 * d),
        b=np.zeros(d),
        w_out=rng.normal(size=d) / np.sqrt(d),
    ),
    k=5,
)

for name, dist in (("independent", indep), ("joint", joint), ("beam k=5", cond)):
    print(f"{name:12s} top 3:")
    for pred in top_k(dist, 3, tokens):
        span = pred.span
        print(f"  ({span.start},{span.end})  p={pred.probability:.4f}  {pred.text!r}")
print()

# --- Length filter ---------------------------------------------------------
# Real answers are short.  The length filter zeroes every span longer than
# zeta boundary steps WITHOUT renormalizing: downstream consumers can still
# see how much mass the cutoff removed.
zeta = 2
trimmed = length_filter(joint, zeta)
print(f"joint mass before length filter: {joint.normalization:.6f}")
print(f"joint mass after  length filter (zeta={zeta}): {trimmed.normalization:.6f}")

# --- Surface-form pooling ---------------------------------------------------
# Spans (0,1) and (4,5) both read "the red".  Among the top-k entries the
# filter sums same-string mass into the string's most probable position, so
# the ranked list stops splitting one answer across duplicate mentions.
before = {(s, e): p for s, e, p in trimmed.entries}
pooled = surface_form_filter(trimmed, tokens, k=10)
after = {(s, e): p for s, e, p in pooled.entries}
print("\nsame-string pooling ('the red' appears at (0,1) and (4,5)):")
for span in ((0, 1), (4, 5)):
    print(f"  span {span}: {before[span]:.4f} -> {after[span]:.4f}")
print(f"total mass conserved: {trimmed.normalization:.6f} -> {pooled.normalization:.6f}")

# --- The standard pipeline --------------------------------------------------
# apply_filters names the composition: "none", "lf", or "lf+sf" (surface
# pooling always runs on length-filtered output).
final = apply_filters(joint, tokens, "lf+sf", zeta=zeta, k=10)
print("\nfinal ranked answers (lf+sf):")
for pred in top_k(final, 3, tokens):
    print(f"  ({pred.span.start},{pred.span.end})  p={pred.probability:.4f}  {pred.text!r}")
