"""Tour of the five span-extraction training objectives.

A span extractor reads a question and a passage and scores candidate answer
spans.  Training needs a loss over those scores, and there is more than one
defensible way to write it down.  This script builds one tiny scored passage
by hand and walks through every objective the package implements, showing
what each one optimizes and how they relate.

Run:  python3 demos/01_objectives_tour.py
"""

import numpy as np

from spanobj.numerics import ScoreMatrix, log_softmax
from spanobj.objectives import (
    BOUNDARY_JOINT,
    BOUNDARY_START,
    ConditionalParams,
    SharedNormTarget,
    SpanTarget,
    compound_loss,
    conditional_loss,
    independent_loss,
    joint_loss,
    shared_norm_loss,
)

rng = np.random.default_rng(1)

# One passage of eight tokens; the gold answer covers tokens 2..4.
LENGTH = 8
gold = SpanTarget(2, 4)
start_scores = rng.normal(size=LENGTH)
end_scores = rng.normal(size=LENGTH)
span_scores = ScoreMatrix.from_values(rng.normal(size=(LENGTH, LENGTH)))

print(f"passage length {LENGTH}, gold span {gold.start}..{gold.end}\n")

# 1. Independent: two softmaxes, one per boundary.  Start and end never see
#    each other, which keeps decoding cheap but lets probability mass land
#    on incoherent (start, end) combinations.
indep = independent_loss(start_scores, end_scores, gold)
manual = -(log_softmax(start_scores)[gold.start] + log_softmax(end_scores)[gold.end])
print(f"independent loss      {indep.loss:.6f}   (= start CE + end CE = {manual:.6f})")

# 2. Joint: a single softmax over every valid span's score, so the model is
#    normalized over exactly the things it can predict.
joint = joint_loss(span_scores, gold)
print(f"joint loss            {joint.loss:.6f}   (softmax over all valid spans)")

# 3. Compound: the joint loss plus the independent loss as an auxiliary
#    term.  With the default weight of 1 it is exactly their sum — the
#    boundary heads keep learning even though decoding uses the joint head.
comp = compound_loss(start_scores, end_scores, span_scores, gold)
print(f"compound loss         {comp.loss:.6f}   (joint + independent = "
      f"{joint.loss + indep.loss:.6f})")
print(f"  identity gap        {abs(comp.loss - joint.loss - indep.loss):.2e}")

# 4. Conditional: P(start) times P(end | start), with the end distribution
#    computed from passage representations conditioned on the gold start
#    (teacher forcing).  Decoding this one needs a beam.
d = 4
h = rng.normal(size=(d, LENGTH))
cond_params = ConditionalParams(
    w=rng.normal(size=(d, 2 * d)) / np.sqrt(2 * d),
    b=np.zeros(d),
    w_out=rng.normal(size=d) / np.sqrt(d),
)
cond = conditional_loss(start_scores, h, cond_params, gold)
print(f"conditional loss      {cond.loss:.6f}   (start CE + end-given-start CE)")

# 5. Shared normalization: when several retrieved passages might hold the
#    answer, their scores are pooled into ONE softmax and every distantly
#    supervised position counts toward the numerator.  With a single passage
#    and a single gold position it collapses to the ordinary cross-entropy:
single = shared_norm_loss(
    SharedNormTarget([start_scores], [{gold.start}]), BOUNDARY_START
)
print(f"shared-norm (1 psg)   {single.loss:.6f}   (collapses to start CE = "
      f"{-log_softmax(start_scores)[gold.start]:.6f})")

# ... and with two passages the normalization spans both, so a confident
# score in the wrong passage is punished by the same softmax:
other = rng.normal(size=6)
pooled = shared_norm_loss(
    SharedNormTarget([start_scores, other], [{gold.start}, set()]), BOUNDARY_START
)
print(f"shared-norm (2 psgs)  {pooled.loss:.6f}   (same gold, pooled denominator)")
print("\nGradients are exposed alongside every loss; the training loop in")
print("spanobj.model routes them into the right parameter blocks.")
