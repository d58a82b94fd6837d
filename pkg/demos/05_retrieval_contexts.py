"""Building retrieval contexts with distant supervision.

Shared-normalization training consumes contexts: for each question, a small
set of retrieved passages plus every span in them whose text matches the
answer.  This script generates a synthetic corpus, ranks its passages by
cosine similarity for one question, and builds contexts — showing the
seeded trick that keeps training honest: half of the retrieved passages
that do NOT contain the answer are discarded at random, so the model cannot
assume every retrieved passage is barren or every context is answerable.

Run:  python3 demos/05_retrieval_contexts.py
"""

import numpy as np

from spanobj.data import (
    GeneratorConfig,
    MODE_TWIN,
    build_context,
    generate_synthetic,
    score_passages,
)

config = GeneratorConfig(
    n_train=30, n_dev=10, subjects=6, attributes=3, value_pool=12,
    ambiguous_fraction=0.2, distractors=1, mode=MODE_TWIN, passages_per_topic=4,
)
dataset = generate_synthetic(config, seed=7)
example = dataset.train[0]

print(f"question: {example.question!r}")
print(f"answer:   {example.answers[0]!r}")
print(f"gold passage: {example.passage.id}\n")

# Rank every passage in the corpus against a question vector.  The corpus
# generator emits one embedding row per passage; the gold passage's row
# stands in for a trained question encoder here.
table = dataset.table
q_vec = table.matrix[table.row_of[example.passage.id]]
ranking = score_passages(q_vec, table)
print("top 5 retrieved passages (cosine):")
passages_by_id = {}
for ex in dataset.train + dataset.dev:
    passages_by_id.setdefault(ex.passage.id, ex.passage)
for pid, score in ranking[:5]:
    marker = " <- gold" if pid == example.passage.id else ""
    print(f"  {pid:8s} score {score:+.4f}{marker}")
print()

# Build the context: keep the top-k of the ranking after the seeded purge of
# half the answerless passages.  Answer-bearing passages always survive.
usable = [(pid, score) for pid, score in ranking if pid in passages_by_id]
ctx = build_context(
    usable, example.answers[0], passages_by_id, k=3,
    rng=np.random.default_rng(11), question_id=example.id,
    question=example.question,
)
print(f"context for {ctx.question_id} (short={ctx.short}):")
for cp in ctx.passages:
    spans = sorted((t.start, t.end) for t in cp.gt_spans)
    text = cp.passage.text if len(cp.passage.text) < 70 else cp.passage.text[:67] + "..."
    print(f"  {cp.passage.id:8s} score {cp.score:+.4f}  gold spans {spans}")
    print(f"           {text!r}")
print()
print("Every span listed above covers text matching the answer — that is the")
print("distant supervision the shared objective marginalizes over.  The")
print("`spanobj context` command writes these to a file for `spanobj train")
print("--objective compound-shared`.")
