"""
Matching gold and detected aspects
==================================

Exact string comparison undercounts a system that writes "air conditioner"
where the annotator wrote "AC". Here the two aspect sets are matched
one-to-one through a similarity table and a threshold instead.
"""

import numpy as np

from aspecteval import OracleBackend, extraction_scores, intersect
from aspecteval.metrics import exact_match_scores
from aspecteval.model import AspectPolarityPair

# A hand-written similarity table stands in for an embedding model.
backend = OracleBackend({
    ("ac", "air conditioner"): 0.97,
    ("look", "appearance"): 0.96,
    ("ambience", "appearance"): 0.71,
    ("service", "dishes"): 0.68,
    ("ac", "drinks"): 0.55,
}, name="hand-table")

gold = ["AC", "look", "ambience", "service"]
detected = ["air conditioner", "appearance", "dishes", "service", "drinks"]

# The full similarity matrix, gold in rows and detections in columns.
sim = backend.matrix([g.lower() for g in gold], detected)
with np.printoptions(precision=2, suppress=True):
    print(sim)

# At theta = 0.95 three pairs survive. "ambience" resembles "appearance"
# only loosely (0.71), and each phrase can be used once anyway.
match = intersect(gold, detected, theta=0.95, backend=backend)
for m in match.pairs:
    print(f"{gold[m.gold]:>10} <-> {detected[m.detected]:<16} sigma={m.similarity:.2f}")

as_pairs = lambda xs: [AspectPolarityPair(x, "positive") for x in xs]
gen = extraction_scores(match)
exact = exact_match_scores(as_pairs(gold), as_pairs(detected))
print(f"generalized: P={gen.p:.3f} R={gen.r:.3f} F1={gen.f1:.3f}")
print(f"exact:       P={exact.p:.3f} R={exact.r:.3f} F1={exact.f1:.3f}")

# Raising theta to 1 leaves only identical phrases, so both scores coincide.
strict = extraction_scores(intersect(gold, detected, theta=1.0, backend=backend))
print(f"theta=1:     P={strict.p:.3f} R={strict.r:.3f}")
