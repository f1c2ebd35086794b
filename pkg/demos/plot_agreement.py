"""
Annotator agreement with Fleiss' kappa
======================================

Three volunteers each choose which of two annotation sets ("A" or "B")
describes a document better. Kappa compares their observed agreement with
what the label frequencies alone would produce.
"""

import numpy as np

from aspecteval import fleiss_kappa
from aspecteval.stats import bin_scores, ratings_table

choices = {
    "doc1": ["A", "A", "B"], "doc2": ["A", "A", "A"], "doc3": ["B", "A", "B"],
    "doc4": ["A", "B", "B"], "doc5": ["A", "A", "A"], "doc6": ["B", "B", "A"],
    "doc7": ["A", "A", "B"], "doc8": ["B", "B", "B"], "doc9": ["A", "B", "A"],
}
rows = [(doc, f"rater{k}", label) for doc, labels in choices.items() for k, label in enumerate(labels)]
table, items, categories = ratings_table(rows)
print(categories)
print(table)
print(f"kappa = {fleiss_kappa(table):.3f}")

# Scores on a 1-10 scale are binned into quartiles before computing kappa.
rng = np.random.default_rng(1)
quality = rng.integers(3, 9, size=20)
scores = np.clip(quality[:, None] + rng.integers(-1, 2, size=(20, 2)), 1, 10)
labels = bin_scores(scores.ravel()).reshape(scores.shape)
rows = [(i, r, int(labels[i, r])) for i in range(20) for r in range(2)]
print(f"binned kappa = {fleiss_kappa(ratings_table(rows)[0]):.3f}")
