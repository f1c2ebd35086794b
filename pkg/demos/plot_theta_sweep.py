"""
Choosing a similarity threshold
===============================

Sweep theta over a grid and watch how many matches go beyond plain
case-insensitive equality. Every such pair is written out so it can be
reviewed by hand; reviewer verdicts turn the counts into an error rate.
"""

from aspecteval import AnnotatedDocument, AspectPolarityPair, OracleBackend, PredictionRecord, theta_sweep


def doc(*aspects):
    return tuple(AspectPolarityPair(a, "positive") for a in aspects)


corpus = [
    AnnotatedDocument("d1", "So many events to choose from, the food was fine.", doc("event variety", "food")),
    AnnotatedDocument("d2", "The Xbox corner was packed all day.", doc("Xbox")),
    AnnotatedDocument("d3", "Our atmoshere was electric.", doc("atmoshere")),
]
systems = {
    "model-a": [PredictionRecord("d1", doc("variety of events", "Food")),
                PredictionRecord("d2", doc("PlayStation")),
                PredictionRecord("d3", doc("atmosphere"))],
}
backend = OracleBackend({
    ("variety of events", "event variety"): 0.96,
    ("playstation", "xbox"): 0.93,
    ("atmosphere", "atmoshere"): 0.98,
})

# "PlayStation" vs "Xbox" is a related-but-wrong pair: it only survives
# below 0.95, and the reviewer labels mark it invalid.
labels = {
    ("variety of events", "event variety"): True,
    ("atmosphere", "atmoshere"): True,
    ("playstation", "xbox"): False,
}
result = theta_sweep(corpus, systems, [0.9, 0.925, 0.95, 0.975, 1.0], backend, labels)

print("theta  matched  non-exact  exact  error")
for row in result.rows:
    err = "-" if row.error_fraction is None else f"{row.error_fraction:.2f}"
    print(f"{row.theta:5.3f}  {row.matched_pairs:7d}  {row.non_exact_pairs:9d}  {row.exact_pairs:5d}  {err:>5}")

print()
for p in result.pairs:
    if p.theta == 0.925:
        print(f"{p.doc_id}: {p.detected!r} ~ {p.gold!r} ({p.similarity:.2f})")
