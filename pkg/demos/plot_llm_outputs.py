"""
Scoring raw model output
========================

Generative models answer with a dictionary of aspects and polarities, but
not always cleanly: numbered prefixes, single quotes, trailing commas,
code fences or a truncated reply. The parser recovers what it can and says
what it dropped.
"""

from aspecteval import AnnotatedDocument, AspectPolarityPair, PredictionRecord, macro_evaluate
from aspecteval import CharNgramBackend, parse_llm_annotation

outputs = {
    "1": '1. {"Organization":"Negative"}',
    "2": "2 {'parking situation': 'Negative', 'info': 'negative',}",
    "3": '```json\n{"Wi-Fi": "Negative"}\n```',
    "4": '{"food": "Negative", "food pricing": "Nega',
    "5": "There are no aspects in this review.",
}
for doc_id, text in outputs.items():
    parsed = parse_llm_annotation(text)
    print(doc_id, [(p.aspect, p.polarity.value) for p in parsed.pairs])
    for message in parsed.diagnostics:
        print("   note:", message)

gold = [
    AnnotatedDocument("1", "", (AspectPolarityPair("organisation", "negative"),)),
    AnnotatedDocument("2", "", (AspectPolarityPair("parking", "negative"),)),
    AnnotatedDocument("3", "", (AspectPolarityPair("wifi", "negative"),)),
    AnnotatedDocument("4", "", (AspectPolarityPair("food", "negative"), AspectPolarityPair("prices", "negative"))),
    AnnotatedDocument("5", "", ()),
]
preds = [PredictionRecord(k, parse_llm_annotation(v).pairs) for k, v in outputs.items()]

# Character trigrams forgive spelling variants: "organisation" and
# "organization" share 7 of their 10 trigrams each (Dice 0.7).
for theta in (1.0, 0.7, 0.5):
    report = macro_evaluate(gold, preds, theta=theta, backend=CharNgramBackend())
    m = report.macro_generalized
    print(f"theta={theta}: P={m['p']:.3f} R={m['r']:.3f} F1={m['f1']:.3f}")
