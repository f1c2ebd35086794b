import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aspecteval.dataio import load_corpus, load_predictions
from aspecteval.errors import (
    DegenerateAgreementWarning,
    EmptyInputError,
    LengthMismatchError,
    RaggedRatingsError,
)
from aspecteval.model import AnnotatedDocument, AspectPolarityPair, PredictionRecord
from aspecteval.similarity import ExactBackend
from aspecteval.stats import (
    bin_scores,
    default_grid,
    fleiss_kappa,
    paired_bootstrap,
    ratings_table,
    theta_sweep,
)
from oracles import bootstrap_p_value, fleiss_kappa_exact

KAPPA_FIXTURE = [[3, 0, 0], [0, 3, 0], [0, 0, 3], [2, 1, 0], [1, 2, 0],
                 [0, 2, 1], [1, 1, 1], [2, 0, 1], [0, 1, 2], [3, 0, 0]]
WIKIPEDIA_TABLE = [[0, 0, 0, 0, 14], [0, 2, 6, 4, 2], [0, 0, 3, 5, 6], [0, 3, 9, 2, 0], [2, 2, 8, 1, 1],
                   [7, 7, 0, 0, 0], [3, 2, 6, 3, 0], [2, 5, 3, 2, 2], [6, 5, 2, 1, 0], [0, 2, 2, 3, 7]]


# -- bootstrap ------------------------------------------------------------------


def test_identical_systems_not_significant():
    scores = np.random.default_rng(1).uniform(size=100)
    result = paired_bootstrap(scores, scores, iterations=2000)
    assert result.observed_delta == 0.0 and result.p_value == 1.0


def test_perfect_vs_empty_is_significant():
    result = paired_bootstrap(np.ones(50), np.zeros(50), iterations=2000)
    assert result.observed_delta == 1.0 and result.p_value == 0.0
    assert result.significant()


def test_matches_loop_oracle():
    rng = np.random.default_rng(11)
    b = rng.uniform(size=40)
    a = np.clip(b + rng.normal(0.02, 0.15, size=40), 0, 1)
    ours = paired_bootstrap(a, b, iterations=20000, seed=3).p_value
    assert ours == pytest.approx(bootstrap_p_value(a.tolist(), b.tolist(), 20000, 3), abs=0.015)


def test_reproducible_and_independent_of_jobs():
    rng = np.random.default_rng(5)
    a, b = rng.uniform(size=30), rng.uniform(size=30)
    one = paired_bootstrap(a, b, iterations=5500, seed=9)
    assert paired_bootstrap(a, b, iterations=5500, seed=9) == one
    assert paired_bootstrap(a, b, iterations=5500, seed=9, jobs=4) == one
    assert paired_bootstrap(a, b, iterations=5500, seed=10).p_value != one.p_value


def test_bootstrap_input_errors():
    with pytest.raises(LengthMismatchError):
        paired_bootstrap([1.0, 0.0], [1.0])
    with pytest.raises(EmptyInputError):
        paired_bootstrap([1.0], [1.0])
    with pytest.raises(ValueError):
        paired_bootstrap([1.0, 0.0], [0.0, 1.0], iterations=0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=20), st.integers(0, 2**32))
def test_p_value_is_a_probability(scores, seed):
    rng = np.random.default_rng(seed)
    other = rng.uniform(size=len(scores))
    p = paired_bootstrap(scores, other, iterations=300, seed=seed).p_value
    assert 0.0 <= p <= 1.0


# -- kappa ----------------------------------------------------------------------


def test_kappa_hand_fixture():
    assert fleiss_kappa(KAPPA_FIXTURE) == pytest.approx(101 / 296, abs=1e-9)
    assert float(fleiss_kappa_exact(KAPPA_FIXTURE)) == pytest.approx(101 / 296, abs=1e-15)


def test_kappa_reference_table():
    assert fleiss_kappa(WIKIPEDIA_TABLE) == pytest.approx(0.210, abs=5e-4)


def test_kappa_unanimous_items():
    assert fleiss_kappa([[3, 0], [0, 3], [3, 0]]) == pytest.approx(1.0, abs=1e-12)


def test_kappa_degenerate_warns():
    with pytest.warns(DegenerateAgreementWarning):
        assert fleiss_kappa([[4, 0], [4, 0]]) == 1.0


def test_kappa_uniform_split_negative():
    assert fleiss_kappa([[1, 1, 1]] * 6) < 0


def test_kappa_errors():
    with pytest.raises(RaggedRatingsError):
        fleiss_kappa([[2, 1], [1, 1]])
    with pytest.raises(RaggedRatingsError):
        fleiss_kappa([[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        fleiss_kappa([[1.5, 1.5]])


def _rows(n):
    cuts = st.tuples(st.integers(0, n), st.integers(0, n)).map(sorted)
    return cuts.map(lambda c: [c[0], c[1] - c[0], n - c[1]])


tables = st.integers(2, 6).flatmap(lambda n: st.lists(_rows(n), min_size=2, max_size=8))


@given(tables, st.randoms(use_true_random=False))
def test_kappa_matches_exact_oracle_and_is_permutation_invariant(table, rnd):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateAgreementWarning)
        k = fleiss_kappa(table)
        shuffled = [list(row) for row in table]
        rnd.shuffle(shuffled)
        order = [0, 1, 2]
        rnd.shuffle(order)
        shuffled = [[row[j] for j in order] for row in shuffled]
        assert fleiss_kappa(shuffled) == pytest.approx(k, abs=1e-12)
    totals = np.sum(table, axis=0)
    if np.count_nonzero(totals) > 1:
        assert k == pytest.approx(float(fleiss_kappa_exact(table)), abs=1e-12)
        assert k <= 1.0 + 1e-12


def test_ratings_table():
    rows = [("i1", "r1", "a"), ("i1", "r2", "b"), ("i2", "r1", "a"), ("i2", "r2", "a")]
    table, items, cats = ratings_table(rows)
    assert items == ["i1", "i2"] and cats == ["a", "b"]
    assert table.tolist() == [[1, 1], [2, 0]]
    with pytest.raises(RaggedRatingsError):
        ratings_table(rows + [("i1", "r1", "b")])
    with pytest.raises(RaggedRatingsError):
        ratings_table(rows + [("i3", "r1", "b")])


def test_bin_scores():
    assert bin_scores([0.1, 0.5, 0.9], edges=[0.3, 0.7]).tolist() == [0, 1, 2]
    labels = bin_scores(np.arange(1, 9))
    assert sorted(set(labels.tolist())) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        bin_scores([0.1], edges=[0.5, 0.2])


# -- theta sweep ----------------------------------------------------------------


def sweep_inputs(fixtures_dir):
    gold = load_corpus(fixtures_dir / "sweep_gold.jsonl")
    preds = load_predictions(fixtures_dir / "sweep_pred.jsonl")
    return gold, {"sys": preds}


def test_default_grid():
    grid = default_grid()
    assert len(grid) == 40 and grid[0] == 0.025 and grid[-1] == 1.0 and 0.95 in grid


def test_sweep_fixture(fixtures_dir, sweep_backend):
    gold, systems = sweep_inputs(fixtures_dir)
    result = theta_sweep(gold, systems, [0.9, 0.925, 0.95, 1.0], sweep_backend)
    assert [r.non_exact_pairs for r in result.rows] == [2, 2, 1, 0]
    assert [r.matched_pairs for r in result.rows] == [3, 3, 2, 1]
    assert {r.exact_pairs for r in result.rows} == {1}
    assert [(p.theta, p.detected, p.gold) for p in result.pairs] == [
        (0.9, "variety of events", "event variety"), (0.9, "PlayStation", "Xbox"),
        (0.925, "variety of events", "event variety"), (0.925, "PlayStation", "Xbox"),
        (0.95, "variety of events", "event variety")]


def test_sweep_exact_backend_finds_nothing_non_exact(fixtures_dir):
    gold, systems = sweep_inputs(fixtures_dir)
    result = theta_sweep(gold, systems, default_grid(), ExactBackend())
    assert all(r.non_exact_pairs == 0 and r.matched_pairs == 1 for r in result.rows)


def test_sweep_error_fraction(fixtures_dir, sweep_backend):
    gold, systems = sweep_inputs(fixtures_dir)
    labels = {("playstation", "xbox"): False, ("variety of events", "event variety"): True}
    rows = theta_sweep(gold, systems, [0.925, 0.95, 1.0], sweep_backend, labels).rows
    assert [r.error_fraction for r in rows] == [0.5, 0.0, None]


def test_sweep_deduplicates_across_systems(fixtures_dir, sweep_backend):
    gold, systems = sweep_inputs(fixtures_dir)
    rows = theta_sweep(gold, {"a": systems["sys"], "b": systems["sys"]}, [0.925], sweep_backend).rows
    assert rows[0].non_exact_pairs == 2 and rows[0].matched_pairs == 6 and rows[0].exact_pairs == 2


def test_sweep_rejects_bad_grids(fixtures_dir, sweep_backend):
    gold, systems = sweep_inputs(fixtures_dir)
    for grid in ([], [0.5, 0.4], [0.0, 0.5], [0.5, 0.5]):
        with pytest.raises(ValueError):
            theta_sweep(gold, systems, grid, sweep_backend)
    with pytest.raises(EmptyInputError):
        theta_sweep(gold, {}, [0.5], sweep_backend)


def test_sweep_non_exact_count_monotone():
    rng = np.random.default_rng(2)
    vocab = [f"w{k}" for k in range(8)]
    corpus, preds = [], []
    for d in range(20):
        g = rng.choice(vocab, size=3, replace=False)
        p = rng.choice(vocab, size=3, replace=False)
        corpus.append(AnnotatedDocument(str(d), "", tuple(AspectPolarityPair(x, "neutral") for x in g)))
        preds.append(PredictionRecord(str(d), tuple(AspectPolarityPair(x, "neutral") for x in p)))
    from aspecteval.similarity import CharNgramBackend
    rows = theta_sweep(corpus, {"s": preds}, default_grid(0.1), CharNgramBackend(1)).rows
    counts = [r.non_exact_pairs for r in rows]
    matched = [r.matched_pairs for r in rows]
    assert counts[-1] == 0 and matched == sorted(matched, reverse=True)
