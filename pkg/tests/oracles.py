"""Independent reference implementations used to check the library.

Each oracle is deliberately naive (enumeration, exact fractions, plain
Python loops) and shares no code with the path it checks.
"""

import itertools
import math
import random
from fractions import Fraction


def brute_force_assignment(cost):
    """Minimum total cost over all maximum-cardinality partial assignments.

    Totals are correctly rounded sums, so equal optima compare bitwise.
    """
    n_rows, n_cols = len(cost), len(cost[0])
    best = None
    if n_rows <= n_cols:
        for cols in itertools.permutations(range(n_cols), n_rows):
            total = math.fsum(float(cost[r][c]) for r, c in enumerate(cols))
            if best is None or total < best:
                best = total
    else:
        for rows in itertools.permutations(range(n_rows), n_cols):
            total = math.fsum(float(cost[r][c]) for c, r in enumerate(rows))
            if best is None or total < best:
                best = total
    return best


def max_weight_matching(sim, theta):
    """Largest total similarity over one-to-one matchings restricted to edges >= theta."""
    n_gold, n_det = len(sim), len(sim[0]) if sim else 0

    def best(i, used):
        if i == n_gold:
            return 0.0
        value = best(i + 1, used)
        for j in range(n_det):
            if not used & (1 << j) and sim[i][j] >= theta:
                value = max(value, sim[i][j] + best(i + 1, used | (1 << j)))
        return value

    return best(0, 0)


def bootstrap_p_value(a, b, iterations, seed):
    """Paired bootstrap p-value with a plain loop over ``random.Random``."""
    rng = random.Random(seed)
    n = len(a)
    observed = sum(a) / n - sum(b) / n
    hits = 0
    for _ in range(iterations):
        sa = sb = 0.0
        for _ in range(n):
            k = rng.randrange(n)
            sa += a[k]
            sb += b[k]
        if sa / n - sb / n >= 2 * observed:
            hits += 1
    return hits / iterations


def fleiss_kappa_exact(table):
    """Fleiss' kappa in exact rational arithmetic."""
    n_items = len(table)
    n = sum(table[0])
    p_bar = Fraction(0)
    for row in table:
        p_bar += Fraction(sum(x * x for x in row) - n, n * (n - 1))
    p_bar /= n_items
    p_e = Fraction(0)
    for j in range(len(table[0])):
        p_j = Fraction(sum(row[j] for row in table), n_items * n)
        p_e += p_j * p_j
    return (p_bar - p_e) / (1 - p_e)
