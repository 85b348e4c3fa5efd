"""Brute-force lasso-witness search, independent of the automaton code.

The oracle enumerates every ultimately periodic word over the formula's
own atoms up to a total length bound and checks each with the semantic
evaluator.  Finding a witness proves satisfiability outright.  Finding
none only rules out short models, so unsatisfiability claims in the test
suite must come with an analytic argument; the oracle then corroborates
that no short witness exists.

Enumeration cost grows as |alphabet|^length, so the sweep self-limits:
the bound is lowered from the nominal maximum until the estimated
evaluation count fits the budget.  One-atom formulas reach the full
bound of 8; two atoms stop at 6; three atoms at 4 (with the default
budget).
"""

import itertools

from ltlkit.formulas import LassoWord, atoms, evaluate

from helpers import all_letters

NOMINAL_MAX_TOTAL = 8
DEFAULT_BUDGET = 60_000


def affordable_bound(n_letters: int, max_total: int = NOMINAL_MAX_TOTAL,
                     budget: int = DEFAULT_BUDGET) -> int:
    """Largest total length whose cumulative sweep fits the budget."""
    spent = 0
    bound = 1
    for total in range(1, max_total + 1):
        layer = (n_letters ** total) * total
        if spent + layer > budget and total > 1:
            break
        spent += layer
        bound = total
    return bound


def bounded_witness(formula, max_total: int = NOMINAL_MAX_TOTAL,
                    budget: int = DEFAULT_BUDGET):
    """Search for a satisfying lasso.

    Returns (witness, swept): the first witness found (or None) and the
    largest total length that was exhaustively swept.
    """
    letters = all_letters(atoms(formula))
    bound = affordable_bound(len(letters), max_total, budget)
    for total in range(1, bound + 1):
        for word in itertools.product(letters, repeat=total):
            for split in range(total):
                candidate = LassoWord(word[:split], word[split:])
                if evaluate(formula, candidate):
                    return candidate, total
    return None, bound
