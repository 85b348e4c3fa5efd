import random

import pytest

from ltlkit.formulas import (
    And,
    Atom,
    Finally,
    Formula,
    Globally,
    LassoWord,
    Not,
    Or,
    Release,
    Until,
    atoms,
    children,
    conforms_to_dataset_grammar,
    evaluate,
    is_nnf,
    is_valid_atom_name,
    node_count,
    operator_tokens,
    structure,
    to_nnf,
    walk,
)

from helpers import random_formula, random_lasso


def w(prefix, loop):
    return LassoWord.make(prefix, loop)


class TestAtomNames:
    @pytest.mark.parametrize("name", ["a", "red_room", "second_floor", "_x", "B", "p2"])
    def test_valid(self, name):
        assert is_valid_atom_name(name)
        assert Atom(name).name == name

    @pytest.mark.parametrize("name", ["F", "G", "U", "X", "R"])
    def test_operator_tokens_rejected(self, name):
        assert not is_valid_atom_name(name)
        with pytest.raises(ValueError):
            Atom(name)

    @pytest.mark.parametrize("name", ["", "9x", "a-b", "red room", "a.b"])
    def test_malformed_rejected(self, name):
        assert not is_valid_atom_name(name)
        with pytest.raises(ValueError):
            Atom(name)


class TestTreeBasics:
    def test_equality_is_structural(self):
        assert Finally(Atom("a")) == Finally(Atom("a"))
        assert And(Atom("a"), Atom("b")) != And(Atom("b"), Atom("a"))

    def test_nodes_are_immutable(self):
        f = Atom("a")
        with pytest.raises(AttributeError):
            f.name = "b"

    def test_children(self):
        f = Until(Atom("a"), Not(Atom("b")))
        assert children(f) == (Atom("a"), Not(Atom("b")))
        assert children(Atom("a")) == ()

    def test_walk_covers_every_node(self):
        f = And(Finally(Atom("a")), Globally(Or(Atom("b"), Atom("a"))))
        seen = list(walk(f))
        assert f in seen
        assert Atom("a") in seen
        assert len(seen) == node_count(f) == 7

    def test_atoms(self):
        f = Until(Not(Atom("red_room")), Atom("second_floor"))
        assert atoms(f) == frozenset({"red_room", "second_floor"})

    def test_operator_tokens(self):
        f = Finally(And(Atom("a"), Not(Atom("b"))))
        assert operator_tokens(f) == frozenset({"F", "&", "!"})
        assert operator_tokens(Atom("a")) == frozenset()

    def test_operator_tokens_rejects_release(self):
        with pytest.raises(ValueError):
            operator_tokens(Release(Atom("a"), Atom("b")))

    def test_structure_collapses_atoms(self):
        f = Finally(And(Atom("red_room"), Finally(Atom("blue_room"))))
        assert structure(f) == Finally(And(Atom("p"), Finally(Atom("p"))))


class TestNnf:
    def test_negated_finally(self):
        assert to_nnf(Not(Finally(Atom("a")))) == Globally(Not(Atom("a")))

    def test_negated_globally(self):
        assert to_nnf(Not(Globally(Atom("a")))) == Finally(Not(Atom("a")))

    def test_negated_until_uses_release(self):
        f = to_nnf(Not(Until(Atom("a"), Atom("b"))))
        assert f == Release(Not(Atom("a")), Not(Atom("b")))

    def test_de_morgan(self):
        assert to_nnf(Not(And(Atom("a"), Atom("b")))) == Or(Not(Atom("a")), Not(Atom("b")))
        assert to_nnf(Not(Or(Atom("a"), Atom("b")))) == And(Not(Atom("a")), Not(Atom("b")))

    def test_double_negation(self):
        assert to_nnf(Not(Not(Atom("a")))) == Atom("a")

    def test_random_formulas_normalize(self):
        rng = random.Random(7)
        names = ["a", "b", "c"]
        for _ in range(150):
            f = random_formula(rng, 4, names)
            g = to_nnf(f)
            assert is_nnf(g)
            # Semantic preservation, spot-checked on random words.
            for _ in range(5):
                word = random_lasso(rng, names)
                assert evaluate(f, word) == evaluate(g, word)

    def test_nnf_fixpoint(self):
        rng = random.Random(8)
        for _ in range(50):
            f = random_formula(rng, 4, ["a", "b"])
            g = to_nnf(f)
            assert to_nnf(g) == g


class TestDatasetGrammar:
    def test_atomic_negation_allowed(self):
        f = Until(Not(Atom("red_room")), Atom("second_floor"))
        assert conforms_to_dataset_grammar(f)

    def test_compound_negation_rejected(self):
        assert not conforms_to_dataset_grammar(Not(Finally(Atom("a"))))
        assert not conforms_to_dataset_grammar(Finally(Not(And(Atom("a"), Atom("b")))))

    def test_release_rejected(self):
        assert not conforms_to_dataset_grammar(Release(Atom("a"), Atom("b")))


class TestLassoWord:
    def test_loop_must_be_nonempty(self):
        with pytest.raises(ValueError):
            LassoWord((), ())

    def test_label_is_periodic(self):
        word = w([{"a"}], [{"b"}, {}])
        assert word.label(0) == frozenset({"a"})
        assert word.label(1) == frozenset({"b"})
        assert word.label(2) == frozenset()
        assert word.label(3) == frozenset({"b"})
        assert word.label(101) == word.label(1 + (100 % 2))

    def test_positions(self):
        assert w([{}, {}], [{"a"}]).positions() == 3


class TestEvaluate:
    def test_atom_checks_first_position(self):
        assert evaluate(Atom("a"), w([{"a"}], [{}]))
        assert not evaluate(Atom("a"), w([{}], [{"a"}]))

    def test_finally_within_prefix(self):
        f = Finally(And(Atom("red_room"), Finally(Atom("blue_room"))))
        assert evaluate(f, w([{"red_room"}, {"blue_room"}], [{}]))
        assert not evaluate(f, w([{"blue_room"}, {"red_room"}], [{}]))

    def test_globally_looks_at_loop_only_after_prefix(self):
        f = Globally(Atom("a"))
        assert evaluate(f, w([{"a"}], [{"a"}]))
        assert not evaluate(f, w([{"a"}], [{"a"}, {}]))
        assert not evaluate(f, w([{}], [{"a"}]))

    def test_until_requires_eventual_goal(self):
        f = Until(Atom("a"), Atom("b"))
        assert evaluate(f, w([], [{"b"}]))  # goal immediately
        assert evaluate(f, w([{"a"}, {"a"}], [{"b"}]))
        assert not evaluate(f, w([{"a"}], [{"a"}]))  # goal never arrives
        assert not evaluate(f, w([{}, {"b"}], [{}]))  # left fails before goal

    def test_until_ignores_left_after_goal(self):
        f = Until(Atom("a"), Atom("b"))
        assert evaluate(f, w([{"a", "b"}], [{}]))

    def test_infinitely_often_across_loop(self):
        f = Globally(Finally(Atom("a")))
        assert evaluate(f, w([], [{}, {"a"}]))
        assert not evaluate(f, w([{"a"}], [{}]))

    def test_eventually_always(self):
        f = Finally(Globally(Atom("a")))
        assert evaluate(f, w([{}], [{"a"}]))
        assert not evaluate(f, w([], [{"a"}, {}]))

    def test_release_semantics(self):
        # (a R b): b holds up to and including the step where a first holds,
        # or forever.
        f = Release(Atom("a"), Atom("b"))
        assert evaluate(f, w([], [{"b"}]))
        assert evaluate(f, w([{"b"}, {"a", "b"}], [{}]))
        assert not evaluate(f, w([{"b"}, {"a"}], [{}]))  # b gone at release point
        assert not evaluate(f, w([{"b"}], [{}]))

    def test_negation_flips(self):
        rng = random.Random(21)
        for _ in range(100):
            f = random_formula(rng, 3, ["a", "b"])
            word = random_lasso(rng, ["a", "b"])
            assert evaluate(Not(f), word) == (not evaluate(f, word))

    def test_loop_unrolling_invariance(self):
        # Unrolling the loop once more into the prefix never changes the verdict.
        rng = random.Random(22)
        for _ in range(60):
            f = random_formula(rng, 3, ["a", "b"])
            word = random_lasso(rng, ["a", "b"])
            unrolled = LassoWord(word.prefix + word.loop, word.loop)
            assert evaluate(f, word) == evaluate(f, unrolled)
