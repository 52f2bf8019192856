import json
import os
import unittest
from fractions import Fraction

from calculus import AxiomSystem
from errors import ExtensionLimitExceeded, InconsistentTheory, PreconditionViolation, SchemaError
from identify import (
    InfoOption,
    PonderedCost,
    Recursiveness,
    identified_graph,
    load_options,
    pondered_cost,
    rank_options,
    recursiveness_test,
    pruning_constraints,
)
from language import Signature, load_formulas, parse_formula
from scm import read_model
from semantics import theory_literals

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

SIG2 = Signature.of(["X1", "X2"])
SIG3 = Signature.of(["X1", "X2", "X3"])
SIG4 = Signature.of(["X1", "X2", "X3", "X4"])


def formulas(texts, sig):
    return [parse_formula(t, sig) for t in texts]


def model_theory(name, sig):
    m = read_model(os.path.join(FIXTURES, name))
    return formulas([f.render() for f in theory_literals(m).formulas()], sig)


class TestIdentifiedGraph(unittest.TestCase):
    def test_single_negative(self):
        gamma = formulas(["!irr(X1; X2; )"], SIG2)
        g = identified_graph(gamma, AxiomSystem.SREC)
        self.assertEqual(g.sorted_edges(), [("X1", "X2")])
        self.assertEqual(identified_graph(gamma, AxiomSystem.SREC, exhaustive=True), g)

    def test_example_theory(self):
        gamma = load_formulas(os.path.join(FIXTURES, "ex1.txt"), SIG4)
        g = identified_graph(gamma, AxiomSystem.SREC)
        self.assertEqual(
            g.sorted_edges(), [("X1", "X3"), ("X2", "X1"), ("X2", "X3"), ("X3", "X4")]
        )

    def test_empty_theory(self):
        self.assertEqual(identified_graph([], AxiomSystem.SREC, SIG3).edges, frozenset())
        self.assertEqual(identified_graph([], AxiomSystem.SREC, SIG2, exhaustive=True).edges, frozenset())

    def test_extension_limit(self):
        with self.assertRaises(ExtensionLimitExceeded):
            identified_graph([], AxiomSystem.SREC, SIG3, exhaustive=True, max_extensions=1)

    def test_inconsistent(self):
        a = parse_formula("irr(X1; X2; )", SIG2)
        with self.assertRaises(InconsistentTheory):
            identified_graph([a, parse_formula("!irr(X1; X2; )", SIG2)], AxiomSystem.SREC)


class TestRanking(unittest.TestCase):
    def test_pondered_cost(self):
        self.assertEqual(pondered_cost(Fraction(4), 2), PonderedCost(False, Fraction(2)))
        self.assertEqual(pondered_cost(Fraction(3), 0).render(), "inf")
        self.assertEqual(pondered_cost(Fraction(1), 3).render(), "1/3")
        self.assertTrue(pondered_cost(Fraction(100), 1) < pondered_cost(Fraction(0), 0))

    def test_fixture_options(self):
        gamma = load_formulas(os.path.join(FIXTURES, "rank_base.txt"), SIG2)
        with open(os.path.join(FIXTURES, "options.json")) as f:
            options = load_options(json.load(f), SIG2)
        ranked = rank_options(gamma, options, AxiomSystem.SREC)
        self.assertEqual([r.index for r in ranked], [1, 2])
        self.assertEqual([r.cost.render() for r in ranked], ["2", "inf"])
        self.assertEqual([r.new_edges for r in ranked], [1, 0])

    def test_cheaper_per_edge_wins(self):
        two_edges = InfoOption(tuple(formulas(["!irr(X1; X2; X3)", "!irr(X2; X3; X1)"], SIG3)), Fraction(4))
        one_edge = InfoOption(tuple(formulas(["!irr(X1; X2; X3)"], SIG3)), Fraction(3))
        ranked = rank_options([], [one_edge, two_edges], AxiomSystem.SREC, SIG3)
        self.assertEqual([(r.index, r.cost.render()) for r in ranked], [(2, "2"), (1, "3")])

    def test_options_must_extend_the_theory(self):
        gamma = formulas(["irr(X2; X1; )"], SIG2)
        option = InfoOption(tuple(formulas(["!irr(X1; X2; )"], SIG2)), Fraction(1))
        with self.assertRaises(PreconditionViolation):
            rank_options(gamma, [option], AxiomSystem.SREC)

    def test_inconsistent_option(self):
        texts = ["irr(X1; X2; )", "!irr(X1; X2; )"]
        ok = InfoOption(tuple(formulas(texts[:1], SIG2)), Fraction(1))
        bad = InfoOption(tuple(formulas(texts, SIG2)), Fraction(1))
        with self.assertRaises(InconsistentTheory) as ctx:
            rank_options([], [ok, bad], AxiomSystem.SREC, SIG2)
        self.assertTrue("option 2" in str(ctx.exception), str(ctx.exception))

    def test_option_documents(self):
        for document in [
            {"formulas": [], "cost": 1},
            [{"formulas": [], "cost": -1}],
            [{"formulas": [], "cost": True}],
            [{"formulas": [], "cost": 1, "note": "x"}],
            [{"formulas": []}],
        ]:
            with self.assertRaises(SchemaError, msg=str(document)):
                load_options(document, SIG2)
        options = load_options([{"formulas": ["irr(X1; X2; )"], "cost": 0.5}], SIG2)
        self.assertEqual(options[0].cost, Fraction(1, 2))


class TestRecursiveness(unittest.TestCase):
    def test_cyclic_theory(self):
        gamma = model_theory("cyclic_uniq.json", SIG4)
        self.assertEqual(recursiveness_test(gamma), Recursiveness.NON_RECURSIVE)

    def test_two_contexts(self):
        gamma = model_theory("two_contexts.json", SIG2)
        self.assertEqual(recursiveness_test(gamma), Recursiveness.POSSIBLY_RECURSIVE)

    def test_empty(self):
        self.assertEqual(recursiveness_test([]), Recursiveness.POSSIBLY_RECURSIVE)
        self.assertEqual(recursiveness_test([], SIG3), Recursiveness.POSSIBLY_RECURSIVE)


class TestPruning(unittest.TestCase):
    def test_example_theory(self):
        gamma = load_formulas(os.path.join(FIXTURES, "ex1.txt"), SIG4)
        constraints = pruning_constraints(gamma)
        self.assertEqual(len(constraints), 5)
        self.assertEqual(constraints[0], {"from": ["X2"], "to": ["X1"], "avoid": ["X3", "X4"]})
        self.assertEqual(constraints[-1], {"from": ["X1"], "to": ["X4"], "avoid": ["X2"]})


if __name__ == "__main__":
    unittest.main()
