import itertools
import os
import unittest

from calculus import (
    AxiomSystem,
    Extension,
    consistent,
    derives,
    edge_atom,
    extended_left_intersection,
    extensions,
    instantiate_axioms,
    parent_set,
    path_witness,
    syntactic_graph,
    validate_extension,
)
from errors import ExtensionLimitExceeded, InvalidExtension, PreconditionViolation
from language import Atom, AtomNode, Not, Signature, load_formulas, parse_formula, submasks
from scm import read_model, semantic_graph
from semantics import theory_literals

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

SIG2 = Signature.of(["X1", "X2"])
SIG3 = Signature.of(["X1", "X2", "X3"])
SIG4 = Signature.of(["X1", "X2", "X3", "X4"])


def example_theory():
    return load_formulas(os.path.join(FIXTURES, "ex1.txt"), SIG4)


def cyclic_theory():
    m = read_model(os.path.join(FIXTURES, "cyclic_uniq.json"))
    theory = theory_literals(m)
    return theory, [parse_formula(f.render(), SIG4) for f in theory.formulas()]


class TestAxioms(unittest.TestCase):
    def test_strong_union_counts(self):
        by_sig = {sig.size: instantiate_axioms(sig) for sig in (SIG2, SIG3)}
        self.assertEqual([i for i in by_sig[2] if i.axiom == "A2"], [])
        strong_union = [i for i in by_sig[3] if i.axiom == "A2"]
        self.assertEqual(len(strong_union), 6)
        for instance in strong_union:
            self.assertTrue(instance.antecedents[0].z.is_empty(), instance.render())
            self.assertEqual(len(instance.consequent.z), 1, instance.render())

    def test_no_instances_over_two_variables(self):
        self.assertEqual(instantiate_axioms(SIG2), ())

    def test_left_intersection_instance(self):
        wanted = (
            {Atom.of(SIG4, ["X1"], ["X2", "X4"]), Atom.of(SIG4, ["X4"], ["X2"], ["X1"])},
            Atom.of(SIG4, ["X1"], ["X2"], ["X4"]),
        )
        found = [
            i
            for i in instantiate_axioms(SIG4)
            if (set(i.antecedents), i.consequent) == wanted
        ]
        self.assertTrue(found, "the instance over X1, X2 and X4 must be generated")

    def test_instances_are_distinct(self):
        keys = [(frozenset(i.antecedents), i.consequent) for i in instantiate_axioms(SIG4)]
        self.assertEqual(len(keys), len(set(keys)))
        for i in instantiate_axioms(SIG4):
            self.assertNotIn(i.consequent, i.antecedents, i.render())

    def test_edge_atom(self):
        self.assertEqual(edge_atom(SIG4, "X2", "X3").render(), "irr(X2; X3; X1,X4)")


class TestConsistency(unittest.TestCase):
    def test_empty_theory(self):
        for system in AxiomSystem:
            self.assertTrue(consistent([], system, SIG3).consistent, system.value)

    def test_contradiction(self):
        a = parse_formula("irr(X1; X2; X3)", SIG3)
        for system in AxiomSystem:
            self.assertFalse(consistent([a, Not(a)], system).consistent, system.value)

    def test_signature_required(self):
        with self.assertRaises(PreconditionViolation):
            consistent([], AxiomSystem.UNIQ)

    def test_example_theory(self):
        gamma = example_theory()
        for system in AxiomSystem:
            result = consistent(gamma, system)
            self.assertTrue(result.consistent, system.value)
            self.assertTrue(all(result.witness.satisfies(f) for f in gamma))

    def test_cyclic_theory(self):
        _, gamma = cyclic_theory()
        self.assertTrue(consistent(gamma, AxiomSystem.UNIQ).consistent)
        self.assertFalse(consistent(gamma, AxiomSystem.SREC).consistent)
        self.assertFalse(consistent(gamma, AxiomSystem.REC).consistent)


class TestExtensions(unittest.TestCase):
    def test_two_variables(self):
        self.assertEqual(len(list(extensions([], AxiomSystem.UNIQ, SIG2))), 4)
        self.assertEqual(len(list(extensions([], AxiomSystem.SREC, SIG2))), 3)
        self.assertEqual(len(list(extensions([], AxiomSystem.REC, SIG2))), 4)

    def test_pinned_by_a_negative(self):
        gamma = [parse_formula("!irr(X1; X2; )", SIG2)]
        found = list(extensions(gamma, AxiomSystem.SREC))
        self.assertEqual(len(found), 1)
        self.assertEqual(found[0].values, (False, True))

    def test_canonical_order(self):
        values = [e.values for e in extensions([], AxiomSystem.UNIQ, SIG2)]
        self.assertEqual(values, [(True, True), (True, False), (False, True), (False, False)])

    def test_full_theory_has_one_extension(self):
        theory, gamma = cyclic_theory()
        found = list(extensions(gamma, AxiomSystem.UNIQ))
        self.assertEqual(len(found), 1)
        self.assertEqual(found[0].values, theory.verdicts)

    def test_systems_are_nested(self):
        _, cyclic = cyclic_theory()
        for gamma, sig in [([], SIG2), (cyclic, SIG4)]:
            found = {
                system: {e.values for e in extensions(gamma, system, sig)} for system in AxiomSystem
            }
            self.assertTrue(found[AxiomSystem.SREC] <= found[AxiomSystem.REC], sig.variables)
            self.assertTrue(found[AxiomSystem.REC] <= found[AxiomSystem.UNIQ], sig.variables)
        self.assertEqual(len(found[AxiomSystem.UNIQ]), 1)
        self.assertEqual(found[AxiomSystem.REC], set())

    def test_separating_sets_are_closed_under_intersection(self):
        samples = list(itertools.islice(extensions([], AxiomSystem.UNIQ, SIG3), 200))
        samples += list(itertools.islice(extensions(example_theory(), AxiomSystem.SREC), 20))
        for e in samples:
            sig = e.sig
            for y in sig.variables:
                ym = sig.mask([y])
                others = sig.full_mask & ~ym
                separating = [
                    p for p in submasks(others) if p == others or e.holds_masks(others & ~p, ym, p)
                ]
                for p, q in itertools.combinations(separating, 2):
                    self.assertIn(p & q, separating, f"{y}: {sig.names(p)} and {sig.names(q)}")

    def test_limit(self):
        with self.assertRaises(ExtensionLimitExceeded):
            list(extensions([], AxiomSystem.UNIQ, SIG2, limit=1))


class TestDerivations(unittest.TestCase):
    def setUp(self):
        self.gamma = example_theory()

    def derivable(self, text, system=AxiomSystem.UNIQ, gamma=None, sig=SIG4):
        gamma = self.gamma if gamma is None else gamma
        return derives(gamma, parse_formula(text, sig), system, sig)

    def test_members(self):
        for f in self.gamma:
            self.assertTrue(derives(self.gamma, f, AxiomSystem.UNIQ), f.render())

    def test_example_conclusion(self):
        # the parent sets pinned by the theory form a DAG with X2 -> X3 -> X4
        self.assertTrue(self.derivable("!irr(X2; X4; X1)"))
        self.assertTrue(self.derivable("!irr(X2; X4; X1)", AxiomSystem.SREC))

    def test_decomposition_and_union(self):
        self.assertTrue(self.derivable("irr(X4; X1; )"))
        self.assertTrue(self.derivable("irr(X1; X2; X3,X4)"))
        self.assertTrue(self.derivable("!irr(X2; X1; )"))
        self.assertFalse(self.derivable("irr(X2; X1; )"))

    def test_cycles_need_recursion(self):
        gamma = [parse_formula("!irr(X1; X2; )", SIG2)]
        self.assertTrue(self.derivable("irr(X2; X1; )", AxiomSystem.SREC, gamma, SIG2))
        self.assertFalse(self.derivable("irr(X2; X1; )", AxiomSystem.UNIQ, gamma, SIG2))
        self.assertFalse(self.derivable("irr(X2; X1; )", AxiomSystem.REC, gamma, SIG2))
        gamma = [parse_formula("!irr(X1; X2; )", SIG3)]
        self.assertTrue(self.derivable("irr(X2; X1; )", AxiomSystem.SREC, gamma, SIG3))
        self.assertFalse(self.derivable("irr(X2; X1; )", AxiomSystem.UNIQ, gamma, SIG3))

    def test_extended_left_intersection(self):
        for roles in (("X1", "X2", "X3", "X4"), ("X4", "X1", "X2", "X3")):
            t, x, w, y = ([r] for r in roles)
            antecedents, consequent = extended_left_intersection(SIG4, t, x, w, y)
            self.assertTrue(derives(antecedents, consequent, AxiomSystem.UNIQ), str(roles))

    def test_inconsistent_theory_derives_anything(self):
        a = parse_formula("irr(X1; X2; )", SIG2)
        phi = parse_formula("irr(X2; X1; )", SIG2)
        self.assertTrue(derives([a, Not(a)], phi, AxiomSystem.UNIQ))


class TestSyntacticGraph(unittest.TestCase):
    def setUp(self):
        self.e = consistent(example_theory(), AxiomSystem.SREC).witness

    def test_parent_sets(self):
        self.assertEqual(parent_set(self.e, "X2").names, ())
        self.assertEqual(parent_set(self.e, "X1").names, ("X2",))
        self.assertEqual(parent_set(self.e, "X3").names, ("X1", "X2"))
        self.assertEqual(parent_set(self.e, "X4").names, ("X3",))

    def test_graph(self):
        self.assertEqual(
            syntactic_graph(self.e).sorted_edges(),
            [("X1", "X3"), ("X2", "X1"), ("X2", "X3"), ("X3", "X4")],
        )

    def test_all_true(self):
        e = Extension(SIG4, tuple(True for _ in range(110)))
        self.assertEqual(e.graph.edges, frozenset())

    def test_matches_the_model(self):
        theory, _ = cyclic_theory()
        e = Extension(SIG4, theory.verdicts)
        m = read_model(os.path.join(FIXTURES, "cyclic_uniq.json"))
        self.assertEqual(e.graph, semantic_graph(m))

    def test_path_witness(self):
        self.assertEqual(path_witness(self.e, "X1", "X4", SIG4.varset(["X2"])), ["X1", "X3", "X4"])
        self.assertEqual(path_witness(self.e, "X3", "X4", SIG4.varset(["X1", "X2"])), ["X3", "X4"])
        self.assertEqual(path_witness(self.e, "X2", "X1", SIG4.varset(["X3", "X4"])), ["X2", "X1"])
        with self.assertRaises(PreconditionViolation):
            path_witness(self.e, "X4", "X3", SIG4.varset([]))


class TestValidation(unittest.TestCase):
    def test_theory_of_a_model_is_an_extension(self):
        theory, _ = cyclic_theory()
        e = Extension(SIG4, theory.verdicts)
        validate_extension(e, AxiomSystem.UNIQ)
        with self.assertRaises(InvalidExtension):
            validate_extension(e, AxiomSystem.SREC)

    def test_axiom_violation(self):
        # irr(X1; X2; ) alone without irr(X1; X2; X3) breaks strong union
        values = [True] * 18
        e = Extension(SIG3, tuple(values))
        index = {a.render(): i for i, a in enumerate(e.positives())}
        values[index["irr(X1; X2; X3)"]] = False
        with self.assertRaises(InvalidExtension):
            validate_extension(Extension(SIG3, tuple(values)), AxiomSystem.UNIQ)

    def test_edge_atoms_as_nodes(self):
        e = consistent([Not(AtomNode(edge_atom(SIG3, "X1", "X2")))], AxiomSystem.SREC).witness
        self.assertIn(("X1", "X2"), e.graph.edges)


if __name__ == "__main__":
    unittest.main()
