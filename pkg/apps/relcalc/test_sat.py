import itertools
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from sat import Solver

clauses = st.lists(
    st.lists(st.integers(1, 5).flatmap(lambda v: st.sampled_from([v, -v])), min_size=1, max_size=3),
    max_size=14,
)


def brute_force(num_vars, cnf):
    found = []
    for bits in itertools.product([True, False], repeat=num_vars):
        values = [None] + list(bits)
        if all(any(values[abs(l)] == (l > 0) for l in c) for c in cnf):
            found.append(bits)
    return found


class TestSolver(unittest.TestCase):
    def test_satisfiable(self):
        s = Solver(3)
        s.add_clause([1, 2])
        s.add_clause([-1])
        s.add_clause([-2, 3])
        model = s.solve()
        self.assertEqual(model[1:], [False, True, True])

    def test_unsatisfiable(self):
        s = Solver(2)
        for clause in ([1, 2], [1, -2], [-1, 2], [-1, -2]):
            s.add_clause(clause)
        self.assertIsNone(s.solve())

    def test_empty_clause(self):
        s = Solver(1)
        s.add_clause([])
        self.assertIsNone(s.solve())

    def test_tautologies_are_dropped(self):
        s = Solver(1)
        s.add_clause([1, -1])
        self.assertEqual(s.clauses, [])
        self.assertEqual(s.units, [])

    def test_models_are_canonical(self):
        s = Solver(2)
        s.add_clause([1, 2])
        models = [tuple(m[1:]) for m in s.models([1, 2])]
        self.assertEqual(models, [(True, True), (True, False), (False, True)])

    def test_theory_lemma(self):
        # forbid 1 and 2 together, only visible to the theory
        def theory(values, complete):
            if values[1] and values[2]:
                return [-1, -2]
            return None

        s = Solver(2)
        models = [tuple(m[1:]) for m in s.models([1, 2], theory)]
        self.assertEqual(models, [(True, False), (False, True), (False, False)])
        self.assertTrue(s.restarts >= 1, "the lemma must have been learned")

    @settings(max_examples=80, deadline=None)
    @given(clauses)
    def test_agrees_with_brute_force(self, cnf):
        s = Solver(5)
        for c in cnf:
            s.add_clause(c)
        expected = brute_force(5, cnf)
        found = [tuple(m[1:]) for m in s.models(range(1, 6))]
        self.assertEqual(found, expected)


if __name__ == "__main__":
    unittest.main()
