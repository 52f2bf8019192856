"""
A small DPLL solver over integer literals with two watched literals per
clause. Structural conditions that are not clausal are handled by a theory
callback: whenever it returns a lemma, the lemma is learned and the search
restarts. Decisions follow variable order with the true phase first, so
models come out in a fixed canonical order.
"""

from collections import defaultdict
from typing import Callable, Iterable, Iterator, List, Optional, Sequence

from loguru import logger

# theory(values, complete) -> violated clause or None
Theory = Callable[[List[Optional[bool]], bool], Optional[List[int]]]


class Solver:
    def __init__(self, num_vars: int = 0):
        self.num_vars = num_vars
        self.clauses: List[List[int]] = []
        self.units: List[int] = []
        self.watches = defaultdict(list)
        self.unsat = False
        self.restarts = 0

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add_clause(self, lits: Iterable[int]):
        clause = []
        seen = set()
        for lit in lits:
            if -lit in seen:
                return
            if lit not in seen:
                seen.add(lit)
                clause.append(lit)
                self.num_vars = max(self.num_vars, abs(lit))
        if not clause:
            self.unsat = True
        elif len(clause) == 1:
            self.units.append(clause[0])
        else:
            index = len(self.clauses)
            self.clauses.append(clause)
            self.watches[clause[0]].append(index)
            self.watches[clause[1]].append(index)

    def solve(self, theory: Optional[Theory] = None) -> Optional[List[Optional[bool]]]:
        while not self.unsat:
            model, lemma = self._search(theory)
            if lemma is None:
                return model
            self.restarts += 1
            logger.debug(f"learned theory lemma of size {len(lemma)}, restart {self.restarts}")
            self.add_clause(lemma)
        return None

    def models(
        self, project: Sequence[int], theory: Optional[Theory] = None
    ) -> Iterator[List[Optional[bool]]]:
        """Every model, distinct on the projected variables, in canonical order."""
        while True:
            model = self.solve(theory)
            if model is None:
                return
            yield model
            self.add_clause([-v if model[v] else v for v in project])

    def _search(self, theory: Optional[Theory]):
        n = self.num_vars
        values: List[Optional[bool]] = [None] * (n + 1)
        trail: List[int] = []
        decisions = []
        clauses = self.clauses
        watches = self.watches
        head = 0

        def value(lit: int) -> Optional[bool]:
            v = values[abs(lit)]
            if v is None:
                return None
            return v if lit > 0 else not v

        def assign(lit: int):
            values[abs(lit)] = lit > 0
            trail.append(lit)

        def propagate() -> bool:
            nonlocal head
            while head < len(trail):
                false_lit = -trail[head]
                head += 1
                watchers = watches[false_lit]
                i = 0
                while i < len(watchers):
                    clause = clauses[watchers[i]]
                    if clause[0] == false_lit:
                        clause[0], clause[1] = clause[1], clause[0]
                    if value(clause[0]) is True:
                        i += 1
                        continue
                    for k in range(2, len(clause)):
                        if value(clause[k]) is not False:
                            clause[1], clause[k] = clause[k], clause[1]
                            watches[clause[1]].append(watchers[i])
                            watchers[i] = watchers[-1]
                            watchers.pop()
                            break
                    else:
                        first = value(clause[0])
                        if first is False:
                            return False
                        if first is None:
                            assign(clause[0])
                        i += 1
            return True

        for unit in self.units:
            current = value(unit)
            if current is False:
                self.unsat = True
                return None, None
            if current is None:
                assign(unit)

        while True:
            conflict = not propagate()
            if not conflict and theory is not None:
                lemma = theory(values, len(trail) == n)
                if lemma is not None:
                    if any(value(lit) is not False for lit in lemma):
                        raise RuntimeError(f"theory lemma {lemma} is not violated")
                    return None, lemma
            if conflict:
                while decisions:
                    mark, lit, flipped = decisions.pop()
                    for undone in trail[mark:]:
                        values[abs(undone)] = None
                    del trail[mark:]
                    head = mark
                    if not flipped:
                        decisions.append((mark, -lit, True))
                        assign(-lit)
                        break
                else:
                    self.unsat = True
                    return None, None
                continue

            var = next((v for v in range(1, n + 1) if values[v] is None), None)
            if var is None:
                return list(values), None
            decisions.append((len(trail), var, False))
            assign(var)
