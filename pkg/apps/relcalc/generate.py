from typing import List, Sequence

import numpy as np
from loguru import logger

from errors import PreconditionViolation
from language import Signature
from scm import CausalModel, Equation, Rule, check_uniq

KINDS = ("srec", "rec", "uniq")


def _parents_from_order(rng: np.random.Generator, order: Sequence[int], density: float):
    parents = {v: [] for v in order}
    for k, v in enumerate(order):
        parents[v] = sorted(int(p) for p in order[:k] if rng.random() < density)
    return parents


def _table_rules(rng, sig: Signature, y: int, parents: List[int], u: str) -> List[Rule]:
    domain = sig.domains[y]
    if not parents:
        return [Rule((), domain[rng.integers(len(domain))], u)]
    grids = np.array(np.meshgrid(*(range(len(sig.domains[p])) for p in parents), indexing="ij"))
    combos = grids.reshape(len(parents), -1).T
    rules = []
    for combo in combos:
        when = tuple((p, sig.domains[p][int(c)]) for p, c in zip(parents, combo))
        rules.append(Rule(when, domain[rng.integers(len(domain))], u))
    return rules


def _draw(rng, sig: Signature, kind: str, contexts: Sequence[str], density: float) -> CausalModel:
    n = sig.size
    shared = rng.permutation(n)
    rules = [[] for _ in range(n)]
    for u in contexts:
        if kind == "srec":
            parents = _parents_from_order(rng, shared, density)
        elif kind == "rec":
            parents = _parents_from_order(rng, rng.permutation(n), density)
        else:
            parents = {
                v: [p for p in range(n) if p != v and rng.random() < density] for v in range(n)
            }
        for y in range(n):
            rules[y] += _table_rules(rng, sig, y, parents[y], u)
    equations = tuple(Equation(tuple(r), sig.domains[y][0]) for y, r in enumerate(rules))
    return CausalModel(sig, tuple(contexts), equations)


def random_model(
    rng: np.random.Generator,
    n: int,
    kind: str = "srec",
    contexts: int = 1,
    domain_size: int = 2,
    density: float = 0.5,
    attempts: int = 1000,
) -> CausalModel:
    if kind not in KINDS:
        raise PreconditionViolation(f"unknown model kind {kind!r}, choose from {KINDS}")
    names = [f"X{i}" for i in range(1, n + 1)]
    sig = Signature.of(names, [str(v) for v in range(domain_size)])
    labels = [f"u{i}" for i in range(contexts)]
    for attempt in range(attempts):
        m = _draw(rng, sig, kind, labels, density)
        if kind != "uniq" or check_uniq(m):
            return m
        logger.debug(f"draw {attempt} has no unique solutions, drawing again")
    raise PreconditionViolation(f"no model with unique solutions after {attempts} draws")


def random_literal_subset(rng: np.random.Generator, literals: Sequence, size: int) -> list:
    size = min(size, len(literals))
    picked = rng.choice(len(literals), size=size, replace=False)
    return [literals[i] for i in sorted(int(i) for i in picked)]
