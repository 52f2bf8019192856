import itertools
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
from loguru import logger

from errors import (
    ExtensionLimitExceeded,
    InvalidExtension,
    PreconditionViolation,
)
from language import (
    And,
    Atom,
    AtomNode,
    Formula,
    Implies,
    Literal,
    Not,
    Or,
    Signature,
    VarSet,
    atom_space,
    enumerate_atoms,
    formula_signature,
    require_same_signature,
    submasks,
)
from sat import Solver
from scm import Digraph


class AxiomSystem(Enum):
    UNIQ = "uniq"
    SREC = "srec"
    REC = "rec"


# antecedents and consequent of each schema, atoms written as letter strings
SCHEMATA = {
    "A2": ([("X", "Y", "Z")], ("X", "Y", "ZW")),
    "A3": ([("XW", "Y", "Z")], ("X", "Y", "Z")),
    "A4": ([("X", "YW", "Z"), ("X", "Y", "ZW")], ("X", "Y", "Z")),
    "A5": ([("X", "YW", "Z"), ("W", "Y", "ZX")], ("X", "Y", "ZW")),
    "A6": ([("X", "Y", "ZW"), ("W", "Y", "ZX")], ("XW", "Y", "Z")),
    "A7": ([("X", "Y", "ZW"), ("X", "W", "ZY")], ("X", "YW", "Z")),
    "A8": (
        [("X", "Y", "ZV"), ("X", "Y", "ZU"), ("U", "V", "ZXW"), ("V", "U", "ZXW")],
        ("X", "Y", "ZW"),
    ),
    "A9": ([("X", "YW", "Z"), ("X", "V", "ZYW"), ("W", "Y", "ZX")], ("X", "YV", "Z")),
}


@dataclass(frozen=True)
class AxiomInstance:
    axiom: str
    antecedents: Tuple[Atom, ...]
    consequent: Atom

    def clause(self) -> List[int]:
        index = atom_space(self.consequent.sig)
        lits = [-(index[a.masks] + 1) for a in self.antecedents]
        return lits + [index[self.consequent.masks] + 1]

    def render(self) -> str:
        body = " & ".join(a.render() for a in self.antecedents)
        return f"{self.axiom}: {body} => {self.consequent.render()}"


def _letters(antecedents, consequent) -> List[str]:
    letters = []
    for parts in antecedents + [consequent]:
        for part in parts:
            for letter in part:
                if letter not in letters:
                    letters.append(letter)
    return letters


def _atom_index(parts, masks: Dict[str, int], index) -> Optional[int]:
    x, y, z = (sum(masks[letter] for letter in part) for part in parts)
    if x == 0 or y == 0:
        return None
    return index.get((x, y, z))


@lru_cache(maxsize=None)
def instantiate_axioms(sig: Signature) -> Tuple[AxiomInstance, ...]:
    """Every instance of A2-A9 over the signature, deduplicated."""
    index = atom_space(sig)
    atoms = enumerate_atoms(sig)
    instances = []
    seen = set()
    for name, (antecedents, consequent) in SCHEMATA.items():
        letters = _letters(antecedents, consequent)
        count = 0
        # each variable plays one letter or none
        for roles in itertools.product(range(len(letters) + 1), repeat=sig.size):
            masks = dict.fromkeys(letters, 0)
            for var, role in enumerate(roles):
                if role < len(letters):
                    masks[letters[role]] |= 1 << var
            cons = _atom_index(consequent, masks, index)
            if cons is None:
                continue
            ants = [_atom_index(parts, masks, index) for parts in antecedents]
            if None in ants or cons in ants:
                continue
            key = (frozenset(ants), cons)
            if key in seen:
                continue
            seen.add(key)
            instances.append(AxiomInstance(name, tuple(atoms[i] for i in ants), atoms[cons]))
            count += 1
        logger.debug(f"{name}: {count} instances over {sig.size} variables")
    logger.info(f"instantiated {len(instances)} axiom clauses over {sig.size} variables")
    return tuple(instances)


@lru_cache(maxsize=None)
def axiom_clauses(sig: Signature) -> Tuple[Tuple[int, ...], ...]:
    return tuple(tuple(instance.clause()) for instance in instantiate_axioms(sig))


def edge_atom(sig: Signature, x: str, y: str) -> Atom:
    """({x} ↛ {y} | rest), false exactly when x -> y is in the syntactic graph."""
    xm, ym = sig.mask([x]), sig.mask([y])
    return Atom.from_masks(sig, xm, ym, sig.full_mask & ~(xm | ym))


@dataclass(frozen=True)
class Extension:
    """A total truth assignment over the atom space of a signature."""

    sig: Signature
    values: Tuple[bool, ...]

    def holds(self, a: Atom) -> bool:
        return self.values[atom_space(self.sig)[a.masks]]

    def holds_masks(self, x: int, y: int, z: int) -> bool:
        return self.values[atom_space(self.sig)[(x, y, z)]]

    def literals(self) -> List[Literal]:
        return [Literal(a, v) for a, v in zip(enumerate_atoms(self.sig), self.values)]

    def positives(self) -> List[Atom]:
        return [a for a, v in zip(enumerate_atoms(self.sig), self.values) if v]

    def negatives(self) -> List[Atom]:
        return [a for a, v in zip(enumerate_atoms(self.sig), self.values) if not v]

    def satisfies(self, f: Formula) -> bool:
        return f.evaluate(self.holds)

    def render(self) -> str:
        return "".join(lit.render() + "\n" for lit in self.literals())

    @cached_property
    def graph(self) -> Digraph:
        return syntactic_graph(self)


def parent_set(e: Extension, y: str) -> VarSet:
    sig = e.sig
    ym = sig.mask([y])
    others = sig.full_mask & ~ym
    candidates = [
        p for p in submasks(others) if p != others and e.holds_masks(others & ~p, ym, p)
    ]
    if not candidates:
        return VarSet(sig, others)
    minimal = [p for p in candidates if not any(q != p and q & ~p == 0 for q in candidates)]
    if len(minimal) > 1:
        names = [sig.names(p) for p in minimal]
        raise InvalidExtension(f"{y} has several minimal parent sets {names}")
    return VarSet(sig, minimal[0])


def syntactic_graph(e: Extension) -> Digraph:
    edges = set()
    for y in e.sig.variables:
        for x in parent_set(e, y):
            edges.add((x, y))
    return Digraph.of(e.sig, edges)


def path_witness(e: Extension, x: str, y: str, z: VarSet) -> List[str]:
    sig = e.sig
    a = Atom(sig.varset([x]), sig.varset([y]), z)
    if e.holds(a):
        raise PreconditionViolation(f"{a.render()} holds, there is nothing to witness")
    g = e.graph.to_networkx()
    g.remove_nodes_from(z.names)
    try:
        paths = list(nx.all_shortest_paths(g, x, y))
    except nx.NetworkXNoPath:
        raise InvalidExtension(f"no path {x} -> {y} avoiding {list(z.names)} for {a.render()}")
    return min(paths, key=lambda p: [sig.position(v) for v in p])


class _Encoder:
    """Tseitin encoding of formulas over atom variables numbered from 1."""

    def __init__(self, solver: Solver, sig: Signature):
        self.solver = solver
        self.sig = sig
        self.index = atom_space(sig)

    def literal(self, f: Formula) -> int:
        if isinstance(f, AtomNode):
            require_same_signature(self.sig, f.atom.sig)
            return self.index[f.atom.masks] + 1
        if isinstance(f, Not):
            return -self.literal(f.sub)
        if isinstance(f, Implies):
            return self._gate(-self.literal(f.left), self.literal(f.right), conjunction=False)
        a, b = self.literal(f.left), self.literal(f.right)
        return self._gate(a, b, conjunction=isinstance(f, And))

    def _gate(self, a: int, b: int, conjunction: bool) -> int:
        v = self.solver.new_var()
        if conjunction:
            self.solver.add_clause([-v, a])
            self.solver.add_clause([-v, b])
            self.solver.add_clause([v, -a, -b])
        else:
            self.solver.add_clause([-v, a, b])
            self.solver.add_clause([v, -a])
            self.solver.add_clause([v, -b])
        return v

    def assert_formula(self, f: Formula):
        if isinstance(f, And):
            self.assert_formula(f.left)
            self.assert_formula(f.right)
        elif isinstance(f, Or):
            self.solver.add_clause([self.literal(f.left), self.literal(f.right)])
        else:
            self.solver.add_clause([self.literal(f)])


def _edge_vars(sig: Signature) -> Dict[Tuple[int, int], int]:
    index = atom_space(sig)
    edges = {}
    for i, j in itertools.permutations(range(sig.size), 2):
        rest = sig.full_mask & ~(1 << i | 1 << j)
        edges[(i, j)] = index[(1 << i, 1 << j, rest)] + 1
    return edges


def _srec_theory(sig: Signature):
    edge_vars = _edge_vars(sig)

    def check(values, complete):
        # a false edge atom is an edge; any cycle among them is final
        g = nx.DiGraph()
        g.add_nodes_from(range(sig.size))
        g.add_edges_from(edge for edge, var in edge_vars.items() if values[var] is False)
        try:
            cycle = nx.find_cycle(g)
        except nx.NetworkXNoCycle:
            return None
        return [edge_vars[(a, b)] for a, b in cycle]

    return check


def _rec_theory(sig: Signature):
    from fragments import find_fragment

    atoms = enumerate_atoms(sig)
    singles = [
        i for i, a in enumerate(atoms) if len(a.x) == 1 and len(a.y) == 1
    ]
    count = len(atoms)

    def check(values, complete):
        if not complete:
            return None
        e = Extension(sig, tuple(values[1 : count + 1]))
        for i in singles:
            if e.values[i]:
                continue
            a = atoms[i]
            if find_fragment(e, a.x.names[0], a.y.names[0], a.z) is None:
                logger.debug(f"no fragment for {a.render()}, blocking the assignment")
                return [-(k + 1) if v else k + 1 for k, v in enumerate(e.values)]
        return None

    return check


def _theory(sig: Signature, system: AxiomSystem):
    if system == AxiomSystem.SREC:
        return _srec_theory(sig)
    if system == AxiomSystem.REC:
        return _rec_theory(sig)
    return None


def resolve_signature(gamma: Sequence[Formula], sig: Optional[Signature]) -> Signature:
    inferred = formula_signature(gamma)
    if sig is None:
        if inferred is None:
            raise PreconditionViolation("no signature given and none can be read off the formulas")
        return inferred
    if inferred is not None:
        require_same_signature(sig, inferred)
    return sig


def _solver(gamma: Sequence[Formula], sig: Signature) -> Solver:
    solver = Solver(len(enumerate_atoms(sig)))
    for clause in axiom_clauses(sig):
        solver.add_clause(clause)
    encoder = _Encoder(solver, sig)
    for f in gamma:
        encoder.assert_formula(f)
    return solver


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    witness: Optional[Extension] = None


def consistent(
    gamma: Sequence[Formula], system: AxiomSystem, sig: Optional[Signature] = None
) -> ConsistencyResult:
    sig = resolve_signature(gamma, sig)
    solver = _solver(gamma, sig)
    model = solver.solve(_theory(sig, system))
    if model is None:
        logger.info(f"{len(gamma)} formulas are {system.value}-inconsistent")
        return ConsistencyResult(False)
    count = len(enumerate_atoms(sig))
    return ConsistencyResult(True, Extension(sig, tuple(model[1 : count + 1])))


def extensions(
    gamma: Sequence[Formula],
    system: AxiomSystem,
    sig: Optional[Signature] = None,
    limit: Optional[int] = None,
) -> Iterator[Extension]:
    sig = resolve_signature(gamma, sig)
    solver = _solver(gamma, sig)
    count = len(enumerate_atoms(sig))
    produced = 0
    for model in solver.models(range(1, count + 1), _theory(sig, system)):
        produced += 1
        if limit is not None and produced > limit:
            raise ExtensionLimitExceeded(
                f"more than {limit} {system.value}-extensions, raise --max-extensions"
            )
        yield Extension(sig, tuple(model[1 : count + 1]))


def derives(
    gamma: Sequence[Formula],
    phi: Formula,
    system: AxiomSystem,
    sig: Optional[Signature] = None,
) -> bool:
    sig = resolve_signature(list(gamma) + [phi], sig)
    return not consistent(list(gamma) + [Not(phi)], system, sig).consistent


def validate_extension(e: Extension, system: AxiomSystem):
    for instance in instantiate_axioms(e.sig):
        if all(e.holds(a) for a in instance.antecedents) and not e.holds(instance.consequent):
            raise InvalidExtension(f"violates {instance.render()}")
    if system == AxiomSystem.UNIQ:
        return
    theory = _theory(e.sig, system)
    values = [None] + list(e.values)
    if theory(values, True) is not None:
        raise InvalidExtension(f"not a {system.value}-extension")


def extended_left_intersection(
    sig: Signature,
    t: Sequence[str],
    x: Sequence[str],
    w: Sequence[str],
    y: Sequence[str],
    z: Sequence[str] = (),
) -> Tuple[List[Formula], Formula]:
    """(TX ↛ Y|ZW) & (TW ↛ Y|ZX) => (TXW ↛ Y|Z), a theorem of the uniq system."""
    t, x, w, y, z = (list(part) for part in (t, x, w, y, z))
    antecedents = [
        AtomNode(Atom.of(sig, t + x, y, z + w)),
        AtomNode(Atom.of(sig, t + w, y, z + x)),
    ]
    return antecedents, AtomNode(Atom.of(sig, t + x + w, y, z))
