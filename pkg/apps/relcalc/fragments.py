import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
from loguru import logger

from calculus import AxiomSystem, Extension, consistent, extensions, resolve_signature
from errors import InconsistentTheory, PreconditionViolation, WitnessError
from language import Atom, AtomNode, Formula, Literal, Signature, VarSet, enumerate_atoms, submasks
from scm import CausalModel, Digraph, Equation, Rule, direct_sum
from semantics import LiteralTheory, theory_literals


@dataclass(frozen=True)
class Fragment:
    sig: Signature
    graph: Digraph
    anchor: Tuple[str, str, VarSet]
    path: Tuple[str, ...] = ()

    @property
    def anchor_atom(self) -> Atom:
        x, y, z = self.anchor
        return Atom(self.sig.varset([x]), self.sig.varset([y]), z)

    def render(self) -> str:
        x, y, z = self.anchor
        return f"anchor: {x} {y} | {z.render()}\n" + self.graph.render()


def _path(g: nx.DiGraph, u: str, v: str) -> Optional[List[str]]:
    # a single-connected graph has at most one directed path between two vertices
    try:
        return nx.shortest_path(g, u, v)
    except nx.NetworkXNoPath:
        return None


def _intercepted(path: Sequence[str], t_mask: int, sig: Signature) -> bool:
    return any(t_mask >> sig.position(w) & 1 for w in path[1:-1])


def _is_single_connected_dag(g: nx.DiGraph) -> bool:
    return nx.is_directed_acyclic_graph(g) and nx.is_forest(g.to_undirected())


def _fragment_path(
    g: Digraph, e: Extension, x: str, y: str, z: VarSet
) -> Optional[Tuple[str, ...]]:
    """The distinguished x ⇝ y path when g is a fragment for (x, y | z), else None."""
    sig = e.sig
    ng = g.to_networkx()
    if not _is_single_connected_dag(ng):
        return None

    path = _path(ng, x, y) if x != y else None
    if not e.holds(Atom(sig.varset([x]), sig.varset([y]), z)):
        if path is None or _intercepted(path, z.mask, sig):
            return None
    on_path = set(path or ())

    # every vertex with a parent lies on the distinguished path
    if any(ng.in_degree(v) > 0 and v not in on_path for v in ng.nodes):
        return None

    for u, v in itertools.permutations(sig.variables, 2):
        route = _path(ng, u, v)
        if route is None:
            continue
        um, vm = sig.mask([u]), sig.mask([v])
        rest = sig.full_mask & ~(um | vm)
        for t in submasks(rest):
            if e.holds_masks(um, vm, t) and not _intercepted(route, t, sig):
                return None
        if not _separated_by_ancestors(ng, e, u, v, route):
            return None
    return tuple(path or ())


def _separated_by_ancestors(ng: nx.DiGraph, e: Extension, u: str, v: str, route) -> bool:
    # for minimal S with (u ↛ vS | T), T intercepts u ⇝ v or some member of S
    # reaches v without passing through u and off the route
    sig = e.sig
    um, vm = sig.mask([u]), sig.mask([v])
    rest = sig.full_mask & ~(um | vm)
    ancestors = nx.ancestors(ng, v)
    helpers = 0
    for s in ancestors:
        if s in route:
            continue
        if u in _path(ng, s, v):
            continue
        helpers |= sig.mask([s])

    for s_mask in submasks(rest):
        if s_mask == 0:
            continue
        for t in submasks(rest & ~s_mask):
            if not e.holds_masks(um, vm | s_mask, t):
                continue
            if any(
                e.holds_masks(um, vm | smaller, t)
                for smaller in submasks(s_mask)
                if smaller != s_mask
            ):
                continue
            if _intercepted(route, t, sig):
                continue
            if not s_mask & helpers:
                return False
    return True


def is_fragment(g: Digraph, e: Extension, x: str, y: str, z: VarSet) -> bool:
    return _fragment_path(g, e, x, y, z) is not None


def _candidate_graphs(e: Extension, x: str, y: str, z: VarSet) -> Iterator[Digraph]:
    sig = e.sig
    g = e.graph.to_networkx()
    g.remove_nodes_from(z.names)
    paths = sorted(
        nx.all_simple_paths(g, x, y), key=lambda p: (len(p), [sig.position(v) for v in p])
    )
    full = e.graph.edges
    for path in paths:
        path_edges = set(zip(path, path[1:]))
        off_path = [v for v in sig.variables if v not in path]
        options = [[None] + [t for t in path if (v, t) in full] for v in off_path]
        for targets in itertools.product(*options):
            attached = {(v, t) for v, t in zip(off_path, targets) if t is not None}
            yield Digraph.of(sig, path_edges | attached)


def iter_fragments(
    e: Extension, x: str, y: str, z: VarSet, avoid: Optional[VarSet] = None
) -> Iterator[Fragment]:
    """Every fragment for (x, y | z) inside the syntactic graph, in canonical order."""
    sig = e.sig
    anchor = (x, y, z)
    if e.holds(Atom(sig.varset([x]), sig.varset([y]), z)):
        empty = Digraph.of(sig)
        if _fragment_path(empty, e, x, y, z) is not None:
            yield Fragment(sig, empty, anchor)
        return
    for graph in _candidate_graphs(e, x, y, z):
        path = _fragment_path(graph, e, x, y, z)
        if path is None:
            continue
        if avoid is not None:
            ancestors = nx.ancestors(graph.to_networkx(), y)
            if any(w in ancestors for w in avoid):
                continue
        yield Fragment(sig, graph, anchor, path)


def find_fragment(
    e: Extension, x: str, y: str, z: VarSet, avoid: Optional[VarSet] = None
) -> Optional[Fragment]:
    return next(iter_fragments(e, x, y, z, avoid), None)


def fragment_model(f: Fragment) -> CausalModel:
    """
    Max/zero model of a fragment: a variable is 0 when some parent is 0 and the
    largest parent value otherwise. Roots are constant 0 (empty max).
    """
    sig = f.sig
    n = sig.size
    values = tuple(str(v) for v in range(n + 1))
    fsig = Signature(sig.variables, tuple(values for _ in sig.variables))
    parents: Dict[str, List[int]] = {v: [] for v in sig.variables}
    for a, b in f.graph.edges:
        parents[b].append(sig.position(a))

    equations = []
    for name in sig.variables:
        ps = sorted(parents[name])
        rules = [Rule(((p, "0"),), "0") for p in ps]
        # no parent is 0 past this point, the first hit going down is the max
        for value in range(n, 0, -1):
            rules += [Rule(((p, str(value)),), str(value)) for p in ps]
        equations.append(Equation(tuple(rules), "0"))
    return CausalModel(fsig, ("u",), tuple(equations))


@dataclass(frozen=True)
class Foliation:
    phi: Literal
    extension: Extension


def _top_level_literals(gamma: Sequence[Formula]) -> List[Literal]:
    literals = []
    for f in gamma:
        lit = Literal.from_formula(f)
        if lit is not None:
            literals.append(lit)
    return literals


def foliation(
    gamma: Sequence[Formula], phi: Literal, extension: Optional[Extension] = None
) -> Foliation:
    if phi.positive:
        raise PreconditionViolation(f"{phi.render()} is not a negative literal")
    if extension is None:
        if phi not in _top_level_literals(gamma):
            raise PreconditionViolation(f"{phi.render()} is not a negative literal of the theory")
        sig = resolve_signature(gamma, None)
        result = consistent(gamma, AxiomSystem.REC, sig)
        if not result.consistent:
            raise InconsistentTheory("the theory is not rec-consistent")
        extension = result.witness
    elif extension.holds(phi.atom):
        raise PreconditionViolation(f"{phi.render()} is not a negative literal of the extension")

    sig = extension.sig
    current: List[Formula] = [phi.formula()] + [AtomNode(a) for a in extension.positives()]
    result = consistent(current, AxiomSystem.SREC, sig)
    if not result.consistent:
        raise InconsistentTheory(
            f"{phi.render()} with the positive literals has no strong-recursive extension"
        )
    witness = result.witness
    for a in enumerate_atoms(sig):
        if witness.holds(a):
            current.append(AtomNode(a))
            continue
        attempt = consistent(current + [AtomNode(a)], AxiomSystem.SREC, sig)
        if attempt.consistent:
            current.append(AtomNode(a))
            witness = attempt.witness
        else:
            current.append(Literal(a, False).formula())
    logger.debug(f"foliation for {phi.render()} has {len(witness.negatives())} negatives")
    return Foliation(phi, witness)


class _Summands:
    """Fragment models chosen so far, with their literal theories."""

    def __init__(self, e: Extension, cache: Optional[Dict] = None):
        self.e = e
        self.positives = e.positives()
        self.models: List[CausalModel] = []
        self.theories: List[LiteralTheory] = []
        self.edge_sets: List[FrozenSet] = []
        # keyed by edge set, valid across extensions
        self._cache: Dict[FrozenSet, Tuple[CausalModel, LiteralTheory]] = (
            {} if cache is None else cache
        )

    def evaluate(self, f: Fragment) -> Tuple[CausalModel, LiteralTheory]:
        key = f.graph.edges
        if key not in self._cache:
            m = fragment_model(f)
            self._cache[key] = (m, theory_literals(m))
        return self._cache[key]

    def witnessed(self, a: Atom) -> bool:
        return any(not t.verdict(a) for t in self.theories)

    def _candidates(
        self, x: str, y: str, z: VarSet, avoid: Optional[VarSet]
    ) -> Iterator[Fragment]:
        yield from iter_fragments(self.e, x, y, z, avoid)
        if avoid is not None:
            return
        # shapes failing the fragment check come last, held to the same acceptance test
        for graph in _candidate_graphs(self.e, x, y, z):
            yield Fragment(self.e.sig, graph, (x, y, z))

    def try_anchor(
        self, x: str, y: str, z: VarSet, target: Atom, avoid: Optional[VarSet] = None
    ) -> bool:
        for f in self._candidates(x, y, z, avoid):
            m, t = self.evaluate(f)
            if t.verdict(target) or not all(t.verdict(p) for p in self.positives):
                continue
            if f.graph.edges not in self.edge_sets:
                logger.debug(f"fragment {f.graph.sorted_edges()} witnesses {target.render()}")
                self.models.append(m)
                self.theories.append(t)
                self.edge_sets.append(f.graph.edges)
            return True
        return False


def _maximal_anchors(e: Extension) -> Iterator[Tuple[str, str, VarSet]]:
    sig = e.sig
    for u, v in itertools.permutations(sig.variables, 2):
        um, vm = sig.mask([u]), sig.mask([v])
        rest = sig.full_mask & ~(um | vm)
        negative = [t for t in submasks(rest) if not e.holds_masks(um, vm, t)]
        for t in negative:
            if not any(s != t and t & ~s == 0 for s in negative):
                yield u, v, VarSet(sig, t)


def _search_anchors(a: Atom) -> Iterator[Tuple[str, str, VarSet, Optional[VarSet]]]:
    """
    Single-variable anchors that may witness a, widest conditioning sets last.
    For a right-hand side with several variables the others are first asked to
    stay out of the ancestors of the anchor target.
    """
    sig = a.sig
    for u in a.x:
        for v in a.y:
            um, vm = sig.mask([u]), sig.mask([v])
            others = a.y.mask & ~vm
            free = sig.full_mask & ~(um | vm | a.z.mask)
            for extra in submasks(free):
                t = VarSet(sig, a.z.mask | extra)
                if others and not extra & others:
                    yield u, v, t, VarSet(sig, others)
                yield u, v, t, None


def _srec_summands(e: Extension, cache: Optional[Dict] = None) -> _Summands:
    summands = _Summands(e, cache)
    sig = e.sig
    for u, v, t in _maximal_anchors(e):
        target = Atom(sig.varset([u]), sig.varset([v]), t)
        if not summands.witnessed(target) and not summands.try_anchor(u, v, t, target):
            logger.debug(f"no accepted fragment at maximal anchor {target.render()}")

    for a in e.negatives():
        if summands.witnessed(a):
            continue
        if not any(
            not e.holds(Atom(sig.varset([u]), sig.varset([v]), t))
            and summands.try_anchor(u, v, t, a, avoid)
            for u, v, t, avoid in _search_anchors(a)
        ):
            raise WitnessError(f"no fragment model witnesses {a.render()}")
    if not summands.models:
        anchor = (sig.variables[0], sig.variables[-1], VarSet(sig, 0))
        empty = Fragment(sig, Digraph.of(sig), anchor)
        m = fragment_model(empty)
        summands.models.append(m)
        summands.theories.append(theory_literals(m))
    return summands


def srec_witness(e: Extension, cache: Optional[Dict] = None) -> CausalModel:
    summands = _srec_summands(e, cache)
    logger.info(f"strong-recursive witness with {len(summands.models)} contexts")
    return direct_sum(summands.models)


def rec_witness(
    gamma: Sequence[Formula], e: Extension, cache: Optional[Dict] = None
) -> CausalModel:
    models: List[CausalModel] = []
    theories: List[LiteralTheory] = []
    for a in e.negatives():
        if any(not t.verdict(a) for t in theories):
            continue
        try:
            leaf = foliation(gamma, Literal(a, False), extension=e)
        except InconsistentTheory as err:
            raise WitnessError(str(err))
        summands = _srec_summands(leaf.extension, cache)
        models += summands.models
        theories += summands.theories
    if not models:
        return srec_witness(e, cache)
    logger.info(f"recursive witness with {len(models)} contexts")
    return direct_sum(models)


def witness_model(
    gamma: Sequence[Formula],
    system: AxiomSystem,
    sig: Optional[Signature] = None,
    max_extensions: Optional[int] = None,
) -> CausalModel:
    """
    A model satisfying gamma, built from the first extension in canonical order
    whose fragments assemble into one. Raises InconsistentTheory when there is
    no extension and WitnessError when none of them assembles.
    """
    if system == AxiomSystem.UNIQ:
        raise PreconditionViolation("witness models are built for the srec and rec systems")
    sig = resolve_signature(gamma, sig)
    cache: Dict = {}
    tried = 0
    for e in extensions(gamma, system, sig, limit=max_extensions):
        tried += 1
        try:
            if system == AxiomSystem.SREC:
                return srec_witness(e, cache)
            return rec_witness(gamma, e, cache)
        except WitnessError as err:
            logger.debug(f"{system.value}-extension {tried} skipped: {err}")
    if tried == 0:
        raise InconsistentTheory(f"the theory is not {system.value}-consistent")
    raise WitnessError(f"none of the {tried} {system.value}-extensions assembles a witness")
