from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from loguru import logger

from calculus import (
    AxiomSystem,
    consistent,
    derives,
    edge_atom,
    extensions,
    resolve_signature,
)
from errors import InconsistentTheory, PreconditionViolation, SchemaError
from language import AtomNode, Formula, Literal, Not, Signature, parse_formula
from scm import Digraph


def identified_graph(
    gamma: Sequence[Formula],
    system: AxiomSystem,
    sig: Optional[Signature] = None,
    exhaustive: bool = False,
    max_extensions: Optional[int] = None,
) -> Digraph:
    """Edges present in the syntactic graph of every extension of gamma."""
    sig = resolve_signature(gamma, sig)
    if not consistent(gamma, system, sig).consistent:
        raise InconsistentTheory(f"the theory is not {system.value}-consistent")

    if exhaustive:
        graph = None
        for e in extensions(gamma, system, sig, limit=max_extensions):
            graph = e.graph if graph is None else graph.intersection(e.graph)
        return graph

    # an edge is in every syntactic graph iff its edge atom is derivably false
    edges = []
    for x in sig.variables:
        for y in sig.variables:
            if x != y and derives(gamma, Not(AtomNode(edge_atom(sig, x, y))), system, sig):
                edges.append((x, y))
    return Digraph.of(sig, edges)


@dataclass(frozen=True)
class InfoOption:
    formulas: Tuple[Formula, ...]
    cost: Fraction


@dataclass(frozen=True, order=True)
class PonderedCost:
    infinite: bool
    value: Fraction = Fraction(0)

    def render(self) -> str:
        return "inf" if self.infinite else str(self.value)


def pondered_cost(cost: Fraction, new_edges: int) -> PonderedCost:
    if new_edges == 0:
        return PonderedCost(True)
    return PonderedCost(False, Fraction(cost) / new_edges)


@dataclass(frozen=True)
class RankedOption:
    index: int
    option: InfoOption
    new_edges: int
    cost: PonderedCost


def load_options(document, sig: Signature) -> List[InfoOption]:
    if not isinstance(document, list):
        raise SchemaError("options must be a list")
    options = []
    for entry in document:
        if not isinstance(entry, dict) or set(entry) != {"formulas", "cost"}:
            raise SchemaError("every option needs exactly the fields formulas and cost")
        cost = entry["cost"]
        if isinstance(cost, bool) or not isinstance(cost, (int, float)) or cost < 0:
            raise SchemaError(f"option cost must be a non-negative number, got {cost!r}")
        formulas = tuple(parse_formula(text, sig) for text in entry["formulas"])
        options.append(InfoOption(formulas, Fraction(str(cost))))
    return options


def rank_options(
    gamma: Sequence[Formula],
    options: Sequence[InfoOption],
    system: AxiomSystem,
    sig: Optional[Signature] = None,
) -> List[RankedOption]:
    sig = resolve_signature(list(gamma) + [f for o in options for f in o.formulas], sig)
    base = identified_graph(gamma, system, sig)
    base_texts = {f.render() for f in gamma}

    ranked = []
    for i, option in enumerate(options, start=1):
        missing = base_texts - {f.render() for f in option.formulas}
        if missing:
            raise PreconditionViolation(f"option {i} does not contain {sorted(missing)}")
        try:
            graph = identified_graph(option.formulas, system, sig)
        except InconsistentTheory:
            raise InconsistentTheory(f"option {i} is not {system.value}-consistent")
        new_edges = len(graph.edges - base.edges)
        ranked.append(RankedOption(i, option, new_edges, pondered_cost(option.cost, new_edges)))
        logger.debug(f"option {i}: {new_edges} new edges at cost {option.cost}")
    return sorted(ranked, key=lambda r: (r.cost, r.index))


class Recursiveness(Enum):
    POSSIBLY_RECURSIVE = "PossiblyRecursive"
    NON_RECURSIVE = "NonRecursive"


def recursiveness_test(gamma: Sequence[Formula], sig: Optional[Signature] = None) -> Recursiveness:
    if not gamma and sig is None:
        return Recursiveness.POSSIBLY_RECURSIVE
    if consistent(gamma, AxiomSystem.REC, sig).consistent:
        return Recursiveness.POSSIBLY_RECURSIVE
    return Recursiveness.NON_RECURSIVE


def pruning_constraints(gamma: Sequence[Formula]) -> List[dict]:
    """One path obligation per negative literal: some path from -> to avoids `avoid`."""
    constraints = []
    for f in gamma:
        lit = Literal.from_formula(f)
        if lit is None or lit.positive:
            continue
        a = lit.atom
        constraints.append(
            {"from": list(a.x.names), "to": list(a.y.names), "avoid": list(a.z.names)}
        )
    return constraints
