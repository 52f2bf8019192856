import concurrent.futures
import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
from loguru import logger

from errors import (
    DomainError,
    NotUnique,
    SchemaError,
    SelfReference,
    SignatureMismatch,
    UnknownContext,
    UnknownVariable,
)
from language import Signature

CONTEXT_KEY = "_ctx"

# a partial assignment keyed by variable position, sorted by position
Overrides = Tuple[Tuple[int, str], ...]


@dataclass(frozen=True)
class Rule:
    when: Tuple[Tuple[int, str], ...]
    then: str
    ctx: Optional[str] = None


@dataclass(frozen=True)
class Equation:
    rules: Tuple[Rule, ...]
    default: str

    @classmethod
    def constant(cls, value: str) -> "Equation":
        return cls((), value)

    def evaluate(self, values: Sequence[Optional[str]], u: str) -> Optional[str]:
        """
        First-match evaluation over a possibly partial assignment. Returns None
        when the output depends on a variable that is still unassigned.
        """
        for rule in self.rules:
            if rule.ctx is not None and rule.ctx != u:
                continue
            undecided = False
            matched = True
            for i, value in rule.when:
                current = values[i]
                if current is None:
                    undecided = True
                elif current != value:
                    matched = False
                    break
            if not matched:
                continue
            if undecided:
                return None
            return rule.then
        return self.default


@dataclass(frozen=True)
class Unique:
    assignment: Dict[str, str]


@dataclass(frozen=True)
class NoSolution:
    pass


@dataclass(frozen=True)
class Multiple:
    count: int


@dataclass(frozen=True)
class CausalModel:
    sig: Signature
    contexts: Tuple[str, ...]
    equations: Tuple[Equation, ...]
    # memoized potential responses and sweep verdicts, models never change
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def require_context(self, u: str):
        if u not in self.contexts:
            raise UnknownContext(f"unknown context {u!r}, model has {list(self.contexts)}")

    def respond(self, overrides: Overrides, u: str) -> Tuple[str, ...]:
        """The unique solution of the submodel fixing `overrides`, at context u."""
        key = (overrides, u)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        equations = list(self.equations)
        for i, value in overrides:
            equations[i] = Equation.constant(value)
        solutions = _fixed_points(self.sig, equations, u, limit=2)
        if len(solutions) != 1:
            state = "no solution" if not solutions else "several solutions"
            fixed = {self.sig.variables[i]: v for i, v in overrides}
            raise NotUnique(f"intervention {fixed} at context {u!r} has {state}")
        self._cache[key] = solutions[0]
        return solutions[0]


def _fixed_points(
    sig: Signature, equations: Sequence[Equation], u: str, limit: Optional[int] = None
) -> List[Tuple[str, ...]]:
    solutions = []

    def propagate(values: List[Optional[str]]) -> bool:
        changed = True
        while changed:
            changed = False
            for i, eq in enumerate(equations):
                out = eq.evaluate(values, u)
                if out is None:
                    continue
                if values[i] is None:
                    values[i] = out
                    changed = True
                elif values[i] != out:
                    return False
        return True

    def search(values: List[Optional[str]]):
        if limit is not None and len(solutions) >= limit:
            return
        if not propagate(values):
            return
        try:
            i = values.index(None)
        except ValueError:
            solutions.append(tuple(values))
            return
        for value in sig.domains[i]:
            branch = list(values)
            branch[i] = value
            search(branch)

    search([None] * sig.size)
    return solutions


def _overrides(sig: Signature, x: Dict[str, str]) -> Overrides:
    pairs = []
    for name, value in x.items():
        i = sig.position(name)
        if value not in sig.domains[i]:
            raise DomainError(f"value {value!r} is not in the domain of {name}")
        pairs.append((i, value))
    return tuple(sorted(pairs))


def intervene(m: CausalModel, x: Dict[str, str]) -> CausalModel:
    if not x:
        return m
    equations = list(m.equations)
    for i, value in _overrides(m.sig, x):
        equations[i] = Equation.constant(value)
    return CausalModel(m.sig, m.contexts, tuple(equations))


def solve(m: CausalModel, u: str):
    m.require_context(u)
    solutions = _fixed_points(m.sig, m.equations, u)
    if len(solutions) == 1:
        return Unique(dict(zip(m.sig.variables, solutions[0])))
    if not solutions:
        return NoSolution()
    return Multiple(len(solutions))


def potential_response(
    m: CausalModel, x: Dict[str, str], targets: Iterable[str], u: str
) -> Dict[str, str]:
    m.require_context(u)
    solution = m.respond(_overrides(m.sig, x), u)
    return {name: solution[m.sig.position(name)] for name in targets}


def partial_assignments(sig: Signature) -> Iterator[Overrides]:
    """Every assignment to every subset of the signature, the empty one first."""
    choices = [(None,) + domain for domain in sig.domains]
    for combo in itertools.product(*choices):
        yield tuple((i, v) for i, v in enumerate(combo) if v is not None)


def assignments(sig: Signature, mask: int) -> Iterator[Overrides]:
    positions = [i for i in range(sig.size) if mask >> i & 1]
    for combo in itertools.product(*(sig.domains[i] for i in positions)):
        yield tuple(zip(positions, combo))


def chunks(items: list, jobs: int) -> List[list]:
    size = max(1, -(-len(items) // max(1, jobs)))
    return [items[i : i + size] for i in range(0, len(items), size)]


def _all_unique(m: CausalModel, work: List[Tuple[Overrides, str]]) -> bool:
    for overrides, u in work:
        try:
            m.respond(overrides, u)
        except NotUnique:
            return False
    return True


def check_uniq(m: CausalModel, jobs: int = 1) -> bool:
    cached = m._cache.get("uniq")
    if cached is not None:
        return cached
    work = [(o, u) for o in partial_assignments(m.sig) for u in m.contexts]
    logger.debug(f"checking {len(work)} interventions for unique solutions")
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(_all_unique, m, chunk) for chunk in chunks(work, jobs)]
            result = all(f.result() for f in futures)
    else:
        result = _all_unique(m, work)
    m._cache["uniq"] = result
    return result


def require_uniq(m: CausalModel, jobs: int = 1):
    if not check_uniq(m, jobs):
        raise NotUnique("model is not in T_uniq: some intervention has no unique solution")


@dataclass(frozen=True)
class Digraph:
    vertices: Tuple[str, ...]
    edges: FrozenSet[Tuple[str, str]] = frozenset()

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise SelfReference(f"self-loop on {a}")
            if a not in self.vertices or b not in self.vertices:
                raise UnknownVariable(f"edge {a} -> {b} leaves the vertex set")

    @classmethod
    def of(cls, sig: Signature, edges: Iterable[Tuple[str, str]] = ()) -> "Digraph":
        return cls(sig.variables, frozenset(edges))

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.edges)
        return g

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.to_networkx())

    def issubgraph(self, other: "Digraph") -> bool:
        return self.edges <= other.edges

    def union(self, other: "Digraph") -> "Digraph":
        return Digraph(self.vertices, self.edges | other.edges)

    def intersection(self, other: "Digraph") -> "Digraph":
        return Digraph(self.vertices, self.edges & other.edges)

    def difference(self, other: "Digraph") -> "Digraph":
        return Digraph(self.vertices, self.edges - other.edges)

    def sorted_edges(self) -> List[Tuple[str, str]]:
        order = {v: i for i, v in enumerate(self.vertices)}
        return sorted(self.edges, key=lambda e: (order[e[0]], order[e[1]]))

    def render(self) -> str:
        return "".join(f"{a} -> {b}\n" for a, b in self.sorted_edges())

    def render_dot(self) -> str:
        lines = ["digraph G {"]
        lines += [f'  "{v}";' for v in self.vertices]
        lines += [f'  "{a}" -> "{b}";' for a, b in self.sorted_edges()]
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dependencies(m: CausalModel, y: int, u: str) -> Iterator[int]:
    # extensional: x is an argument of F_y when flipping x alone changes F_y
    sig = m.sig
    others = [i for i in range(sig.size) if i != y]
    eq = m.equations[y]
    table = {}
    for combo in itertools.product(*(sig.domains[i] for i in others)):
        values: List[Optional[str]] = [None] * sig.size
        for i, v in zip(others, combo):
            values[i] = v
        table[combo] = eq.evaluate(values, u)
    for k, x in enumerate(others):
        first = sig.domains[x][0]
        for combo, out in table.items():
            if table[combo[:k] + (first,) + combo[k + 1 :]] != out:
                yield x
                break


def semantic_graph(m: CausalModel, u: Optional[str] = None) -> Digraph:
    """G(T, u), or G(T) as the union over all contexts when u is None."""
    if u is not None:
        m.require_context(u)
    contexts = m.contexts if u is None else (u,)
    names = m.sig.variables
    edges = set()
    for c in contexts:
        for y in range(m.sig.size):
            for x in _dependencies(m, y, c):
                edges.add((names[x], names[y]))
    return Digraph.of(m.sig, edges)


class ModelClass(Enum):
    NOT_UNIQ = "NotUniq"
    UNIQ_ONLY = "UniqOnly"
    RECURSIVE = "Recursive"
    STRONG_RECURSIVE = "StrongRecursive"


def classify(m: CausalModel, jobs: int = 1) -> ModelClass:
    if not check_uniq(m, jobs):
        return ModelClass.NOT_UNIQ
    if semantic_graph(m).is_acyclic():
        return ModelClass.STRONG_RECURSIVE
    if all(semantic_graph(m, u).is_acyclic() for u in m.contexts):
        return ModelClass.RECURSIVE
    return ModelClass.UNIQ_ONLY


def direct_sum(models: Sequence[CausalModel]) -> CausalModel:
    if not models:
        raise SchemaError("direct sum needs at least one model")
    sig = models[0].sig
    for m in models[1:]:
        if m.sig != sig:
            raise SignatureMismatch(
                f"cannot sum models over {list(sig.variables)} and {list(m.sig.variables)}"
            )

    contexts = []
    rules: List[List[Rule]] = [[] for _ in range(sig.size)]
    for i, m in enumerate(models, start=1):
        for u in m.contexts:
            tag = f"{i}:{u}"
            contexts.append(tag)
            for y, eq in enumerate(m.equations):
                for rule in eq.rules:
                    if rule.ctx is None or rule.ctx == u:
                        rules[y].append(Rule(rule.when, rule.then, tag))
                rules[y].append(Rule((), eq.default, tag))

    defaults = [eq.default for eq in models[0].equations]
    equations = tuple(Equation(tuple(r), d) for r, d in zip(rules, defaults))
    return CausalModel(sig, tuple(contexts), equations)


def check_composition(m: CausalModel) -> List[Tuple[Dict[str, str], Tuple[str, ...], str]]:
    """
    Violations of composition: fixing W to the values it takes under x must not
    change any other response under x. Requires a model in T_uniq.
    """
    require_uniq(m)
    sig = m.sig
    violations = []
    for overrides in partial_assignments(sig):
        fixed = 0
        for i, _ in overrides:
            fixed |= 1 << i
        free = sig.full_mask & ~fixed
        for u in m.contexts:
            base = m.respond(overrides, u)
            w_mask = free
            while w_mask:
                pinned = tuple((i, base[i]) for i in range(sig.size) if w_mask >> i & 1)
                extended = tuple(sorted(overrides + pinned))
                if m.respond(extended, u) != base:
                    x = {sig.variables[i]: v for i, v in overrides}
                    violations.append((x, sig.names(w_mask), u))
                w_mask = (w_mask - 1) & free
    return violations


def constant_model(sig: Signature, contexts: Tuple[str, ...] = ("u",)) -> CausalModel:
    equations = tuple(Equation.constant(domain[0]) for domain in sig.domains)
    return CausalModel(sig, contexts, equations)


# model documents

def _require_string(value, what: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{what} must be a string, got {value!r}")
    return value


def _require_keys(obj, allowed: set, required: set, what: str):
    if not isinstance(obj, dict):
        raise SchemaError(f"{what} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"unknown fields in {what}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SchemaError(f"missing fields in {what}: {sorted(missing)}")


def load_model(document) -> CausalModel:
    keys = {"variables", "contexts", "equations"}
    _require_keys(document, keys, keys, "model")

    if not isinstance(document["variables"], list) or not document["variables"]:
        raise SchemaError("variables must be a non-empty list")
    names, domains = [], []
    for entry in document["variables"]:
        _require_keys(entry, {"name", "domain"}, {"name", "domain"}, "variable")
        names.append(_require_string(entry["name"], "variable name"))
        if not isinstance(entry["domain"], list):
            raise SchemaError(f"domain of {entry['name']} must be a list")
        domains.append(tuple(_require_string(v, "domain value") for v in entry["domain"]))
    sig = Signature(tuple(names), tuple(domains))

    contexts = document["contexts"]
    if not isinstance(contexts, list) or not contexts:
        raise SchemaError("contexts must be a non-empty list")
    contexts = tuple(_require_string(u, "context") for u in contexts)
    if len(set(contexts)) != len(contexts):
        raise SchemaError("contexts must be distinct")

    table = document["equations"]
    if not isinstance(table, dict):
        raise SchemaError("equations must be an object keyed by variable")
    for name in table:
        sig.position(name)
    missing = [v for v in sig.variables if v not in table]
    if missing:
        raise SchemaError(f"no equation for {missing}")

    equations = []
    for y, name in enumerate(sig.variables):
        spec = table[name]
        _require_keys(spec, {"rules", "default"}, {"default"}, f"equation of {name}")
        default = _require_string(spec["default"], f"default of {name}")
        if default not in sig.domains[y]:
            raise DomainError(f"default {default!r} of {name} is outside its domain")
        rules = []
        for rule in spec.get("rules", []):
            rules.append(_load_rule(sig, contexts, y, rule))
        equations.append(Equation(tuple(rules), default))

    logger.debug(f"loaded model over {list(sig.variables)} with {len(contexts)} contexts")
    return CausalModel(sig, contexts, tuple(equations))


def _load_rule(sig: Signature, contexts: Tuple[str, ...], y: int, rule) -> Rule:
    name = sig.variables[y]
    _require_keys(rule, {"when", "then"}, {"then"}, f"rule of {name}")
    then = _require_string(rule["then"], f"rule value of {name}")
    if then not in sig.domains[y]:
        raise DomainError(f"rule value {then!r} of {name} is outside its domain")
    when = rule.get("when", {})
    if not isinstance(when, dict):
        raise SchemaError(f"condition of a rule of {name} must be an object")
    ctx = None
    conditions = []
    for key, value in when.items():
        value = _require_string(value, f"condition value of {key}")
        if key == CONTEXT_KEY:
            if value not in contexts:
                raise UnknownContext(f"rule of {name} names unknown context {value!r}")
            ctx = value
            continue
        i = sig.position(key)
        if i == y:
            raise SelfReference(f"a rule of {name} conditions on {name} itself")
        if value not in sig.domains[i]:
            raise DomainError(f"condition {key}={value!r} is outside the domain of {key}")
        conditions.append((i, value))
    return Rule(tuple(sorted(conditions)), then, ctx)


def read_model(path: str) -> CausalModel:
    with open(path, encoding="utf-8") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path} is not valid JSON: {e}")
    return load_model(document)


def dump_model(m: CausalModel) -> dict:
    sig = m.sig
    equations = {}
    for name, eq in zip(sig.variables, m.equations):
        rules = []
        for rule in eq.rules:
            when = {sig.variables[i]: v for i, v in rule.when}
            if rule.ctx is not None:
                when[CONTEXT_KEY] = rule.ctx
            rules.append({"when": when, "then": rule.then})
        equations[name] = {"rules": rules, "default": eq.default}
    return {
        "variables": [
            {"name": name, "domain": list(domain)}
            for name, domain in zip(sig.variables, sig.domains)
        ],
        "contexts": list(m.contexts),
        "equations": equations,
    }
