import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import pyparsing as pp

from errors import (
    FormulaSyntaxError,
    InputError,
    MalformedAtom,
    SignatureMismatch,
    SignatureTooLarge,
    UnknownVariable,
)

pp.ParserElement.enable_packrat()

BINARY_DOMAIN = ("0", "1")


@dataclass(frozen=True)
class Signature:
    """
    The finite set of endogenous variables a theory talks about, with the
    finite domain of every variable. Domain values are opaque strings.
    """

    variables: Tuple[str, ...]
    domains: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.variables) != len(self.domains):
            raise InputError("every variable needs exactly one domain")
        if len(set(self.variables)) != len(self.variables):
            raise InputError(f"duplicate variable names in {list(self.variables)}")
        for name, domain in zip(self.variables, self.domains):
            if not name:
                raise InputError("variable names must be non-empty")
            if len(domain) == 0:
                raise InputError(f"domain of {name} is empty")
            if len(set(domain)) != len(domain):
                raise InputError(f"domain of {name} has repeated values")

    @classmethod
    def of(cls, names: Sequence[str], domain: Sequence[str] = BINARY_DOMAIN) -> "Signature":
        return cls(tuple(names), tuple(tuple(domain) for _ in names))

    def __hash__(self):
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.variables, self.domains))

    @cached_property
    def index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.variables)}

    @property
    def size(self) -> int:
        return len(self.variables)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def domain(self, name: str) -> Tuple[str, ...]:
        return self.domains[self.position(name)]

    def position(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r}, signature is {list(self.variables)}")

    def mask(self, names: Iterable[str]) -> int:
        m = 0
        for name in names:
            m |= 1 << self.position(name)
        return m

    def names(self, mask: int) -> Tuple[str, ...]:
        return tuple(v for i, v in enumerate(self.variables) if mask >> i & 1)

    def varset(self, names: Iterable[str]) -> "VarSet":
        return VarSet(self, self.mask(names))

    def check_size(self, limit: int):
        if self.size > limit:
            raise SignatureTooLarge(
                f"signature has {self.size} variables, the limit is {limit} "
                "(raise it with --max-variables or RELCALC_MAX_VARIABLES)"
            )


def require_same_signature(left: Signature, right: Signature):
    if left.variables != right.variables:
        raise SignatureMismatch(
            f"signatures differ: {list(left.variables)} vs {list(right.variables)}"
        )


@dataclass(frozen=True)
class VarSet:
    sig: Signature
    mask: int

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __contains__(self, name: str) -> bool:
        return bool(self.mask >> self.sig.position(name) & 1)

    def __or__(self, other: "VarSet") -> "VarSet":
        return VarSet(self.sig, self.mask | other.mask)

    def __and__(self, other: "VarSet") -> "VarSet":
        return VarSet(self.sig, self.mask & other.mask)

    def __sub__(self, other: "VarSet") -> "VarSet":
        return VarSet(self.sig, self.mask & ~other.mask)

    def complement(self) -> "VarSet":
        return VarSet(self.sig, self.sig.full_mask & ~self.mask)

    def issubset(self, other: "VarSet") -> bool:
        return self.mask & ~other.mask == 0

    def is_empty(self) -> bool:
        return self.mask == 0

    @property
    def names(self) -> Tuple[str, ...]:
        return self.sig.names(self.mask)

    def render(self) -> str:
        return ",".join(self.names)


@dataclass(frozen=True)
class Atom:
    """(x ↛ y | z): once z is fixed, x has no influence on y."""

    x: VarSet
    y: VarSet
    z: VarSet

    def __post_init__(self):
        if not (self.x.sig is self.y.sig is self.z.sig):
            require_same_signature(self.x.sig, self.y.sig)
            require_same_signature(self.x.sig, self.z.sig)
        if self.x.is_empty() or self.y.is_empty():
            raise MalformedAtom(f"{self.render()}: first and second sets must be non-empty")
        if self.x.mask & self.y.mask or self.x.mask & self.z.mask or self.y.mask & self.z.mask:
            raise MalformedAtom(f"{self.render()}: the three sets must be pairwise disjoint")

    @classmethod
    def of(
        cls, sig: Signature, xs: Iterable[str], ys: Iterable[str], zs: Iterable[str] = ()
    ) -> "Atom":
        return cls(sig.varset(xs), sig.varset(ys), sig.varset(zs))

    @classmethod
    def from_masks(cls, sig: Signature, x: int, y: int, z: int) -> "Atom":
        return cls(VarSet(sig, x), VarSet(sig, y), VarSet(sig, z))

    @property
    def sig(self) -> Signature:
        return self.x.sig

    @property
    def masks(self) -> Tuple[int, int, int]:
        return (self.x.mask, self.y.mask, self.z.mask)

    @property
    def rest(self) -> VarSet:
        return VarSet(self.sig, self.sig.full_mask & ~(self.x.mask | self.y.mask | self.z.mask))

    def sort_key(self) -> Tuple[int, int, int]:
        return self.masks

    def render(self) -> str:
        return f"irr({self.x.render()}; {self.y.render()}; {self.z.render()})"

    def __str__(self):
        return self.render()


class Formula:
    def evaluate(self, truth: Callable[[Atom], bool]) -> bool:
        raise NotImplementedError

    def atoms(self) -> Iterator[Atom]:
        raise NotImplementedError

    def render(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.render()


@dataclass(frozen=True)
class AtomNode(Formula):
    atom: Atom

    def evaluate(self, truth):
        return truth(self.atom)

    def atoms(self):
        yield self.atom

    def render(self):
        return self.atom.render()


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula

    def evaluate(self, truth):
        return not self.sub.evaluate(truth)

    def atoms(self):
        yield from self.sub.atoms()

    def render(self):
        return "!" + self.sub.render()


@dataclass(frozen=True)
class _Binary(Formula):
    left: Formula
    right: Formula
    symbol = ""

    def atoms(self):
        yield from self.left.atoms()
        yield from self.right.atoms()

    def render(self):
        return f"({self.left.render()} {self.symbol} {self.right.render()})"


@dataclass(frozen=True)
class And(_Binary):
    symbol = "&"

    def evaluate(self, truth):
        return self.left.evaluate(truth) and self.right.evaluate(truth)


@dataclass(frozen=True)
class Or(_Binary):
    symbol = "|"

    def evaluate(self, truth):
        return self.left.evaluate(truth) or self.right.evaluate(truth)


@dataclass(frozen=True)
class Implies(_Binary):
    symbol = "=>"

    # material implication
    def evaluate(self, truth):
        return (not self.left.evaluate(truth)) or self.right.evaluate(truth)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def formula(self) -> Formula:
        node = AtomNode(self.atom)
        return node if self.positive else Not(node)

    def render(self) -> str:
        return self.formula().render()

    def __str__(self):
        return self.render()

    @staticmethod
    def from_formula(f: Formula) -> Optional["Literal"]:
        positive = True
        while isinstance(f, Not):
            positive = not positive
            f = f.sub
        if isinstance(f, AtomNode):
            return Literal(f.atom, positive)
        return None


def render_formula(f: Formula) -> str:
    return f.render()


# grammar

@dataclass(frozen=True)
class _RawAtom:
    xs: Tuple[str, ...]
    ys: Tuple[str, ...]
    zs: Tuple[str, ...]
    loc: int = field(compare=False, default=0)


def _make_raw_atom(s, loc, tokens):
    xs, ys, zs = tokens
    return _RawAtom(tuple(xs), tuple(ys), tuple(zs), loc)


NAME = pp.Word(pp.alphas + "_", pp.alphanums + "_'")
LPAR, RPAR, SEMI = map(pp.Suppress, "();")
varlist = pp.Group(pp.Optional(pp.DelimitedList(NAME)))
atom_expr = (
    pp.Keyword("irr").suppress() + LPAR + varlist + SEMI + varlist + SEMI + varlist + RPAR
).set_parse_action(_make_raw_atom)

formula_expr = pp.infix_notation(
    atom_expr,
    [
        (pp.Literal("!"), 1, pp.OpAssoc.RIGHT),
        (pp.Literal("&"), 2, pp.OpAssoc.LEFT),
        (pp.Literal("|"), 2, pp.OpAssoc.LEFT),
        (pp.Literal("=>"), 2, pp.OpAssoc.RIGHT),
    ],
)

_CONNECTIVES = {"&": And, "|": Or}


def _parse_raw(text: str):
    try:
        return formula_expr.parse_string(text, parse_all=True)[0]
    except pp.ParseException as e:
        raise FormulaSyntaxError(f"{e.msg} in {text!r}", e.loc, e.msg)


def _build(node, sig: Signature) -> Formula:
    if isinstance(node, _RawAtom):
        return AtomNode(Atom.of(sig, node.xs, node.ys, node.zs))

    tokens = list(node)
    if tokens[0] == "!":
        negations = 0
        while tokens and tokens[0] == "!":
            negations += 1
            tokens = tokens[1:]
        f = _build(tokens[0], sig)
        for _ in range(negations):
            f = Not(f)
        return f

    operands = [_build(t, sig) for t in tokens[::2]]
    ops = tokens[1::2]
    if ops[0] == "=>":
        f = operands[-1]
        for operand in reversed(operands[:-1]):
            f = Implies(operand, f)
        return f
    f = operands[0]
    for op, operand in zip(ops, operands[1:]):
        f = _CONNECTIVES[op](f, operand)
    return f


def parse_formula(text: str, sig: Signature) -> Formula:
    return _build(_parse_raw(text), sig)


def _raw_atoms(node) -> Iterator[_RawAtom]:
    if isinstance(node, _RawAtom):
        yield node
    elif isinstance(node, pp.ParseResults):
        for t in node:
            yield from _raw_atoms(t)


def _natural_key(name: str):
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", name)]


def scan_variables(texts: Iterable[str]) -> List[str]:
    """Variable names used by the given formula texts, in natural order."""
    names = set()
    for text in texts:
        for raw in _raw_atoms(_parse_raw(text)):
            names.update(raw.xs + raw.ys + raw.zs)
    return sorted(names, key=_natural_key)


def formula_lines(text: str) -> List[Tuple[int, str]]:
    lines = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            lines.append((number, line))
    return lines


def parse_formula_set(text: str, sig: Signature) -> List[Formula]:
    formulas = []
    for number, line in formula_lines(text):
        try:
            formulas.append(parse_formula(line, sig))
        except FormulaSyntaxError as e:
            raise FormulaSyntaxError(f"line {number}: {e}", e.position, e.expected)
        except InputError as e:
            raise type(e)(f"line {number}: {e}")
    return formulas


def read_formula_lines(path: str) -> List[str]:
    with open(path, encoding="utf-8") as f:
        return [line for _, line in formula_lines(f.read())]


def load_formulas(path: str, sig: Signature) -> List[Formula]:
    with open(path, encoding="utf-8") as f:
        return parse_formula_set(f.read(), sig)


def submasks(mask: int) -> Iterator[int]:
    # ascending order
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


@lru_cache(maxsize=None)
def enumerate_atoms(sig: Signature) -> Tuple[Atom, ...]:
    full = sig.full_mask
    atoms = []
    for x in range(1, full + 1):
        for y in submasks(full & ~x):
            if y == 0:
                continue
            for z in submasks(full & ~(x | y)):
                atoms.append(Atom.from_masks(sig, x, y, z))
    return tuple(atoms)


@lru_cache(maxsize=None)
def atom_space(sig: Signature) -> Dict[Tuple[int, int, int], int]:
    return {a.masks: i for i, a in enumerate(enumerate_atoms(sig))}


def atom_count(n: int) -> int:
    return 4**n - 2 * 3**n + 2**n


def formula_signature(formulas: Iterable[Formula]) -> Optional[Signature]:
    sig = None
    for f in formulas:
        for a in f.atoms():
            if sig is None:
                sig = a.sig
            else:
                require_same_signature(sig, a.sig)
    return sig
