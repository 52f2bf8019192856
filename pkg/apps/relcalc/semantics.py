import concurrent.futures
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from loguru import logger

from language import Atom, Formula, Literal, Signature, submasks, atom_space, enumerate_atoms
from scm import CausalModel, assignments, require_uniq, chunks


def _atom_verdict(m: CausalModel, a: Atom) -> bool:
    sig = m.sig
    x, y, z = a.masks
    rest = sig.full_mask & ~(x | y | z)
    targets = [i for i in range(sig.size) if y >> i & 1]
    x_values = list(assignments(sig, x))
    # every W including the empty set, first counterexample decides
    for w in submasks(rest):
        for fixed in assignments(sig, z | w):
            for u in m.contexts:
                reference = None
                for xv in x_values:
                    solution = m.respond(tuple(sorted(fixed + xv)), u)
                    response = tuple(solution[i] for i in targets)
                    if reference is None:
                        reference = response
                    elif response != reference:
                        return False
    return True


def satisfies_atom(m: CausalModel, a: Atom) -> bool:
    require_uniq(m)
    key = ("atom", a.masks)
    verdict = m._cache.get(key)
    if verdict is None:
        verdict = _atom_verdict(m, a)
        m._cache[key] = verdict
    return verdict


def satisfies(m: CausalModel, f: Formula) -> bool:
    require_uniq(m)
    return f.evaluate(lambda a: satisfies_atom(m, a))


@dataclass(frozen=True)
class LiteralTheory:
    """Verdict of one model on every atom of the signature, in atom order."""

    sig: Signature
    verdicts: Tuple[bool, ...]

    def verdict(self, a: Atom) -> bool:
        return self.verdicts[atom_space(self.sig)[a.masks]]

    def literals(self) -> List[Literal]:
        return [Literal(a, v) for a, v in zip(enumerate_atoms(self.sig), self.verdicts)]

    def positives(self) -> List[Atom]:
        return [a for a, v in zip(enumerate_atoms(self.sig), self.verdicts) if v]

    def negatives(self) -> List[Atom]:
        return [a for a, v in zip(enumerate_atoms(self.sig), self.verdicts) if not v]

    def formulas(self) -> List[Formula]:
        return [lit.formula() for lit in self.literals()]

    def render(self) -> str:
        return "".join(
            f"{a.render()}: {'true' if v else 'false'}\n"
            for a, v in zip(enumerate_atoms(self.sig), self.verdicts)
        )


def _verdicts(m: CausalModel, atoms: Sequence[Atom]) -> List[bool]:
    return [satisfies_atom(m, a) for a in atoms]


def theory_literals(m: CausalModel, jobs: int = 1) -> LiteralTheory:
    require_uniq(m, jobs)
    atoms = list(enumerate_atoms(m.sig))
    logger.debug(f"deciding {len(atoms)} atoms against the model")
    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
            parts = executor.map(lambda chunk: _verdicts(m, chunk), chunks(atoms, jobs))
            verdicts = [v for part in parts for v in part]
    else:
        verdicts = _verdicts(m, atoms)
    return LiteralTheory(m.sig, tuple(verdicts))
