"""Sequent constraints over attribute vocabularies.

A sequent Γ ⊢ Δ holds in a context when every object having all attributes
in Γ has at least one attribute in Δ.  Empty sides follow the usual reading:
an empty antecedent constrains every object, an empty consequent can never
be satisfied, so Γ ⊢ ∅ asserts that no object has all of Γ.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

from .context import FormalContext
from .errors import ModelBoundError, TheoryError, UnknownAttributeError

TURNSTILE = "⊢"


def _name_set(names, side):
    out = []
    for raw in names:
        if not isinstance(raw, str):
            raise TheoryError(f"{side} entry {raw!r} is not a string")
        name = raw.strip()
        if not name:
            raise TheoryError(f"empty name in {side}")
        out.append(name)
    return frozenset(out)


@dataclass(frozen=True)
class Sequent:
    antecedent: frozenset
    consequent: frozenset

    def __init__(self, antecedent=(), consequent=()):
        object.__setattr__(self, "antecedent", _name_set(antecedent, "antecedent"))
        object.__setattr__(self, "consequent", _name_set(consequent, "consequent"))

    @property
    def names(self):
        return self.antecedent | self.consequent

    def __str__(self):
        left = ", ".join(sorted(self.antecedent))
        right = ", ".join(sorted(self.consequent))
        return f"{left} {TURNSTILE} {right}".strip()


class SequentCheck(NamedTuple):
    holds: bool
    witness: str | None


@dataclass(frozen=True)
class Theory:
    """A named attribute vocabulary with sequent constraints.

    ``genus`` is the type every object of the theory implicitly has; it may
    appear in sequents without being listed among the types.
    """

    name: str
    genus: str
    types: tuple
    sequents: tuple

    def __init__(self, name, genus, types=(), sequents=()):
        types = tuple(t.strip() for t in types)
        if len(set(types)) != len(types):
            raise TheoryError("duplicate type names")
        allowed = set(types) | {genus}
        sequents = tuple(sequents)
        for seq in sequents:
            extra = seq.names - allowed
            if extra:
                raise TheoryError(
                    f"sequent {seq} mentions undeclared names: "
                    + ", ".join(sorted(extra))
                )
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "genus", genus)
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "sequents", sequents)


def expand_subtype(specific, generic):
    """specific ⊢ generic."""
    if specific == generic:
        raise TheoryError("a type cannot be its own proper subtype")
    return Sequent((specific,), (generic,))


def expand_disjoint(types):
    """types ⊢ ∅ : nothing has all of them."""
    types = tuple(types)
    if len(types) < 2:
        raise TheoryError("disjointness needs at least two types")
    if len(set(types)) != len(types):
        raise TheoryError("duplicate type in disjointness")
    return Sequent(types, ())


def expand_cover(types):
    """∅ ⊢ types : everything has one of them."""
    types = tuple(types)
    if not types:
        raise TheoryError("cover needs at least one type")
    return Sequent((), types)


def expand_partition(genus, parts):
    """Partition of ``genus`` into ``parts``.

    Yields one subtype sequent per part, the cover sequent genus ⊢ parts,
    and pairwise disjointness between the parts.
    """
    parts = tuple(p.strip() for p in parts)
    if not parts:
        raise TheoryError("partition needs at least one part")
    if len(set(parts)) != len(parts):
        raise TheoryError("duplicate part in partition")
    if genus in parts:
        raise TheoryError("genus cannot be one of its own parts")
    sequents = [expand_subtype(part, genus) for part in parts]
    sequents.append(Sequent((genus,), parts))
    for left, right in combinations(parts, 2):
        sequents.append(Sequent((left, right), ()))
    return tuple(sequents)


def satisfies(context, sequent, *, universal=frozenset()):
    """Check one sequent against a context.

    Names in ``universal`` count as attributes every object has.  Returns
    the outcome plus the first violating object in row order, if any.
    """
    universal = frozenset(universal)
    unknown = {
        name
        for name in sequent.names
        if name not in universal and name not in context._aindex
    }
    if unknown:
        raise UnknownAttributeError(unknown)
    for obj in context.objects:
        if not all(
            a in universal or context.has(obj, a) for a in sequent.antecedent
        ):
            continue
        if any(d in universal or context.has(obj, d) for d in sequent.consequent):
            continue
        return SequentCheck(False, obj)
    return SequentCheck(True, None)


def check_theory(context, theory):
    """All (sequent, witness) violations of a theory, in declaration order."""
    universal = (
        frozenset((theory.genus,))
        if theory.genus and theory.genus not in context._aindex
        else frozenset()
    )
    violations = []
    for seq in theory.sequents:
        result = satisfies(context, seq, universal=universal)
        if not result.holds:
            violations.append((seq, result.witness))
    return violations


def models_of_theory(theory, *, max_types=20):
    """The context of all type subsets satisfying every sequent.

    Rows are enumerated by subset size, then by type position; each row is
    named by its members joined in declared type order inside braces.  The
    genus never appears as a column but counts as present in every row.
    """
    types = theory.types
    if len(types) > max_types:
        raise ModelBoundError(
            f"{len(types)} types exceeds the model bound of {max_types}"
        )

    def holds(members):
        present = set(members) | {theory.genus}
        for seq in theory.sequents:
            if seq.antecedent <= present and not (seq.consequent & present):
                return False
        return True

    rows = []
    names = []
    for size in range(len(types) + 1):
        for picked in combinations(range(len(types)), size):
            members = tuple(types[i] for i in picked)
            if not holds(members):
                continue
            names.append("{" + ",".join(members) + "}")
            chosen = set(picked)
            rows.append([j in chosen for j in range(len(types))])
    return FormalContext(names, types, rows, name=theory.name)
