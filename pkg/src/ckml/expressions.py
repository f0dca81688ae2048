"""Expression trees shared by queries, defining queries, and templates.

References follow the three-fold form ``[prefix:]Type#identifier``; each
part is optional except the identifier.  Identifiers may be quoted with
single quotes when they contain spaces.  The bare identifier ``?`` marks
the requested result position of a query.
"""

from __future__ import annotations

from dataclasses import dataclass

RESULT_MARKER = "?"


@dataclass(frozen=True)
class Ref:
    """A reference to an instance, variable, data value, or the ``?`` marker.

    ``type`` keeps the optional qualifier text, prefix included; whether
    ``name`` denotes a variable or an identifier is decided by the binding
    environment at evaluation time.
    """

    name: str
    type: str | None = None

    @property
    def is_marker(self):
        return self.name == RESULT_MARKER

    def __str__(self):
        name = f"'{self.name}'" if " " in self.name else self.name
        return f"{self.type}#{name}" if self.type else name


def _unquote(text):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in ("'", '"'):
        return text[1:-1]
    return text


def parse_ref(text):
    """Parse ``[prefix:]Type#identifier`` / ``identifier`` into a Ref."""
    text = text.strip()
    if "#" in text:
        qualifier, _, name = text.rpartition("#")
        return Ref(_unquote(name), _unquote(qualifier) or None)
    return Ref(_unquote(text))


@dataclass(frozen=True)
class ObjectAtom:
    """``x is a T`` plus optional function-value filters.

    ``fields`` pairs a function (or participant) name with the value it must
    take; ``children`` holds relation atoms written inside the element, whose
    source is implicitly this atom's instance.
    """

    type_name: str
    inst: Ref | None = None
    fields: tuple = ()
    children: tuple = ()


@dataclass(frozen=True)
class RelationAtom:
    """A binary relation or function application between two references.

    ``order`` compares a function value against the target under the target
    type's order: "eq" (default), "geq", or "leq".
    """

    name: str
    source: Ref | None = None
    target: Ref | None = None
    order: str | None = None


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Equivalent:
    left: object
    right: object


@dataclass(frozen=True)
class Exists:
    var: str
    type: str
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    type: str
    body: object


def walk(expr):
    """Depth-first pre-order iteration over an expression tree."""
    yield expr
    if isinstance(expr, ObjectAtom):
        for child in expr.children:
            yield from walk(child)
    elif isinstance(expr, (And, Or)):
        for arg in expr.args:
            yield from walk(arg)
    elif isinstance(expr, Not):
        yield from walk(expr.arg)
    elif isinstance(expr, (Implies, Equivalent)):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, (Exists, Forall)):
        yield from walk(expr.body)


def refs_of(expr):
    """Every Ref appearing anywhere in the tree."""
    for node in walk(expr):
        if isinstance(node, ObjectAtom):
            if node.inst is not None:
                yield node.inst
            for _, value in node.fields:
                yield value
        elif isinstance(node, RelationAtom):
            if node.source is not None:
                yield node.source
            if node.target is not None:
                yield node.target


def substitute(expr, env):
    """Replace Ref names found in ``env`` (a name → Ref map), capture-aware."""

    def sub_ref(ref, bound):
        if ref is None or ref.name in bound:
            return ref
        replacement = env.get(ref.name)
        if replacement is None:
            return ref
        if ref.type and not replacement.type:
            return Ref(replacement.name, ref.type)
        return replacement

    def rec(node, bound):
        if isinstance(node, ObjectAtom):
            return ObjectAtom(
                node.type_name,
                sub_ref(node.inst, bound),
                tuple((f, sub_ref(v, bound)) for f, v in node.fields),
                tuple(rec(c, bound) for c in node.children),
            )
        if isinstance(node, RelationAtom):
            return RelationAtom(
                node.name,
                sub_ref(node.source, bound),
                sub_ref(node.target, bound),
                node.order,
            )
        if isinstance(node, And):
            return And(tuple(rec(a, bound) for a in node.args))
        if isinstance(node, Or):
            return Or(tuple(rec(a, bound) for a in node.args))
        if isinstance(node, Not):
            return Not(rec(node.arg, bound))
        if isinstance(node, Implies):
            return Implies(rec(node.left, bound), rec(node.right, bound))
        if isinstance(node, Equivalent):
            return Equivalent(rec(node.left, bound), rec(node.right, bound))
        if isinstance(node, Exists):
            return Exists(node.var, node.type, rec(node.body, bound | {node.var}))
        if isinstance(node, Forall):
            return Forall(node.var, node.type, rec(node.body, bound | {node.var}))
        raise TypeError(f"not an expression node: {node!r}")

    return rec(expr, frozenset())
