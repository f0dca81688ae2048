"""Conceptual scaling: turning instance data into formal contexts.

A concrete scale names a genus, an abstract theory over scale attributes,
and one query binding per attribute with a single free variable ranging
over the genus instances.  Realizing a scale against a collection produces
a facet: the realized context (one row per genus instance, one column per
binding) together with the list of abstract constraints the data violates.
Violations are reported, never fatal; the abstract theory states what the
scale expects, the facet records how the data answers.

Scale kinds follow the standard repertoire: nominal scales name mutually
exclusive values, ordinal scales rank against thresholds in one direction,
interordinal scales rank in both, hierarchical scales follow a type tree.
Direct scaling of a relation against a controlled vocabulary is the nominal
constructor with a relation-membership binding; equivalence scaling is the
nominal constructor over a description function's observed image.

Scales can also be read from markup: a theory declaration whose
interpretations enumerate bindings (one attribute per value of a Foreach
iteration, or one per defining query of an interpreted type).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from . import markup
from .context import FormalContext, apposition
from .errors import EvaluationError, ScaleError, UnknownTypeError
from .expressions import And, ObjectAtom, Ref, RelationAtom, substitute, walk
from .ontology import TypeRef, _compare, _holds
from .theory import Sequent, Theory

_VAR = "x"


@dataclass(frozen=True)
class ConcreteScale:
    """An abstract theory plus one query binding per attribute.

    Every binding has exactly one free variable, ``var``, ranging over the
    instances of ``genus``.  ``description`` optionally names the function
    whose absence marks an instance as undescribed.
    """

    name: str
    genus: str
    abstract: Theory
    bindings: tuple
    var: str = _VAR
    description: str | None = None

    def __post_init__(self):
        names = [attr for attr, _ in self.bindings]
        if len(set(names)) != len(names):
            raise ScaleError(f"scale {self.name!r} repeats an attribute name")

    @property
    def attributes(self):
        return tuple(attr for attr, _ in self.bindings)


@dataclass(frozen=True)
class FacetViolation:
    object: str
    sequent: Sequent | None
    kind: str = "sequent"

    def __str__(self):
        if self.kind == "undescribed":
            return f"{self.object}: undescribed"
        return f"{self.sequent} violated by {self.object}"


@dataclass(frozen=True)
class Facet:
    scale: str
    context: FormalContext
    violations: tuple


# -- scale constructors ------------------------------------------------------------


def _check_values(values, what):
    values = tuple(values)
    if len(set(values)) != len(values):
        raise ScaleError(f"duplicate {what}")
    return values


def nominal_scale(name, genus, descriptor, values, *, var=_VAR):
    """One attribute per value; the values are expected mutually exclusive.

    ``descriptor`` may name a function (value equality) or a binary relation
    (pair membership), which also makes this the direct-scaling constructor.
    """
    values = _check_values(values, "scale value")
    bindings = tuple(
        (value, RelationAtom(descriptor, Ref(var), Ref(value))) for value in values
    )
    sequents = tuple(
        Sequent((a, b), ()) for a, b in combinations(values, 2)
    )
    abstract = Theory(name, genus, values, sequents)
    return ConcreteScale(name, genus, abstract, bindings, var, descriptor)


def _check_thresholds(thresholds):
    thresholds = tuple(thresholds)
    if not thresholds:
        raise ScaleError("ordinal scaling needs at least one threshold")
    for left, right in zip(thresholds, thresholds[1:]):
        if _compare(None, left, right) >= 0:
            raise ScaleError(
                f"thresholds must strictly increase: {left!r} !< {right!r}"
            )
    return thresholds


def _rank_bindings(function, thresholds, direction, var):
    marker = ">=" if direction == "geq" else "<="
    return tuple(
        (
            f"{marker}{value}",
            RelationAtom(function, Ref(var), Ref(value), direction),
        )
        for value in thresholds
    )


def _chain_sequents(attributes, direction):
    pairs = zip(attributes[1:], attributes) if direction == "geq" else zip(
        attributes, attributes[1:]
    )
    return tuple(Sequent((higher,), (lower,)) for higher, lower in pairs)


def ordinal_scale(name, genus, function, thresholds, *, direction="geq", var=_VAR):
    """Ranking against increasing thresholds, in one direction."""
    if direction not in ("geq", "leq"):
        raise ScaleError(f"direction must be geq or leq, not {direction!r}")
    thresholds = _check_thresholds(thresholds)
    bindings = _rank_bindings(function, thresholds, direction, var)
    attributes = tuple(attr for attr, _ in bindings)
    abstract = Theory(name, genus, attributes, _chain_sequents(attributes, direction))
    return ConcreteScale(name, genus, abstract, bindings, var, function)


def interordinal_scale(name, genus, function, thresholds, *, var=_VAR):
    """Both ranking directions at once; concepts carve out subintervals."""
    thresholds = _check_thresholds(thresholds)
    geq = _rank_bindings(function, thresholds, "geq", var)
    leq = _rank_bindings(function, thresholds, "leq", var)
    bindings = geq + leq
    geq_attrs = tuple(attr for attr, _ in geq)
    leq_attrs = tuple(attr for attr, _ in leq)
    sequents = _chain_sequents(geq_attrs, "geq") + _chain_sequents(leq_attrs, "leq")
    abstract = Theory(
        name, genus, geq_attrs + leq_attrs, sequents
    )
    return ConcreteScale(name, genus, abstract, bindings, var, function)


def hierarchical_scale(name, genus, tree, *, disjoint_siblings=False, var=_VAR):
    """One attribute per node of a type tree; membership nests upward.

    ``tree`` maps each parent type to its children.  Exactly one root must
    remain unparented, every node appears once, and the sequents assert
    child ⊢ parent (plus sibling disjointness when asked for).
    """
    children = {parent: tuple(kids) for parent, kids in tree.items()}
    child_names = [kid for kids in children.values() for kid in kids]
    if len(set(child_names)) != len(child_names):
        raise ScaleError("a type appears twice in the tree")
    nodes = set(children) | set(child_names)
    roots = [node for node in nodes if node not in set(child_names)]
    if len(roots) != 1:
        raise ScaleError(f"the tree needs exactly one root, found {len(roots)}")
    order = []
    stack = [roots[0]]
    while stack:
        node = stack.pop()
        if node in order:
            raise ScaleError(f"type tree cycles through {node!r}")
        order.append(node)
        stack.extend(reversed(children.get(node, ())))
    bindings = tuple((node, ObjectAtom(node, Ref(var))) for node in order)
    sequents = [
        Sequent((kid,), (parent,))
        for parent in order
        for kid in children.get(parent, ())
    ]
    if disjoint_siblings:
        for kids in children.values():
            sequents.extend(Sequent((a, b), ()) for a, b in combinations(kids, 2))
    abstract = Theory(name, genus, tuple(order), tuple(sequents))
    return ConcreteScale(name, genus, abstract, bindings, var)


def equivalence_scale(name, genus, function, coll, *, var=_VAR):
    """Nominal scaling over the observed image of a description function."""
    owner, kind, decl = coll.ontology.resolve(function)
    if kind != "function":
        raise ScaleError(f"{function!r} is not a function")
    tr = TypeRef(owner.uri, decl.name)
    values = []
    for identifier in coll.domain(genus):
        for value in coll.function_values(identifier, tr):
            if value not in values:
                values.append(value)
    return nominal_scale(name, genus, function, values, var=var)


def genus_scale(coll, genus, *, name=None, disjoint_siblings=False):
    """The implicit hierarchical scale of the types at or below a genus."""
    owner, kind, decl = coll.ontology.resolve(genus)
    if kind != "object":
        raise ScaleError(f"genus {genus!r} is not an object type")
    registry = coll.ontology.registry
    root = TypeRef(owner.uri, decl.name)
    tree = {}
    frontier = [(root, decl.name)]
    seen = {root}
    while frontier:
        parent_tr, parent_name = frontier.pop(0)
        kids = []
        for ontology in registry._all:
            for type_name, type_decl in ontology.object_types.items():
                parents = [
                    ontology.maybe_resolve(raw) for raw in type_decl.parents
                ]
                if any(
                    hit and TypeRef(hit[0].uri, hit[2].name) == parent_tr
                    for hit in parents
                ):
                    kid_tr = TypeRef(ontology.uri, type_name)
                    if kid_tr not in seen:
                        seen.add(kid_tr)
                        kids.append(type_name)
                        frontier.append((kid_tr, type_name))
        if kids:
            tree[parent_name] = kids
    if not tree:
        tree = {decl.name: ()}
    return hierarchical_scale(
        name or decl.name, genus, tree, disjoint_siblings=disjoint_siblings
    )


# -- scales from markup -------------------------------------------------------------


def _binding_attr_name(foreach, value):
    template = foreach.template
    if template is not None:
        for node in template.body:
            for atom in walk(node):
                if (
                    isinstance(atom, RelationAtom)
                    and atom.order in ("geq", "leq")
                ):
                    marker = ">=" if atom.order == "geq" else "<="
                    return f"{marker}{value}"
    return value


def _foreach_bindings(foreach, coll):
    owner, kind, decl = coll.ontology.resolve(foreach.type)
    values = coll.domain(foreach.type)
    subrange = foreach.where
    if subrange is not None:
        if kind != "data":
            raise ScaleError("subrange bounds apply to data types only")
        values = [
            value
            for value in values
            if _compare(decl, value, subrange.begin) >= 0
            and _compare(decl, value, subrange.end) < 0
        ]
    template = foreach.template
    if template is None:
        raise ScaleError(
            f"Foreach over {foreach.type!r} has no object template"
        )
    atoms = [
        node for node in template.body if not isinstance(node, markup.Comment)
    ]
    if not atoms:
        raise ScaleError("object template has no body")
    body = And(tuple(atoms)) if len(atoms) > 1 else atoms[0]
    genus_atom = ObjectAtom(template.type, Ref(_VAR))
    out = []
    for value in values:
        bound = substitute(
            body, {foreach.var: Ref(value), template.var: Ref(_VAR)}
        )
        out.append(
            (_binding_attr_name(foreach, value), And((genus_atom, bound)))
        )
    return out, template.type


def scale_from_theory(decl, coll):
    """Build the concrete scale a theory's interpretations describe.

    Each Foreach block contributes one binding per value of its iteration
    type; each interpreted object type contributes its defining query.  The
    abstract part carries exactly the constraints the theory declares.
    """
    bindings = []
    genus = decl.genus
    description = None
    for interp in decl.interpretations:
        if interp.function_type and description is None:
            description = interp.function_type
        for item in interp.body:
            if isinstance(item, markup.ForeachDecl):
                new, template_type = _foreach_bindings(item, coll)
                for attr, expr in new:
                    if any(attr == existing for existing, _ in bindings):
                        attr = f"{item.type}:{attr}"
                    bindings.append((attr, expr))
                if genus is None:
                    genus = template_type
            elif isinstance(item, markup.ObjectTypeDecl):
                if item.query is None or not item.var:
                    raise ScaleError(
                        f"interpreted type {item.name!r} has no defining query"
                    )
                bindings.append(
                    (item.name, substitute(item.query, {item.var: Ref(_VAR)}))
                )
                if genus is None:
                    genus = item.type
    if not bindings:
        raise ScaleError(f"theory {decl.name!r} has no interpretation to scale by")
    if genus is None:
        raise ScaleError(f"theory {decl.name!r} names no genus")
    attributes = tuple(attr for attr, _ in bindings)
    sequents = []
    for item in decl.constraints:
        for sub in markup._desugared_constraints(item):
            sequents.append(Sequent(sub.antecedent, sub.consequent))
    abstract = Theory(decl.name, genus, attributes, tuple(sequents))
    return ConcreteScale(
        decl.name, genus, abstract, tuple(bindings), _VAR, description
    )


# -- realization ---------------------------------------------------------------------


def realize(scale, coll):
    """Evaluate every binding over the genus instances.

    Returns the facet: the realized context plus all violations of the
    abstract theory, with instances lacking the description function
    flagged as undescribed.
    """
    try:
        rows = coll.domain(scale.genus)
    except UnknownTypeError as exc:
        raise ScaleError(str(exc)) from exc
    matrix = []
    for identifier in rows:
        env = {scale.var: identifier}
        row = []
        for attr, expr in scale.bindings:
            try:
                row.append(_holds(coll, expr, dict(env)))
            except EvaluationError as exc:
                raise ScaleError(f"binding {attr!r}: {exc}") from exc
        matrix.append(row)
    realized = FormalContext(
        rows, scale.attributes, matrix, name=scale.name
    )
    violations = []
    if scale.description:
        hit = coll.ontology.maybe_resolve(scale.description)
        if hit is not None and hit[1] == "function":
            tr = TypeRef(hit[0].uri, hit[2].name)
            for identifier in rows:
                if not coll.function_values(identifier, tr):
                    violations.append(
                        FacetViolation(identifier, None, "undescribed")
                    )
    for sequent in scale.abstract.sequents:
        universal = frozenset(
            name for name in (scale.genus,) if name not in scale.attributes
        )
        for obj in realized.objects:
            if not all(
                a in universal or realized.has(obj, a) for a in sequent.antecedent
            ):
                continue
            if any(
                d in universal or realized.has(obj, d) for d in sequent.consequent
            ):
                continue
            violations.append(FacetViolation(obj, sequent))
    return Facet(scale.name, realized, tuple(violations))


def build_space(facets, *, name="space"):
    """Appose realized facets over their shared instances.

    Every attribute is prefixed with its facet name, so columns stay
    traceable after gluing.
    """
    facets = list(facets)
    if not facets:
        raise ScaleError("no facets to appose")
    prefixed = []
    for facet in facets:
        ctx = facet.context
        if ctx.objects != facets[0].context.objects:
            raise ScaleError(
                f"facet {facet.scale!r} rows differ from {facets[0].scale!r}"
            )
        renamed = FormalContext(
            ctx.objects,
            [f"{facet.scale}:{attr}" for attr in ctx.attributes],
            [
                [bool(ctx.rows[i] & (1 << j)) for j in range(len(ctx.attributes))]
                for i in range(len(ctx.objects))
            ],
            name=facet.scale,
        )
        prefixed.append(renamed)
    space = prefixed[0]
    for extra in prefixed[1:]:
        space = apposition(space, extra, name=name)
    if len(prefixed) == 1:
        space = FormalContext(
            space.objects,
            space.attributes,
            [
                [bool(space.rows[i] & (1 << j)) for j in range(len(space.attributes))]
                for i in range(len(space.objects))
            ],
            name=name,
        )
    return space
