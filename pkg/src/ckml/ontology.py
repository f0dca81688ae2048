"""Ontologies, instance collections, validation, and query evaluation.

An ontology declares object types (optionally with a defining query), data
types (ordered or enumerated), binary relation types with source and target
types, function types, reified relation types linked to a binary relation,
and set/collection types.  Ontologies extend one another under a prefix;
``P:Name`` resolves through the prefix, a bare name searches the local
declarations first and then the extended ontologies in declaration order.

An instance collection holds named instances, their classifications and
function values, and binary relation instances.  The central well-formedness
rule is classification projection: a relation instance r of relation type t
forces its source into the source type of t and its target into the target
type of t.  ``validate`` reports every breach of that rule, every function
value outside its target type, and every collection member not placed under
the collection genus.

Reified and unreified relations are inter-translatable: a relation atom is
satisfied by a stored pair or by a reified instance of a type linking to the
relation, and an atom over a reified type is satisfied by a declared
instance or virtually by a stored pair of the linked relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .errors import EvaluationError, OntologyError, UnknownTypeError
from .expressions import (
    And,
    Equivalent,
    Exists,
    Forall,
    Implies,
    Not,
    ObjectAtom,
    Or,
    Ref,
    RelationAtom,
)


@dataclass(frozen=True)
class TypeRef:
    """Canonical identity of a declared type: owning uri plus local name."""

    uri: str
    name: str

    def __str__(self):
        return f"{self.uri}#{self.name}" if self.uri else self.name


@dataclass
class ObjectType:
    name: str
    parents: tuple = ()
    var: str | None = None
    query: object | None = None
    functions: tuple = ()


@dataclass
class DataType:
    name: str
    ordered: bool = False
    values: tuple = ()

    @property
    def enumerated(self):
        return bool(self.values)


@dataclass
class BinaryRelationType:
    name: str
    source: str | None = None
    target: str | None = None
    source_var: str | None = None
    target_var: str | None = None
    query: object | None = None


@dataclass
class FunctionType:
    name: str
    source: str | None = None
    target: str | None = None


@dataclass
class ReifiedRelationType:
    name: str
    binrel: str | None = None
    participants: tuple = ()


@dataclass
class SetType:
    name: str
    genus: str | None = None


@dataclass
class CollectionType:
    name: str
    genus: str | None = None


_KIND_FIELDS = (
    ("object", "object_types"),
    ("data", "data_types"),
    ("relation", "relations"),
    ("function", "functions"),
    ("reified", "reified"),
    ("set", "set_types"),
    ("collection", "collection_types"),
)


class Ontology:
    """A namespace of type declarations, possibly extending others."""

    def __init__(self, name=None, uri=None, registry=None):
        self.name = name
        self.uri = uri or ""
        self.extends = {}
        self.object_types = {}
        self.data_types = {}
        self.relations = {}
        self.functions = {}
        self.reified = {}
        self.set_types = {}
        self.collection_types = {}
        self.extra_edges = []
        self.registry = registry or OntologyRegistry()
        self.registry._adopt(self)

    def __repr__(self):
        return f"<Ontology {self.name or self.uri!r}>"

    # -- construction -----------------------------------------------------

    def _declare(self, table, decl):
        if decl.name in table:
            raise OntologyError(f"duplicate declaration of {decl.name!r}")
        table[decl.name] = decl
        return decl

    def add_extends(self, uri, prefix):
        if prefix in self.extends:
            raise OntologyError(f"duplicate extends prefix {prefix!r}")
        self.extends[prefix] = uri

    def add_object_type(self, name, *, parents=(), var=None, query=None, functions=()):
        decl = ObjectType(name, tuple(parents), var, query, tuple(functions))
        self._declare(self.object_types, decl)
        for fn in decl.functions:
            if fn.source is None:
                fn.source = name
            self.functions.setdefault(fn.name, fn)
        return decl

    def add_data_type(self, name, *, ordered=False, values=()):
        return self._declare(self.data_types, DataType(name, ordered, tuple(values)))

    def add_relation(self, name, source=None, target=None, *,
                     source_var=None, target_var=None, query=None):
        return self._declare(
            self.relations,
            BinaryRelationType(name, source, target, source_var, target_var, query),
        )

    def add_function(self, name, source=None, target=None):
        return self._declare(self.functions, FunctionType(name, source, target))

    def add_reified(self, name, *, binrel=None, participants=()):
        decl = ReifiedRelationType(name, binrel, tuple(participants))
        self._declare(self.reified, decl)
        for fn in decl.participants:
            if fn.source is None:
                fn.source = name
            self.functions.setdefault(fn.name, fn)
        return decl

    def add_set_type(self, name, genus=None):
        return self._declare(self.set_types, SetType(name, genus))

    def add_collection_type(self, name, genus=None):
        return self._declare(self.collection_types, CollectionType(name, genus))

    def add_subtype_edge(self, specific, generic):
        self.extra_edges.append((specific, generic))

    def add_equivalence(self, first, second):
        self.extra_edges.append((first, second))
        self.extra_edges.append((second, first))

    # -- resolution ---------------------------------------------------------

    def _local(self, name):
        for kind, table_name in _KIND_FIELDS:
            decl = getattr(self, table_name).get(name)
            if decl is not None:
                return self, kind, decl
        return None

    def resolve(self, name, *, _seen=None):
        """Resolve ``[prefix:]Name`` to (owning ontology, kind, declaration)."""
        name = name.strip()
        if ":" in name:
            prefix, _, rest = name.partition(":")
            uri = self.extends.get(prefix)
            if uri is None:
                raise UnknownTypeError(
                    f"unknown prefix {prefix!r} in {self.name or self.uri}"
                )
            return self.registry.load(uri).resolve(rest)
        seen = _seen or set()
        if id(self) in seen:
            return None
        seen.add(id(self))
        hit = self._local(name)
        if hit is not None:
            return hit
        for uri in self.extends.values():
            hit = self.registry.load(uri).resolve(name, _seen=seen)
            if hit is not None:
                return hit
        if _seen is None:
            raise UnknownTypeError(
                f"{name!r} is not declared in {self.name or self.uri or 'the ontology'}"
            )
        return None

    def maybe_resolve(self, name):
        try:
            return self.resolve(name)
        except UnknownTypeError:
            return None

    def type_ref(self, name):
        owner, _, decl = self.resolve(name)
        return TypeRef(owner.uri, decl.name)

    def subtype_leq(self, specific, generic):
        """Reflexive-transitive subtype test between two type names."""
        return self.registry.type_leq(self.type_ref(specific), self.type_ref(generic))


class OntologyRegistry:
    """Loads and caches ontologies by uri; owns the global subtype graph."""

    def __init__(self, paths=None, base_dir=None):
        self.paths = dict(paths or {})
        self.base_dir = base_dir
        self._by_uri = {}
        self._all = []

    def _adopt(self, ontology):
        if ontology.registry is not self:
            ontology.registry = self
        self._all.append(ontology)
        if ontology.uri:
            self._by_uri.setdefault(ontology.uri, ontology)

    def register(self, ontology):
        if ontology not in self._all:
            self._adopt(ontology)
        return ontology

    def load(self, uri):
        if uri in self._by_uri:
            return self._by_uri[uri]
        path = self.paths.get(uri)
        if path is None:
            raise OntologyError(f"no source known for ontology {uri!r}")
        if self.base_dir is not None:
            import os

            path = os.path.join(self.base_dir, path)
        from . import markup

        document = markup.parse_file(path)
        ontology = None
        for decl in document.declarations:
            if isinstance(decl, markup.OntologyDecl):
                ontology = ontology_from_decl(decl, self)
                break
        if ontology is None:
            raise OntologyError(f"{path} does not declare an ontology")
        if ontology.uri and ontology.uri != uri:
            self._by_uri.setdefault(uri, ontology)
        return ontology

    def decl_of(self, tr):
        ontology = self._by_uri.get(tr.uri)
        if ontology is None:
            for candidate in self._all:
                if candidate.uri == tr.uri:
                    ontology = candidate
                    break
        if ontology is None:
            return None
        hit = ontology._local(tr.name)
        return None if hit is None else hit[2]

    def _parents(self, tr):
        out = []
        ontology = self._by_uri.get(tr.uri)
        if ontology is not None:
            hit = ontology._local(tr.name)
            if hit is not None and isinstance(hit[2], ObjectType):
                for raw in hit[2].parents:
                    parent = ontology.maybe_resolve(raw)
                    if parent is not None:
                        out.append(TypeRef(parent[0].uri, parent[2].name))
        for declarer in self._all:
            for specific, generic in declarer.extra_edges:
                spec = declarer.maybe_resolve(specific)
                if spec is None or TypeRef(spec[0].uri, spec[2].name) != tr:
                    continue
                gen = declarer.maybe_resolve(generic)
                if gen is not None:
                    out.append(TypeRef(gen[0].uri, gen[2].name))
        return out

    def type_leq(self, specific, generic):
        if specific == generic:
            return True
        seen = {specific}
        frontier = [specific]
        while frontier:
            current = frontier.pop()
            for parent in self._parents(current):
                if parent == generic:
                    return True
                if parent not in seen:
                    seen.add(parent)
                    frontier.append(parent)
        return False

    def check_acyclic(self, ontology):
        """Proper subtype edges must not cycle (equivalences are exempt)."""
        for name, decl in ontology.object_types.items():
            start = TypeRef(ontology.uri, name)
            seen = set()
            frontier = [start]
            while frontier:
                current = frontier.pop()
                owner = self._by_uri.get(current.uri)
                if owner is None:
                    continue
                hit = owner._local(current.name)
                if hit is None or not isinstance(hit[2], ObjectType):
                    continue
                for raw in hit[2].parents:
                    parent = owner.maybe_resolve(raw)
                    if parent is None:
                        continue
                    parent_tr = TypeRef(parent[0].uri, parent[2].name)
                    if parent_tr == start:
                        raise OntologyError(f"subtype cycle through {name!r}")
                    if parent_tr not in seen:
                        seen.add(parent_tr)
                        frontier.append(parent_tr)


# -- instances ------------------------------------------------------------------


@dataclass
class Instance:
    id: str
    types: list = dc_field(default_factory=list)
    metadata: dict = dc_field(default_factory=dict)
    functions: dict = dc_field(default_factory=dict)
    declared: bool = False


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return self.message


class InstanceCollection:
    """Instances, classifications, function values, and relation instances.

    Mutating methods are meant for the loading phase; afterwards treat the
    collection as read-only.
    """

    def __init__(self, ontology, *, name=None, genus=None):
        self.ontology = ontology
        self.name = name
        self.genus = genus
        self.instances = {}
        self.relations = []
        self.members = []
        self._version = 0
        self._pair_cache = {}
        self._active_derivations = set()

    def __repr__(self):
        return f"<InstanceCollection {self.name or ''} {len(self.instances)} instances>"

    def _touch(self):
        self._version += 1
        self._pair_cache.clear()

    def _type_ref(self, name):
        owner, _, decl = self.ontology.resolve(name)
        return TypeRef(owner.uri, decl.name)

    def add_instance(self, identifier, types=(), *, declared=False, **metadata):
        self._touch()
        instance = self.instances.get(identifier)
        if instance is None:
            instance = Instance(identifier)
            self.instances[identifier] = instance
        for raw in types:
            tr = self._type_ref(raw)
            if tr not in instance.types:
                instance.types.append(tr)
        instance.declared = instance.declared or declared
        instance.metadata.update(metadata)
        return instance

    def add_member(self, identifier, genus=None):
        self.add_instance(identifier, declared=True)
        self.members.append((identifier, genus if genus is not None else self.genus))

    def set_function(self, identifier, function, value, *, value_type=None):
        """Append one value of ``function`` on an instance.

        ``value`` is an instance identifier or a data literal depending on
        the function's target type; a ``value_type`` qualifier classifies an
        instance value on the spot.
        """
        self._touch()
        owner, kind, decl = self.ontology.resolve(function)
        if kind != "function":
            raise OntologyError(f"{function!r} is not a function type")
        target = owner.maybe_resolve(decl.target) if decl.target else None
        target_kind = target[1] if target is not None else None
        if target_kind in ("object", "reified", "set"):
            self.add_instance(value, (value_type,) if value_type else ())
        instance = self.add_instance(identifier)
        tr = TypeRef(owner.uri, decl.name)
        instance.functions.setdefault(tr, []).append(value)

    def add_relation(self, relation, source, target, *,
                     source_type=None, target_type=None):
        """Record one relation instance, registering instance endpoints."""
        self._touch()
        owner, kind, decl = self.ontology.resolve(relation)
        if kind == "function":
            self.set_function(source, relation, target, value_type=target_type)
            return
        if kind not in ("relation", "reified"):
            raise OntologyError(f"{relation!r} is not a relation type")
        tr = TypeRef(owner.uri, decl.name)
        self.add_instance(source, (source_type,) if source_type else ())
        target_hit = (
            owner.maybe_resolve(decl.target)
            if kind == "relation" and decl.target
            else None
        )
        if target_hit is None or target_hit[1] != "data":
            self.add_instance(target, (target_type,) if target_type else ())
        self.relations.append((tr, source, target))

    # -- resolution helpers --------------------------------------------------

    def _resolve_near(self, raw, owner=None):
        """Resolve a name against the collection ontology, then the declarer."""
        hit = self.ontology.maybe_resolve(raw)
        if hit is None and owner is not None:
            hit = owner.maybe_resolve(raw)
        return hit

    def _binrel_ref(self, reified_decl, owner):
        if not reified_decl.binrel:
            return None
        hit = self._resolve_near(reified_decl.binrel, owner)
        if hit is None or hit[1] != "relation":
            return None
        return TypeRef(hit[0].uri, hit[2].name)

    def function_values(self, identifier, function_tr):
        instance = self.instances.get(identifier)
        if instance is None:
            return []
        return instance.functions.get(function_tr, [])

    # -- typed domains --------------------------------------------------------

    def instance_of(self, identifier, type_name, *, _active=None):
        """Declared membership, subtype closure, or defining-query membership."""
        hit = (
            type_name
            if isinstance(type_name, tuple)
            else self.ontology.resolve(type_name)
        )
        owner, kind, decl = hit
        tr = TypeRef(owner.uri, decl.name)
        instance = self.instances.get(identifier)
        if kind == "data":
            return self.is_data_value(identifier, decl)
        if instance is not None:
            for declared in instance.types:
                if self.ontology.registry.type_leq(declared, tr):
                    return True
        if kind == "object" and decl.query is not None and decl.var:
            active = _active or set()
            key = (identifier, tr)
            if key in active:
                return False
            active = active | {key}
            return _holds(self, decl.query, {decl.var: identifier}, _active=active)
        return False

    def is_data_value(self, value, decl):
        if decl.enumerated:
            return value in decl.values
        return isinstance(value, str)

    def data_domain(self, owner, decl):
        """Values of a data type: declared ones, or every observed literal."""
        if decl.enumerated:
            return list(decl.values)
        tr = TypeRef(owner.uri, decl.name)
        seen = []
        for instance in self.instances.values():
            for fn_tr, values in instance.functions.items():
                fn_decl = self.ontology.registry.decl_of(fn_tr)
                if fn_decl is None or not fn_decl.target:
                    continue
                target = self._resolve_near(fn_decl.target)
                if target and TypeRef(target[0].uri, target[2].name) == tr:
                    for value in values:
                        if value not in seen:
                            seen.append(value)
        for rel_tr, _, target_value in self.relations:
            rel_decl = self.ontology.registry.decl_of(rel_tr)
            if rel_decl is None or not getattr(rel_decl, "target", None):
                continue
            target = self._resolve_near(rel_decl.target)
            if target and TypeRef(target[0].uri, target[2].name) == tr:
                if target_value not in seen:
                    seen.append(target_value)
        if decl.ordered:
            seen.sort(key=_order_key)
        return seen

    def domain(self, type_name):
        """All values of a type, in registration (or declared value) order."""
        hit = (
            type_name
            if isinstance(type_name, tuple)
            else self.ontology.resolve(type_name)
        )
        owner, kind, decl = hit
        if kind == "data":
            return self.data_domain(owner, decl)
        if kind in ("object", "reified"):
            return [
                identifier
                for identifier in self.instances
                if self.instance_of(identifier, hit)
            ]
        if kind == "set" and decl.genus:
            inner = self._resolve_near(decl.genus, owner)
            if inner is not None:
                return self.domain(inner)
        raise EvaluationError(f"{decl.name!r} has no instance domain")

    # -- relation pairs --------------------------------------------------------

    def relation_pairs(self, relation_tr):
        """All (source, target) pairs of a relation: stored, reified, derived."""
        cached = self._pair_cache.get(relation_tr)
        if cached is not None:
            return cached
        pairs = [
            (s, t) for (tr, s, t) in self.relations if tr == relation_tr
        ]
        seen = set(pairs)
        for instance in self.instances.values():
            for declared in instance.types:
                decl = self.ontology.registry.decl_of(declared)
                if not isinstance(decl, ReifiedRelationType):
                    continue
                owner = self.ontology.registry._by_uri.get(declared.uri)
                if self._binrel_ref(decl, owner) != relation_tr:
                    continue
                pair = self._participant_pair(instance, owner, decl)
                if pair is not None and pair not in seen:
                    seen.add(pair)
                    pairs.append(pair)
        decl = self.ontology.registry.decl_of(relation_tr)
        derivable = (
            isinstance(decl, BinaryRelationType)
            and decl.query is not None
            and decl.source_var
            and decl.target_var
            and relation_tr not in self._active_derivations
        )
        if derivable:
            owner = self.ontology.registry._by_uri.get(relation_tr.uri)
            self._active_derivations.add(relation_tr)
            try:
                sources = self.domain(decl.source) if decl.source else list(self.instances)
                targets = self.domain(decl.target) if decl.target else list(self.instances)
                for s in sources:
                    for t in targets:
                        if (s, t) in seen:
                            continue
                        env = {decl.source_var: s, decl.target_var: t}
                        if _holds(self, decl.query, env):
                            seen.add((s, t))
                            pairs.append((s, t))
            finally:
                self._active_derivations.discard(relation_tr)
        if not self._active_derivations:
            self._pair_cache[relation_tr] = pairs
        return pairs

    def _participant_pair(self, instance, owner, reified_decl):
        if len(reified_decl.participants) < 2:
            return None
        values = []
        for participant in reified_decl.participants[:2]:
            tr = TypeRef(owner.uri, participant.name)
            stored = instance.functions.get(tr, [])
            if not stored:
                return None
            values.append(stored[0])
        return tuple(values)


def _order_key(value):
    try:
        return (0, float(value), value)
    except (TypeError, ValueError):
        return (1, 0.0, value)


def _compare(decl, left, right):
    """Three-way comparison of two data values under a data type's order."""
    if decl is not None and decl.enumerated:
        try:
            li, ri = decl.values.index(left), decl.values.index(right)
        except ValueError:
            li, ri = None, None
        if li is not None:
            return (li > ri) - (li < ri)
    try:
        lf, rf = float(left), float(right)
        return (lf > rf) - (lf < rf)
    except (TypeError, ValueError):
        return (left > right) - (left < right)


# -- evaluation ------------------------------------------------------------------


def _resolve_term(ref, env):
    if ref is None:
        return None
    if ref.name in env:
        return env[ref.name]
    return ref.name


def _check_ref_type(coll, ref, value):
    if ref is None or ref.type is None:
        return True
    hit = coll.ontology.maybe_resolve(ref.type)
    if hit is None:
        return True
    owner, kind, decl = hit
    if kind == "data":
        return coll.is_data_value(value, decl)
    if kind in ("object", "reified"):
        return coll.instance_of(value, hit)
    return True


def _field_holds(coll, subject, field_name, value, env, _active=None):
    hit = coll._resolve_near(field_name)
    if hit is None:
        raise EvaluationError(f"unknown function or relation {field_name!r}")
    owner, kind, decl = hit
    tr = TypeRef(owner.uri, decl.name)
    if kind == "function":
        return value in coll.function_values(subject, tr)
    if kind == "relation":
        return (subject, value) in coll.relation_pairs(tr)
    raise EvaluationError(f"{field_name!r} is not a function or relation")


def _reified_atom_holds(coll, hit, node, env, _active=None):
    owner, _, decl = hit
    tr = TypeRef(owner.uri, decl.name)
    term = _resolve_term(node.inst, env)
    participant_names = [p.name for p in decl.participants]
    candidates = (
        [term]
        if term is not None
        else [
            identifier
            for identifier, instance in coll.instances.items()
            if any(
                declared == tr
                or coll.ontology.registry.type_leq(declared, tr)
                for declared in instance.types
            )
        ]
    )
    for identifier in candidates:
        instance = coll.instances.get(identifier)
        if instance is None:
            continue
        if not any(
            coll.ontology.registry.type_leq(declared, tr)
            for declared in instance.types
        ):
            continue
        if all(
            _resolve_term(value_ref, env)
            in coll.function_values(identifier, TypeRef(owner.uri, fname))
            for fname, value_ref in node.fields
            if fname in participant_names
        ) and all(
            _field_holds(coll, identifier, fname, _resolve_term(value_ref, env), env)
            for fname, value_ref in node.fields
            if fname not in participant_names
        ):
            if all(
                _holds(coll, child, env, _implicit_source=identifier)
                for child in node.children
            ):
                return True
    if term is not None or node.children:
        return False
    # no declared instance asked for by name: the stored pairs of the linked
    # relation stand in as anonymous reified instances
    if any(fname not in participant_names[:2] for fname, _ in node.fields):
        return False
    binrel_tr = coll._binrel_ref(decl, owner)
    if binrel_tr is None:
        return False
    wanted = {fname: _resolve_term(ref, env) for fname, ref in node.fields}
    for s, t in coll.relation_pairs(binrel_tr):
        positional = dict(zip(participant_names[:2], (s, t)))
        if all(positional.get(f) == v for f, v in wanted.items()):
            return True
    return False


def _relation_atom_holds(coll, node, env, _implicit_source=None, _active=None):
    hit = coll._resolve_near(node.name)
    if hit is None:
        raise EvaluationError(f"unknown relation {node.name!r}")
    owner, kind, decl = hit
    source_ref = node.source
    source = _resolve_term(source_ref, env)
    if source is None:
        source = _implicit_source
    target = _resolve_term(node.target, env)
    if kind == "function":
        if source is None:
            raise EvaluationError(f"function {node.name!r} applied without a source")
        if target is None:
            raise EvaluationError(f"function {node.name!r} applied without a value")
        tr = TypeRef(owner.uri, decl.name)
        values = coll.function_values(source, tr)
        order = node.order or "eq"
        target_hit = owner.maybe_resolve(decl.target) if decl.target else None
        target_decl = target_hit[2] if target_hit and target_hit[1] == "data" else None
        for value in values:
            cmp = _compare(target_decl, value, target)
            if (
                (order == "eq" and cmp == 0)
                or (order == "geq" and cmp >= 0)
                or (order == "leq" and cmp <= 0)
            ):
                if not _check_ref_type(coll, node.target, target):
                    return False
                return True
        return False
    if node.order is not None:
        raise EvaluationError(f"order comparison on relation {node.name!r}")
    if kind == "reified":
        fields = []
        if source is not None and decl.participants:
            fields.append((decl.participants[0].name, Ref(source)))
        if target is not None and len(decl.participants) > 1:
            fields.append((decl.participants[1].name, Ref(target)))
        atom = ObjectAtom(node.name, None, tuple(fields))
        return _reified_atom_holds(coll, hit, atom, env, _active=_active)
    if kind != "relation":
        raise EvaluationError(f"{node.name!r} is not a relation")
    if not _check_ref_type(coll, node.source, source):
        return False
    if not _check_ref_type(coll, node.target, target):
        return False
    tr = TypeRef(owner.uri, decl.name)
    for s, t in coll.relation_pairs(tr):
        if (source is None or s == source) and (target is None or t == target):
            return True
    return False


def _holds(coll, node, env, *, _implicit_source=None, _active=None):
    """Closed-world satisfaction of an expression under an environment."""
    if isinstance(node, ObjectAtom):
        hit = coll._resolve_near(node.type_name)
        if hit is None:
            raise EvaluationError(f"unknown type {node.type_name!r}")
        owner, kind, decl = hit
        if kind == "reified":
            return _reified_atom_holds(coll, hit, node, env, _active=_active)
        if kind != "object":
            raise EvaluationError(f"{node.type_name!r} is not an object type")
        term = _resolve_term(node.inst, env)
        candidates = [term] if term is not None else coll.domain(node.type_name)
        for identifier in candidates:
            if not coll.instance_of(identifier, hit, _active=_active):
                continue
            if node.inst is not None and not _check_ref_type(coll, node.inst, identifier):
                continue
            if not all(
                _field_holds(coll, identifier, fname, _resolve_term(ref, env), env)
                for fname, ref in node.fields
            ):
                continue
            if all(
                _holds(coll, child, env, _implicit_source=identifier, _active=_active)
                for child in node.children
            ):
                return True
        return False
    if isinstance(node, RelationAtom):
        return _relation_atom_holds(
            coll, node, env, _implicit_source=_implicit_source, _active=_active
        )
    if isinstance(node, And):
        return all(
            _holds(coll, arg, env, _implicit_source=_implicit_source, _active=_active)
            for arg in node.args
        )
    if isinstance(node, Or):
        return any(
            _holds(coll, arg, env, _implicit_source=_implicit_source, _active=_active)
            for arg in node.args
        )
    if isinstance(node, Not):
        return not _holds(
            coll, node.arg, env, _implicit_source=_implicit_source, _active=_active
        )
    if isinstance(node, Implies):
        return (not _holds(coll, node.left, env, _active=_active)) or _holds(
            coll, node.right, env, _active=_active
        )
    if isinstance(node, Equivalent):
        return _holds(coll, node.left, env, _active=_active) == _holds(
            coll, node.right, env, _active=_active
        )
    if isinstance(node, Exists):
        for value in coll.domain(node.type):
            if _holds(coll, node.body, {**env, node.var: value}, _active=_active):
                return True
        return False
    if isinstance(node, Forall):
        return all(
            _holds(coll, node.body, {**env, node.var: value}, _active=_active)
            for value in coll.domain(node.type)
        )
    raise EvaluationError(f"cannot evaluate {node!r}")


def evaluate(coll, expr, env=None):
    """Truth of a closed expression over the collection's finite domains."""
    return _holds(coll, expr, dict(env or {}))


def solutions(coll, expr, free):
    """All assignments of the free typed variables satisfying the expression.

    ``free`` maps variable names to type names.  Returns a set of value
    tuples ordered by variable name.
    """
    names = sorted(free)
    for var, type_name in free.items():
        if not type_name:
            raise EvaluationError(f"free variable {var!r} has no type")
    out = set()

    def assign(index, env):
        if index == len(names):
            if _holds(coll, expr, env):
                out.add(tuple(env[name] for name in names))
            return
        var = names[index]
        for value in coll.domain(free[var]):
            env[var] = value
            assign(index + 1, env)
        del env[var]

    assign(0, {})
    return out


# -- validation -------------------------------------------------------------------


def _describe_type(coll, raw):
    hit = coll.ontology.maybe_resolve(raw)
    return raw if hit is None else hit[2].name


def validate(coll):
    """Every well-formedness breach in the collection, in a stable order."""
    violations = []
    registry = coll.ontology.registry

    for identifier, genus in coll.members:
        if not genus:
            continue
        genus_hit = coll.ontology.maybe_resolve(genus)
        if genus_hit is None:
            violations.append(
                Violation(
                    "genus",
                    identifier,
                    f"collection genus {genus!r} is not declared",
                )
            )
            continue
        genus_tr = TypeRef(genus_hit[0].uri, genus_hit[2].name)
        instance = coll.instances[identifier]
        below = [
            tr for tr in instance.types if registry.type_leq(tr, genus_tr)
        ]
        if not below:
            violations.append(
                Violation(
                    "genus",
                    identifier,
                    f"{identifier} is not classified at or below the genus "
                    f"{genus_hit[2].name}",
                )
            )
        for tr in instance.types:
            if not registry.type_leq(tr, genus_tr) and not registry.type_leq(
                genus_tr, tr
            ):
                violations.append(
                    Violation(
                        "genus",
                        identifier,
                        f"{identifier} is classified by {tr.name}, "
                        f"incomparable with the genus {genus_hit[2].name}",
                    )
                )

    for relation_tr, source, target in coll.relations:
        decl = registry.decl_of(relation_tr)
        if not isinstance(decl, BinaryRelationType):
            violations.append(
                Violation(
                    "relation",
                    relation_tr.name,
                    f"{relation_tr.name!r} is not a declared binary relation",
                )
            )
            continue
        if decl.source:
            source_hit = coll._resolve_near(decl.source)
            if source_hit and not coll.instance_of(source, source_hit):
                violations.append(
                    Violation(
                        "relation-source",
                        source,
                        f"{relation_tr.name}({source}, {target}): source "
                        f"{source} is not a {source_hit[2].name}",
                    )
                )
        if decl.target:
            target_hit = coll._resolve_near(decl.target)
            if target_hit is None:
                continue
            if target_hit[1] == "data":
                if not (
                    isinstance(target, str)
                    and coll.is_data_value(target, target_hit[2])
                ):
                    violations.append(
                        Violation(
                            "relation-target",
                            target,
                            f"{relation_tr.name}({source}, {target}): target "
                            f"{target} is not a {target_hit[2].name} value",
                        )
                    )
            elif not coll.instance_of(target, target_hit):
                violations.append(
                    Violation(
                        "relation-target",
                        target,
                        f"{relation_tr.name}({source}, {target}): target "
                        f"{target} is not a {target_hit[2].name}",
                    )
                )

    for identifier, instance in coll.instances.items():
        for fn_tr, values in instance.functions.items():
            decl = registry.decl_of(fn_tr)
            if not isinstance(decl, FunctionType) or not decl.target:
                continue
            target_hit = coll._resolve_near(decl.target)
            if target_hit is None:
                continue
            owner, kind, target_decl = target_hit
            for value in values:
                if kind == "data":
                    if not coll.is_data_value(value, target_decl):
                        violations.append(
                            Violation(
                                "function-value",
                                identifier,
                                f"{identifier}.{fn_tr.name} = {value}: not a "
                                f"{target_decl.name} value",
                            )
                        )
                elif kind == "set":
                    genus = target_decl.genus
                    genus_hit = (
                        coll._resolve_near(genus, owner) if genus else None
                    )
                    if genus_hit and not coll.instance_of(value, genus_hit):
                        violations.append(
                            Violation(
                                "function-value",
                                identifier,
                                f"{identifier}.{fn_tr.name} member {value}: "
                                f"not a {genus_hit[2].name}",
                            )
                        )
                elif kind in ("object", "reified"):
                    if not coll.instance_of(value, target_hit):
                        violations.append(
                            Violation(
                                "function-value",
                                identifier,
                                f"{identifier}.{fn_tr.name} = {value}: not a "
                                f"{target_decl.name}",
                            )
                        )
    return violations


# -- conversion from parsed documents ----------------------------------------------


def _interpretation_types(body):
    """Object types declared inside interpretations, at any nesting depth."""
    from . import markup

    for item in body:
        if isinstance(item, markup.InterpretationDecl):
            for inner in item.body:
                if isinstance(inner, markup.ObjectTypeDecl):
                    yield inner
        elif isinstance(item, markup.TheoryDecl):
            yield from _interpretation_types(item.body)


def ontology_from_decl(decl, registry):
    """Materialize a parsed ontology declaration inside a registry."""
    from . import markup

    ontology = Ontology(decl.name, decl.uri or decl.name, registry=registry)
    for item in decl.body:
        if isinstance(item, markup.ExtendsDecl):
            ontology.add_extends(item.ontology, item.prefix)
        elif isinstance(item, markup.ObjectTypeDecl):
            functions = tuple(
                FunctionType(fn.name, fn.source or item.name, fn.target)
                for fn in item.functions
            )
            parents = (item.type,) if item.type else ()
            ontology.add_object_type(
                item.name,
                parents=parents,
                var=item.var,
                query=item.query,
                functions=functions,
            )
        elif isinstance(item, markup.DataTypeDecl):
            ontology.add_data_type(
                item.name, ordered=item.ordered, values=item.values
            )
        elif isinstance(item, markup.BinaryRelationDecl):
            ontology.add_relation(
                item.name,
                item.source_type,
                item.target_type,
                source_var=item.source,
                target_var=item.target,
                query=item.query,
            )
        elif isinstance(item, markup.FunctionDecl):
            ontology.add_function(item.name, item.source, item.target)
        elif isinstance(item, markup.RelationTypeDecl):
            participants = tuple(
                FunctionType(fn.name, fn.source or item.name, fn.target)
                for fn in item.functions
            )
            ontology.add_reified(
                item.name, binrel=item.binrel, participants=participants
            )
        elif isinstance(item, markup.SetTypeDecl):
            ontology.add_set_type(item.name, item.genus)
        elif isinstance(item, markup.CollectionTypeDecl):
            ontology.add_collection_type(item.name, item.genus)
        elif isinstance(item, markup.SubtypeDecl):
            ontology.add_subtype_edge(item.specific, item.generic)
        elif isinstance(item, markup.EquivalenceDecl):
            ontology.add_equivalence(item.first, item.second)
        elif isinstance(item, (markup.Comment, markup.TheoryDecl,
                               markup.InterpretationDecl, markup.AssertionDecl)):
            continue
    for nested in _interpretation_types(decl.body):
        functions = tuple(
            FunctionType(fn.name, fn.source or nested.name, fn.target)
            for fn in nested.functions
        )
        ontology.add_object_type(
            nested.name,
            parents=(nested.type,) if nested.type else (),
            var=nested.var,
            query=nested.query,
            functions=functions,
        )
    registry.check_acyclic(ontology)
    return ontology


def collection_from_document(document, registry):
    """Merge every collection in a parsed document into one instance model."""
    from . import markup

    collections = [
        decl
        for decl in document.declarations
        if isinstance(decl, markup.CollectionDecl)
    ]
    if not collections:
        raise OntologyError("document declares no collection")
    uri = next((c.ontology for c in collections if c.ontology), None)
    if uri is None:
        raise OntologyError("collection names no governing ontology")
    ontology = registry.load(uri)

    def block_genus(block):
        """The genus attribute, else the declared collection type's genus."""
        if block.genus:
            return block.genus
        for name in (f"Collection.{block.kind}", block.kind):
            hit = ontology.maybe_resolve(name)
            if hit is not None and isinstance(hit[2], CollectionType):
                return hit[2].genus
        return None

    coll = InstanceCollection(
        ontology, name=collections[0].id, genus=block_genus(collections[0])
    )
    for block in collections:
        _load_collection_body(coll, block, block_genus(block))
    return coll


def _load_collection_body(coll, block, genus=None):
    from . import markup

    genus = genus if genus is not None else block.genus
    for item in block.body:
        if isinstance(item, markup.Comment):
            continue
        if isinstance(item, markup.RelationApp):
            source = item.source
            target = item.target
            if source is None or target is None:
                raise OntologyError(
                    f"relation {item.name!r} in a collection needs both ends"
                )
            coll.add_relation(
                item.name,
                source.name,
                target.name,
                source_type=source.type,
                target_type=target.type,
            )
            continue
        if isinstance(item, markup.InstanceDecl):
            _load_instance(coll, item, genus)
            continue
        raise OntologyError(f"unexpected {type(item).__name__} in a collection")


def _load_instance(coll, item, genus):
    from . import markup

    identifier = item.id
    coll.add_instance(identifier, (item.type_name,), declared=True, **item.metadata)
    coll.add_member(identifier, genus)
    for field_name, ref in item.fields:
        hit = coll.ontology.maybe_resolve(field_name)
        if hit is not None and hit[1] == "relation":
            coll.add_relation(
                field_name, identifier, ref.name, target_type=ref.type
            )
        else:
            coll.set_function(identifier, field_name, ref.name, value_type=ref.type)
    for child in item.body:
        if isinstance(child, markup.Comment):
            continue
        if isinstance(child, markup.ClassificationDecl):
            coll.add_instance(identifier, (child.type,))
            continue
        if isinstance(child, markup.SetValue):
            for member in child.members:
                coll.set_function(
                    identifier, child.name, member.name, value_type=member.type
                )
            continue
        if isinstance(child, markup.RelationApp):
            source = child.source.name if child.source else identifier
            hit = coll.ontology.maybe_resolve(child.name)
            if child.target is None:
                raise OntologyError(
                    f"relation {child.name!r} on {identifier} has no target"
                )
            if hit is not None and hit[1] == "function":
                coll.set_function(
                    source,
                    child.name,
                    child.target.name,
                    value_type=child.target.type,
                )
            else:
                coll.add_relation(
                    child.name,
                    source,
                    child.target.name,
                    source_type=child.source.type if child.source else None,
                    target_type=child.target.type,
                )
            continue
        if isinstance(child, markup.InstanceDecl):
            _load_instance(coll, child, None)
            continue
        raise OntologyError(
            f"unexpected {type(child).__name__} inside instance {identifier!r}"
        )
