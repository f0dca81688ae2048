"""Parsing and serialization of the conceptual-knowledge markup format.

Documents come in four kinds, decided by the root element: an ontology
(``<Ontology>``), a set of theories (``<Theory>`` or ``<Theories>``), a
collection of instances (``<Collection.X>``), or a knowledge base mixing all
of them (``<OML>``).

The schema is fully closed: every element is explicitly terminated, the two
sides of a sequent are separated by an empty ``<entails/>``, and prose lives
in ``<comment>`` elements.  Structural positions (ontology bodies, theory
bodies, interpretation skeletons) accept a fixed vocabulary and reject
anything else with its source position; instance bodies and expressions are
open, since their element names are type and relation names.

An element is read as a relation application when it carries a
``source.Instance`` or ``target.Instance`` attribute, and as an instance or
object atom otherwise.  References in attribute values follow the
``[prefix:]Type#identifier`` form, with single quotes around parts that
contain spaces.

``serialize`` emits a canonical rendering: two-space indentation, one
element per line, attributes in a fixed order per element.  Parsing a
serialized document yields an equal document, and serialization is
idempotent on its own output.
"""

from __future__ import annotations

import xml.parsers.expat
from dataclasses import dataclass, field as dc_field
from itertools import combinations

from . import theory as theory_mod
from .errors import MarkupError
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
    parse_ref,
)

RelationApp = RelationAtom

_META_ATTRS = ("about", "text", "image", "description")

_TYPE_TAGS = {
    "Type.Object",
    "Type.Data",
    "Type.BinaryRelation",
    "Type.Function",
    "Type.Relation",
    "Type.Set",
    "Type.Collection",
}

_LOGIC_TAGS = {
    "and": And,
    "or": Or,
    "not": Not,
    "implies": Implies,
    "equivalent": Equivalent,
    "exists": Exists,
    "forall": Forall,
}


# -- document model -----------------------------------------------------------


@dataclass(frozen=True)
class Comment:
    text: str


@dataclass(frozen=True)
class ExtendsDecl:
    ontology: str
    prefix: str


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    source: str | None = None
    target: str | None = None


@dataclass(frozen=True)
class ObjectTypeDecl:
    name: str
    var: str | None = None
    type: str | None = None
    body: tuple = ()

    @property
    def functions(self):
        return tuple(item for item in self.body if isinstance(item, FunctionDecl))

    @property
    def query(self):
        for item in self.body:
            if not isinstance(item, (FunctionDecl, Comment)):
                return item
        return None


@dataclass(frozen=True)
class DataTypeDecl:
    name: str
    ordered: bool = False
    values: tuple = ()
    body: tuple = ()


@dataclass(frozen=True)
class BinaryRelationDecl:
    name: str
    source: str | None = None
    source_type: str | None = None
    target: str | None = None
    target_type: str | None = None
    body: tuple = ()

    @property
    def query(self):
        for item in self.body:
            if not isinstance(item, Comment):
                return item
        return None


@dataclass(frozen=True)
class RelationTypeDecl:
    name: str
    binrel: str | None = None
    body: tuple = ()

    @property
    def functions(self):
        return tuple(item for item in self.body if isinstance(item, FunctionDecl))


@dataclass(frozen=True)
class SetTypeDecl:
    name: str
    genus: str | None = None


@dataclass(frozen=True)
class CollectionTypeDecl:
    name: str
    genus: str | None = None


@dataclass(frozen=True)
class SubtypeDecl:
    specific: str
    generic: str


@dataclass(frozen=True)
class EquivalenceDecl:
    first: str
    second: str


@dataclass(frozen=True)
class SequentDecl:
    antecedent: tuple
    consequent: tuple


@dataclass(frozen=True)
class PartitionDecl:
    genus: str
    parts: tuple


@dataclass(frozen=True)
class SubrangeDecl:
    var: str
    begin: str
    end: str


@dataclass(frozen=True)
class WhereDecl:
    body: tuple


@dataclass(frozen=True)
class ObjectTemplate:
    var: str
    type: str
    body: tuple


@dataclass(frozen=True)
class ForeachDecl:
    var: str
    type: str
    body: tuple

    @property
    def where(self):
        for item in self.body:
            if isinstance(item, WhereDecl):
                for inner in item.body:
                    if isinstance(inner, SubrangeDecl):
                        return inner
        return None

    @property
    def template(self):
        for item in self.body:
            if isinstance(item, ObjectTemplate):
                return item
        return None


@dataclass(frozen=True)
class InterpretationDecl:
    name: str | None
    function_type: str | None
    body: tuple


@dataclass(frozen=True)
class TheoryDecl:
    name: str
    genus: str | None
    body: tuple

    @property
    def type_decls(self):
        return tuple(item for item in self.body if isinstance(item, ObjectTypeDecl))

    @property
    def constraints(self):
        return tuple(
            item
            for item in self.body
            if isinstance(item, (SequentDecl, SubtypeDecl, PartitionDecl))
        )

    @property
    def interpretations(self):
        return tuple(
            item for item in self.body if isinstance(item, InterpretationDecl)
        )


@dataclass(frozen=True)
class OntologyDecl:
    name: str | None
    uri: str | None
    body: tuple


@dataclass(frozen=True)
class ClassificationDecl:
    type: str


@dataclass(frozen=True)
class SetValue:
    name: str
    set_type: str
    members: tuple


@dataclass(frozen=True)
class InstanceDecl:
    type_name: str
    id: str
    fields: tuple = ()
    meta: tuple = ()
    body: tuple = ()

    @property
    def metadata(self):
        return dict(self.meta)


@dataclass(frozen=True)
class CollectionDecl:
    kind: str
    id: str | None
    genus: str | None
    ontology: str | None
    body: tuple


@dataclass(frozen=True)
class AssertionDecl:
    id: str | None
    body: tuple


@dataclass(frozen=True)
class Document:
    kind: str
    declarations: tuple


# -- raw XML layer ---------------------------------------------------------------


@dataclass
class _Element:
    tag: str
    attrs: dict
    line: int
    column: int
    children: list = dc_field(default_factory=list)
    text: str = ""


def _read_tree(text):
    parser = xml.parsers.expat.ParserCreate()
    root = None
    stack = []

    def start(tag, attrs):
        nonlocal root
        element = _Element(
            tag,
            {k: v.strip() for k, v in attrs.items()},
            parser.CurrentLineNumber,
            parser.CurrentColumnNumber + 1,
        )
        if stack:
            stack[-1].children.append(element)
        else:
            root = element
        stack.append(element)

    def end(tag):
        stack.pop()

    def chars(data):
        if stack:
            stack[-1].text += data

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(text, True)
    except xml.parsers.expat.ExpatError as exc:
        raise MarkupError(
            xml.parsers.expat.errors.messages[exc.code],
            line=exc.lineno,
            column=exc.offset + 1,
        ) from exc
    if root is None:
        raise MarkupError("empty document")
    return root


def _fail(element, message):
    raise MarkupError(message, line=element.line, column=element.column)


def _require(element, attr):
    value = element.attrs.get(attr)
    if value is None or not value.strip():
        _fail(element, f"<{element.tag}> requires a {attr!r} attribute")
    return value.strip()


def _no_text(element):
    if element.text.strip():
        _fail(element, f"<{element.tag}> does not take text content")


def _comment_text(element):
    return " ".join(element.text.split())


# -- typed parsing ------------------------------------------------------------------


def _is_relation_app(element):
    return "source.Instance" in element.attrs or "target.Instance" in element.attrs


def _parse_expression(element):
    lowered = element.tag.lower()
    if lowered in _LOGIC_TAGS:
        children = [
            _parse_expression(child)
            for child in element.children
            if child.tag != "comment"
        ]
        if lowered in ("and", "or"):
            if not children:
                _fail(element, f"<{element.tag}> needs at least one operand")
            return _LOGIC_TAGS[lowered](tuple(children))
        if lowered == "not":
            if len(children) != 1:
                _fail(element, "<Not> takes exactly one operand")
            return Not(children[0])
        if lowered in ("implies", "equivalent"):
            if len(children) != 2:
                _fail(element, f"<{element.tag}> takes exactly two operands")
            return _LOGIC_TAGS[lowered](children[0], children[1])
        var = _require(element, "var")
        type_name = _require(element, "type")
        if len(children) != 1:
            _fail(element, f"<{element.tag}> takes exactly one body expression")
        return _LOGIC_TAGS[lowered](var, type_name, children[0])
    if element.tag.startswith("Type."):
        _fail(element, f"<{element.tag}> is not allowed inside an expression")
    if _is_relation_app(element):
        if element.children:
            _fail(element, "a relation application has no children")
        source = element.attrs.get("source.Instance")
        target = element.attrs.get("target.Instance")
        return RelationAtom(
            element.tag,
            parse_ref(source) if source else None,
            parse_ref(target) if target else None,
            element.attrs.get("order"),
        )
    inst = None
    fields = []
    for key, value in element.attrs.items():
        if key == "id":
            inst = parse_ref(value)
        elif key == "order":
            _fail(element, "order belongs on a relation application")
        else:
            fields.append((key, parse_ref(value)))
    children = tuple(
        _parse_expression(child)
        for child in element.children
        if child.tag != "comment"
    )
    return ObjectAtom(element.tag, inst, tuple(fields), children)


def _parse_li_names(element, attr):
    names = []
    for child in element.children:
        if child.tag == "comment":
            continue
        if child.tag != "li":
            _fail(child, f"<{element.tag}> only contains <li> items")
        names.append(_require(child, attr))
    return tuple(names)


def _parse_sequents(element):
    """One <sequent> with n separators yields n binary sequents (chains split)."""
    segments = [[]]
    for child in element.children:
        if child.tag == "comment":
            continue
        if child.tag == "entails":
            segments.append([])
        elif child.tag == "li":
            segments[-1].append(_require(child, "type"))
        else:
            _fail(child, "<sequent> only contains <li> and <entails/>")
    if len(segments) == 1:
        _fail(element, "<sequent> needs an <entails/> separator")
    return tuple(
        SequentDecl(tuple(left), tuple(right))
        for left, right in zip(segments, segments[1:])
    )


def _parse_function(element):
    _no_text(element)
    if element.children:
        _fail(element, "<Type.Function> has no children")
    return FunctionDecl(
        _require(element, "name"),
        element.attrs.get("source.Type"),
        element.attrs.get("target.Type"),
    )


def _parse_object_type(element):
    body = []
    for child in element.children:
        if child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        elif child.tag == "Type.Function":
            body.append(_parse_function(child))
        elif child.tag in _TYPE_TAGS or child.tag.startswith("Type."):
            _fail(child, f"<{child.tag}> is not allowed inside <Type.Object>")
        else:
            body.append(_parse_expression(child))
    return ObjectTypeDecl(
        _require(element, "name"),
        element.attrs.get("var"),
        element.attrs.get("type"),
        tuple(body),
    )


def _parse_data_type(element):
    values = []
    body = []
    for child in element.children:
        if child.tag == "li":
            values.append(_require(child, "value"))
        elif child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            _fail(child, "<Type.Data> only contains <li> values")
    ordered = element.attrs.get("ordered", "no").lower() in ("yes", "true")
    return DataTypeDecl(
        _require(element, "name"), ordered, tuple(values), tuple(body)
    )


def _parse_binary_relation(element):
    body = []
    for child in element.children:
        if child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        elif child.tag.startswith("Type."):
            _fail(child, f"<{child.tag}> is not allowed inside <Type.BinaryRelation>")
        else:
            body.append(_parse_expression(child))
    return BinaryRelationDecl(
        _require(element, "name"),
        element.attrs.get("source"),
        element.attrs.get("source.Type"),
        element.attrs.get("target"),
        element.attrs.get("target.Type"),
        tuple(body),
    )


def _parse_relation_type(element):
    body = []
    for child in element.children:
        if child.tag == "Type.Function":
            body.append(_parse_function(child))
        elif child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            _fail(child, "<Type.Relation> only contains participant functions")
    return RelationTypeDecl(
        _require(element, "name"), element.attrs.get("binrel"), tuple(body)
    )


def _parse_type_element(element):
    if element.tag == "Type.Object":
        return _parse_object_type(element)
    if element.tag == "Type.Data":
        return _parse_data_type(element)
    if element.tag == "Type.BinaryRelation":
        return _parse_binary_relation(element)
    if element.tag == "Type.Function":
        return _parse_function(element)
    if element.tag == "Type.Relation":
        return _parse_relation_type(element)
    if element.tag == "Type.Set":
        return SetTypeDecl(_require(element, "name"), element.attrs.get("genus"))
    if element.tag == "Type.Collection":
        return CollectionTypeDecl(
            _require(element, "name"), element.attrs.get("genus")
        )
    _fail(element, f"unknown declaration <{element.tag}>")


def _parse_object_template(element):
    body = []
    for child in element.children:
        if child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            body.append(_parse_expression(child))
    return ObjectTemplate(
        _require(element, "var"), _require(element, "type"), tuple(body)
    )


def _parse_foreach(element):
    body = []
    for child in element.children:
        if child.tag == "Where":
            inner = []
            for sub in child.children:
                if sub.tag == "subrange":
                    inner.append(
                        SubrangeDecl(
                            _require(sub, "var"),
                            _require(sub, "begin"),
                            _require(sub, "end"),
                        )
                    )
                elif sub.tag == "comment":
                    inner.append(Comment(_comment_text(sub)))
                else:
                    _fail(sub, "<Where> only accepts <subrange> bounds")
            body.append(WhereDecl(tuple(inner)))
        elif child.tag == "Object":
            body.append(_parse_object_template(child))
        elif child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            _fail(child, f"<{child.tag}> is not allowed inside <Foreach>")
    return ForeachDecl(
        _require(element, "var"), _require(element, "type"), tuple(body)
    )


def _parse_interpretation(element):
    body = []
    for child in element.children:
        if child.tag == "Foreach":
            body.append(_parse_foreach(child))
        elif child.tag == "Type.Object":
            body.append(_parse_object_type(child))
        elif child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            _fail(child, f"<{child.tag}> is not allowed inside <Interpretation>")
    return InterpretationDecl(
        element.attrs.get("name"), element.attrs.get("function.Type"), tuple(body)
    )


def _parse_theory(element):
    body = []
    for child in element.children:
        if child.tag == "Type.Object":
            body.append(_parse_object_type(child))
        elif child.tag == "sequent":
            body.extend(_parse_sequents(child))
        elif child.tag == "subtype":
            body.append(
                SubtypeDecl(_require(child, "specific"), _require(child, "generic"))
            )
        elif child.tag == "partition":
            genus = child.attrs.get("genus") or element.attrs.get("genus")
            if not genus:
                _fail(child, "<partition> needs a genus attribute")
            body.append(PartitionDecl(genus, _parse_li_names(child, "type")))
        elif child.tag == "Interpretation":
            body.append(_parse_interpretation(child))
        elif child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            _fail(child, f"<{child.tag}> is not allowed inside <Theory>")
    return TheoryDecl(
        _require(element, "name"), element.attrs.get("genus"), tuple(body)
    )


def _parse_ontology(element):
    body = []
    for child in element.children:
        if child.tag == "extends":
            body.append(
                ExtendsDecl(_require(child, "ontology"), _require(child, "prefix"))
            )
        elif child.tag.startswith("Type."):
            body.append(_parse_type_element(child))
        elif child.tag == "subtype":
            body.append(
                SubtypeDecl(_require(child, "specific"), _require(child, "generic"))
            )
        elif child.tag == "equivalence":
            body.append(
                EquivalenceDecl(_require(child, "first"), _require(child, "second"))
            )
        elif child.tag == "Theory":
            body.append(_parse_theory(child))
        elif child.tag == "Interpretation":
            body.append(_parse_interpretation(child))
        elif child.tag == "Assertion":
            body.append(_parse_assertion(child))
        elif child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            _fail(child, f"<{child.tag}> is not allowed inside <Ontology>")
    return OntologyDecl(
        element.attrs.get("name"), element.attrs.get("uri"), tuple(body)
    )


def _parse_assertion(element):
    body = []
    for child in element.children:
        if child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        else:
            body.append(_parse_expression(child))
    return AssertionDecl(element.attrs.get("id"), tuple(body))


def _parse_set_value(element):
    inner = [child for child in element.children if child.tag != "comment"]
    holder = inner[0]
    members = []
    for li in holder.children:
        if li.tag == "comment":
            continue
        if li.tag != "li":
            _fail(li, f"<{holder.tag}> only contains <li> members")
        ref = li.attrs.get("instance") or li.attrs.get("value")
        if not ref:
            _fail(li, "<li> needs an instance or value attribute")
        members.append(parse_ref(ref))
    return SetValue(element.tag, holder.tag, tuple(members))


def _looks_like_set_value(element):
    if element.attrs or len(element.children) != 1:
        return False
    holder = element.children[0]
    return bool(holder.children) and all(
        child.tag in ("li", "comment") for child in holder.children
    )


def _parse_instance(element, seen_ids):
    identifier = _require(element, "id")
    if identifier in seen_ids:
        _fail(element, f"duplicate instance id {identifier!r}")
    seen_ids.add(identifier)
    fields = []
    meta = {}
    for key, value in element.attrs.items():
        if key == "id":
            continue
        if key in _META_ATTRS:
            meta[key] = value
        else:
            fields.append((key, parse_ref(value)))
    body = []
    for child in element.children:
        if child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        elif child.tag == "classification":
            body.append(ClassificationDecl(_require(child, "type")))
        elif _is_relation_app(child):
            body.append(_parse_expression(child))
        elif _looks_like_set_value(child):
            body.append(_parse_set_value(child))
        elif "id" in child.attrs:
            body.append(_parse_instance(child, seen_ids))
        else:
            _fail(child, f"cannot read <{child.tag}> inside an instance")
    ordered_meta = tuple((k, meta[k]) for k in _META_ATTRS if k in meta)
    return InstanceDecl(
        element.tag, identifier, tuple(fields), ordered_meta, tuple(body)
    )


def _parse_collection(element):
    kind = element.tag.partition(".")[2]
    body = []
    seen_ids = set()
    for child in element.children:
        if child.tag == "comment":
            body.append(Comment(_comment_text(child)))
        elif _is_relation_app(child):
            body.append(_parse_expression(child))
        elif child.tag.startswith(("Type.", "Collection.")):
            _fail(child, f"<{child.tag}> is not allowed inside a collection")
        else:
            body.append(_parse_instance(child, seen_ids))
    return CollectionDecl(
        kind,
        element.attrs.get("id"),
        element.attrs.get("genus"),
        element.attrs.get("ontology"),
        tuple(body),
    )


def _parse_root(element):
    if element.tag == "OML":
        declarations = []
        for child in element.children:
            if child.tag == "Ontology":
                declarations.append(_parse_ontology(child))
            elif child.tag == "Theory":
                declarations.append(_parse_theory(child))
            elif child.tag == "Theories":
                declarations.extend(_parse_theories(child))
            elif child.tag.startswith("Collection."):
                declarations.append(_parse_collection(child))
            elif child.tag == "Assertion":
                declarations.append(_parse_assertion(child))
            elif child.tag == "comment":
                declarations.append(Comment(_comment_text(child)))
            else:
                _fail(child, f"<{child.tag}> is not allowed at the top level")
        return Document("knowledge-base", tuple(declarations))
    if element.tag == "Ontology":
        return Document("ontology", (_parse_ontology(element),))
    if element.tag == "Theory":
        return Document("theory-set", (_parse_theory(element),))
    if element.tag == "Theories":
        return Document("theory-set", tuple(_parse_theories(element)))
    if element.tag.startswith("Collection."):
        return Document("collection", (_parse_collection(element),))
    _fail(element, f"<{element.tag}> is not a recognized document root")


def _parse_theories(element):
    out = []
    for child in element.children:
        if child.tag == "Theory":
            out.append(_parse_theory(child))
        elif child.tag == "comment":
            out.append(Comment(_comment_text(child)))
        else:
            _fail(child, f"<{child.tag}> is not allowed inside <Theories>")
    return out


def parse(text):
    """Parse a document; positions are reported on every structural error."""
    return _parse_root(_read_tree(text))


def parse_file(path):
    with open(path, encoding="utf-8") as handle:
        return parse(handle.read())


def parse_expression(text):
    """Parse a single expression element, e.g. a query given on the CLI."""
    return _parse_expression(_read_tree(text))


# -- canonical serialization ----------------------------------------------------


def _escape_attr(value):
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _escape_text(value):
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _ref_text(ref):
    def quote(part):
        return f"'{part}'" if (" " in part or "#" in part) else part

    if ref.type:
        return f"{quote(ref.type)}#{quote(ref.name)}"
    return ref.name


class _Writer:
    def __init__(self):
        self.lines = []

    def line(self, depth, text):
        self.lines.append("  " * depth + text)

    def tag(self, depth, name, attrs=(), *, close=False):
        parts = [name]
        for key, value in attrs:
            if value is None:
                continue
            parts.append(f'{key}="{_escape_attr(value)}"')
        slash = "/" if close else ""
        self.line(depth, f"<{' '.join(parts)}{slash}>")

    def wrap(self, depth, name, attrs, children, emit_child):
        if not children:
            self.tag(depth, name, attrs, close=True)
            return
        self.tag(depth, name, attrs)
        for child in children:
            emit_child(child, depth + 1)
        self.line(depth, f"</{name}>")


def _emit_expression(writer, node, depth):
    if isinstance(node, ObjectAtom):
        attrs = [("id", _ref_text(node.inst) if node.inst else None)]
        attrs += [(name, _ref_text(ref)) for name, ref in node.fields]
        writer.wrap(depth, node.type_name, attrs, node.children, lambda c, d: _emit_expression(writer, c, d))
        return
    if isinstance(node, RelationAtom):
        attrs = [
            ("order", node.order),
            ("source.Instance", _ref_text(node.source) if node.source else None),
            ("target.Instance", _ref_text(node.target) if node.target else None),
        ]
        writer.tag(depth, node.name, attrs, close=True)
        return
    if isinstance(node, (And, Or)):
        name = "And" if isinstance(node, And) else "Or"
        writer.wrap(depth, name, (), node.args, lambda c, d: _emit_expression(writer, c, d))
        return
    if isinstance(node, Not):
        writer.wrap(depth, "Not", (), (node.arg,), lambda c, d: _emit_expression(writer, c, d))
        return
    if isinstance(node, (Implies, Equivalent)):
        name = "Implies" if isinstance(node, Implies) else "Equivalent"
        writer.wrap(depth, name, (), (node.left, node.right), lambda c, d: _emit_expression(writer, c, d))
        return
    if isinstance(node, (Exists, Forall)):
        name = "Exists" if isinstance(node, Exists) else "Forall"
        writer.wrap(
            depth,
            name,
            (("var", node.var), ("type", node.type)),
            (node.body,),
            lambda c, d: _emit_expression(writer, c, d),
        )
        return
    if isinstance(node, Comment):
        writer.line(depth, f"<comment>{_escape_text(node.text)}</comment>")
        return
    raise MarkupError(f"cannot serialize expression node {node!r}")


def _emit_node(writer, node, depth):
    emit = lambda child, d: _emit_node(writer, child, d)
    if isinstance(node, Comment):
        writer.line(depth, f"<comment>{_escape_text(node.text)}</comment>")
    elif isinstance(node, ExtendsDecl):
        writer.tag(
            depth,
            "extends",
            (("ontology", node.ontology), ("prefix", node.prefix)),
            close=True,
        )
    elif isinstance(node, ObjectTypeDecl):
        attrs = (("name", node.name), ("var", node.var), ("type", node.type))
        writer.wrap(depth, "Type.Object", attrs, node.body, emit)
    elif isinstance(node, DataTypeDecl):
        attrs = (("name", node.name), ("ordered", "yes" if node.ordered else None))
        children = tuple(node.values) + node.body
        if not children:
            writer.tag(depth, "Type.Data", attrs, close=True)
        else:
            writer.tag(depth, "Type.Data", attrs)
            for value in node.values:
                writer.tag(depth + 1, "li", (("value", value),), close=True)
            for item in node.body:
                _emit_node(writer, item, depth + 1)
            writer.line(depth, "</Type.Data>")
    elif isinstance(node, BinaryRelationDecl):
        attrs = (
            ("name", node.name),
            ("source", node.source),
            ("source.Type", node.source_type),
            ("target", node.target),
            ("target.Type", node.target_type),
        )
        writer.wrap(depth, "Type.BinaryRelation", attrs, node.body, emit)
    elif isinstance(node, FunctionDecl):
        attrs = (
            ("name", node.name),
            ("source.Type", node.source),
            ("target.Type", node.target),
        )
        writer.tag(depth, "Type.Function", attrs, close=True)
    elif isinstance(node, RelationTypeDecl):
        attrs = (("name", node.name), ("binrel", node.binrel))
        writer.wrap(depth, "Type.Relation", attrs, node.body, emit)
    elif isinstance(node, SetTypeDecl):
        writer.tag(
            depth, "Type.Set", (("name", node.name), ("genus", node.genus)), close=True
        )
    elif isinstance(node, CollectionTypeDecl):
        writer.tag(
            depth,
            "Type.Collection",
            (("name", node.name), ("genus", node.genus)),
            close=True,
        )
    elif isinstance(node, SubtypeDecl):
        writer.tag(
            depth,
            "subtype",
            (("specific", node.specific), ("generic", node.generic)),
            close=True,
        )
    elif isinstance(node, EquivalenceDecl):
        writer.tag(
            depth,
            "equivalence",
            (("first", node.first), ("second", node.second)),
            close=True,
        )
    elif isinstance(node, SequentDecl):
        writer.tag(depth, "sequent", ())
        for name in node.antecedent:
            writer.tag(depth + 1, "li", (("type", name),), close=True)
        writer.tag(depth + 1, "entails", (), close=True)
        for name in node.consequent:
            writer.tag(depth + 1, "li", (("type", name),), close=True)
        writer.line(depth, "</sequent>")
    elif isinstance(node, PartitionDecl):
        writer.tag(depth, "partition", (("genus", node.genus),))
        for name in node.parts:
            writer.tag(depth + 1, "li", (("type", name),), close=True)
        writer.line(depth, "</partition>")
    elif isinstance(node, WhereDecl):
        writer.wrap(depth, "Where", (), node.body, emit)
    elif isinstance(node, SubrangeDecl):
        attrs = (("var", node.var), ("begin", node.begin), ("end", node.end))
        writer.tag(depth, "subrange", attrs, close=True)
    elif isinstance(node, ObjectTemplate):
        attrs = (("var", node.var), ("type", node.type))
        writer.wrap(
            depth,
            "Object",
            attrs,
            node.body,
            lambda c, d: (
                _emit_node(writer, c, d)
                if isinstance(c, Comment)
                else _emit_expression(writer, c, d)
            ),
        )
    elif isinstance(node, ForeachDecl):
        attrs = (("var", node.var), ("type", node.type))
        writer.wrap(depth, "Foreach", attrs, node.body, emit)
    elif isinstance(node, InterpretationDecl):
        attrs = (("name", node.name), ("function.Type", node.function_type))
        writer.wrap(depth, "Interpretation", attrs, node.body, emit)
    elif isinstance(node, TheoryDecl):
        attrs = (("name", node.name), ("genus", node.genus))
        writer.wrap(depth, "Theory", attrs, node.body, emit)
    elif isinstance(node, OntologyDecl):
        attrs = (("name", node.name), ("uri", node.uri))
        writer.wrap(depth, "Ontology", attrs, node.body, emit)
    elif isinstance(node, ClassificationDecl):
        writer.tag(depth, "classification", (("type", node.type),), close=True)
    elif isinstance(node, SetValue):
        writer.tag(depth, node.name, ())
        writer.tag(depth + 1, node.set_type, ())
        for member in node.members:
            writer.tag(
                depth + 2, "li", (("instance", _ref_text(member)),), close=True
            )
        writer.line(depth + 1, f"</{node.set_type}>")
        writer.line(depth, f"</{node.name}>")
    elif isinstance(node, InstanceDecl):
        attrs = [("id", node.id)]
        attrs += [(name, _ref_text(ref)) for name, ref in node.fields]
        attrs += list(node.meta)
        writer.wrap(depth, node.type_name, attrs, node.body, emit)
    elif isinstance(node, CollectionDecl):
        attrs = (
            ("id", node.id),
            ("genus", node.genus),
            ("ontology", node.ontology),
        )
        writer.wrap(depth, f"Collection.{node.kind}", attrs, node.body, emit)
    elif isinstance(node, AssertionDecl):
        writer.wrap(
            depth,
            "Assertion",
            (("id", node.id),),
            node.body,
            lambda c, d: (
                _emit_node(writer, c, d)
                if isinstance(c, Comment)
                else _emit_expression(writer, c, d)
            ),
        )
    else:
        _emit_expression(writer, node, depth)


def serialize(document):
    """Canonical text for a document; parsing it back yields an equal value."""
    writer = _Writer()
    declarations = document.declarations
    if document.kind == "knowledge-base":
        writer.wrap(0, "OML", (), declarations, lambda c, d: _emit_node(writer, c, d))
    elif document.kind == "theory-set" and len(declarations) != 1:
        writer.wrap(
            0, "Theories", (), declarations, lambda c, d: _emit_node(writer, c, d)
        )
    elif len(declarations) == 1:
        _emit_node(writer, declarations[0], 0)
    else:
        writer.wrap(0, "OML", (), declarations, lambda c, d: _emit_node(writer, c, d))
    return "\n".join(writer.lines) + "\n"


def serialize_expression(expr):
    writer = _Writer()
    _emit_expression(writer, expr, 0)
    return "\n".join(writer.lines) + "\n"


# -- desugaring ---------------------------------------------------------------------


def _desugared_constraints(item):
    """Sequent declarations for one constraint, in declaration order."""
    if isinstance(item, SubtypeDecl):
        theory_mod.expand_subtype(item.specific, item.generic)
        return (SequentDecl((item.specific,), (item.generic,)),)
    if isinstance(item, PartitionDecl):
        theory_mod.expand_partition(item.genus, item.parts)
        out = [SequentDecl((part,), (item.genus,)) for part in item.parts]
        out.append(SequentDecl((item.genus,), tuple(item.parts)))
        out.extend(
            SequentDecl((left, right), ())
            for left, right in combinations(item.parts, 2)
        )
        return tuple(out)
    return (item,)


def desugar(document):
    """Replace subtype and partition abbreviations with plain sequents."""

    def rewrite_theory(decl):
        body = []
        for item in decl.body:
            body.extend(_desugared_constraints(item))
        return TheoryDecl(decl.name, decl.genus, tuple(body))

    def rewrite(decl):
        if isinstance(decl, TheoryDecl):
            return rewrite_theory(decl)
        if isinstance(decl, OntologyDecl):
            return OntologyDecl(
                decl.name,
                decl.uri,
                tuple(
                    rewrite_theory(item) if isinstance(item, TheoryDecl) else item
                    for item in decl.body
                ),
            )
        return decl

    return Document(
        document.kind, tuple(rewrite(decl) for decl in document.declarations)
    )


def theory_from_decl(decl):
    """Semantic theory for a parsed theory declaration.

    Types are the declared type elements plus every name a constraint
    mentions, in first-appearance order; the genus never counts as a type.
    """
    types = [t.name for t in decl.type_decls]
    sequents = []
    for item in decl.body:
        if isinstance(item, SequentDecl):
            sequents.append(theory_mod.Sequent(item.antecedent, item.consequent))
        elif isinstance(item, SubtypeDecl):
            sequents.append(theory_mod.expand_subtype(item.specific, item.generic))
        elif isinstance(item, PartitionDecl):
            sequents.extend(theory_mod.expand_partition(item.genus, item.parts))
    genus = decl.genus or decl.name
    for seq in sequents:
        for name in sorted(seq.antecedent) + sorted(seq.consequent):
            if name not in types and name != genus:
                types.append(name)
    return theory_mod.Theory(decl.name, genus, tuple(types), tuple(sequents))
