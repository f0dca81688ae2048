"""Formal contexts and their derivation operators.

A formal context is a triple (G, M, I): a finite ordered set of objects G, a
finite ordered set of attributes M, and an incidence relation I stating which
object has which attribute.  Rows and columns are stored twice, as integer
bitmasks, so both derivation directions are single AND-folds.

The two derivation operators form a Galois connection between the powersets
of G and M:

    intent(X) = set of attributes shared by every object in X
    extent(A) = set of objects having every attribute in A

with the usual conventions intent({}) = M and extent({}) = G.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    AppositionError,
    ContextError,
    ContextFormatError,
    InvalidSetError,
)


def _mask_to_indices(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _indices_to_mask(indices):
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def _clean_names(names, kind):
    cleaned = []
    seen = set()
    for raw in names:
        if not isinstance(raw, str):
            raise ContextError(f"{kind} name {raw!r} is not a string")
        name = raw.strip()
        if not name:
            raise ContextError(f"empty {kind} name")
        if name in seen:
            raise ContextError(f"duplicate {kind} name {name!r}")
        seen.add(name)
        cleaned.append(name)
    return tuple(cleaned)


@dataclass(frozen=True)
class ObjectSet:
    """A subset of a context's objects, held as index positions."""

    context: "FormalContext"
    indices: frozenset

    @property
    def names(self):
        objs = self.context.objects
        return tuple(objs[i] for i in sorted(self.indices))

    @property
    def mask(self):
        return _indices_to_mask(self.indices)

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, name):
        return name in self.names


@dataclass(frozen=True)
class AttributeSet:
    """A subset of a context's attributes, held as index positions."""

    context: "FormalContext"
    indices: frozenset

    @property
    def names(self):
        attrs = self.context.attributes
        return tuple(attrs[i] for i in sorted(self.indices))

    @property
    def mask(self):
        return _indices_to_mask(self.indices)

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, name):
        return name in self.names


class FormalContext:
    """Immutable object/attribute incidence table.

    ``incidence`` is a matrix of truthy values, one row per object.  Names
    are trimmed; duplicates and empty names are rejected.  Optional alias
    tables map canonical names to display labels; lookups accept either.
    """

    __slots__ = (
        "name",
        "objects",
        "attributes",
        "rows",
        "cols",
        "object_labels",
        "attribute_labels",
        "_oindex",
        "_aindex",
    )

    def __init__(
        self,
        objects,
        attributes,
        incidence,
        *,
        name=None,
        object_labels=None,
        attribute_labels=None,
    ):
        objects = _clean_names(objects, "object")
        attributes = _clean_names(attributes, "attribute")
        matrix = [list(row) for row in incidence]
        if len(matrix) != len(objects):
            raise ContextError(
                f"{len(objects)} objects but {len(matrix)} incidence rows"
            )
        rows = []
        for obj, row in zip(objects, matrix):
            if len(row) != len(attributes):
                raise ContextError(
                    f"row for {obj!r} has {len(row)} entries, "
                    f"expected {len(attributes)}"
                )
            mask = 0
            for j, cell in enumerate(row):
                if cell:
                    mask |= 1 << j
            rows.append(mask)
        cols = []
        for j in range(len(attributes)):
            bit = 1 << j
            mask = 0
            for i, rmask in enumerate(rows):
                if rmask & bit:
                    mask |= 1 << i
            cols.append(mask)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "objects", objects)
        object.__setattr__(self, "attributes", attributes)
        object.__setattr__(self, "rows", tuple(rows))
        object.__setattr__(self, "cols", tuple(cols))
        object.__setattr__(self, "object_labels", dict(object_labels or {}))
        object.__setattr__(self, "attribute_labels", dict(attribute_labels or {}))
        object.__setattr__(self, "_oindex", {o: i for i, o in enumerate(objects)})
        object.__setattr__(self, "_aindex", {a: j for j, a in enumerate(attributes)})
        for alias_map, index, kind in (
            (self.object_labels, self._oindex, "object"),
            (self.attribute_labels, self._aindex, "attribute"),
        ):
            for canonical, label in alias_map.items():
                if canonical not in index:
                    raise ContextError(f"label for unknown {kind} {canonical!r}")
                if label in index and index[label] != index[canonical]:
                    raise ContextError(
                        f"{kind} label {label!r} clashes with an existing name"
                    )

    def __setattr__(self, key, value):
        raise AttributeError("FormalContext is immutable")

    @classmethod
    def from_pairs(cls, objects, attributes, pairs, **kwargs):
        """Build from an iterable of (object name, attribute name) pairs."""
        objects = _clean_names(objects, "object")
        attributes = _clean_names(attributes, "attribute")
        oindex = {o: i for i, o in enumerate(objects)}
        aindex = {a: j for j, a in enumerate(attributes)}
        matrix = [[False] * len(attributes) for _ in objects]
        for obj, attr in pairs:
            if obj not in oindex:
                raise ContextError(f"unknown object {obj!r} in incidence pair")
            if attr not in aindex:
                raise ContextError(f"unknown attribute {attr!r} in incidence pair")
            matrix[oindex[obj]][aindex[attr]] = True
        return cls(objects, attributes, matrix, **kwargs)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return (
            f"<FormalContext{tag} {len(self.objects)}x{len(self.attributes)}>"
        )

    def __eq__(self, other):
        if not isinstance(other, FormalContext):
            return NotImplemented
        return (
            self.objects == other.objects
            and self.attributes == other.attributes
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.objects, self.attributes, self.rows))

    # -- name resolution -------------------------------------------------

    def object_index(self, name):
        idx = self._oindex.get(name)
        if idx is None:
            for canonical, label in self.object_labels.items():
                if label == name:
                    return self._oindex[canonical]
            raise InvalidSetError(f"unknown object {name!r}")
        return idx

    def attribute_index(self, name):
        idx = self._aindex.get(name)
        if idx is None:
            for canonical, label in self.attribute_labels.items():
                if label == name:
                    return self._aindex[canonical]
            raise InvalidSetError(f"unknown attribute {name!r}")
        return idx

    def has(self, obj, attr):
        return bool(self.rows[self.object_index(obj)] & (1 << self.attribute_index(attr)))

    def object_set(self, items=()):
        """Resolve names, labels, or index positions into an ObjectSet."""
        if isinstance(items, ObjectSet):
            if items.context is not self:
                raise InvalidSetError("object set bound to a different context")
            return items
        indices = set()
        for item in items:
            if isinstance(item, int):
                if not 0 <= item < len(self.objects):
                    raise InvalidSetError(f"object index {item} out of range")
                indices.add(item)
            else:
                indices.add(self.object_index(item))
        return ObjectSet(self, frozenset(indices))

    def attribute_set(self, items=()):
        if isinstance(items, AttributeSet):
            if items.context is not self:
                raise InvalidSetError("attribute set bound to a different context")
            return items
        indices = set()
        for item in items:
            if isinstance(item, int):
                if not 0 <= item < len(self.attributes):
                    raise InvalidSetError(f"attribute index {item} out of range")
                indices.add(item)
            else:
                indices.add(self.attribute_index(item))
        return AttributeSet(self, frozenset(indices))

    # -- bitmask derivations ----------------------------------------------

    def full_object_mask(self):
        return (1 << len(self.objects)) - 1

    def full_attribute_mask(self):
        return (1 << len(self.attributes)) - 1

    def intent_bits(self, object_mask):
        """Attribute mask common to all objects in ``object_mask``."""
        result = self.full_attribute_mask()
        rows = self.rows
        i = 0
        while object_mask:
            if object_mask & 1:
                result &= rows[i]
            object_mask >>= 1
            i += 1
        return result

    def extent_bits(self, attribute_mask):
        """Object mask common to all attributes in ``attribute_mask``."""
        result = self.full_object_mask()
        cols = self.cols
        j = 0
        while attribute_mask:
            if attribute_mask & 1:
                result &= cols[j]
            attribute_mask >>= 1
            j += 1
        return result

    def closure_bits(self, attribute_mask):
        """Double prime of an attribute mask."""
        return self.intent_bits(self.extent_bits(attribute_mask))


def derive_intent(context, objects):
    """Attributes common to all given objects; all attributes for the empty set."""
    objects = context.object_set(objects)
    mask = context.intent_bits(objects.mask)
    return AttributeSet(context, frozenset(_mask_to_indices(mask)))


def derive_extent(context, attributes):
    """Objects having all given attributes; all objects for the empty set."""
    attributes = context.attribute_set(attributes)
    mask = context.extent_bits(attributes.mask)
    return ObjectSet(context, frozenset(_mask_to_indices(mask)))


def is_formal_concept(context, objects, attributes):
    """True when the pair is closed both ways (a maximal filled rectangle)."""
    objects = context.object_set(objects)
    attributes = context.attribute_set(attributes)
    return (
        context.intent_bits(objects.mask) == attributes.mask
        and context.extent_bits(attributes.mask) == objects.mask
    )


def apposition(left, right, *, name=None):
    """Glue two contexts over a shared object set.

    Both contexts must carry exactly the same objects.  If the right context
    lists them in a different order its rows are realigned to the left
    order.  Attributes are concatenated left-then-right; a right attribute
    whose name already appears on the left is renamed by prefixing the right
    context's name and a colon.
    """
    if set(left.objects) != set(right.objects):
        diff = sorted(set(left.objects) ^ set(right.objects))
        raise AppositionError(
            "object sets differ: " + ", ".join(diff)
        )
    attributes = list(left.attributes)
    taken = set(attributes)
    for attr in right.attributes:
        if attr in taken:
            prefix = right.name or "right"
            attr = f"{prefix}:{attr}"
            if attr in taken:
                raise ContextError(f"attribute {attr!r} still collides after prefixing")
        taken.add(attr)
        attributes.append(attr)
    matrix = []
    for i, obj in enumerate(left.objects):
        lmask = left.rows[i]
        rmask = right.rows[right.object_index(obj)]
        row = [bool(lmask & (1 << j)) for j in range(len(left.attributes))]
        row += [bool(rmask & (1 << j)) for j in range(len(right.attributes))]
        matrix.append(row)
    labels = dict(left.attribute_labels)
    offset = len(left.attributes)
    for canonical, label in right.attribute_labels.items():
        labels[attributes[offset + right.attribute_index(canonical)]] = label
    return FormalContext(
        left.objects,
        attributes,
        matrix,
        name=name,
        object_labels=left.object_labels,
        attribute_labels=labels,
    )


# -- plain-text context format ------------------------------------------------
#
# Line 1 is the literal marker B, lines 2 and 3 the object and attribute
# counts, followed by one object name per line, one attribute name per line,
# and one X/. string per object.


def dumps_context(context):
    """Render a context in the plain-text cross-table format."""
    for name in context.objects + context.attributes:
        if "\n" in name or "\r" in name:
            raise ContextFormatError(f"name {name!r} contains a line break")
    lines = ["B", str(len(context.objects)), str(len(context.attributes))]
    lines.extend(context.objects)
    lines.extend(context.attributes)
    for mask in context.rows:
        lines.append(
            "".join(
                "X" if mask & (1 << j) else "."
                for j in range(len(context.attributes))
            )
        )
    return "\n".join(lines) + "\n"


def loads_context(text, *, name=None):
    """Parse the plain-text cross-table format; raises ContextFormatError."""
    lines = text.splitlines()
    pos = 0

    def take(what):
        nonlocal pos
        if pos >= len(lines):
            raise ContextFormatError(f"unexpected end of file, expected {what}", line=pos + 1)
        value = lines[pos]
        pos += 1
        return value

    header = take("header B").strip()
    if header != "B":
        raise ContextFormatError(f"expected header 'B', found {header!r}", line=1)
    counts = []
    for what in ("object count", "attribute count"):
        raw = take(what).strip()
        if not raw.isdigit():
            raise ContextFormatError(f"expected {what}, found {raw!r}", line=pos)
        counts.append(int(raw))
    n, m = counts
    objects = [take("object name") for _ in range(n)]
    attributes = [take("attribute name") for _ in range(m)]
    matrix = []
    for i in range(n):
        row = take("incidence row").strip()
        if len(row) != m:
            raise ContextFormatError(
                f"row has {len(row)} cells, expected {m}", line=pos
            )
        cells = []
        for ch in row:
            if ch == "X":
                cells.append(True)
            elif ch == ".":
                cells.append(False)
            else:
                raise ContextFormatError(
                    f"incidence cell must be 'X' or '.', found {ch!r}", line=pos
                )
        matrix.append(cells)
    while pos < len(lines):
        if lines[pos].strip():
            raise ContextFormatError("trailing content after incidence rows", line=pos + 1)
        pos += 1
    try:
        return FormalContext(objects, attributes, matrix, name=name)
    except ContextError as exc:
        raise ContextFormatError(str(exc)) from exc


def load_context(path, *, name=None):
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    return loads_context(text, name=name)


def dump_context(context, path):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_context(context))
