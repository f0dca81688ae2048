"""Concept lattices built by lectic closure enumeration.

A formal concept of a context is a pair (extent, intent) closed under both
derivation operators.  The set of all concepts, ordered by extent inclusion,
is a complete lattice.  Enumeration walks the closure system of intents in
lectic order: starting from the closure of the empty attribute set, the next
closed set after A is close((A ∩ {0..i-1}) ∪ {i}) for the largest attribute
i not in A that introduces no new attribute below i.  Concept ids are the
positions in this enumeration, so two builds of the same context always
assign identical ids.

Meet and join never allocate: extents are closed under intersection, so the
meet of two concepts is the concept whose extent is the intersection of
theirs, and dually for join on intents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .context import AttributeSet, ObjectSet, _mask_to_indices
from .errors import ConceptLimitError, ExportFormatError, ForeignConceptError

EXPORT_FORMATS = ("dot", "structured", "ascii-hasse")

DEFAULT_MAX_CONCEPTS = 100000


@dataclass(frozen=True)
class FormalConcept:
    """A closed (extent, intent) pair; ``id`` is its lectic position."""

    id: int
    extent: ObjectSet
    intent: AttributeSet

    def __repr__(self):
        ext = ", ".join(self.extent.names)
        int_ = ", ".join(self.intent.names)
        return f"<Concept #{self.id} {{{ext}}} / {{{int_}}}>"


def _enumerate_intents(context, max_concepts):
    """All closed attribute masks in ascending lectic order."""
    m = len(context.attributes)
    full = context.full_attribute_mask()
    close = context.closure_bits
    current = close(0)
    intents = [current]
    while current != full:
        stripped = current
        nxt = None
        for i in reversed(range(m)):
            bit = 1 << i
            if stripped & bit:
                stripped &= ~bit
                continue
            candidate = close(stripped | bit)
            if (candidate & ~stripped) & (bit - 1) == 0:
                nxt = candidate
                break
        if nxt is None:
            break
        current = nxt
        intents.append(current)
        if len(intents) > max_concepts:
            raise ConceptLimitError(max_concepts)
    return intents


class ConceptLattice:
    """All concepts of one context plus the order structure between them."""

    def __init__(self, context, intent_masks):
        self.context = context
        self._intent_masks = tuple(intent_masks)
        self._extent_masks = tuple(
            context.extent_bits(mask) for mask in intent_masks
        )
        self._by_intent = {m: i for i, m in enumerate(self._intent_masks)}
        self._by_extent = {m: i for i, m in enumerate(self._extent_masks)}
        self.concepts = tuple(
            FormalConcept(
                i,
                ObjectSet(context, frozenset(_mask_to_indices(emask))),
                AttributeSet(context, frozenset(_mask_to_indices(imask))),
            )
            for i, (emask, imask) in enumerate(
                zip(self._extent_masks, self._intent_masks)
            )
        )
        self.object_labels = {
            obj: self._by_intent[context.rows[i]]
            for i, obj in enumerate(context.objects)
        }
        self.attribute_labels = {
            attr: self._by_extent[context.cols[j]]
            for j, attr in enumerate(context.attributes)
        }
        self._covers = None

    def __len__(self):
        return len(self.concepts)

    def __iter__(self):
        return iter(self.concepts)

    def _id_of(self, concept):
        if isinstance(concept, int):
            if not 0 <= concept < len(self.concepts):
                raise ForeignConceptError(f"no concept with id {concept}")
            return concept
        if (
            isinstance(concept, FormalConcept)
            and 0 <= concept.id < len(self.concepts)
            and self.concepts[concept.id] == concept
            and concept.extent.context is self.context
        ):
            return concept.id
        raise ForeignConceptError(f"{concept!r} does not belong to this lattice")

    def concept(self, concept_id):
        return self.concepts[self._id_of(concept_id)]

    def concept_with_extent(self, objects):
        mask = self.context.object_set(objects).mask
        idx = self._by_extent.get(mask)
        return None if idx is None else self.concepts[idx]

    def concept_with_intent(self, attributes):
        mask = self.context.attribute_set(attributes).mask
        idx = self._by_intent.get(mask)
        return None if idx is None else self.concepts[idx]

    @property
    def top(self):
        return self.concepts[self._by_extent[self.context.full_object_mask()]]

    @property
    def bottom(self):
        return self.concepts[self._by_intent[self.context.full_attribute_mask()]]

    def leq(self, first, second):
        """Order test: extent of ``first`` contained in extent of ``second``."""
        a = self._extent_masks[self._id_of(first)]
        b = self._extent_masks[self._id_of(second)]
        return a & ~b == 0

    def meet(self, first, second):
        emask = (
            self._extent_masks[self._id_of(first)]
            & self._extent_masks[self._id_of(second)]
        )
        return self.concepts[self._by_extent[emask]]

    def join(self, first, second):
        imask = (
            self._intent_masks[self._id_of(first)]
            & self._intent_masks[self._id_of(second)]
        )
        return self.concepts[self._by_intent[imask]]

    # -- order diagram -----------------------------------------------------

    def _cover_table(self):
        """Upper cover ids per concept, by transitive reduction of leq."""
        if self._covers is not None:
            return self._covers
        n = len(self.concepts)
        extents = self._extent_masks
        strict_up = [0] * n
        strict_down = [0] * n
        for i in range(n):
            ei = extents[i]
            for j in range(n):
                if i != j and ei & ~extents[j] == 0:
                    strict_up[i] |= 1 << j
                    strict_down[j] |= 1 << i
        covers = []
        for i in range(n):
            ups = strict_up[i]
            row = []
            mask = ups
            j = 0
            while mask:
                if mask & 1 and ups & strict_down[j] == 0:
                    row.append(j)
                mask >>= 1
                j += 1
            covers.append(tuple(row))
        self._covers = tuple(covers)
        return self._covers

    def upper_covers(self, concept):
        return tuple(
            self.concepts[j] for j in self._cover_table()[self._id_of(concept)]
        )

    def lower_covers(self, concept):
        target = self._id_of(concept)
        return tuple(
            self.concepts[i]
            for i, ups in enumerate(self._cover_table())
            if target in ups
        )

    def cover_pairs(self):
        """All (lower id, upper id) edges of the order diagram."""
        return tuple(
            (i, j) for i, ups in enumerate(self._cover_table()) for j in ups
        )


def build_lattice(context, *, max_concepts=DEFAULT_MAX_CONCEPTS):
    """Enumerate every concept of ``context``.

    Raises ConceptLimitError as soon as the enumeration would exceed
    ``max_concepts``.
    """
    return ConceptLattice(context, _enumerate_intents(context, max_concepts))


# -- exports -------------------------------------------------------------------


def _label_lines(lattice):
    """Objects and attributes announced at each concept, for diagram labels."""
    objects = {i: [] for i in range(len(lattice))}
    attributes = {i: [] for i in range(len(lattice))}
    for obj, cid in lattice.object_labels.items():
        objects[cid].append(obj)
    for attr, cid in lattice.attribute_labels.items():
        attributes[cid].append(attr)
    return objects, attributes


def _export_dot(lattice):
    objects, attributes = _label_lines(lattice)

    def escape(text):
        return text.replace("\\", "\\\\").replace('"', '\\"')

    lines = ["digraph concept_lattice {", "  rankdir=BT;", "  node [shape=box];"]
    for concept in lattice:
        parts = [f"#{concept.id}"]
        if attributes[concept.id]:
            parts.append("a: " + ", ".join(attributes[concept.id]))
        if objects[concept.id]:
            parts.append("o: " + ", ".join(objects[concept.id]))
        label = escape("\\n".join(parts))
        lines.append(f'  c{concept.id} [label="{label}"];')
    for lower, upper in lattice.cover_pairs():
        lines.append(f"  c{lower} -> c{upper};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_structured(lattice):
    document = {
        "context": lattice.context.name,
        "objects": list(lattice.context.objects),
        "attributes": list(lattice.context.attributes),
        "concepts": [
            {
                "id": concept.id,
                "extent": list(concept.extent.names),
                "intent": list(concept.intent.names),
            }
            for concept in lattice
        ],
        "order": [list(edge) for edge in sorted(lattice.cover_pairs())],
        "labels": {
            "objects": dict(lattice.object_labels),
            "attributes": dict(lattice.attribute_labels),
        },
    }
    return json.dumps(document, indent=2) + "\n"


def _export_ascii(lattice):
    lines = []
    for concept in lattice:
        ups = " ".join(
            f"#{c.id}" for c in lattice.upper_covers(concept)
        ) or "-"
        ext = ", ".join(concept.extent.names)
        int_ = ", ".join(concept.intent.names)
        lines.append(f"#{concept.id} {{{ext}}} / {{{int_}}} < {ups}")
    return "\n".join(lines) + "\n"


def export_lattice(lattice, fmt="structured"):
    """Render the lattice as `dot`, `structured` (JSON), or `ascii-hasse`."""
    if fmt == "dot":
        return _export_dot(lattice)
    if fmt == "structured":
        return _export_structured(lattice)
    if fmt == "ascii-hasse":
        return _export_ascii(lattice)
    raise ExportFormatError(
        f"unknown format {fmt!r}, expected one of: " + ", ".join(EXPORT_FORMATS)
    )
