"""Formal contexts: derivation, apposition, and the text format."""

import random

import pytest

from ckml import (
    AppositionError,
    ContextError,
    ContextFormatError,
    FormalContext,
    apposition,
    derive_extent,
    derive_intent,
    dumps_context,
    is_formal_concept,
    loads_context,
)
from conftest import random_context


def small():
    return FormalContext.from_pairs(
        ["earth", "moon", "mars"],
        ["rocky", "inhabited", "orbits-sun"],
        [
            ("earth", "rocky"),
            ("earth", "inhabited"),
            ("earth", "orbits-sun"),
            ("moon", "rocky"),
            ("mars", "rocky"),
            ("mars", "orbits-sun"),
        ],
    )


def test_has_and_indexing():
    ctx = small()
    assert ctx.has("earth", "inhabited")
    assert not ctx.has("moon", "orbits-sun")
    assert ctx.object_index("mars") == 2
    assert ctx.attribute_index("rocky") == 0


def test_names_are_trimmed_and_checked():
    ctx = FormalContext([" a ", "b"], ["p"], [[1], [0]])
    assert ctx.objects == ("a", "b")
    with pytest.raises(ContextError):
        FormalContext(["a", "a"], ["p"], [[1], [0]])
    with pytest.raises(ContextError):
        FormalContext(["a"], ["p", ""], [[1, 0]])
    with pytest.raises(ContextError):
        FormalContext(["a"], ["p"], [])
    with pytest.raises(ContextError):
        FormalContext(["a"], ["p"], [[1, 0]])


def test_from_pairs_rejects_unknown_names():
    with pytest.raises(ContextError):
        FormalContext.from_pairs(["a"], ["p"], [("b", "p")])
    with pytest.raises(ContextError):
        FormalContext.from_pairs(["a"], ["p"], [("a", "q")])


def test_labels_resolve_in_lookups():
    ctx = FormalContext(
        ["a"],
        ["p", "q"],
        [[1, 0]],
        attribute_labels={"p": "pretty"},
    )
    assert ctx.has("a", "pretty")
    assert ctx.attribute_index("pretty") == 0
    with pytest.raises(ContextError):
        FormalContext(["a"], ["p"], [[1]], attribute_labels={"zz": "x"})


def test_context_is_immutable():
    ctx = small()
    with pytest.raises(AttributeError):
        ctx.name = "other"


def test_derivation_on_small_context():
    ctx = small()
    assert derive_extent(ctx, ["rocky"]).names == ("earth", "moon", "mars")
    assert derive_extent(ctx, ["rocky", "orbits-sun"]).names == ("earth", "mars")
    assert derive_intent(ctx, ["earth", "mars"]).names == ("rocky", "orbits-sun")
    assert derive_extent(ctx, []).names == ("earth", "moon", "mars")


def test_derivation_rejects_foreign_names():
    ctx = small()
    with pytest.raises(ContextError):
        derive_extent(ctx, ["venus"])
    with pytest.raises(ContextError):
        derive_intent(ctx, ["rocky"])


def test_is_formal_concept():
    ctx = small()
    extent = derive_extent(ctx, ["rocky", "orbits-sun"])
    intent = derive_intent(ctx, extent)
    assert is_formal_concept(ctx, extent, intent)
    assert not is_formal_concept(ctx, ["earth"], ["rocky"])


def test_galois_laws_spot_check():
    rng = random.Random(11)
    for _ in range(25):
        ctx = random_context(rng)
        objs = [o for o in ctx.objects if rng.random() < 0.5]
        attrs = [a for a in ctx.attributes if rng.random() < 0.5]
        xprime = derive_intent(ctx, objs)
        aprime = derive_extent(ctx, attrs)
        assert (set(attrs) <= set(xprime)) == (set(objs) <= set(aprime))
        assert set(objs) <= set(derive_extent(ctx, xprime))
        assert set(xprime) == set(derive_intent(ctx, derive_extent(ctx, xprime)))


def test_apposition_concatenates_attributes():
    ctx = small()
    left = FormalContext(
        ["earth", "moon", "mars"], ["rocky"], [[1], [1], [1]]
    )
    right = FormalContext(
        ["earth", "moon", "mars"],
        ["inhabited", "orbits-sun"],
        [[1, 1], [0, 0], [0, 1]],
    )
    glued = apposition(left, right)
    assert glued.attributes == ("rocky", "inhabited", "orbits-sun")
    for obj in ctx.objects:
        for attr in ctx.attributes:
            assert glued.has(obj, attr) == ctx.has(obj, attr)


def test_apposition_realigns_right_object_order():
    left = FormalContext(["a", "b"], ["p"], [[1], [0]])
    right = FormalContext(["b", "a"], ["q"], [[1], [0]])
    glued = apposition(left, right)
    assert glued.objects == ("a", "b")
    assert not glued.has("a", "q")
    assert glued.has("b", "q")


def test_apposition_requires_equal_object_sets():
    left = FormalContext(["a"], ["p"], [[1]])
    right = FormalContext(["b"], ["q"], [[1]])
    with pytest.raises(AppositionError):
        apposition(left, right)


def test_apposition_renames_colliding_attributes():
    left = FormalContext(["a"], ["p"], [[1]])
    right = FormalContext(["a"], ["p"], [[0]], name="other")
    glued = apposition(left, right)
    assert glued.attributes == ("p", "other:p")
    assert glued.has("a", "p")
    assert not glued.has("a", "other:p")


def test_text_format_round_trip():
    ctx = small()
    text = dumps_context(ctx)
    again = loads_context(text)
    assert again.objects == ctx.objects
    assert again.attributes == ctx.attributes
    assert again.rows == ctx.rows
    assert dumps_context(again) == text


def test_text_format_layout():
    ctx = FormalContext(["a", "b"], ["p", "q"], [[1, 0], [0, 1]])
    assert dumps_context(ctx) == "B\n2\n2\na\nb\np\nq\nX.\n.X\n"


def test_text_format_errors():
    with pytest.raises(ContextFormatError):
        loads_context("A\n1\n1\na\np\nX\n")
    with pytest.raises(ContextFormatError):
        loads_context("B\nx\n1\na\np\nX\n")
    with pytest.raises(ContextFormatError):
        loads_context("B\n1\n1\na\np\nXX\n")
    with pytest.raises(ContextFormatError):
        loads_context("B\n1\n1\na\np\nY\n")
    with pytest.raises(ContextFormatError):
        loads_context("B\n2\n1\na\n")
    with pytest.raises(ContextFormatError):
        dumps_context(FormalContext(["a\nb"], ["p"], [[1]]))


def test_living_context_shape(living_context):
    assert len(living_context.objects) == 8
    assert len(living_context.attributes) == 9
    assert living_context.objects[4] == "Spike-Weed"
    assert derive_extent(living_context, ["nc", "1lg"]).names == (
        "Spike-Weed",
        "Reed",
        "Maize",
    )
