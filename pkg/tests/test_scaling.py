"""Scale constructors, realization over collections, and apposed spaces."""

import pytest

from ckml import (
    ConcreteScale,
    InstanceCollection,
    Ontology,
    ScaleError,
    Sequent,
    build_lattice,
    build_space,
    derive_extent,
    equivalence_scale,
    genus_scale,
    hierarchical_scale,
    interordinal_scale,
    nominal_scale,
    ordinal_scale,
    realize,
    scale_from_theory,
)
from ckml.expressions import Ref, RelationAtom

SHAPES = ("cubical", "prismatic", "pyramidal", "cylindrical", "conical", "spherical")


def sized_collection():
    """Three items with a totally ordered size function."""
    ontology = Ontology("sizes", "urn:sizes/")
    ontology.add_data_type("Num", ordered=True)
    ontology.add_object_type("Item")
    ontology.add_function("size", "Item", "Num")
    coll = InstanceCollection(ontology, genus="Item")
    for identifier, size in (("small", "1"), ("mid", "5"), ("big", "9")):
        coll.add_instance(identifier, ("Item",))
        coll.set_function(identifier, "size", size)
    return coll


def row_of(context, obj):
    return "".join(
        "X" if context.has(obj, attr) else "." for attr in context.attributes
    )


def test_nominal_scale_structure():
    scale = nominal_scale("shape", "Block", "shape", SHAPES)
    assert scale.attributes == SHAPES
    assert scale.description == "shape"
    assert len(scale.abstract.sequents) == 15
    assert Sequent(("cubical", "prismatic"), ()) in scale.abstract.sequents
    with pytest.raises(ScaleError):
        nominal_scale("shape", "Block", "shape", ("a", "a"))


def test_nominal_scale_realized_over_blocks(blocks_collection):
    facet = realize(nominal_scale("shape", "DB:Block", "shape", SHAPES),
                    blocks_collection)
    context = facet.context
    assert context.objects == tuple("abcdefghi")
    assert facet.violations == ()
    assert row_of(context, "a") == "...X.."
    assert row_of(context, "d") == "X....."
    for obj in context.objects:
        assert row_of(context, obj).count("X") == 1


def test_ordinal_scale_markers_and_chain():
    scale = ordinal_scale("size", "Item", "size", ("3", "7"))
    assert scale.attributes == (">=3", ">=7")
    assert scale.abstract.sequents == (Sequent((">=7",), (">=3",)),)
    leq = ordinal_scale("size", "Item", "size", ("3", "7"), direction="leq")
    assert leq.attributes == ("<=3", "<=7")
    assert leq.abstract.sequents == (Sequent(("<=3",), ("<=7",)),)


def test_ordinal_scale_validation():
    with pytest.raises(ScaleError):
        ordinal_scale("s", "g", "f", ())
    with pytest.raises(ScaleError):
        ordinal_scale("s", "g", "f", ("7", "3"))
    with pytest.raises(ScaleError):
        ordinal_scale("s", "g", "f", ("3", "3"))
    with pytest.raises(ScaleError):
        ordinal_scale("s", "g", "f", ("3", "7"), direction="sideways")


def test_ordinal_scale_realization():
    coll = sized_collection()
    facet = realize(ordinal_scale("size", "Item", "size", ("3", "7")), coll)
    assert facet.violations == ()
    assert row_of(facet.context, "small") == ".."
    assert row_of(facet.context, "mid") == "X."
    assert row_of(facet.context, "big") == "XX"


def test_interordinal_scale_realization():
    coll = sized_collection()
    scale = interordinal_scale("size", "Item", "size", ("3", "7"))
    assert scale.attributes == (">=3", ">=7", "<=3", "<=7")
    facet = realize(scale, coll)
    assert facet.violations == ()
    assert row_of(facet.context, "small") == "..XX"
    assert row_of(facet.context, "mid") == "X..X"
    assert row_of(facet.context, "big") == "XX.."


def test_hierarchical_scale_orders_nodes_depth_first():
    scale = hierarchical_scale(
        "taxa",
        "Thing",
        {"root": ("a", "b"), "a": ("a1", "a2")},
    )
    assert scale.attributes == ("root", "a", "a1", "a2", "b")
    assert Sequent(("a1",), ("a",)) in scale.abstract.sequents
    assert Sequent(("a",), ("root",)) in scale.abstract.sequents
    assert all(seq.consequent for seq in scale.abstract.sequents)


def test_hierarchical_scale_sibling_disjointness():
    scale = hierarchical_scale(
        "taxa", "Thing", {"root": ("a", "b")}, disjoint_siblings=True
    )
    assert Sequent(("a", "b"), ()) in scale.abstract.sequents


def test_hierarchical_scale_validation():
    with pytest.raises(ScaleError, match="root"):
        hierarchical_scale("t", "g", {"r1": ("a",), "r2": ("b",)})
    with pytest.raises(ScaleError, match="twice"):
        hierarchical_scale("t", "g", {"r": ("a", "b"), "a": ("b",)})


def test_concrete_scale_rejects_duplicate_attributes():
    from ckml.theory import Theory

    with pytest.raises(ScaleError):
        ConcreteScale(
            "s",
            "g",
            Theory("s", "g", ("a",)),
            (("a", RelationAtom("f", Ref("x"), Ref("1"))),
             ("a", RelationAtom("f", Ref("x"), Ref("2")))),
        )


def test_equivalence_scale_uses_observed_image(blocks_collection):
    scale = equivalence_scale("shape", "DB:Block", "shape", blocks_collection)
    assert scale.attributes == ("cylindrical", "pyramidal", "cubical", "prismatic")
    facet = realize(scale, blocks_collection)
    assert facet.violations == ()
    extent = derive_extent(facet.context, ["cylindrical"])
    assert set(extent.names) == {"a", "c", "f", "h"}
    with pytest.raises(ScaleError):
        equivalence_scale("s", "DB:Block", "support", blocks_collection)


def test_scale_from_release_date_theory(intel_collection, intel_theories):
    decl = next(t for t in intel_theories if t.name == "Release Date")
    scale = scale_from_theory(decl, intel_collection)
    assert scale.attributes == (
        ">=1996/01/15",
        ">=1997/02/24",
        ">=1997/06/09",
    )
    facet = realize(scale, intel_collection)
    assert facet.violations == ()
    assert row_of(facet.context, "cp011596") == "X.."
    assert row_of(facet.context, "cn022497") == "XX."
    assert row_of(facet.context, "cn060997") == "XXX"
    lattice = build_lattice(facet.context)
    for left in lattice.concepts:
        for right in lattice.concepts:
            assert lattice.leq(left, right) or lattice.leq(right, left)


def test_scale_from_block_theory_partitions_cleanly(blocks_collection):
    from ckml import markup
    from conftest import fixture_path

    document = markup.parse_file(fixture_path("blocks", "oodb.ckml"))
    theory = next(
        item
        for item in document.declarations[0].body
        if isinstance(item, markup.TheoryDecl)
    )
    scale = scale_from_theory(theory, blocks_collection)
    assert scale.attributes == (
        "Cube",
        "Prism",
        "Pyramid",
        "Cylinder",
        "Cone",
        "Sphere",
    )
    facet = realize(scale, blocks_collection)
    assert facet.violations == ()
    for obj in facet.context.objects:
        assert row_of(facet.context, obj).count("X") == 1


def test_realize_flags_undescribed_instances():
    coll = sized_collection()
    coll.add_instance("mystery", ("Item",))
    facet = realize(ordinal_scale("size", "Item", "size", ("3",)), coll)
    flagged = [v for v in facet.violations if v.kind == "undescribed"]
    assert [v.object for v in flagged] == ["mystery"]
    assert str(flagged[0]) == "mystery: undescribed"


def test_realize_reports_sequent_breaches():
    coll = sized_collection()
    coll.set_function("mid", "size", "9")
    scale = nominal_scale("size", "Item", "size", ("5", "9"))
    facet = realize(scale, coll)
    breaches = [v for v in facet.violations if v.kind == "sequent"]
    assert [(v.object, v.sequent) for v in breaches] == [
        ("mid", Sequent(("5", "9"), ()))
    ]
    assert str(breaches[0]) == "5, 9 ⊢ violated by mid"


def test_realize_wraps_evaluation_failures():
    coll = sized_collection()
    with pytest.raises(ScaleError):
        realize(ordinal_scale("s", "Item", "girth", ("3",)), coll)
    with pytest.raises(ScaleError):
        realize(ordinal_scale("s", "Gadget", "size", ("3",)), coll)


def test_genus_scale_follows_declared_subtypes(oodb_collection):
    scale = genus_scale(oodb_collection, "DB:Block")
    assert scale.name == "Block"
    assert scale.attributes == (
        "Block",
        "Cube",
        "Prism",
        "Pyramid",
        "Cylinder",
        "Cone",
        "Sphere",
    )
    facet = realize(scale, oodb_collection)
    assert facet.violations == ()
    assert row_of(facet.context, "a") == "X...X.."
    with pytest.raises(ScaleError):
        genus_scale(oodb_collection, "Shape")


def test_build_space_prefixes_attributes(blocks_collection):
    shape = realize(
        nominal_scale("shape", "DB:Block", "shape", SHAPES), blocks_collection
    )
    color = realize(
        equivalence_scale("color", "DB:Block", "color", blocks_collection),
        blocks_collection,
    )
    space = build_space([shape, color])
    assert len(space.attributes) == len(shape.context.attributes) + len(
        color.context.attributes
    )
    assert space.attributes[0] == "shape:cubical"
    assert all(
        attr.startswith(("shape:", "color:")) for attr in space.attributes
    )
    assert space.has("a", "shape:cylindrical")
    assert space.has("a", "color:violet")


def test_build_space_single_facet_is_renamed(blocks_collection):
    shape = realize(
        nominal_scale("shape", "DB:Block", "shape", SHAPES), blocks_collection
    )
    space = build_space([shape], name="just-shape")
    assert space.name == "just-shape"
    assert space.attributes == tuple(f"shape:{s}" for s in SHAPES)


def test_build_space_rejects_mismatched_rows(blocks_collection):
    coll = sized_collection()
    shape = realize(
        nominal_scale("shape", "DB:Block", "shape", SHAPES), blocks_collection
    )
    size = realize(ordinal_scale("size", "Item", "size", ("3",)), coll)
    with pytest.raises(ScaleError):
        build_space([shape, size])
    with pytest.raises(ScaleError):
        build_space([])
