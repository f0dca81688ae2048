"""Type declarations, instance collections, classification, evaluation."""

import pytest

from ckml import (
    EvaluationError,
    InstanceCollection,
    Ontology,
    OntologyError,
    OntologyRegistry,
    Ref,
    UnknownTypeError,
    evaluate,
    parse_expression,
    solutions,
    validate,
)
from ckml.expressions import And, Implies, Not, ObjectAtom, Or, RelationAtom

from conftest import BLOCK_PATHS, FIXTURES

DB = "http://www.database.org/ontology/db/"
OODB = "http://www.database.org/ontology/oodb/"
RDB = "http://www.database.org/ontology/rdb/"

SUPPORT_PAIRS = {
    ("a", "c"),
    ("b", "c"),
    ("c", "d"),
    ("e", "g"),
    ("f", "g"),
    ("g", "h"),
    ("g", "i"),
}


def registry():
    return OntologyRegistry(BLOCK_PATHS, base_dir=FIXTURES)


def small_world():
    """A fresh two-type ontology with one relation, built by hand."""
    ontology = Ontology("toy", "urn:toy/")
    ontology.add_data_type("Shade", values=("light", "dark"))
    ontology.add_object_type("Thing")
    ontology.add_object_type(
        "Block",
        parents=("Thing",),
        functions=(),
    )
    ontology.add_function("shade", "Block", "Shade")
    ontology.add_relation("on", "Block", "Block")
    return ontology


def test_registry_loads_and_caches():
    reg = registry()
    db = reg.load(DB)
    assert reg.load(DB) is db
    owner, kind, decl = db.resolve("Block")
    assert owner is db and kind == "object" and decl.name == "Block"


def test_registry_rejects_unknown_uri():
    with pytest.raises(OntologyError):
        registry().load("urn:unregistered/")


def test_prefix_resolution_chains_through_extends():
    reg = registry()
    rdb = reg.load(RDB)
    db = reg.load(DB)
    owner, kind, decl = rdb.resolve("OO:Block")
    assert owner is db and decl.name == "Block"
    owner, _, decl = rdb.resolve("DB:Shape")
    assert owner is db and decl.name == "Shape"
    # The bare name still resolves by walking the extension chain.
    owner, _, _ = rdb.resolve("Shape")
    assert owner is db


def test_unknown_names_and_prefixes():
    reg = registry()
    rdb = reg.load(RDB)
    with pytest.raises(UnknownTypeError):
        rdb.resolve("ZZ:Block")
    with pytest.raises(UnknownTypeError):
        rdb.resolve("Widget")
    assert rdb.maybe_resolve("Widget") is None


def test_subtype_closure_through_extends():
    reg = registry()
    oodb = reg.load(OODB)
    assert oodb.subtype_leq("Cylinder", "DB:Block")
    assert oodb.subtype_leq("Cylinder", "Cylinder")
    assert not oodb.subtype_leq("DB:Block", "Cylinder")


def test_equivalence_is_two_way_subtyping():
    ontology = small_world()
    ontology.add_object_type("Brick")
    ontology.add_equivalence("Brick", "Block")
    assert ontology.subtype_leq("Brick", "Block")
    assert ontology.subtype_leq("Block", "Brick")
    assert ontology.subtype_leq("Brick", "Thing")


def test_subtype_cycles_are_detected():
    ontology = Ontology("loop", "urn:loop/")
    ontology.add_object_type("A", parents=("B",))
    ontology.add_object_type("B", parents=("A",))
    with pytest.raises(OntologyError, match="cycle"):
        ontology.registry.check_acyclic(ontology)


def test_instance_of_declared_and_inherited(oodb_collection):
    assert oodb_collection.instance_of("a", "Cylinder")
    assert oodb_collection.instance_of("a", "DB:Block")
    assert not oodb_collection.instance_of("a", "Pyramid")


def test_instance_of_by_defining_query(blocks_collection):
    """Role types defined by shape queries classify plain instances."""
    assert blocks_collection.instance_of("a", "Cylinder")
    assert not blocks_collection.instance_of("b", "Cylinder")
    assert blocks_collection.instance_of("b", "Pyramid")
    assert sorted(blocks_collection.domain("Cylinder")) == ["a", "c", "f", "h"]
    assert sorted(blocks_collection.domain("Pyramid")) == ["b", "i"]


def test_defining_query_recursion_is_cut():
    ontology = small_world()
    ontology.add_object_type(
        "Selfish", var="x", query=ObjectAtom("Selfish", Ref("x"))
    )
    coll = InstanceCollection(ontology)
    coll.add_instance("a", ("Block",))
    assert not coll.instance_of("a", "Selfish")


def test_typed_reference_classifies_target(intel_collection):
    assert intel_collection.instance_of("San Francisco", "City")
    assert intel_collection.instance_of("Andrew Grove", "Executive")
    assert intel_collection.instance_of("Andrew Grove", "Person")


def test_fixture_collections_validate_clean(
    blocks_collection, reified_collection, oodb_collection, intel_collection
):
    for coll in (
        blocks_collection,
        reified_collection,
        oodb_collection,
        intel_collection,
    ):
        assert validate(coll) == []


def test_validate_reports_bad_relation_target():
    ontology = small_world()
    coll = InstanceCollection(ontology, genus="Block")
    coll.add_member("a")
    coll.add_instance("a", ("Block",))
    coll.add_relation("on", "a", "nothing-of-the-kind")
    kinds = [v.kind for v in validate(coll)]
    assert "relation-target" in kinds


def test_validate_reports_unclassified_member():
    ontology = small_world()
    coll = InstanceCollection(ontology, genus="Block")
    coll.add_member("stray")
    violations = validate(coll)
    assert [v.kind for v in violations] == ["genus"]
    assert violations[0].subject == "stray"
    assert "stray" in str(violations[0])


def test_validate_reports_bad_function_value():
    ontology = small_world()
    coll = InstanceCollection(ontology, genus="Block")
    coll.add_member("a")
    coll.add_instance("a", ("Block",))
    coll.set_function("a", "shade", "blinding")
    kinds = [v.kind for v in validate(coll)]
    assert kinds == ["function-value"]


def test_relation_pairs_stored_and_reified_agree(
    blocks_collection, reified_collection
):
    stored = blocks_collection.relation_pairs(
        blocks_collection.ontology.type_ref("support")
    )
    virtual = reified_collection.relation_pairs(
        reified_collection.ontology.type_ref("support")
    )
    assert set(stored) == SUPPORT_PAIRS
    assert set(virtual) == SUPPORT_PAIRS
    # The reified collection stores no plain pairs at all.
    assert reified_collection.relations == []


def test_relation_pairs_are_cached_until_mutation(blocks_collection):
    tr = blocks_collection.ontology.type_ref("support")
    first = blocks_collection.relation_pairs(tr)
    assert blocks_collection.relation_pairs(tr) is first
    blocks_collection.add_relation("support", "i", "a")
    second = blocks_collection.relation_pairs(tr)
    assert second is not first
    assert ("i", "a") in second


def test_evaluate_atoms_and_connectives(blocks_collection):
    coll = blocks_collection
    cylindrical_a = parse_expression("<Block id='a' shape='Shape#cylindrical'/>")
    assert evaluate(coll, cylindrical_a)
    assert not evaluate(coll, parse_expression("<Block id='a' shape='Shape#cubical'/>"))
    assert evaluate(coll, Not(Not(cylindrical_a)))
    on_c = parse_expression("<support source.Instance='a' target.Instance='c'/>")
    assert evaluate(coll, on_c)
    assert evaluate(coll, And((cylindrical_a, on_c)))
    assert evaluate(
        coll,
        Or((parse_expression("<Block id='a' shape='Shape#cubical'/>"), on_c)),
    )
    # A false antecedent makes the implication hold.
    assert evaluate(
        coll,
        Implies(parse_expression("<Block id='a' shape='Shape#cubical'/>"), on_c),
    )


def test_evaluate_rejects_unknown_type(blocks_collection):
    with pytest.raises(EvaluationError):
        evaluate(blocks_collection, ObjectAtom("Widget", Ref("a")))


def test_solutions_enumerates_typed_assignments(blocks_collection):
    supporters_of_c = solutions(
        blocks_collection,
        RelationAtom("support", Ref("x"), Ref("c")),
        {"x": "DB:Block"},
    )
    assert supporters_of_c == {("a",), ("b",)}
    pairs = solutions(
        blocks_collection,
        RelationAtom("support", Ref("x"), Ref("y")),
        {"x": "Cylinder", "y": "DB:Block"},
    )
    assert pairs == {("a", "c"), ("c", "d"), ("f", "g")}


def test_solutions_requires_types(blocks_collection):
    with pytest.raises(EvaluationError):
        solutions(
            blocks_collection, RelationAtom("support", Ref("x"), Ref("c")), {"x": None}
        )


def test_domain_of_set_type_uses_genus(oodb_collection):
    assert sorted(oodb_collection.domain("Set.Block")) == list("abcdefghi")


def test_domain_rejects_relations(blocks_collection):
    with pytest.raises(EvaluationError):
        blocks_collection.domain("support")


def test_collection_genus_falls_back_to_declared_type(
    blocks_collection, oodb_collection
):
    assert blocks_collection.genus == "DB:Block"
    assert oodb_collection.genus == "DB:Block"


def test_enumerated_data_domain_keeps_declaration_order(blocks_collection):
    assert blocks_collection.domain("Shape") == [
        "cubical",
        "prismatic",
        "pyramidal",
        "cylindrical",
        "conical",
        "spherical",
    ]


def test_observed_data_domain_sorts_when_ordered():
    ontology = Ontology("toy", "urn:toy2/")
    ontology.add_data_type("Num", ordered=True)
    ontology.add_object_type("Thing")
    ontology.add_function("size", "Thing", "Num")
    coll = InstanceCollection(ontology)
    for identifier, size in (("a", "10"), ("b", "9"), ("c", "2")):
        coll.add_instance(identifier, ("Thing",))
        coll.set_function(identifier, "size", size)
    assert coll.domain("Num") == ["2", "9", "10"]


def test_observed_date_domain_is_chronological(intel_collection):
    assert intel_collection.domain("Date") == [
        "1996/01/15",
        "1997/02/24",
        "1997/06/09",
    ]
