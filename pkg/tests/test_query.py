"""Marked queries: shorthand expansion, answering, SQL translation, SQL runs."""

import pytest

from ckml import (
    AmbiguousNameError,
    EvaluationError,
    Ontology,
    QueryShapeError,
    Ref,
    SqlQuery,
    SqlRunError,
    answer,
    desugar_query,
    parse_expression,
    run_sql,
    to_sql,
)
from ckml.query import the_marker
from ckml.expressions import Exists, Not, ObjectAtom, Or, RelationAtom

CYLINDER_OVER_PRISM = "<DB:Support inst='Cylinder' thme='Prism#?'/>"

CYLINDER_OVER_PRISM_SQL = """\
SELECT Supportee
FROM support, Block x, Block y
WHERE
  Supporter = x.ID AND Supportee = y.ID
  AND x.Shape = 'cylindrical'
  AND y.Shape = 'prismatic'
"""


def test_the_marker_requires_exactly_one():
    query = parse_expression("<support source.Instance='a' target.Instance='?'/>")
    assert the_marker(query) == Ref("?")
    with pytest.raises(QueryShapeError, match="no result marker"):
        the_marker(parse_expression("<support source.Instance='a' target.Instance='b'/>"))
    with pytest.raises(QueryShapeError, match="more than one"):
        the_marker(parse_expression("<support source.Instance='?' target.Instance='?'/>"))


def test_desugar_query_expands_type_shorthand(blocks_collection):
    query = parse_expression(CYLINDER_OVER_PRISM)
    expanded = desugar_query(query, blocks_collection)
    assert isinstance(expanded, Exists)
    assert expanded.var == "x" and expanded.type == "Cylinder"
    atom = expanded.body
    assert isinstance(atom, ObjectAtom)
    assert dict(atom.fields) == {"inst": Ref("x"), "thme": Ref("?", "Prism")}


def test_desugar_query_leaves_plain_names_alone(blocks_collection):
    query = parse_expression("<support source.Instance='g' target.Instance='?'/>")
    assert desugar_query(query, blocks_collection) == query


def test_desugar_query_rejects_type_instance_collisions(blocks_collection):
    blocks_collection.add_instance("Cylinder")
    with pytest.raises(AmbiguousNameError):
        desugar_query(parse_expression(CYLINDER_OVER_PRISM), blocks_collection)


def test_answer_reified_shorthand(blocks_collection):
    assert answer(blocks_collection, parse_expression(CYLINDER_OVER_PRISM)) == {"g"}


def test_answer_with_role_typed_marker(blocks_collection):
    query = parse_expression(
        "<support source.Instance='g' target.Instance='Supportee#?'/>"
    )
    assert answer(blocks_collection, query) == {"h", "i"}


def test_answer_infers_marker_type_from_relation(blocks_collection):
    query = parse_expression("<support source.Instance='a' target.Instance='?'/>")
    assert answer(blocks_collection, query) == {"c"}


def test_answer_infers_marker_type_from_function(blocks_collection):
    query = parse_expression("<DB:Block id='g' color='?'/>")
    assert answer(blocks_collection, query) == {"green"}


def test_answer_set_valued_function(oodb_collection):
    query = parse_expression("<support source.Instance='g' target.Instance='?'/>")
    assert answer(oodb_collection, query) == {"h", "i"}


def test_answer_without_inferable_marker_type():
    ontology = Ontology("bare", "urn:bare/")
    ontology.add_object_type("Thing")
    ontology.add_relation("rel")
    from ckml import InstanceCollection

    coll = InstanceCollection(ontology)
    coll.add_instance("a", ("Thing",))
    coll.add_relation("rel", "a", "b")
    with pytest.raises(EvaluationError):
        answer(coll, RelationAtom("rel", Ref("a"), Ref("?")))


def test_to_sql_matches_reference_rendering(blocks_collection):
    rdb = blocks_collection.ontology
    query = desugar_query(
        parse_expression(CYLINDER_OVER_PRISM), blocks_collection
    )
    sql = to_sql(query, rdb)
    assert sql.text == CYLINDER_OVER_PRISM_SQL
    assert str(sql) == sql.text
    assert run_sql(sql, blocks_collection) == {"g"}


def test_to_sql_constant_participant(blocks_collection):
    query = parse_expression("<support source.Instance='g' target.Instance='?'/>")
    sql = to_sql(query, blocks_collection.ontology)
    assert sql.text == (
        "SELECT Supportee\n"
        "FROM support\n"
        "WHERE\n"
        "  Supporter = 'g'\n"
    )
    assert run_sql(sql, blocks_collection) == {"h", "i"}


def test_to_sql_untyped_marker_joins_only_the_source(blocks_collection):
    query = desugar_query(
        parse_expression("<support source.Instance='Cylinder' target.Instance='?'/>"),
        blocks_collection,
    )
    sql = to_sql(query, blocks_collection.ontology)
    assert sql.text == (
        "SELECT Supportee\n"
        "FROM support, Block x\n"
        "WHERE\n"
        "  Supporter = x.ID\n"
        "  AND x.Shape = 'cylindrical'\n"
    )
    assert run_sql(sql, blocks_collection) == {"c", "d", "g"}
    assert answer(blocks_collection, query) == {"c", "d", "g"}


def test_to_sql_alias_pool_is_deterministic(blocks_collection):
    inner = desugar_query(
        parse_expression(CYLINDER_OVER_PRISM), blocks_collection
    )
    query = Exists("z", "Cylinder", inner)
    sql = to_sql(query, blocks_collection.ontology)
    assert sql.from_items == (
        ("support", None),
        ("Block", "x"),
        ("Block", "y"),
        ("Block", "x2"),
    )
    assert run_sql(sql, blocks_collection) == {"g"}


def test_to_sql_pins_constant_entity_aliases(blocks_collection):
    """A typed constant participant must filter its alias down to one row."""
    query = parse_expression(
        "<and>"
        "<DB:Block id='a' shape='DB:Shape#cylindrical'/>"
        "<support source.Instance='a' target.Instance='?'/>"
        "</and>"
    )
    sql = to_sql(query, blocks_collection.ontology)
    assert ("x", "ID", "a") in sql.filters
    assert run_sql(sql, blocks_collection) == {"c"}
    assert answer(blocks_collection, query) == {"c"}


def test_to_sql_translates_typed_constant_participants(blocks_collection):
    coll = blocks_collection
    satisfied = parse_expression(
        "<support source.Instance='Prism#g' target.Instance='?'/>"
    )
    sql = to_sql(satisfied, coll.ontology)
    assert ("x", "ID", "g") in sql.filters
    assert ("x", "Shape", "prismatic") in sql.filters
    assert run_sql(sql, coll) == answer(coll, satisfied) == {"h", "i"}
    # A false classification empties both routes rather than being dropped.
    false_claim = parse_expression(
        "<support source.Instance='Cube#g' target.Instance='?'/>"
    )
    sql = to_sql(false_claim, coll.ontology)
    assert run_sql(sql, coll) == answer(coll, false_claim) == set()


def test_to_sql_rejects_disjunction(blocks_collection):
    query = Or(
        (
            RelationAtom("support", Ref("a"), Ref("?")),
            RelationAtom("support", Ref("b"), Ref("?")),
        )
    )
    with pytest.raises(QueryShapeError):
        to_sql(query, blocks_collection.ontology)


def test_to_sql_rejects_negation(blocks_collection):
    query = Not(RelationAtom("support", Ref("a"), Ref("?")))
    with pytest.raises(QueryShapeError):
        to_sql(query, blocks_collection.ontology)


def test_to_sql_requires_exactly_one_relation_atom(blocks_collection):
    rdb = blocks_collection.ontology
    none = parse_expression("<DB:Block id='?' shape='DB:Shape#cubical'/>")
    with pytest.raises(QueryShapeError, match="found 0"):
        to_sql(none, rdb)
    two = parse_expression(
        "<and>"
        "<support source.Instance='a' target.Instance='?'/>"
        "<support source.Instance='b' target.Instance='c'/>"
        "</and>"
    )
    with pytest.raises(QueryShapeError, match="found 2"):
        to_sql(two, rdb)


def test_to_sql_rejects_non_constant_filters(blocks_collection):
    query = parse_expression(
        "<and>"
        "<DB:Block id='g' shape='?'/>"
        "<support source.Instance='g' target.Instance='h'/>"
        "</and>"
    )
    with pytest.raises(QueryShapeError, match="constant"):
        to_sql(query, blocks_collection.ontology)


def test_to_sql_rejects_ordered_atoms(blocks_collection):
    query = RelationAtom("support", Ref("g"), Ref("?"), "geq")
    with pytest.raises(QueryShapeError, match="order"):
        to_sql(query, blocks_collection.ontology)


def test_to_sql_rejects_role_types_defined_by_relations(blocks_collection):
    """Supportee's defining query adds a second relation atom."""
    query = parse_expression(
        "<support source.Instance='g' target.Instance='Supportee#?'/>"
    )
    with pytest.raises(QueryShapeError):
        to_sql(query, blocks_collection.ontology)


def test_sql_query_validates_aliases():
    with pytest.raises(QueryShapeError):
        SqlQuery("T", (("rel", None),), (("S", "x"),), (), ())
    with pytest.raises(QueryShapeError):
        SqlQuery("T", (("rel", None),), (), (), (("x", "Shape", "cubical"),))


def test_run_sql_requires_relation_first(blocks_collection):
    sql = SqlQuery("Supportee", (("support", "r"),), (), (), ())
    with pytest.raises(SqlRunError):
        run_sql(sql, blocks_collection)


def test_run_sql_rejects_unknown_tables(blocks_collection):
    with pytest.raises(SqlRunError):
        run_sql(
            SqlQuery("Supportee", (("ledger", None),), (), (), ()),
            blocks_collection,
        )
    with pytest.raises(SqlRunError):
        run_sql(
            SqlQuery("Supportee", (("support", None), ("Ledger", "x")), (), (), ()),
            blocks_collection,
        )


def test_run_sql_rejects_unknown_columns(blocks_collection):
    sql = SqlQuery(
        "Supportee", (("support", None),), (), (("Weight", "heavy"),), ()
    )
    with pytest.raises(SqlRunError):
        run_sql(sql, blocks_collection)


def test_run_sql_agrees_with_answer_on_handwritten_queries(blocks_collection):
    coll = blocks_collection
    texts = [
        CYLINDER_OVER_PRISM,
        "<DB:Support inst='Prism' thme='Cylinder#?'/>",
        "<DB:Support inst='Cube#?' thme='c'/>",
        "<support source.Instance='g' target.Instance='?'/>",
        "<support source.Instance='?' target.Instance='c'/>",
    ]
    for text in texts:
        query = desugar_query(parse_expression(text), coll)
        assert run_sql(to_sql(query, coll.ontology), coll) == answer(coll, query)
