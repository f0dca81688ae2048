"""Question-marked queries: answering, SQL translation, and a SQL evaluator.

A query is an expression containing exactly one result marker ``?``.  The
answer is the set of values substitutable for the marker that make the
expression true over a collection.  A restricted conjunctive fragment (one
binary relation atom plus constant-filtered object atoms) translates to a
single select-project-join SQL statement; ``run_sql`` evaluates that SQL
against a relational rendering of the collection and serves as an
independent cross-check of ``answer``.

Translation follows five steps: rewrite to non-embedded form, qualify
instance names with their types, map the marker to SELECT, list the
relation and the participating entity tables in FROM, and emit the
participant joins and constant filters in WHERE.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    AmbiguousNameError,
    EvaluationError,
    QueryShapeError,
    SqlRunError,
)
from .expressions import (
    RESULT_MARKER,
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
    refs_of,
    substitute,
    walk,
)
from .ontology import TypeRef, _holds


def _local(name):
    return name.rpartition(":")[2]


def _bound_vars(expr):
    return {
        node.var for node in walk(expr) if isinstance(node, (Exists, Forall))
    }


def _marker_refs(expr):
    return [ref for ref in refs_of(expr) if ref.is_marker]


def the_marker(expr):
    """The single result marker of a query, or an error."""
    markers = _marker_refs(expr)
    if not markers:
        raise QueryShapeError("query has no result marker", expr)
    if len(markers) > 1:
        raise QueryShapeError("query has more than one result marker", expr)
    return markers[0]


# -- shorthand expansion ---------------------------------------------------------


def _fresh_vars(used):
    for name in ("x", "y", "z", "w", "v", "u"):
        if name not in used:
            used.add(name)
            yield name
    counter = 1
    while True:
        name = f"x{counter}"
        counter += 1
        if name not in used:
            used.add(name)
            yield name


def desugar_query(expr, coll):
    """Expand type names standing in argument position to bound variables.

    A reference whose name is a declared object type (and not a quantified
    variable) abbreviates "some instance of that type"; it is replaced by a
    fresh variable bound by an enclosing Exists.  A name that is both a type
    and an instance identifier is rejected as ambiguous.
    """
    bound = _bound_vars(expr)
    used = set(bound)
    for ref in refs_of(expr):
        used.add(ref.name)
    fresh = _fresh_vars(used)
    introduced = []

    def is_shorthand(ref):
        if ref is None or ref.is_marker or ref.type or ref.name in bound:
            return False
        hit = coll.ontology.maybe_resolve(ref.name)
        if hit is None or hit[1] not in ("object", "reified"):
            return False
        if ref.name in coll.instances:
            raise AmbiguousNameError(
                f"{ref.name!r} names both a type and an instance"
            )
        return True

    def expand(ref):
        if not is_shorthand(ref):
            return ref
        var = next(fresh)
        introduced.append((var, ref.name))
        return Ref(var)

    def rebuild(node):
        if isinstance(node, ObjectAtom):
            return ObjectAtom(
                node.type_name,
                expand(node.inst),
                tuple((fname, expand(ref)) for fname, ref in node.fields),
                tuple(rebuild(child) for child in node.children),
            )
        if isinstance(node, RelationAtom):
            return RelationAtom(
                node.name, expand(node.source), expand(node.target), node.order
            )
        if isinstance(node, And):
            return And(tuple(rebuild(arg) for arg in node.args))
        if isinstance(node, Or):
            return Or(tuple(rebuild(arg) for arg in node.args))
        if isinstance(node, Not):
            return Not(rebuild(node.arg))
        if isinstance(node, Implies):
            return Implies(rebuild(node.left), rebuild(node.right))
        if isinstance(node, Equivalent):
            return Equivalent(rebuild(node.left), rebuild(node.right))
        if isinstance(node, Exists):
            return Exists(node.var, node.type, rebuild(node.body))
        if isinstance(node, Forall):
            return Forall(node.var, node.type, rebuild(node.body))
        return node

    out = rebuild(expr)
    for var, type_name in reversed(introduced):
        out = Exists(var, type_name, out)
    return out


# -- answering --------------------------------------------------------------------


def _participant_target(coll, owner, decl, position):
    participants = getattr(decl, "participants", ())
    if len(participants) > position:
        fn = participants[position]
        if fn.target:
            return coll._resolve_near(fn.target, owner)
    return None


def _infer_marker_hit(coll, expr, marker):
    """Resolve the marker's type, reading the enclosing atom if unannotated."""
    if marker.type:
        return coll.ontology.resolve(marker.type)
    for node in walk(expr):
        if isinstance(node, ObjectAtom):
            if node.inst is marker:
                return coll._resolve_near(node.type_name)
            hit = None
            for fname, ref in node.fields:
                if ref is marker:
                    fn_hit = coll._resolve_near(fname)
                    if fn_hit is not None and fn_hit[1] == "function":
                        if fn_hit[2].target:
                            hit = coll._resolve_near(
                                fn_hit[2].target, fn_hit[0]
                            )
            if hit is not None:
                return hit
        elif isinstance(node, RelationAtom):
            rel_hit = coll._resolve_near(node.name)
            if rel_hit is None:
                continue
            owner, kind, decl = rel_hit
            raw = None
            if kind == "reified":
                position = 0 if node.source is marker else 1
                if node.source is marker or node.target is marker:
                    hit = _participant_target(coll, owner, decl, position)
                    if hit is not None:
                        return hit
                continue
            if node.source is marker:
                raw = decl.source
            elif node.target is marker:
                raw = decl.target
            if raw:
                hit = coll._resolve_near(raw, owner)
                if hit is not None:
                    return hit
    return None


def _domain_of_hit(coll, hit):
    return coll.domain(hit)


def answer(coll, expr):
    """The values substitutable for the query's ``?`` marker.

    The marker's candidate domain comes from its type annotation, or is
    inferred from the relation or function signature it sits in.
    """
    expr = desugar_query(expr, coll)
    marker = the_marker(expr)
    hit = _infer_marker_hit(coll, expr, marker)
    if hit is None:
        raise EvaluationError(
            "the result marker has no type and none can be inferred"
        )
    return {
        value
        for value in _domain_of_hit(coll, hit)
        if _holds(coll, expr, {marker.name: value})
    }


# -- SQL translation ----------------------------------------------------------------


@dataclass(frozen=True)
class SqlQuery:
    """One select-project-join statement over the relational rendering.

    ``joins`` pair a relation column with an entity alias; ``constants``
    filter a relation column by a literal; ``filters`` constrain an aliased
    entity column.
    """

    select: str
    from_items: tuple
    joins: tuple
    constants: tuple
    filters: tuple

    def __post_init__(self):
        aliases = {alias for _, alias in self.from_items if alias}
        for column, alias in self.joins:
            if alias not in aliases:
                raise QueryShapeError(f"join on undeclared alias {alias!r}")
        for alias, column, value in self.filters:
            if alias not in aliases:
                raise QueryShapeError(f"filter on undeclared alias {alias!r}")

    @property
    def text(self):
        lines = [f"SELECT {self.select}"]
        tables = ", ".join(
            table if alias is None else f"{table} {alias}"
            for table, alias in self.from_items
        )
        lines.append(f"FROM {tables}")
        conjuncts = []
        if self.joins:
            conjuncts.append(
                " AND ".join(f"{col} = {alias}.ID" for col, alias in self.joins)
            )
        conjuncts.extend(f"{col} = '{value}'" for col, value in self.constants)
        conjuncts.extend(
            f"{alias}.{col} = '{value}'" for alias, col, value in self.filters
        )
        if conjuncts:
            lines.append("WHERE")
            lines.append(f"  {conjuncts[0]}")
            lines.extend(f"  AND {c}" for c in conjuncts[1:])
        return "\n".join(lines) + "\n"

    def __str__(self):
        return self.text


class _EntityAtom:
    """Accumulated table, filters, and alias for one query variable."""

    def __init__(self, var):
        self.var = var
        self.table = None
        self.filters = []
        self.alias = None

    def set_table(self, name, node):
        if self.table is not None and self.table != name:
            raise QueryShapeError(
                f"{self.var!r} is typed by two different tables "
                f"({self.table}, {name})",
                node,
            )
        self.table = name

    def add_filter(self, column, value):
        if (column, value) not in self.filters:
            self.filters.append((column, value))


class _Translation:
    def __init__(self, ont):
        self.ont = ont
        self.bound = set()
        self.relations = []
        self.entities = {}
        self.order = []
        self.expansions = set()

    def entity(self, var):
        if var not in self.entities:
            self.entities[var] = _EntityAtom(var)
            self.order.append(var)
        return self.entities[var]

    # -- conjunct intake -------------------------------------------------------

    def take(self, node):
        if isinstance(node, And):
            for arg in node.args:
                self.take(arg)
        elif isinstance(node, ObjectAtom):
            self.take_object(node)
        elif isinstance(node, RelationAtom):
            self.take_relation(node)
        else:
            raise QueryShapeError(
                f"{type(node).__name__} is outside the translatable fragment",
                node,
            )

    def resolve(self, name, node):
        hit = self.ont.maybe_resolve(name)
        if hit is None:
            raise QueryShapeError(f"unknown name {name!r} in the query", node)
        return hit

    def take_object(self, node):
        owner, kind, decl = self.resolve(node.type_name, node)
        if kind == "reified":
            self.take_reified(node, owner, decl)
            return
        if kind != "object":
            raise QueryShapeError(
                f"{node.type_name!r} is not an object type", node
            )
        if node.inst is None:
            raise QueryShapeError(
                f"object atom {decl.name!r} names no instance", node
            )
        for child in node.children:
            if not isinstance(child, RelationAtom):
                raise QueryShapeError(
                    "only relation atoms may be embedded", child
                )
            source = child.source if child.source is not None else node.inst
            self.take_relation(
                RelationAtom(child.name, source, child.target, child.order)
            )
        self.type_entity(node.inst, owner, decl, node.fields, node)

    def type_entity(self, ref, owner, decl, fields, node):
        """Assign a table to a variable, expanding role restrictions."""
        key = (ref.name, owner.uri, decl.name)
        if decl.query is not None and decl.var:
            if key not in self.expansions:
                self.expansions.add(key)
                self.take(substitute(decl.query, {decl.var: Ref(ref.name)}))
        else:
            self.entity(ref.name).set_table(decl.name, node)
        for fname, value in fields:
            fn_hit = self.resolve(fname, node)
            if fn_hit[1] != "function":
                raise QueryShapeError(
                    f"filter {fname!r} is not a function", node
                )
            if value is None or value.is_marker or value.name in self.bound:
                raise QueryShapeError(
                    f"filter {fname!r} must compare against a constant", node
                )
            column = _capitalize(fn_hit[2].name)
            self.entity(ref.name).add_filter(column, value.name)

    def take_reified(self, node, owner, decl):
        if node.inst is not None:
            raise QueryShapeError(
                f"named {decl.name} instances do not translate", node
            )
        participants = [fn.name for fn in decl.participants[:2]]
        by_name = {}
        for fname, ref in node.fields:
            if fname not in participants:
                raise QueryShapeError(
                    f"{fname!r} is not a participant of {decl.name}", node
                )
            by_name[fname] = ref
        if not decl.binrel:
            raise QueryShapeError(
                f"{decl.name} links to no binary relation", node
            )
        self.take_relation(
            RelationAtom(
                decl.binrel,
                by_name.get(participants[0]) if participants else None,
                by_name.get(participants[1]) if len(participants) > 1 else None,
            )
        )

    def take_relation(self, node):
        owner, kind, decl = self.resolve(node.name, node)
        if kind == "function":
            if node.order not in (None, "eq"):
                raise QueryShapeError(
                    f"order comparison {node.order!r} does not translate", node
                )
            if node.source is None or node.target is None:
                raise QueryShapeError(
                    f"function filter {decl.name!r} needs both sides", node
                )
            if node.target.is_marker or node.target.name in self.bound:
                raise QueryShapeError(
                    f"filter {decl.name!r} must compare against a constant",
                    node,
                )
            column = _capitalize(decl.name)
            self.entity(node.source.name).add_filter(column, node.target.name)
            return
        if kind == "reified":
            fields = []
            if node.source is not None and decl.participants:
                fields.append((decl.participants[0].name, node.source))
            if node.target is not None and len(decl.participants) > 1:
                fields.append((decl.participants[1].name, node.target))
            self.take_reified(
                ObjectAtom(node.name, None, tuple(fields)), owner, decl
            )
            return
        if kind != "relation":
            raise QueryShapeError(f"{node.name!r} is not a relation", node)
        if node.order is not None:
            raise QueryShapeError("ordered relation atoms do not translate", node)
        self.relations.append((node, owner, decl))


def _capitalize(name):
    return name[:1].upper() + name[1:]


def to_sql(expr, ont):
    """Translate a query in the conjunctive fragment to one SQL statement.

    ``ont`` supplies the relational rendering: the relation's declared
    source/target types name the participant columns, object types name the
    entity tables, and role restrictions (types with defining queries)
    expand to their underlying table plus filters.
    """
    the_marker(expr)
    tr = _Translation(ont)
    body = expr
    while isinstance(body, Exists):
        tr.bound.add(body.var)
        body = body.body
    tr.take(body)
    outer = body
    body = expr
    while isinstance(body, Exists):
        hit = ont.maybe_resolve(body.type)
        if hit is None or hit[1] != "object":
            raise QueryShapeError(
                f"quantified type {body.type!r} is not an object type", body
            )
        tr.type_entity(Ref(body.var), hit[0], hit[2], (), body)
        body = body.body
    for ref in refs_of(outer):
        if not ref.type:
            continue
        if ref.is_marker or ref.name in tr.bound:
            owner, kind, decl = tr.resolve(ref.type, outer)
            if kind != "object":
                raise QueryShapeError(
                    f"participant type {ref.type!r} is not an object type",
                    outer,
                )
            tr.type_entity(Ref(ref.name), owner, decl, (), outer)
        else:
            # Constants may be qualified by a data type (a value literal) or
            # an object type; only the latter asserts a classification that
            # the SQL must reproduce.
            hit = ont.maybe_resolve(ref.type)
            if hit is not None and hit[1] == "object":
                tr.type_entity(Ref(ref.name), hit[0], hit[2], (), outer)
    if len(tr.relations) != 1:
        raise QueryShapeError(
            "the fragment requires exactly one relation atom, "
            f"found {len(tr.relations)}",
            expr,
        )
    node, owner, decl = tr.relations[0]
    if not decl.source or not decl.target:
        raise QueryShapeError(
            f"relation {decl.name!r} declares no participant columns", node
        )
    columns = (_local(decl.source), _local(decl.target))
    if columns[0] == columns[1]:
        raise QueryShapeError(
            f"relation {decl.name!r} renders identical participant columns",
            node,
        )

    select = None
    joins = []
    constants = []
    participant_vars = []
    for ref, column in zip((node.source, node.target), columns):
        if ref is None:
            continue
        if ref.is_marker:
            if select is not None:
                raise QueryShapeError(
                    "both participants carry the result marker", node
                )
            select = column
        if ref.name in tr.entities:
            joins.append((column, ref.name))
            participant_vars.append(ref.name)
        elif not ref.is_marker:
            if ref.name in tr.bound:
                continue
            constants.append((column, ref.name))
    if select is None:
        raise QueryShapeError(
            "the result marker must be a relation participant", node
        )

    aliases = {}
    pool = iter(
        ["x", "y"]
        + [f"{base}{i}" for i in range(2, 10) for base in ("x", "y")]
    )
    ordered = participant_vars + [
        var for var in tr.order if var not in participant_vars
    ]
    for var in ordered:
        entity = tr.entities[var]
        if entity.table is None:
            raise QueryShapeError(f"{var!r} never receives a table", expr)
        entity.alias = next(pool)
        aliases[var] = entity.alias

    from_items = [(_local(decl.name), None)]
    from_items.extend(
        (tr.entities[var].table, tr.entities[var].alias) for var in ordered
    )
    filters = []
    for var in ordered:
        entity = tr.entities[var]
        if var != RESULT_MARKER and var not in tr.bound:
            # A constant instance name typed by an object atom: the alias
            # must be pinned to that row, not left as a free join.
            filters.append((entity.alias, "ID", var))
        filters.extend(
            (entity.alias, column, value) for column, value in entity.filters
        )
    return SqlQuery(
        select,
        tuple(from_items),
        tuple((column, aliases[var]) for column, var in joins),
        tuple(constants),
        tuple(filters),
    )


# -- SQL evaluation -----------------------------------------------------------------


def _entity_rows(coll, ont, table):
    hit = ont.maybe_resolve(table)
    if hit is None or hit[1] != "object":
        raise SqlRunError(f"unknown table {table!r}")
    owner, _, decl = hit
    columns = ["ID"]
    getters = []
    for fn in decl.functions:
        target = coll._resolve_near(fn.target, owner) if fn.target else None
        if target is not None and target[1] == "set":
            continue
        columns.append(_capitalize(fn.name))
        getters.append(TypeRef(owner.uri, fn.name))
    rows = []
    for identifier in coll.instances:
        if not coll.instance_of(identifier, hit):
            continue
        row = {"ID": identifier}
        for column, fn_tr in zip(columns[1:], getters):
            values = coll.function_values(identifier, fn_tr)
            row[column] = values[0] if values else None
        rows.append(row)
    return rows


def _relation_rows(coll, ont, table):
    hit = ont.maybe_resolve(table)
    if hit is None or hit[1] != "relation":
        raise SqlRunError(f"unknown relation table {table!r}")
    owner, _, decl = hit
    if not decl.source or not decl.target:
        raise SqlRunError(f"relation {table!r} declares no columns")
    source_col, target_col = _local(decl.source), _local(decl.target)
    tr = TypeRef(owner.uri, decl.name)
    return [
        {source_col: s, target_col: t} for s, t in coll.relation_pairs(tr)
    ]


def run_sql(sql, coll, ont=None):
    """Evaluate a translated statement by nested iteration over its tables."""
    ont = ont or coll.ontology
    relation_table, relation_alias = sql.from_items[0]
    if relation_alias is not None:
        raise SqlRunError("the first FROM item must be the relation table")
    relation_rows = _relation_rows(coll, ont, relation_table)
    entity_rows = {}
    for table, alias in sql.from_items[1:]:
        if alias is None:
            raise SqlRunError(f"entity table {table!r} carries no alias")
        entity_rows[alias] = _entity_rows(coll, ont, table)

    def cell(row, column, what):
        if column not in row:
            raise SqlRunError(f"unknown column {column!r} in {what}")
        return row[column]

    out = set()

    def descend(pending, bound):
        if not pending:
            for alias, column, value in sql.filters:
                if cell(bound[alias], column, f"table {alias!r}") != value:
                    return
            out.add(cell(bound[None], sql.select, "the relation table"))
            return
        alias = pending[0]
        for row in entity_rows[alias]:
            wanted = [
                column for column, join_alias in sql.joins
                if join_alias == alias
            ]
            if all(
                cell(bound[None], column, "the relation table") == row["ID"]
                for column in wanted
            ):
                descend(pending[1:], {**bound, alias: row})

    for relation_row in relation_rows:
        if any(
            cell(relation_row, column, "the relation table") != value
            for column, value in sql.constants
        ):
            continue
        descend(list(entity_rows), {None: relation_row})
    return out
