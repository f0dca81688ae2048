"""Command-line front door: lattices, scales, queries, and checks over files.

Exit codes: 0 success, 1 data violations found (or a failed cross-check),
2 unreadable input or unresolvable names, 3 a resource limit was hit,
4 the query falls outside the SQL-translatable fragment.  Results go to
stdout; counts, progress, and violation diagnostics go to stderr when they
are not the command's primary output.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

from . import markup, ontology, query, scaling
from .context import dumps_context, load_context
from .errors import (
    CkmlError,
    ConceptLimitError,
    QueryShapeError,
)
from .lattice import (
    DEFAULT_MAX_CONCEPTS,
    EXPORT_FORMATS,
    build_lattice,
    export_lattice,
)
from .theory import check_theory

ONTOLOGY_MAP_VAR = "CKML_ONTOLOGY_PATHS"


def _registry(args):
    """Ontology registry seeded from --ontology-map or the environment."""
    map_path = getattr(args, "ontology_map", None) or os.environ.get(
        ONTOLOGY_MAP_VAR
    )
    if not map_path:
        return ontology.OntologyRegistry()
    with open(map_path, encoding="utf-8") as handle:
        paths = json.load(handle)
    return ontology.OntologyRegistry(paths, base_dir=os.path.dirname(map_path))


def _slug(name):
    cleaned = re.sub(r"[^A-Za-z0-9]+", "-", name).strip("-").lower()
    return cleaned or "scale"


def _parse_documents(paths, registry):
    """Parse every file, registering ontologies and pooling collections."""
    collections = []
    theories = []
    for path in paths:
        document = markup.parse_file(path)
        for decl in document.declarations:
            if isinstance(decl, markup.OntologyDecl):
                ontology.ontology_from_decl(decl, registry)
            elif isinstance(decl, markup.CollectionDecl):
                collections.append(decl)
            elif isinstance(decl, markup.TheoryDecl):
                theories.append(decl)
    return collections, theories


def _load_collection(collections, registry):
    document = markup.Document("knowledge-base", tuple(collections))
    return ontology.collection_from_document(document, registry)


# -- subcommands ------------------------------------------------------------------


def cmd_lattice(args):
    context = load_context(args.context_file)
    lattice = build_lattice(context, max_concepts=args.max_concepts)
    text = export_lattice(lattice, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    print(f"{len(lattice.concepts)} concepts", file=sys.stderr)
    return 0


def cmd_oracle(args):
    """Concept count by exhaustive double-prime closure, for cross-checks."""
    context = load_context(args.context_file)
    m = len(context.attributes)
    intents = set()
    for subset in range(1 << m):
        intents.add(context.closure_bits(subset))
    print(f"{len(intents)} concepts")
    return 0


def cmd_scale(args):
    registry = _registry(args)
    _, theories = _parse_documents([args.theory_file], registry)
    collections, more = _parse_documents([args.collection_file], registry)
    theories.extend(more)
    if not collections:
        print(f"{args.collection_file} declares no collection", file=sys.stderr)
        return 2
    coll = _load_collection(collections, registry)
    scalable = {
        decl.name: decl for decl in theories if decl.interpretations
    }
    genus_name = None
    if coll.genus:
        genus_name = coll.genus.partition(":")[2] or coll.genus
    wanted = args.scale or (
        ([genus_name] if genus_name else []) + sorted(scalable)
    )
    missing = [
        name for name in wanted if name not in scalable and name != genus_name
    ]
    if missing or not wanted:
        print(
            "no scalable theory named: " + ", ".join(missing or ["(none)"]),
            file=sys.stderr,
        )
        return 2
    os.makedirs(args.out_dir, exist_ok=True)
    facets = []
    for name in wanted:
        if name == genus_name and name not in scalable:
            scale = scaling.genus_scale(coll, coll.genus)
        else:
            scale = scaling.scale_from_theory(scalable[name], coll)
        facet = scaling.realize(scale, coll)
        facets.append(facet)
        for violation in facet.violations:
            print(f"{facet.scale}: {violation}", file=sys.stderr)
        path = os.path.join(args.out_dir, _slug(name) + ".cxt")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(dumps_context(facet.context))
        print(path)
    space = scaling.build_space(facets)
    path = os.path.join(args.out_dir, "space.cxt")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_context(space))
    print(path)
    return 0


def cmd_query(args):
    registry = _registry(args)
    collections, _ = _parse_documents(args.files, registry)
    if not collections:
        print("no collection among the input files", file=sys.stderr)
        return 2
    coll = _load_collection(collections, registry)
    expr = markup.parse_expression(args.query)
    if args.emit_sql or args.check:
        desugared = query.desugar_query(expr, coll)
        sql = query.to_sql(desugared, coll.ontology)
        if args.emit_sql:
            sys.stdout.write(sql.text)
            return 0
        answers = query.answer(coll, expr)
        via_sql = query.run_sql(sql, coll)
        for value in sorted(answers):
            print(value)
        if answers != via_sql:
            print(
                "cross-check failed: SQL returned "
                + (", ".join(sorted(via_sql)) or "(nothing)"),
                file=sys.stderr,
            )
            return 1
        print("cross-check ok", file=sys.stderr)
        return 0
    for value in sorted(query.answer(coll, expr)):
        print(value)
    return 0


def cmd_check(args):
    registry = _registry(args)
    collections, theories = _parse_documents(args.files, registry)
    violations = 0
    if collections:
        coll = _load_collection(collections, registry)
        for violation in ontology.validate(coll):
            print(str(violation))
            violations += 1
    if args.context:
        context = load_context(args.context)
        for decl in theories:
            theory = markup.theory_from_decl(decl)
            for sequent, witness in check_theory(context, theory):
                print(f"{sequent} violated by {witness}")
                violations += 1
    print(f"{violations} violations", file=sys.stderr)
    return 1 if violations else 0


# -- argument wiring ----------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ckml",
        description="Concept lattices, conceptual scales, and queries "
        "over a normalized knowledge markup format.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="build the concept lattice of a context")
    p.add_argument("context_file")
    p.add_argument("--format", choices=EXPORT_FORMATS, default="structured")
    p.add_argument("--max-concepts", type=int, default=DEFAULT_MAX_CONCEPTS)
    p.add_argument("-o", "--output", help="write the export here, not stdout")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser(
        "oracle", help="count concepts by exhaustive closure enumeration"
    )
    p.add_argument("context_file")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser(
        "scale", help="realize the scales a theory file describes"
    )
    p.add_argument("theory_file")
    p.add_argument("collection_file")
    p.add_argument(
        "--scale",
        action="append",
        metavar="NAME",
        help="theory to realize (repeatable; default: all with interpretations)",
    )
    p.add_argument("--out-dir", default=".")
    p.add_argument("--ontology-map", help="JSON file mapping uris to paths")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("query", help="answer a question-marked expression")
    p.add_argument("files", nargs="+")
    p.add_argument("--query", required=True, help="expression with one ?")
    p.add_argument(
        "--emit-sql", action="store_true", help="print the SQL translation"
    )
    p.add_argument(
        "--check",
        action="store_true",
        help="answer both directly and through SQL, compare",
    )
    p.add_argument("--ontology-map", help="JSON file mapping uris to paths")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser(
        "check", help="validate collections and theories against their data"
    )
    p.add_argument("files", nargs="+")
    p.add_argument("--context", help="context file to check theories against")
    p.add_argument("--ontology-map", help="JSON file mapping uris to paths")
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConceptLimitError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except QueryShapeError as exc:
        print(str(exc), file=sys.stderr)
        return 4
    except CkmlError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
