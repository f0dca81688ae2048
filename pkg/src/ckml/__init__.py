"""Formal contexts, concept lattices, conceptual scales, and a knowledge
markup format with ontologies, instance collections, and queries."""

from .context import (
    AttributeSet,
    FormalContext,
    ObjectSet,
    apposition,
    derive_extent,
    derive_intent,
    dump_context,
    dumps_context,
    is_formal_concept,
    load_context,
    loads_context,
)
from .errors import (
    AmbiguousNameError,
    AppositionError,
    CkmlError,
    ConceptLimitError,
    ContextError,
    ContextFormatError,
    EvaluationError,
    ExportFormatError,
    ForeignConceptError,
    InvalidSetError,
    MarkupError,
    ModelBoundError,
    OntologyError,
    QueryShapeError,
    ScaleError,
    SqlRunError,
    TheoryError,
    UnknownAttributeError,
    UnknownTypeError,
)
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
from .lattice import (
    ConceptLattice,
    FormalConcept,
    build_lattice,
    export_lattice,
)
from .markup import Document, desugar, parse, parse_expression, parse_file, serialize
from .ontology import (
    InstanceCollection,
    Ontology,
    OntologyRegistry,
    TypeRef,
    Violation,
    collection_from_document,
    evaluate,
    ontology_from_decl,
    solutions,
    validate,
)
from .query import SqlQuery, answer, desugar_query, run_sql, to_sql
from .scaling import (
    ConcreteScale,
    Facet,
    FacetViolation,
    build_space,
    equivalence_scale,
    genus_scale,
    hierarchical_scale,
    interordinal_scale,
    nominal_scale,
    ordinal_scale,
    realize,
    scale_from_theory,
)
from .theory import (
    Sequent,
    SequentCheck,
    Theory,
    check_theory,
    expand_cover,
    expand_disjoint,
    expand_partition,
    expand_subtype,
    models_of_theory,
    satisfies,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
