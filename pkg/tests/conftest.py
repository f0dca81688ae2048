"""Shared fixtures: the bundled corpus and small brute-force oracles."""

import os
import random

import pytest

from ckml import FormalContext, markup, ontology

FIXTURES = os.path.join(os.path.dirname(__file__), os.pardir, "fixtures")

BLOCK_PATHS = {
    "http://www.database.org/ontology/db/": "blocks/db.ckml",
    "http://www.database.org/ontology/oodb/": "blocks/oodb.ckml",
    "http://www.database.org/ontology/rdb/": "blocks/rdb.ckml",
}

INTEL_PATHS = {"http://www.intel.com/ontology/": "intel/ontology.ckml"}


def fixture_path(*parts):
    return os.path.join(FIXTURES, *parts)


def load_collection(document_path, paths):
    registry = ontology.OntologyRegistry(paths, base_dir=FIXTURES)
    document = markup.parse_file(fixture_path(document_path))
    return ontology.collection_from_document(document, registry)


@pytest.fixture(scope="session")
def living_context():
    from ckml import load_context

    return load_context(fixture_path("living", "living.cxt"))


@pytest.fixture(scope="session")
def living_theory():
    document = markup.parse_file(fixture_path("living", "theory.ckml"))
    return markup.theory_from_decl(document.declarations[0])


@pytest.fixture()
def blocks_collection():
    return load_collection(os.path.join("blocks", "collection.ckml"), BLOCK_PATHS)


@pytest.fixture()
def reified_collection():
    return load_collection(
        os.path.join("blocks", "support-objects.ckml"), BLOCK_PATHS
    )


@pytest.fixture()
def oodb_collection():
    return load_collection(
        os.path.join("blocks", "oodb-collection.ckml"), BLOCK_PATHS
    )


@pytest.fixture()
def intel_collection():
    return load_collection(os.path.join("intel", "releases.ckml"), INTEL_PATHS)


@pytest.fixture(scope="session")
def intel_theories():
    document = markup.parse_file(fixture_path("intel", "theories.ckml"))
    return list(document.declarations)


def random_context(rng, max_objects=7, max_attributes=7, density=None):
    """A random context with distinct generated names."""
    n = rng.randint(1, max_objects)
    m = rng.randint(1, max_attributes)
    density = density if density is not None else rng.uniform(0.2, 0.8)
    objects = [f"g{i}" for i in range(n)]
    attributes = [f"m{j}" for j in range(m)]
    pairs = [
        (obj, attr)
        for obj in objects
        for attr in attributes
        if rng.random() < density
    ]
    return FormalContext.from_pairs(objects, attributes, pairs)


def closure_concepts(context):
    """Every concept by double-prime closure over all attribute subsets."""
    m = len(context.attributes)
    intents = {context.closure_bits(subset) for subset in range(1 << m)}
    return {
        (context.extent_bits(intent), intent) for intent in intents
    }


def rectangle_concepts(context):
    """Every concept as a maximal full rectangle, by direct search."""
    n = len(context.objects)
    found = set()
    for subset in range(1 << n):
        intent = context.intent_bits(subset)
        extent = context.extent_bits(intent)
        found.add((extent, intent))
    return found
