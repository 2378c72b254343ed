import json
from pathlib import Path

import pytest

from localhom.complexes import WeightedGraph, build_flag_complex
from localhom.golden import c4, k3, k4, octahedron, two_c4, unit_square_graph

DATA = Path(__file__).parent / "data"


def load_corpus(name="random_corpus.json"):
    with open(DATA / name) as fh:
        entries = json.load(fh)
    return [
        WeightedGraph(g["vertices"], tuple((u, v, w) for u, v, w in g["edges"]))
        for g in entries
    ]


@pytest.fixture(scope="session")
def c4_filt():
    return build_flag_complex(c4(), 2)


@pytest.fixture(scope="session")
def k3_filt():
    return build_flag_complex(k3(), 3)


@pytest.fixture(scope="session")
def k4_filt():
    return build_flag_complex(k4(), 3)


@pytest.fixture(scope="session")
def oct_filt():
    return build_flag_complex(octahedron(), 3)


@pytest.fixture(scope="session")
def two_c4_filt():
    return build_flag_complex(two_c4(), 2)


@pytest.fixture(scope="session")
def square_filt():
    return build_flag_complex(unit_square_graph(), 3)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def tie_free_corpus():
    return load_corpus("tie_free_corpus.json")
