import os

import pytest

from src.graph import BipartiteGraph, Matching, complete_bipartite, even_cycle


@pytest.fixture(autouse=True)
def clean_env():
    """Clean environment variables before each test"""
    env_vars = ['DIVERSE_MATCHING_CONFIG', 'DIVERSE_MATCHING_LOG_LEVEL']

    original_values = {var: os.environ.get(var) for var in env_vars}
    for var in env_vars:
        if var in os.environ:
            del os.environ[var]

    yield

    for var, value in original_values.items():
        if value is not None:
            os.environ[var] = value
        elif var in os.environ:
            del os.environ[var]


@pytest.fixture
def graph_b():
    # u1-v1, u2-v1, u2-v2: exactly one perfect matching
    return BipartiteGraph.from_edges(2, [(0, 0), (1, 0), (1, 1)])


@pytest.fixture
def graph_c():
    return BipartiteGraph.from_edges(3, [(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)])


@pytest.fixture
def matchings_c():
    return Matching((0, 1, 2)), Matching((0, 2, 1)), Matching((1, 0, 2))


@pytest.fixture
def k22():
    return complete_bipartite(2)


@pytest.fixture
def c8():
    return even_cycle(4)


@pytest.fixture
def infeasible_graph():
    # both U-vertices only reach v1
    return BipartiteGraph.from_edges(2, [(0, 0), (1, 0)])


@pytest.fixture
def graph_c_file(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("# instance C\n3 7\n1 1\n1 2\n2 1\n2 2\n2 3\n3 2\n3 3\n")
    return str(path)
