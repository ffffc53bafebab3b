"""
Oracle checks over the full corpus: every polynomial-time answer is compared
with brute-force enumeration. Run with `pytest -m slow`.
"""

import json
import logging
import math
from collections import Counter
from itertools import combinations
from pathlib import Path

import pytest

from src.cli import run
from src.config import DiversityConfig, SamplingConfig
from src.diversity import (
    best_addition,
    diverse_pool,
    max_separated_pair_bruteforce,
    maximal_separated_pair,
    pairwise_distances,
    pool_objective,
)
from src.graph import distance, serialize_graph, validate_matching
from src.predictability import compare_policies
from src.sampling import ChainConfig, enumerate_matchings, mcmc_sample, total_variation_distance
from src.solvers import TwoFactor, disjoint_pair, find_perfect_matching, fully_disjoint_from, most_distant_matching

from .corpus import corpus, named_instances

pytestmark = pytest.mark.slow

logger = logging.getLogger(__name__)

LIMIT = 1000
CORPUS = corpus()
IDS = [name for name, _ in CORPUS]
TEST_CONFIG_PATH = str(Path(__file__).resolve().parent.parent / "config" / "config-test.yaml")


def _all(graph):
    enumeration = enumerate_matchings(graph, LIMIT)
    assert enumeration.complete
    return list(enumeration.matchings)


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_feasibility_matches_enumeration(name, graph):
    matchings = _all(graph)
    outcome = find_perfect_matching(graph)
    assert outcome.feasible == bool(matchings)
    if matchings:
        assert outcome.matching == matchings[0]


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_most_distant_matches_brute_force(name, graph):
    matchings = _all(graph)
    distances = pairwise_distances(matchings)
    for index, given in enumerate(matchings[:20]):
        _, d_star = most_distant_matching(graph, given)
        assert d_star == int(distances[index].max())


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_disjoint_pair_matches_brute_force(name, graph):
    matchings = _all(graph)
    exists = bool(matchings) and int(pairwise_distances(matchings).max()) == graph.n
    pair = disjoint_pair(graph)
    assert (pair is not None) == exists
    if pair is not None:
        first, second = pair
        assert not (first.edges() & second.edges())
        assert TwoFactor(graph.n, first.edges() | second.edges()).is_two_regular()


def test_disjoint_pair_exists_where_complement_of_first_fails():
    graph = dict(named_instances())["C"]
    first = find_perfect_matching(graph).matching
    assert first is not None
    assert not fully_disjoint_from(graph, first).feasible
    assert disjoint_pair(graph) is not None


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_maximal_separation_trace(name, graph):
    if not _all(graph):
        return
    first, second, d, trace = maximal_separated_pair(graph)
    assert all(a < b for a, b in zip(trace.distances, trace.distances[1:]))
    assert trace.iterations <= graph.n + 1
    assert most_distant_matching(graph, first)[1] == d
    assert most_distant_matching(graph, second)[1] == d


def test_maximal_pair_is_a_lower_bound_on_every_instance(record_property):
    gaps = Counter()
    for name, graph in CORPUS:
        if not _all(graph):
            continue
        d = maximal_separated_pair(graph).distance
        d_max = max_separated_pair_bruteforce(graph, LIMIT).distance
        assert d <= d_max, name
        gaps[d_max - d] += 1
    histogram = dict(sorted(gaps.items()))
    logger.info(f"Maximal pair gap to the exact optimum: {histogram}")
    record_property("separation_gap_histogram", json.dumps(histogram))
    assert sum(gaps.values()) > 0


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_pair_pool_reaches_the_maximal_pair(name, graph):
    if not _all(graph):
        return
    pool = diverse_pool(
        graph,
        k=2,
        restarts=1,
        seed=3,
        diversity=DiversityConfig(local_search_passes=10, injection_samples=5, enumeration_fallback_limit=LIMIT),
        sampling=SamplingConfig(min_burn_in=200, min_thinning=5),
    )
    assert pool.objective >= maximal_separated_pair(graph).distance
    assert len(set(pool.members)) == pool.size
    assert pool.objective == pool_objective(pool.members)


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_best_addition_matches_brute_force(name, graph):
    matchings = _all(graph)
    if not matchings or len(matchings) > 20:
        return
    distances = pairwise_distances(matchings)
    for size in (1, 2, 3):
        for pool in combinations(range(len(matchings)), size):
            expected = int(distances[:, list(pool)].sum(axis=1).max())
            assert best_addition(graph, [matchings[i] for i in pool]).gain == expected


@pytest.mark.parametrize("n", range(1, 7))
def test_counts_on_named_families(n):
    named = dict(named_instances())
    assert enumerate_matchings(named[f"K{n},{n}"], LIMIT).count == math.factorial(n)
    if n >= 2:
        assert enumerate_matchings(named[f"C{2 * n}"], LIMIT).count == 2


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_sampler_is_close_to_uniform(name, graph):
    matchings = _all(graph)
    if not 2 <= len(matchings) <= 20:
        return
    samples = mcmc_sample(graph, ChainConfig.for_graph(graph.n, seed=7, sample_count=20_000))
    assert all(validate_matching(graph, m).valid for m in set(samples))
    assert total_variation_distance(samples, matchings) <= 0.05


def test_audit_on_instance_c():
    graph = dict(named_instances())["C"]
    comparison = compare_policies(
        graph,
        k=2,
        seed=0,
        trials=1000,
        diversity=DiversityConfig(),
        sampling=SamplingConfig(),
    )
    assert abs(comparison.uniform.adversary_success - 5 / 9) <= 1e-9
    assert abs(comparison.pool.adversary_success - 1 / 2) <= 1e-9
    assert comparison.less_predictable == "pool"


@pytest.mark.parametrize("argv", [
    ["diverse", "--k", "3", "--seed", "5"],
    ["sample", "--count", "50", "--seed", "5"],
    ["audit", "--k", "2", "--seed", "5"],
])
def test_commands_are_deterministic(argv, tmp_path, capsys):
    path = tmp_path / "k33.txt"
    path.write_text(serialize_graph(dict(named_instances())["K3,3"]))

    outputs = []
    for _ in range(2):
        assert run([argv[0], str(path)] + argv[1:] + ["--config", TEST_CONFIG_PATH]) == 0
        document = json.loads(capsys.readouterr().out)
        document.pop("timing")
        outputs.append(json.dumps(document, sort_keys=True))
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize("name, graph", CORPUS, ids=IDS)
def test_distance_is_a_metric_without_distance_one(name, graph):
    matchings = _all(graph)
    if len(matchings) > 20:
        return
    for first, second in combinations(matchings, 2):
        assert distance(first, second) == distance(second, first) > 1
    for first in matchings:
        assert distance(first, first) == 0
    for a, b, c in combinations(matchings, 3):
        assert distance(a, c) <= distance(a, b) + distance(b, c)
        assert distance(a, b) <= distance(a, c) + distance(c, b)
