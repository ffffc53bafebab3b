"""
Multi-solution diversity: mutually maximal pairs by iterating the most-distant
step, exact maximum-separated pairs by enumeration, exact greedy additions to a
pool, and k-element pools grown greedily then improved by local search.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .config import DiversityConfig, SamplingConfig
from .errors import InfeasibleInstanceError, LimitExceededError, UsageError
from .graph import BipartiteGraph, EdgeWeighting, Matching, distance, require_valid
from .sampling import ChainConfig, enumerate_matchings, mcmc_sample
from .solvers import disjoint_pair, find_perfect_matching, min_weight_perfect_matching, most_distant_matching

logger = logging.getLogger(__name__)


def pairwise_distances(members: Sequence[Matching]) -> np.ndarray:
    if not members:
        return np.zeros((0, 0), dtype=np.int64)
    n = members[0].n
    assign = np.array([m.assign for m in members], dtype=np.int64).reshape(len(members), n)
    return (assign[:, None, :] != assign[None, :, :]).sum(axis=-1)


@dataclass(frozen=True)
class MatchingPool:
    members: Tuple[Matching, ...]
    objective: int
    requested: int = 0

    @classmethod
    def from_members(cls, members: Sequence[Matching], requested: Optional[int] = None) -> "MatchingPool":
        if len(set(members)) != len(members):
            raise UsageError("pool members must be pairwise distinct")
        members = tuple(members)
        return cls(members, pool_objective(members), len(members) if requested is None else requested)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def shortfall(self) -> int:
        return max(0, self.requested - self.size)

    @property
    def min_pairwise_distance(self) -> Optional[int]:
        if self.size < 2:
            return None
        distances = pairwise_distances(self.members)
        return int(distances[np.triu_indices(self.size, k=1)].min())

    def sort_key(self) -> Tuple[int, Tuple[Tuple[int, ...], ...]]:
        return -self.objective, tuple(m.assign for m in sorted(self.members))


@dataclass(frozen=True)
class SeparationTrace:
    """
    Matchings visited by the alternating most-distant iteration. steps[0] is the
    start (distance 0); every later step strictly increased the distance.
    """

    steps: Tuple[Tuple[Matching, int], ...]
    final_distance: int
    iterations: int

    @property
    def distances(self) -> List[int]:
        return [d for _, d in self.steps]

    @property
    def improving_steps(self) -> int:
        return len(self.steps) - 1


class SeparatedPair(NamedTuple):
    first: Matching
    second: Matching
    distance: int
    trace: SeparationTrace


class MatchingPair(NamedTuple):
    first: Matching
    second: Matching
    distance: int


class Addition(NamedTuple):
    matching: Matching
    gain: int


def pool_objective(pool: Union[MatchingPool, Sequence[Matching]]) -> int:
    members = pool.members if isinstance(pool, MatchingPool) else tuple(pool)
    return int(np.triu(pairwise_distances(members), k=1).sum())


def _require_feasible(graph: BipartiteGraph) -> Matching:
    outcome = find_perfect_matching(graph)
    if outcome.matching is None:
        raise InfeasibleInstanceError("the graph has no perfect matching")
    return outcome.matching


def maximal_separated_pair(graph: BipartiteGraph, start: Optional[Matching] = None) -> SeparatedPair:
    if start is None:
        start = _require_feasible(graph)
    else:
        require_valid(graph, start, "start matching")

    steps: List[Tuple[Matching, int]] = [(start, 0)]
    iterations = 0
    while True:
        current, current_distance = steps[-1]
        farthest, d_star = most_distant_matching(graph, current)
        iterations += 1
        logger.debug(f"Separation iteration {iterations}: distance {current_distance} -> {d_star}")
        if d_star <= current_distance:
            break
        steps.append((farthest, d_star))

    trace = SeparationTrace(tuple(steps), d_star, iterations)
    if len(steps) == 1:
        return SeparatedPair(start, start, 0, trace)
    return SeparatedPair(steps[-2][0], steps[-1][0], steps[-1][1], trace)


def max_separated_pair_bruteforce(graph: BipartiteGraph, limit: int) -> MatchingPair:
    enumeration = enumerate_matchings(graph, limit)
    if not enumeration.complete:
        raise LimitExceededError(f"more than {limit} perfect matchings; exact search refused")
    matchings = enumeration.matchings
    if not matchings:
        raise InfeasibleInstanceError("the graph has no perfect matching")

    best = MatchingPair(matchings[0], matchings[0], 0)
    for first, second in combinations(matchings, 2):
        d = distance(first, second)
        if d > best.distance:
            best = MatchingPair(first, second, d)
    return best


def best_addition(graph: BipartiteGraph, pool: Union[MatchingPool, Sequence[Matching]]) -> Addition:
    """
    The matching maximising total distance to the pool: weight each edge by the
    number of members using it; sum of distances = |pool| * n - weight.
    """
    members = pool.members if isinstance(pool, MatchingPool) else tuple(pool)
    if not members:
        raise UsageError("best_addition needs a non-empty pool")
    outcome = min_weight_perfect_matching(graph, EdgeWeighting.usage_counts(graph, members))
    if outcome.matching is None or outcome.weight is None:
        raise InfeasibleInstanceError("the graph has no perfect matching")
    return Addition(outcome.matching, len(members) * graph.n - outcome.weight)


def _total_distance(matching: Matching, others: Sequence[Matching]) -> int:
    return sum(distance(matching, other) for other in others)


class PoolBuilder:
    """One restart of diverse_pool: seed, grow greedily, then improve by local search."""

    def __init__(
        self,
        graph: BipartiteGraph,
        k: int,
        seed: int,
        diversity: DiversityConfig,
        sampling: SamplingConfig,
        anchor: Optional[SeparatedPair] = None,
    ):
        self.graph = graph
        self.k = k
        self.seed = seed
        self.diversity = diversity
        self.sampling = sampling
        self.anchor = anchor
        self.members: List[Matching] = []

    def build(self) -> MatchingPool:
        self._seed_members()
        self._grow()
        self._improve()
        return MatchingPool.from_members(sorted(self.members), requested=self.k)

    def _add(self, candidates: Sequence[Matching]) -> None:
        for candidate in candidates:
            if len(self.members) < self.k and candidate not in self.members:
                self.members.append(candidate)

    def _seed_members(self) -> None:
        """Seed with the separated pairs available, farthest pair first."""
        start = mcmc_sample(self.graph, ChainConfig.for_graph(self.graph.n, self.seed, 1, self.sampling))[0]
        sampled = maximal_separated_pair(self.graph, start)
        pairs = [(sampled.first, sampled.second, sampled.distance)]
        if self.anchor is not None:
            pairs.append((self.anchor.first, self.anchor.second, self.anchor.distance))
        disjoint = disjoint_pair(self.graph)
        if disjoint is not None:
            pairs.insert(0, (disjoint[0], disjoint[1], self.graph.n))
        for first, second, _ in sorted(pairs, key=lambda pair: -pair[2]):
            self._add([first, second])
        logger.debug(f"Restart seed={self.seed}: seeded {len(self.members)} members, sampled pair d={sampled.distance}")

    def _grow(self) -> None:
        while len(self.members) < self.k:
            candidate = best_addition(self.graph, self.members).matching
            if candidate in self.members:
                candidate = self._inject()
                if candidate is None:
                    logger.warning(f"No further distinct matching found; pool stops at {len(self.members)}")
                    return
            self.members.append(candidate)

    def _best_new(self, candidates: Sequence[Matching]) -> Optional[Matching]:
        fresh = sorted(set(candidates) - set(self.members))
        if not fresh:
            return None
        return max(fresh, key=lambda m: (_total_distance(m, self.members), [-v for v in m.assign]))

    def _inject(self) -> Optional[Matching]:
        cfg = ChainConfig.for_graph(self.graph.n, self.seed + 1000, self.diversity.injection_samples, self.sampling)
        try:
            candidate = self._best_new(mcmc_sample(self.graph, cfg))
        except LimitExceededError as e:
            logger.warning(f"Sampler injection failed: {e}")
            candidate = None
        if candidate is not None:
            return candidate

        enumeration = enumerate_matchings(self.graph, self.diversity.enumeration_fallback_limit)
        return self._best_new(enumeration.matchings)

    def _improve(self) -> None:
        if len(self.members) < 2:
            return
        for sweep in range(self.diversity.local_search_passes):
            improved = False
            for i in range(len(self.members)):
                others = self.members[:i] + self.members[i + 1:]
                candidate, gain = best_addition(self.graph, others)
                if candidate not in others and gain > _total_distance(self.members[i], others):
                    logger.debug(f"Local search pass {sweep + 1}: member {i} replaced, contribution -> {gain}")
                    self.members[i] = candidate
                    improved = True
            if not improved:
                return


def diverse_pool(
    graph: BipartiteGraph,
    k: int = 10,
    restarts: int = 5,
    seed: int = 0,
    diversity: Optional[DiversityConfig] = None,
    sampling: Optional[SamplingConfig] = None,
) -> MatchingPool:
    if k < 2:
        raise UsageError(f"k must be at least 2, got {k}")
    if restarts < 1:
        raise UsageError(f"restarts must be at least 1, got {restarts}")
    _require_feasible(graph)
    diversity = diversity or DiversityConfig()
    sampling = sampling or SamplingConfig()

    anchor = maximal_separated_pair(graph)
    best: Optional[MatchingPool] = None
    for restart in range(restarts):
        pool = PoolBuilder(graph, k, seed + restart, diversity, sampling, anchor).build()
        logger.debug(f"Restart {restart}: size {pool.size}, objective {pool.objective}")
        if best is None or pool.sort_key() < best.sort_key():
            best = pool

    assert best is not None
    if best.shortfall:
        logger.warning(f"Pool holds {best.size} of the requested {k} matchings")
    logger.info(
        f"Diverse pool: size {best.size}, objective {best.objective}, min distance {best.min_pairwise_distance}"
    )
    return best


def greedy_disjoint_family(graph: BipartiteGraph, k: int) -> List[Matching]:
    """
    Pairwise edge-disjoint perfect matchings, found by repeatedly removing the
    family's edges and solving again. No guarantee of the largest family.
    """
    if k < 1:
        raise UsageError(f"k must be at least 1, got {k}")
    if graph.n == 0:
        return [Matching(())]
    pair = disjoint_pair(graph)
    family = list(pair) if pair is not None else [_require_feasible(graph)]
    family = family[:k]

    residual = graph
    for member in family:
        residual = residual.without_edges(member.pairs())
    while len(family) < k:
        outcome = find_perfect_matching(residual)
        if outcome.matching is None:
            break
        family.append(outcome.matching)
        residual = residual.without_edges(outcome.matching.pairs())

    logger.info(f"Disjoint family of {len(family)} matchings (requested {k})")
    return family
