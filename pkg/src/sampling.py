"""
Solution-space exploration: limit-bounded enumeration and counting (the
brute-force oracle), a Markov chain sampler over perfect and near-perfect
matchings, and the final random pick of a secret solution from a pool.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, List, Optional, Sequence, Union

import numpy as np

from .config import SamplingConfig
from .errors import InfeasibleInstanceError, LimitExceededError, UsageError
from .graph import BipartiteGraph, Matching
from .solvers import UNMATCHED, find_perfect_matching

if TYPE_CHECKING:
    from .diversity import MatchingPool

logger = logging.getLogger(__name__)

DRAW_CHUNK = 65_536


@dataclass(frozen=True)
class EnumerationResult:
    matchings: Sequence[Matching]
    complete: bool
    count: Optional[int]


@dataclass(frozen=True)
class ChainConfig:
    seed: int
    burn_in_steps: int
    thinning_interval: int
    sample_count: int
    chains: int = 1
    budget_factor: int = 1000
    debug: bool = False

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise UsageError(f"seed must be non-negative, got {self.seed}")
        for name in ("burn_in_steps", "thinning_interval", "sample_count", "chains", "budget_factor"):
            value = getattr(self, name)
            if value < 1:
                raise UsageError(f"{name} must be a positive integer, got {value}")

    @classmethod
    def for_graph(
        cls,
        n: int,
        seed: int,
        sample_count: int,
        sampling: Optional[SamplingConfig] = None,
        burn_in_steps: Optional[int] = None,
        thinning_interval: Optional[int] = None,
    ) -> "ChainConfig":
        """Defaults: burn-in max(min_burn_in, n^4), thinning max(min_thinning, n^2)."""
        sampling = sampling or SamplingConfig()
        return cls(
            seed=seed,
            burn_in_steps=burn_in_steps or max(sampling.min_burn_in, n**4),
            thinning_interval=thinning_interval or max(sampling.min_thinning, n**2),
            sample_count=sample_count,
            chains=sampling.chains,
            budget_factor=sampling.budget_factor,
            debug=sampling.debug,
        )


def _iter_matchings(graph: BipartiteGraph) -> Iterator[Matching]:
    """Backtracking over rows with per-row neighbour cursors; yields in lexicographic order."""
    n = graph.n
    if n == 0:
        yield Matching(())
        return
    assign = [UNMATCHED] * n
    used = [False] * n
    cursor = [0] * n
    u = 0
    while u >= 0:
        if assign[u] != UNMATCHED:
            used[assign[u]] = False
            assign[u] = UNMATCHED
        neighbors = graph.neighbors(u)
        while cursor[u] < len(neighbors) and used[neighbors[cursor[u]]]:
            cursor[u] += 1
        if cursor[u] == len(neighbors):
            cursor[u] = 0
            u -= 1
            continue
        v = neighbors[cursor[u]]
        cursor[u] += 1
        assign[u] = v
        used[v] = True
        if u == n - 1:
            yield Matching(tuple(assign))
        else:
            u += 1


def enumerate_matchings(graph: BipartiteGraph, limit: int) -> EnumerationResult:
    """All perfect matchings in lexicographic order, unless there are more than `limit`."""
    if limit < 0:
        raise UsageError(f"limit must be non-negative, got {limit}")

    found: List[Matching] = []
    for matching in _iter_matchings(graph):
        if len(found) == limit:
            logger.warning(f"Enumeration stopped after {limit} matchings; the count exceeds the limit")
            return EnumerationResult(tuple(found), complete=False, count=None)
        found.append(matching)

    return EnumerationResult(tuple(found), complete=True, count=len(found))


def count_matchings(graph: BipartiteGraph, limit: int) -> Optional[int]:
    """Number of perfect matchings, or None when it exceeds `limit`."""
    return enumerate_matchings(graph, limit).count


class MatchingChain:
    """
    Random walk on perfect and near-perfect matchings. For a chosen edge (u, v):
    a perfect state drops it if matched; a near-perfect state adds it when both
    endpoints are exposed, rotates it in when exactly one is, and holds otherwise.
    """

    def __init__(self, graph: BipartiteGraph, start: Matching, debug: bool = False):
        self.graph = graph
        self.edges = graph.sorted_edges()
        self.match_u = list(start.assign)
        self.match_v = [UNMATCHED] * graph.n
        for u, v in enumerate(self.match_u):
            self.match_v[v] = u
        self.exposed_u = UNMATCHED
        self.exposed_v = UNMATCHED
        self.debug = debug

    @property
    def is_perfect(self) -> bool:
        return self.exposed_u == UNMATCHED

    def current(self) -> Matching:
        return Matching(tuple(self.match_u))

    def step(self, edge_index: int) -> None:
        u, v = self.edges[edge_index]
        if self.is_perfect:
            if self.match_u[u] == v:
                self.match_u[u] = UNMATCHED
                self.match_v[v] = UNMATCHED
                self.exposed_u, self.exposed_v = u, v
        elif u == self.exposed_u and v == self.exposed_v:
            self.match_u[u] = v
            self.match_v[v] = u
            self.exposed_u = self.exposed_v = UNMATCHED
        elif u == self.exposed_u:
            displaced = self.match_v[v]
            self.match_u[displaced] = UNMATCHED
            self.match_u[u] = v
            self.match_v[v] = u
            self.exposed_u = displaced
        elif v == self.exposed_v:
            displaced = self.match_u[u]
            self.match_v[displaced] = UNMATCHED
            self.match_u[u] = v
            self.match_v[v] = u
            self.exposed_v = displaced

        if self.debug:
            self.check_state()

    def check_state(self) -> None:
        exposed_u = [u for u, v in enumerate(self.match_u) if v == UNMATCHED]
        exposed_v = [v for v, u in enumerate(self.match_v) if u == UNMATCHED]
        assert len(exposed_u) == len(exposed_v) <= 1, "state is neither perfect nor near-perfect"
        assert exposed_u == ([] if self.exposed_u == UNMATCHED else [self.exposed_u])
        assert exposed_v == ([] if self.exposed_v == UNMATCHED else [self.exposed_v])
        for u, v in enumerate(self.match_u):
            if v != UNMATCHED:
                assert self.match_v[v] == u and self.graph.has_edge(u, v)


def _edge_draws(rng: np.random.Generator, m: int) -> Iterator[int]:
    while True:
        yield from rng.integers(0, m, size=DRAW_CHUNK).tolist()


def _run_chain(graph: BipartiteGraph, start: Matching, cfg: ChainConfig, seed: int, wanted: int) -> List[Matching]:
    rng = np.random.default_rng(seed)
    chain = MatchingChain(graph, start, debug=cfg.debug)
    draws = _edge_draws(rng, graph.m)

    for _ in range(cfg.burn_in_steps):
        chain.step(next(draws))

    budget = cfg.budget_factor * wanted * cfg.thinning_interval
    samples: List[Matching] = []
    steps = 0
    while len(samples) < wanted:
        if steps >= budget:
            raise LimitExceededError(
                f"collected {len(samples)} of {wanted} samples within the step budget of {budget}"
            )
        for _ in range(cfg.thinning_interval):
            chain.step(next(draws))
        steps += cfg.thinning_interval
        if chain.is_perfect:
            samples.append(chain.current())

    logger.debug(f"Chain seed={seed}: {wanted} samples in {cfg.burn_in_steps} + {steps} steps")
    return samples


def mcmc_sample(graph: BipartiteGraph, cfg: ChainConfig) -> List[Matching]:
    outcome = find_perfect_matching(graph)
    if not outcome.feasible or outcome.matching is None:
        raise InfeasibleInstanceError("the graph has no perfect matching to sample")
    if graph.m == 0:
        return [outcome.matching] * cfg.sample_count

    per_chain = [cfg.sample_count // cfg.chains + (1 if i < cfg.sample_count % cfg.chains else 0)
                 for i in range(cfg.chains)]
    samples: List[Matching] = []
    for chain_index, wanted in enumerate(per_chain):
        if wanted:
            samples.extend(_run_chain(graph, outcome.matching, cfg, cfg.seed + chain_index, wanted))

    logger.info(f"Collected {len(samples)} samples from {cfg.chains} chain(s), seed={cfg.seed}")
    return samples


def select_secret(pool: Union["MatchingPool", Sequence[Matching]], seed: int) -> Matching:
    """Uniform pick over the pool members; the same seed always picks the same member."""
    from .diversity import MatchingPool

    if seed < 0:
        raise UsageError(f"seed must be non-negative, got {seed}")
    members = list(pool.members if isinstance(pool, MatchingPool) else pool)
    if not members:
        raise UsageError("cannot select from an empty pool")
    rng = np.random.default_rng(seed)
    return members[int(rng.integers(len(members)))]


def total_variation_distance(samples: Sequence[Matching], reference: Sequence[Matching]) -> float:
    """TV distance between the empirical distribution of `samples` and uniform over `reference`."""
    if not samples or not reference:
        raise UsageError("both the sample list and the reference set must be non-empty")
    frequencies = Counter(samples)
    support = set(reference)
    uniform = 1.0 / len(support)
    total = sum(abs(frequencies.get(m, 0) / len(samples) - uniform) for m in support)
    total += sum(count for m, count in frequencies.items() if m not in support) / len(samples)
    return total / 2
