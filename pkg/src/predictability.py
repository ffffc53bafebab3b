from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence
import logging

import numpy as np

from .config import DiversityConfig, SamplingConfig
from .diversity import MatchingPool, diverse_pool
from .errors import InfeasibleInstanceError, UsageError
from .graph import BipartiteGraph, Matching
from .sampling import ChainConfig, EnumerationResult, enumerate_matchings, mcmc_sample

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9


@dataclass(frozen=True)
class Provenance:
    kind: str
    sample_count: Optional[int] = None
    seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "sample_count": self.sample_count, "seed": self.seed}


@dataclass(frozen=True)
class MarginalTable:
    """p[u][v]: probability that the policy assigns u to v."""

    p: np.ndarray
    provenance: Provenance

    def __post_init__(self) -> None:
        if self.p.size and not np.allclose(self.p.sum(axis=1), 1.0, rtol=0.0, atol=TOLERANCE):
            raise ValueError("every row of a marginal table must sum to 1")

    @property
    def n(self) -> int:
        return int(self.p.shape[0])

    def support_within(self, graph: BipartiteGraph) -> bool:
        rows, cols = np.nonzero(self.p)
        return all(graph.has_edge(int(u), int(v)) for u, v in zip(rows, cols))


def _frequency_table(matchings: Sequence[Matching], n: int) -> np.ndarray:
    counts = np.zeros((n, n), dtype=np.int64)
    if n:
        assign = np.array([m.assign for m in matchings], dtype=np.int64)
        np.add.at(counts, (np.broadcast_to(np.arange(n), assign.shape), assign), 1)
    return counts / len(matchings)


def exact_marginals(enumeration: EnumerationResult) -> MarginalTable:
    if not enumeration.complete:
        raise UsageError("exact marginals need a complete enumeration")
    if not enumeration.matchings:
        raise InfeasibleInstanceError("the graph has no perfect matching")
    matchings = enumeration.matchings
    return MarginalTable(_frequency_table(matchings, matchings[0].n), Provenance("exact", len(matchings)))


def empirical_marginals(samples: Sequence[Matching], seed: Optional[int] = None) -> MarginalTable:
    if not samples:
        raise UsageError("empirical marginals need at least one sample")
    n = samples[0].n
    if any(sample.n != n for sample in samples):
        raise UsageError("all samples must come from the same graph (mixed matching sizes)")
    return MarginalTable(_frequency_table(samples, n), Provenance("estimated", len(samples), seed))


def adversary_success(table: MarginalTable) -> float:
    """Mean over U-vertices of the best single-guess probability."""
    if table.n == 0:
        return 1.0
    return float(table.p.max(axis=1).mean())


def vertex_entropy(table: MarginalTable) -> np.ndarray:
    p = table.p
    logs = np.log(p, out=np.zeros_like(p), where=p > 0)
    return np.maximum(-(p * logs).sum(axis=1), 0.0)


@dataclass(frozen=True)
class PredictabilityReport:
    policy: str
    marginals: MarginalTable
    per_vertex_best_guess: List[float]
    adversary_success: float
    per_vertex_entropy: List[float]
    normalized_entropy: List[float]

    @classmethod
    def from_table(cls, policy: str, table: MarginalTable) -> "PredictabilityReport":
        entropy = vertex_entropy(table)
        scale = np.log(table.n) if table.n > 1 else 0.0
        normalized = entropy / scale if scale else np.zeros_like(entropy)
        return cls(
            policy=policy,
            marginals=table,
            per_vertex_best_guess=[float(x) for x in table.p.max(axis=1)] if table.n else [],
            adversary_success=adversary_success(table),
            per_vertex_entropy=[float(x) for x in entropy],
            normalized_entropy=[float(x) for x in normalized],
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "policy": self.policy,
            "provenance": self.marginals.provenance.to_dict(),
            "adversary_success": self.adversary_success,
            "per_vertex_best_guess": self.per_vertex_best_guess,
            "per_vertex_entropy": self.per_vertex_entropy,
            "normalized_entropy": self.normalized_entropy,
            "marginals": self.marginals.p.tolist(),
        }


class SelectionPolicy(ABC):
    name: str

    @abstractmethod
    def marginals(self, graph: BipartiteGraph) -> MarginalTable:
        pass

    def report(self, graph: BipartiteGraph) -> PredictabilityReport:
        return PredictabilityReport.from_table(self.name, self.marginals(graph))


class UniformOverSolutions(SelectionPolicy):
    name = "uniform_over_solutions"

    def __init__(self, limit: int, seed: int, trials: int, sampling: Optional[SamplingConfig] = None):
        self.limit = limit
        self.seed = seed
        self.trials = trials
        self.sampling = sampling

    def marginals(self, graph: BipartiteGraph) -> MarginalTable:
        enumeration = enumerate_matchings(graph, self.limit)
        if enumeration.complete:
            return exact_marginals(enumeration)

        logger.info(f"More than {self.limit} matchings; estimating the uniform policy from {self.trials} samples")
        cfg = ChainConfig.for_graph(graph.n, self.seed, self.trials, self.sampling)
        return empirical_marginals(mcmc_sample(graph, cfg), seed=self.seed)


class UniformOverPool(SelectionPolicy):
    name = "uniform_over_pool"

    def __init__(self, pool: MatchingPool):
        self.pool = pool

    def marginals(self, graph: BipartiteGraph) -> MarginalTable:
        if not self.pool.members:
            raise UsageError("cannot build marginals of an empty pool")
        table = _frequency_table(self.pool.members, graph.n)
        return MarginalTable(table, Provenance("exact", self.pool.size))


def get_policy(name: str, **kwargs: Any) -> SelectionPolicy:
    if name == UniformOverSolutions.name:
        return UniformOverSolutions(**kwargs)
    elif name == UniformOverPool.name:
        return UniformOverPool(**kwargs)
    else:
        raise ValueError(f"Unknown policy: {name}")


@dataclass(frozen=True)
class PolicyComparison:
    uniform: PredictabilityReport
    pool: PredictabilityReport
    pool_members: MatchingPool

    @property
    def success_difference(self) -> float:
        """Positive when the pool policy is harder to guess."""
        return self.uniform.adversary_success - self.pool.adversary_success

    @property
    def less_predictable(self) -> str:
        if abs(self.success_difference) <= TOLERANCE:
            return "tie"
        return "pool" if self.success_difference > 0 else "uniform"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "uniform": self.uniform.to_dict(),
            "pool": self.pool.to_dict(),
            "pool_members": [m.one_based_pairs() for m in self.pool_members.members],
            "pool_objective": self.pool_members.objective,
            "success_difference": self.success_difference,
            "less_predictable": self.less_predictable,
        }


def compare_policies(
    graph: BipartiteGraph,
    k: int,
    seed: int,
    trials: int,
    restarts: int = 5,
    limit: int = 100_000,
    diversity: Optional[DiversityConfig] = None,
    sampling: Optional[SamplingConfig] = None,
) -> PolicyComparison:
    uniform = get_policy(UniformOverSolutions.name, limit=limit, seed=seed, trials=trials, sampling=sampling)
    uniform_report = uniform.report(graph)

    pool = diverse_pool(graph, k=k, restarts=restarts, seed=seed, diversity=diversity, sampling=sampling)
    pool_report = get_policy(UniformOverPool.name, pool=pool).report(graph)

    comparison = PolicyComparison(uniform_report, pool_report, pool)
    logger.info(
        f"Adversary success: uniform {uniform_report.adversary_success:.4f}, "
        f"pool {pool_report.adversary_success:.4f} ({comparison.less_predictable} is less predictable)"
    )
    return comparison
