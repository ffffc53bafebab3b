"""
Polynomial-time solvers: perfect-matching feasibility, minimum/maximum-weight
perfect matching, the most distant matching from a given one, the fully
disjoint matching, and disjoint pairs through a 2-factor.

All arithmetic is on integers. Among equally good answers the lexicographically
smallest assignment array is returned.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from .errors import UsageError
from .graph import BipartiteGraph, Edge, EdgeWeighting, Matching, distance, require_valid

logger = logging.getLogger(__name__)

UNMATCHED = -1


class SolveStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    matching: Optional[Matching] = None
    weight: Optional[int] = None

    def __post_init__(self) -> None:
        if (self.matching is not None) != (self.status == SolveStatus.FEASIBLE):
            raise ValueError("a matching is present exactly when the outcome is feasible")

    @property
    def feasible(self) -> bool:
        return self.status == SolveStatus.FEASIBLE

    @classmethod
    def infeasible(cls) -> "SolveOutcome":
        return cls(SolveStatus.INFEASIBLE)


@dataclass(frozen=True)
class TwoFactor:
    n: int
    edges: FrozenSet[Edge]

    def u_neighbors(self) -> List[List[int]]:
        neighbors: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            neighbors[u].append(v)
        return [sorted(vs) for vs in neighbors]

    def v_neighbors(self) -> List[List[int]]:
        neighbors: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            neighbors[v].append(u)
        return [sorted(us) for us in neighbors]

    def is_two_regular(self) -> bool:
        return all(len(vs) == 2 for vs in self.u_neighbors()) and all(len(us) == 2 for us in self.v_neighbors())

    def cycles(self) -> List[List[Edge]]:
        """
        Decompose into vertex-disjoint cycles. Each cycle starts at its lowest
        U-vertex and leaves through the smaller of its two edges, so the edges
        alternate between the two matchings at even/odd positions.
        """
        u_adj = self.u_neighbors()
        v_adj = self.v_neighbors()
        visited = [False] * self.n
        cycles = []

        for start in range(self.n):
            if visited[start]:
                continue
            cycle: List[Edge] = []
            u, v = start, u_adj[start][0]
            while True:
                visited[u] = True
                cycle.append((u, v))
                next_u = v_adj[v][0] if v_adj[v][1] == u else v_adj[v][1]
                cycle.append((next_u, v))
                if next_u == start:
                    break
                u = next_u
                v = u_adj[u][0] if u_adj[u][1] == v else u_adj[u][1]
            cycles.append(cycle)

        return cycles


@dataclass(frozen=True)
class DistanceDecision:
    answer: bool
    d_star: int
    witness: Optional[Matching] = None


class HopcroftKarp:
    """
    Hopcroft-Karp maximum-cardinality matching. Neighbours are scanned in
    ascending order so the result is a deterministic function of the graph.
    """

    def __init__(self, graph: BipartiteGraph):
        self.graph = graph
        self.match_u = [UNMATCHED] * graph.n
        self.match_v = [UNMATCHED] * graph.n
        self._dist: List[int] = []
        self._infinity = graph.n + 1

    def _bfs(self) -> bool:
        queue: Deque[int] = deque()
        self._dist = [self._infinity] * self.graph.n
        for u in range(self.graph.n):
            if self.match_u[u] == UNMATCHED:
                self._dist[u] = 0
                queue.append(u)

        found = False
        while queue:
            u = queue.popleft()
            for v in self.graph.neighbors(u):
                partner = self.match_v[v]
                if partner == UNMATCHED:
                    found = True
                elif self._dist[partner] == self._infinity:
                    self._dist[partner] = self._dist[u] + 1
                    queue.append(partner)
        return found

    def _augment(self, root: int) -> bool:
        """
        Layered depth-first search from a free row, on an explicit stack.
        positions[i] is one past the neighbour index rows[i] is exploring.
        """
        rows = [root]
        positions = [0]
        while rows:
            u = rows[-1]
            neighbors = self.graph.neighbors(u)
            i = positions[-1]
            if i == len(neighbors):
                self._dist[u] = self._infinity
                rows.pop()
                positions.pop()
                continue
            positions[-1] = i + 1
            partner = self.match_v[neighbors[i]]
            if partner == UNMATCHED:
                for row, position in zip(rows, positions):
                    v = self.graph.neighbors(row)[position - 1]
                    self.match_u[row] = v
                    self.match_v[v] = row
                return True
            if self._dist[partner] == self._dist[u] + 1:
                rows.append(partner)
                positions.append(0)
        return False

    def __call__(self) -> int:
        self.match_u = [UNMATCHED] * self.graph.n
        self.match_v = [UNMATCHED] * self.graph.n
        size = 0
        while self._bfs():
            for u in range(self.graph.n):
                if self.match_u[u] == UNMATCHED and self._augment(u):
                    size += 1
        return size


def _lexicographically_first(graph: BipartiteGraph, assign: List[int]) -> List[int]:
    """
    Rewrite a perfect matching into the lexicographically smallest one. Position
    u is lowered to v exactly when an alternating cycle through (u, v) exists
    among the rows not fixed yet.
    """
    match_u = list(assign)
    match_v = [UNMATCHED] * graph.n
    for u, v in enumerate(match_u):
        match_v[v] = u

    for u in range(graph.n):
        target = match_u[u]
        for v in graph.neighbors(u):
            if v >= target:
                break
            start = match_v[v]
            if start < u:
                continue

            parent: Dict[int, Tuple[int, int]] = {}
            queue: Deque[int] = deque([start])
            visited = {start}
            last_row = UNMATCHED
            while queue and last_row == UNMATCHED:
                row = queue.popleft()
                for column in graph.neighbors(row):
                    if column == match_u[row]:
                        continue
                    if column == target:
                        last_row = row
                        break
                    next_row = match_v[column]
                    if next_row > u and next_row not in visited:
                        visited.add(next_row)
                        parent[next_row] = (row, column)
                        queue.append(next_row)

            if last_row == UNMATCHED:
                continue

            row, column = last_row, target
            while True:
                match_u[row] = column
                match_v[column] = row
                if row == start:
                    break
                row, column = parent[row]
            match_u[u] = v
            match_v[v] = u
            break

    return match_u


def find_perfect_matching(graph: BipartiteGraph) -> SolveOutcome:
    solver = HopcroftKarp(graph)
    size = solver()
    if size < graph.n:
        logger.debug(f"Maximum matching has size {size} < n={graph.n}; no perfect matching")
        return SolveOutcome.infeasible()
    assign = _lexicographically_first(graph, solver.match_u)
    return SolveOutcome(SolveStatus.FEASIBLE, Matching(tuple(assign)))


def _hungarian(cost: List[List[int]]) -> List[int]:
    """
    Minimum-cost assignment on a square integer matrix (shortest augmenting
    path form with row/column potentials). Returns row -> column.
    """
    n = len(cost)
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv: List[Optional[int]] = [None] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta: Optional[int] = None
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                current = cost[i0 - 1][j - 1] - u[i0] - v[j]
                best = minv[j]
                if best is None or current < best:
                    minv[j] = best = current
                    way[j] = j0
                if delta is None or best < delta:
                    delta = best
                    j1 = j
            assert delta is not None
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta  # type: ignore[operator]
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break

    assignment = [0] * n
    for j in range(1, n + 1):
        assignment[p[j] - 1] = j - 1
    return assignment


def min_weight_perfect_matching(graph: BipartiteGraph, weighting: EdgeWeighting) -> SolveOutcome:
    weighting.check_against(graph)
    if graph.n == 0:
        return SolveOutcome(SolveStatus.FEASIBLE, Matching(()), 0)
    if not find_perfect_matching(graph).feasible:
        return SolveOutcome.infeasible()

    n = graph.n
    # w * n^n + (assign read as a base-n number): ties resolve to the lexicographically smallest matching
    scale = n**n
    place = [n ** (n - 1 - u) for u in range(n)]
    largest = (weighting.max_weight() + 1) * scale
    forbidden = n * largest + 1

    cost = [[forbidden] * n for _ in range(n)]
    for (u, v), w in weighting.weights.items():
        cost[u][v] = w * scale + v * place[u]

    matching = Matching(tuple(_hungarian(cost)))
    total = weighting.total(matching)
    logger.debug(f"Minimum-weight perfect matching found with weight {total}")
    return SolveOutcome(SolveStatus.FEASIBLE, matching, total)


def max_weight_perfect_matching(graph: BipartiteGraph, weighting: EdgeWeighting) -> SolveOutcome:
    weighting.check_against(graph)
    top = weighting.max_weight()
    complemented = EdgeWeighting({edge: top - w for edge, w in weighting.weights.items()})
    outcome = min_weight_perfect_matching(graph, complemented)
    if not outcome.feasible or outcome.matching is None:
        return outcome
    return SolveOutcome(SolveStatus.FEASIBLE, outcome.matching, weighting.total(outcome.matching))


def most_distant_matching(graph: BipartiteGraph, given: Matching) -> Tuple[Matching, int]:
    """
    A perfect matching sharing the fewest edges with `given`, and the distance
    d_star = n - |shared| it achieves.
    """
    require_valid(graph, given, "M1")
    outcome = min_weight_perfect_matching(graph, EdgeWeighting.indicator(graph, given.pairs()))
    assert outcome.matching is not None and outcome.weight is not None
    d_star = graph.n - outcome.weight
    return outcome.matching, d_star


def distant_matching_decision(graph: BipartiteGraph, given: Matching, d: int) -> DistanceDecision:
    if not 0 <= d <= graph.n:
        raise UsageError(f"d must lie in [0, {graph.n}], got {d}")
    farthest, d_star = most_distant_matching(graph, given)
    if d_star < d:
        return DistanceDecision(False, d_star)
    return DistanceDecision(True, d_star, given if d == 0 else farthest)


def fully_disjoint_from(graph: BipartiteGraph, given: Matching) -> SolveOutcome:
    require_valid(graph, given, "M1")
    return find_perfect_matching(graph.without_edges(given.pairs()))


def two_factor(graph: BipartiteGraph) -> Optional[TwoFactor]:
    """
    A spanning subgraph with every degree exactly 2, via max flow: source -> u
    (capacity 2), u -> v per edge (capacity 1), v -> sink (capacity 2).
    """
    if graph.n == 0:
        return TwoFactor(0, frozenset())
    if any(graph.u_degree(u) < 2 for u in range(graph.n)) or any(d < 2 for d in graph.v_degrees()):
        logger.debug("Some vertex has degree below 2; no 2-factor")
        return None

    network = nx.DiGraph()
    for u in range(graph.n):
        network.add_edge("source", ("u", u), capacity=2)
    for u, v in graph.sorted_edges():
        network.add_edge(("u", u), ("v", v), capacity=1)
    for v in range(graph.n):
        network.add_edge(("v", v), "sink", capacity=2)

    flow_value, flow = nx.maximum_flow(network, "source", "sink")
    if flow_value < 2 * graph.n:
        logger.debug(f"Max flow {flow_value} < {2 * graph.n}; no 2-factor")
        return None

    edges = frozenset((u, v) for u, v in graph.edges if flow[("u", u)][("v", v)] == 1)
    return TwoFactor(graph.n, edges)


def disjoint_pair(graph: BipartiteGraph) -> Optional[Tuple[Matching, Matching]]:
    """Two edge-disjoint perfect matchings, obtained by 2-colouring the cycles of a 2-factor."""
    factor = two_factor(graph)
    if factor is None:
        return None

    first = [UNMATCHED] * graph.n
    second = [UNMATCHED] * graph.n
    for cycle in factor.cycles():
        for position, (u, v) in enumerate(cycle):
            if position % 2 == 0:
                first[u] = v
            else:
                second[u] = v

    pair = Matching(tuple(first)), Matching(tuple(second))
    logger.debug(f"Disjoint pair at distance {distance(*pair)} from {len(factor.cycles())} cycles")
    return pair
