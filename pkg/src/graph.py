"""
Instance and solution data model: bipartite graphs on (n, n) vertices, perfect
matchings stored as U -> V assignment arrays, edge weightings, the separation
distance, and the text formats used on disk.

Vertex indices are 0-based in memory and 1-based in files.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, TextIO, Tuple, Union

from .errors import GraphFormatError, InvalidMatchingError, UsageError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass(frozen=True)
class BipartiteGraph:
    n: int
    edges: FrozenSet[Edge]
    _adjacency: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise UsageError(f"vertex count must be non-negative, got {self.n}")
        edges = frozenset(self.edges)
        adjacency: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise UsageError(f"edge ({u}, {v}) has an endpoint outside [0, {self.n})")
            adjacency[u].append(v)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_adjacency", tuple(tuple(sorted(vs)) for vs in adjacency))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "BipartiteGraph":
        edge_list = list(edges)
        seen = set()
        for edge in edge_list:
            if edge in seen:
                raise UsageError(f"duplicate edge {edge}")
            seen.add(edge)
        return cls(n, frozenset(edge_list))

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> Tuple[int, ...]:
        """V-neighbours of U-vertex u in ascending order."""
        return self._adjacency[u]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def u_degree(self, u: int) -> int:
        return len(self._adjacency[u])

    def v_degrees(self) -> List[int]:
        degrees = [0] * self.n
        for _, v in self.edges:
            degrees[v] += 1
        return degrees

    def without_edges(self, removed: Iterable[Edge]) -> "BipartiteGraph":
        return BipartiteGraph(self.n, self.edges - frozenset(removed))


@dataclass(frozen=True, order=True)
class Matching:
    """
    A U -> V assignment array. Construction does not check the matching
    against a graph; use validate_matching for that.
    """

    assign: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "assign", tuple(int(v) for v in self.assign))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[Edge]) -> "Matching":
        assign: List[Optional[int]] = [None] * n
        for u, v in pairs:
            if not 0 <= u < n:
                raise InvalidMatchingError(f"U-vertex {u + 1} outside [1, {n}]")
            if assign[u] is not None:
                raise InvalidMatchingError(f"U-vertex {u + 1} assigned twice")
            assign[u] = v
        missing = [u + 1 for u, v in enumerate(assign) if v is None]
        if missing:
            raise InvalidMatchingError(f"U-vertices {missing} are not covered")
        return cls(tuple(v for v in assign if v is not None))

    @property
    def n(self) -> int:
        return len(self.assign)

    def pairs(self) -> List[Edge]:
        return list(enumerate(self.assign))

    def edges(self) -> FrozenSet[Edge]:
        return frozenset(enumerate(self.assign))

    def one_based_pairs(self) -> List[List[int]]:
        return [[u + 1, v + 1] for u, v in enumerate(self.assign)]


@dataclass(frozen=True)
class EdgeWeighting:
    weights: Mapping[Edge, int]

    def weight(self, u: int, v: int) -> int:
        return self.weights[(u, v)]

    def total(self, matching: Matching) -> int:
        return sum(self.weights[edge] for edge in matching.pairs())

    def max_weight(self) -> int:
        return max(self.weights.values(), default=0)

    def check_against(self, graph: BipartiteGraph) -> None:
        if set(self.weights) != set(graph.edges):
            raise UsageError("weighting domain differs from the graph's edge set")
        negative = [edge for edge, w in self.weights.items() if w < 0]
        if negative:
            raise UsageError(f"weights must be non-negative, got negative weight on {sorted(negative)[0]}")

    @classmethod
    def constant(cls, graph: BipartiteGraph, value: int = 0) -> "EdgeWeighting":
        return cls({edge: value for edge in graph.edges})

    @classmethod
    def indicator(cls, graph: BipartiteGraph, marked: Iterable[Edge]) -> "EdgeWeighting":
        marked_set = set(marked)
        return cls({edge: int(edge in marked_set) for edge in graph.edges})

    @classmethod
    def usage_counts(cls, graph: BipartiteGraph, matchings: Iterable[Matching]) -> "EdgeWeighting":
        counts: Dict[Edge, int] = {edge: 0 for edge in graph.edges}
        for matching in matchings:
            for edge in matching.pairs():
                counts[edge] += 1
        return cls(counts)


@dataclass
class MatchingDiagnostics:
    non_edges: List[Edge] = field(default_factory=list)
    collisions: Dict[int, List[int]] = field(default_factory=dict)
    uncovered_v: List[int] = field(default_factory=list)
    out_of_range: List[Edge] = field(default_factory=list)
    size_mismatch: Optional[Tuple[int, int]] = None

    @property
    def valid(self) -> bool:
        return not self.violations()

    def violations(self) -> List[str]:
        messages = []
        if self.size_mismatch is not None:
            expected, actual = self.size_mismatch
            messages.append(f"matching covers {actual} U-vertices, graph has {expected}")
        for u, v in self.out_of_range:
            messages.append(f"({u + 1},{v + 1}) has an endpoint out of range")
        for u, v in self.non_edges:
            messages.append(f"({u + 1},{v + 1}) is not an edge")
        for v, us in sorted(self.collisions.items()):
            messages.append(f"v{v + 1} used {len(us)} times (by {', '.join(f'u{u + 1}' for u in us)})")
        for v in self.uncovered_v:
            messages.append(f"v{v + 1} is not covered")
        return messages


def validate_matching(graph: BipartiteGraph, matching: Matching) -> MatchingDiagnostics:
    diagnostics = MatchingDiagnostics()
    if matching.n != graph.n:
        diagnostics.size_mismatch = (graph.n, matching.n)

    users: Dict[int, List[int]] = {}
    for u, v in matching.pairs():
        if not (0 <= u < graph.n and 0 <= v < graph.n):
            diagnostics.out_of_range.append((u, v))
            continue
        if not graph.has_edge(u, v):
            diagnostics.non_edges.append((u, v))
        users.setdefault(v, []).append(u)

    diagnostics.collisions = {v: us for v, us in users.items() if len(us) > 1}
    diagnostics.uncovered_v = [v for v in range(graph.n) if v not in users]
    return diagnostics


def require_valid(graph: BipartiteGraph, matching: Matching, label: str = "matching") -> None:
    diagnostics = validate_matching(graph, matching)
    if not diagnostics.valid:
        raise InvalidMatchingError(f"{label} is not a perfect matching of the graph", diagnostics.violations())


def distance(first: Matching, second: Matching) -> int:
    """Number of U-vertices assigned differently; n minus the number of shared edges."""
    if first.n != second.n:
        raise UsageError(f"size mismatch: {first.n} vs {second.n}")
    return sum(1 for a, b in zip(first.assign, second.assign) if a != b)


def complete_bipartite(n: int) -> BipartiteGraph:
    return BipartiteGraph(n, frozenset((u, v) for u in range(n) for v in range(n)))


def even_cycle(n: int) -> BipartiteGraph:
    """The cycle on 2n vertices: edges (u_i, v_i) and (u_{i+1 mod n}, v_i)."""
    if n < 2:
        raise UsageError("an even cycle needs n >= 2")
    return BipartiteGraph.from_edges(n, [(i, i) for i in range(n)] + [((i + 1) % n, i) for i in range(n)])


def _read_text(source: Union[str, TextIO]) -> str:
    if isinstance(source, str):
        return source
    try:
        return source.read()
    except UnicodeDecodeError as e:
        raise GraphFormatError(f"file is not valid UTF-8 text: {e.reason} at byte {e.start}")


def parse_graph(source: Union[str, TextIO]) -> BipartiteGraph:
    """
    Parse the edge-list format: '#' comment lines, a header "n m", then m
    lines "u v" with 1-based indices.
    """
    header: Optional[Tuple[int, int]] = None
    edges: List[Edge] = []
    seen: Dict[Edge, int] = {}
    last_line = 0

    for line_number, raw_line in enumerate(_read_text(source).splitlines(), start=1):
        last_line = line_number
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue

        fields = line.split()
        if len(fields) != 2:
            raise GraphFormatError(f"expected two integers, got {line!r}", line_number)
        try:
            a, b = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphFormatError(f"expected two integers, got {line!r}", line_number)

        if header is None:
            if a < 0 or b < 0 or b > a * a:
                raise GraphFormatError(f"invalid header n={a} m={b}", line_number)
            header = (a, b)
            continue

        n, m = header
        if len(edges) == m:
            raise GraphFormatError(f"more than the declared {m} edges", line_number)
        if not (1 <= a <= n and 1 <= b <= n):
            raise GraphFormatError(f"vertex index out of range [1, {n}] in {line!r}", line_number)
        edge = (a - 1, b - 1)
        if edge in seen:
            raise GraphFormatError(f"duplicate edge ({a},{b}), first listed at line {seen[edge]}", line_number)
        seen[edge] = line_number
        edges.append(edge)

    if header is None:
        raise GraphFormatError("missing header line 'n m'", last_line or 1)
    if len(edges) != header[1]:
        raise GraphFormatError(f"declared {header[1]} edges, found {len(edges)}", last_line)

    graph = BipartiteGraph(header[0], frozenset(edges))
    logger.debug(f"Parsed graph with n={graph.n}, m={graph.m}")
    return graph


def serialize_graph(graph: BipartiteGraph) -> str:
    lines = [f"{graph.n} {graph.m}"]
    lines.extend(f"{u + 1} {v + 1}" for u, v in graph.sorted_edges())
    return "\n".join(lines) + "\n"


def parse_matching(source: Union[str, TextIO], graph: Optional[BipartiteGraph] = None) -> Matching:
    """Parse a matching document {"n": n, "pairs": [[u, v], ...]} with 1-based pairs."""
    try:
        document = json.loads(_read_text(source))
    except json.JSONDecodeError as e:
        raise GraphFormatError(f"matching document is not valid JSON: {e.msg}", e.lineno)

    if not isinstance(document, dict) or "n" not in document or "pairs" not in document:
        raise GraphFormatError("matching document needs fields 'n' and 'pairs'")
    n = document["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise GraphFormatError(f"field 'n' must be a non-negative integer, got {n!r}")
    if graph is not None and n != graph.n:
        raise InvalidMatchingError(f"matching has n={n} but the graph has n={graph.n}")

    if not isinstance(document["pairs"], list):
        raise GraphFormatError(f"field 'pairs' must be a list, got {document['pairs']!r}")
    pairs: List[Edge] = []
    for pair in document["pairs"]:
        if not (isinstance(pair, Sequence) and len(pair) == 2 and all(isinstance(x, int) for x in pair)):
            raise GraphFormatError(f"each pair must be [u, v] with integer entries, got {pair!r}")
        pairs.append((pair[0] - 1, pair[1] - 1))

    matching = Matching.from_pairs(n, pairs)
    if graph is not None:
        require_valid(graph, matching, "given matching")
    return matching


def serialize_matching(matching: Matching) -> str:
    return json.dumps({"n": matching.n, "pairs": matching.one_based_pairs()})
