import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from typing import Any, Dict, List, NoReturn, Optional

import yaml

from .config import ConfigManager
from .diversity import greedy_disjoint_family, max_separated_pair_bruteforce, maximal_separated_pair, diverse_pool
from .errors import (
    GraphFormatError,
    InfeasibleInstanceError,
    InvalidMatchingError,
    LimitExceededError,
    MatchingError,
    UsageError,
)
from .graph import BipartiteGraph, Matching, parse_graph, parse_matching, validate_matching
from .predictability import compare_policies
from .sampling import (
    ChainConfig,
    count_matchings,
    enumerate_matchings,
    mcmc_sample,
    select_secret,
    total_variation_distance,
)
from .solvers import disjoint_pair, distant_matching_decision, find_perfect_matching, most_distant_matching

logger = logging.getLogger(__name__)

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3

STATUS_EXIT_CODES = {"success": EXIT_SUCCESS, "infeasible": EXIT_INFEASIBLE, "limit_exceeded": EXIT_LIMIT}
NOT_ECHOED = ("command", "graph_path", "output_format")


@dataclass
class RunConfig:
    command: str
    graph_path: str
    matching_path: Optional[str] = None
    k: Optional[int] = None
    d: Optional[int] = None
    seed: Optional[int] = None
    restarts: Optional[int] = None
    sample_count: Optional[int] = None
    burn_in: Optional[int] = None
    thinning: Optional[int] = None
    limit: Optional[int] = None
    output_format: str = "json"


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


class MatchingToolkit:
    def __init__(self, config_path: Optional[str] = None):
        self.config_manager = ConfigManager(config_path)
        self.defaults = self.config_manager.get_defaults()
        self.sampling = self.config_manager.get_sampling_config()
        self.diversity = self.config_manager.get_diversity_config()
        self.audit_config = self.config_manager.get_audit_config()
        self.settings = self.config_manager.get_settings()

    def resolve(self, run_config: RunConfig) -> RunConfig:
        for name in ("k", "seed", "restarts", "limit"):
            if getattr(run_config, name) is None:
                setattr(run_config, name, getattr(self.defaults, name))
        return run_config

    def _pairs(self, graph: BipartiteGraph, matching: Matching) -> List[List[int]]:
        diagnostics = validate_matching(graph, matching)
        if not diagnostics.valid:
            raise InvalidMatchingError("refusing to print an invalid matching", diagnostics.violations())
        return matching.one_based_pairs()

    def _given(self, graph: BipartiteGraph, run_config: RunConfig) -> Optional[Matching]:
        if run_config.matching_path is None:
            return None
        with open(run_config.matching_path, "r", encoding="utf-8") as file:
            return parse_matching(file, graph)

    def solve(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        outcome = find_perfect_matching(graph)
        if outcome.matching is None:
            return {"status": "infeasible"}
        return {"status": "success", "matching": self._pairs(graph, outcome.matching)}

    def distant(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        given = self._given(graph, run_config)
        assert given is not None
        if run_config.d is not None:
            decision = distant_matching_decision(graph, given, run_config.d)
            return {
                "status": "success",
                "d": run_config.d,
                "answer": "yes" if decision.answer else "no",
                "d_star": decision.d_star,
                "witness": self._pairs(graph, decision.witness) if decision.witness is not None else None,
            }
        farthest, d_star = most_distant_matching(graph, given)
        return {"status": "success", "matching": self._pairs(graph, farthest), "d_star": d_star}

    def maximal_pair(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        if not find_perfect_matching(graph).feasible:
            return {"status": "infeasible"}
        first, second, d, trace = maximal_separated_pair(graph, self._given(graph, run_config))
        return {
            "status": "success",
            "pair": [self._pairs(graph, first), self._pairs(graph, second)],
            "distance": d,
            "trace": {"distances": trace.distances, "iterations": trace.iterations},
        }

    def max_pair_exact(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        assert run_config.limit is not None
        first, second, d_max = max_separated_pair_bruteforce(graph, run_config.limit)
        return {"status": "success", "pair": [self._pairs(graph, first), self._pairs(graph, second)], "d_max": d_max}

    def disjoint_pair(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        pair = disjoint_pair(graph)
        if pair is None:
            return {"status": "infeasible"}
        return {"status": "success", "pair": [self._pairs(graph, m) for m in pair], "distance": graph.n}

    def disjoint_family(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        if not find_perfect_matching(graph).feasible:
            return {"status": "infeasible"}
        assert run_config.k is not None
        family = greedy_disjoint_family(graph, run_config.k)
        return {"status": "success", "family": [self._pairs(graph, m) for m in family], "size": len(family)}

    def diverse(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        assert run_config.k is not None and run_config.restarts is not None and run_config.seed is not None
        pool = diverse_pool(graph, run_config.k, run_config.restarts, run_config.seed, self.diversity, self.sampling)
        return {
            "status": "success",
            "pool": [self._pairs(graph, m) for m in pool.members],
            "size": pool.size,
            "objective": pool.objective,
            "min_pairwise_distance": pool.min_pairwise_distance,
            "shortfall": pool.shortfall,
            "secret": self._pairs(graph, select_secret(pool, run_config.seed)),
        }

    def sample(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        assert run_config.seed is not None and run_config.limit is not None
        cfg = ChainConfig.for_graph(
            graph.n,
            run_config.seed,
            run_config.sample_count or 1,
            self.sampling,
            burn_in_steps=run_config.burn_in,
            thinning_interval=run_config.thinning,
        )
        samples = mcmc_sample(graph, cfg)
        result: Dict[str, Any] = {
            "status": "success",
            "chain": {
                "burn_in": cfg.burn_in_steps,
                "thinning": cfg.thinning_interval,
                "sample_count": cfg.sample_count,
                "chains": cfg.chains,
            },
            "samples": [self._pairs(graph, m) for m in samples],
        }
        enumeration = enumerate_matchings(graph, run_config.limit)
        if enumeration.complete:
            result["tv_to_uniform"] = total_variation_distance(samples, enumeration.matchings)
        return result

    def enumerate(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        assert run_config.limit is not None
        enumeration = enumerate_matchings(graph, run_config.limit)
        return {
            "status": "success" if enumeration.complete else "limit_exceeded",
            "complete": enumeration.complete,
            "count": enumeration.count,
            "matchings": [self._pairs(graph, m) for m in enumeration.matchings],
        }

    def count(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        assert run_config.limit is not None
        count = count_matchings(graph, run_config.limit)
        return {"status": "success" if count is not None else "limit_exceeded", "count": count}

    def audit(self, graph: BipartiteGraph, run_config: RunConfig) -> Dict[str, Any]:
        if not find_perfect_matching(graph).feasible:
            return {"status": "infeasible"}
        assert run_config.k is not None and run_config.seed is not None
        assert run_config.restarts is not None and run_config.limit is not None
        comparison = compare_policies(
            graph,
            k=run_config.k,
            seed=run_config.seed,
            trials=run_config.sample_count or self.audit_config.trials,
            restarts=run_config.restarts,
            limit=run_config.limit,
            diversity=self.diversity,
            sampling=self.sampling,
        )
        document = comparison.to_dict()
        document["pool_members"] = [self._pairs(graph, m) for m in comparison.pool_members.members]
        return {"status": "success", **document}


COMMANDS = {
    "solve": MatchingToolkit.solve,
    "distant": MatchingToolkit.distant,
    "maximal-pair": MatchingToolkit.maximal_pair,
    "max-pair-exact": MatchingToolkit.max_pair_exact,
    "disjoint-pair": MatchingToolkit.disjoint_pair,
    "disjoint-family": MatchingToolkit.disjoint_family,
    "diverse": MatchingToolkit.diverse,
    "sample": MatchingToolkit.sample,
    "enumerate": MatchingToolkit.enumerate,
    "count": MatchingToolkit.count,
    "audit": MatchingToolkit.audit,
}


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("graph", help="Graph file (header 'n m', then 1-based 'u v' edge lines)")
    common.add_argument("--format", dest="output_format", choices=["human", "json"], default="json")
    common.add_argument("--config", help="Configuration file path")
    common.add_argument("--verbose", action="store_true", help="Debug logging on stderr")

    parser = ArgumentParser(prog="diverse_matching", description="Diverse and unpredictable perfect matchings")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def command(name: str, help_text: str) -> ArgumentParser:
        return subparsers.add_parser(name, parents=[common], help=help_text)

    command("solve", "Find a perfect matching")

    distant = command("distant", "Most distant matching from a given one")
    distant.add_argument("--given", dest="matching_path", required=True, help="Matching file (JSON n/pairs)")
    distant.add_argument("--d", type=int, help="Decide whether a matching at distance >= d exists")

    maximal = command("maximal-pair", "Mutually maximal separated pair")
    maximal.add_argument("--given", dest="matching_path", help="Starting matching file")

    exact = command("max-pair-exact", "Maximum separated pair by enumeration")
    exact.add_argument("--limit", type=int)

    command("disjoint-pair", "Two edge-disjoint perfect matchings via a 2-factor")

    family = command("disjoint-family", "Greedy family of pairwise disjoint matchings")
    family.add_argument("--k", type=int)

    diverse = command("diverse", "Diverse pool of k matchings")
    diverse.add_argument("--k", type=int)
    diverse.add_argument("--restarts", type=int)
    diverse.add_argument("--seed", type=int)

    sample = command("sample", "Near-uniform MCMC samples")
    sample.add_argument("--count", dest="sample_count", type=int, default=1)
    sample.add_argument("--burnin", dest="burn_in", type=int)
    sample.add_argument("--thin", dest="thinning", type=int)
    sample.add_argument("--seed", type=int)
    sample.add_argument("--limit", type=int, help="Enumeration limit for the uniformity check")

    enumerate_parser = command("enumerate", "List all perfect matchings up to a limit")
    enumerate_parser.add_argument("--limit", type=int)

    count = command("count", "Count perfect matchings up to a limit")
    count.add_argument("--limit", type=int)

    audit = command("audit", "Compare adversary success: uniform over all vs uniform over a diverse pool")
    audit.add_argument("--k", type=int)
    audit.add_argument("--seed", type=int)
    audit.add_argument("--restarts", type=int)
    audit.add_argument("--count", dest="sample_count", type=int, help="Samples when the uniform policy is estimated")
    audit.add_argument("--limit", type=int)

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    values = {name: value for name, value in vars(args).items() if name in fields}
    return RunConfig(graph_path=args.graph, **values)


def _print_human(document: Dict[str, Any], prefix: str = "") -> None:
    for key, value in document.items():
        if isinstance(value, dict):
            print(f"{prefix}{key}:")
            _print_human(value, prefix + "  ")
        else:
            print(f"{prefix}{key}: {value}")


def run(argv: List[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        toolkit = MatchingToolkit(args.config)
    except (OSError, ValueError, TypeError, yaml.YAMLError) as e:
        print(f"error: cannot load configuration: {e}", file=sys.stderr)
        return EXIT_USAGE

    level = toolkit.settings.log_level or ("DEBUG" if args.verbose or toolkit.settings.verbose_logging else "INFO")
    logging.basicConfig(level=level, format=toolkit.settings.log_format, stream=sys.stderr)

    run_config = toolkit.resolve(_run_config(args))
    start_time = time.perf_counter()
    try:
        with open(run_config.graph_path, "r", encoding="utf-8") as file:
            graph = parse_graph(file)
        logger.info(f"Running {run_config.command} on {run_config.graph_path} (n={graph.n}, m={graph.m})")
        result = COMMANDS[run_config.command](toolkit, graph, run_config)
    except (UsageError, GraphFormatError, InvalidMatchingError, OSError) as e:
        logger.error(f"{run_config.command} failed: {e}")
        return EXIT_USAGE
    except InfeasibleInstanceError as e:
        logger.error(f"{run_config.command}: infeasible instance: {e}")
        return EXIT_INFEASIBLE
    except LimitExceededError as e:
        logger.error(f"{run_config.command}: limit exceeded: {e}")
        return EXIT_LIMIT
    except MatchingError as e:
        logger.error(f"{run_config.command} failed: {e}")
        return EXIT_USAGE

    status = result.pop("status")
    document = {
        "command": run_config.command,
        "arguments": {k: v for k, v in vars(run_config).items() if k not in NOT_ECHOED},
        "instance": {"path": run_config.graph_path, "n": graph.n, "m": graph.m},
        "seed": run_config.seed,
        "status": status,
        "results": result,
        "timing": {"seconds": round(time.perf_counter() - start_time, 6)},
    }

    if run_config.output_format == "json":
        print(json.dumps(document, sort_keys=True, indent=2))
    else:
        _print_human(document)

    exit_code = STATUS_EXIT_CODES[status]
    if exit_code == EXIT_INFEASIBLE:
        print(f"{run_config.command}: the instance is infeasible", file=sys.stderr)
    elif exit_code == EXIT_LIMIT:
        print(f"{run_config.command}: limit exceeded", file=sys.stderr)
    return exit_code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
