import json
from pathlib import Path
from unittest.mock import patch

import pytest

from src.cli import EXIT_INFEASIBLE, EXIT_LIMIT, EXIT_SUCCESS, EXIT_USAGE, MatchingToolkit, RunConfig, run
from src.errors import InfeasibleInstanceError, LimitExceededError

TEST_CONFIG_PATH = str(Path(__file__).resolve().parent.parent / "config" / "config-test.yaml")


@pytest.fixture
def run_cli(capsys):
    def invoke(*argv):
        code = run(list(argv) + ["--config", TEST_CONFIG_PATH])
        out = capsys.readouterr().out
        document = json.loads(out) if out.strip().startswith("{") else None
        return code, document, out

    return invoke


@pytest.fixture
def graph_b_file(tmp_path):
    path = tmp_path / "b.txt"
    path.write_text("2 3\n1 1\n2 1\n2 2\n")
    return str(path)


@pytest.fixture
def infeasible_file(tmp_path):
    path = tmp_path / "infeasible.txt"
    path.write_text("2 2\n1 1\n2 1\n")
    return str(path)


@pytest.fixture
def given_file(tmp_path):
    def write(pairs):
        path = tmp_path / "given.json"
        path.write_text(json.dumps({"n": len(pairs), "pairs": pairs}))
        return str(path)

    return write


def test_solve(run_cli, graph_c_file):
    code, document, _ = run_cli("solve", graph_c_file)
    assert code == EXIT_SUCCESS
    assert document["command"] == "solve"
    assert document["status"] == "success"
    assert document["instance"] == {"path": graph_c_file, "n": 3, "m": 7}
    assert document["results"]["matching"] == [[1, 1], [2, 2], [3, 3]]
    assert "seconds" in document["timing"]


def test_solve_unique_matching(run_cli, graph_b_file):
    code, document, _ = run_cli("solve", graph_b_file)
    assert code == EXIT_SUCCESS
    assert document["results"]["matching"] == [[1, 1], [2, 2]]


def test_solve_infeasible(run_cli, infeasible_file):
    code, document, _ = run_cli("solve", infeasible_file)
    assert code == EXIT_INFEASIBLE
    assert document["status"] == "infeasible"


def test_usage_errors(run_cli, graph_c_file, tmp_path):
    assert run_cli("no-such-command", graph_c_file)[0] == EXIT_USAGE
    assert run_cli("distant", graph_c_file)[0] == EXIT_USAGE
    assert run_cli("solve", str(tmp_path / "missing.txt"))[0] == EXIT_USAGE
    assert run_cli("enumerate", graph_c_file, "--limit", "many")[0] == EXIT_USAGE


def test_malformed_graph_file(run_cli, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2\n1 1\n1 1\n")
    code, document, _ = run_cli("solve", str(path))
    assert code == EXIT_USAGE
    assert document is None


def test_undecodable_files(run_cli, graph_c_file, tmp_path):
    graph = tmp_path / "binary.txt"
    graph.write_bytes(b"# \xff\xfe\n3 3\n1 1\n2 2\n3 3\n")
    code, document, _ = run_cli("solve", str(graph))
    assert (code, document) == (EXIT_USAGE, None)

    given = tmp_path / "binary.json"
    given.write_bytes(b'{"n": 3, "pairs": [[1, 1], [2, 2], [3, 3]]}\xff')
    code, document, _ = run_cli("distant", graph_c_file, "--given", str(given))
    assert (code, document) == (EXIT_USAGE, None)


@pytest.mark.parametrize("content", ["defaults: [unclosed\n", "- k\n- 3\n", "just a string\n"])
def test_broken_configuration(graph_c_file, tmp_path, capsys, content):
    config = tmp_path / "config.yaml"
    config.write_text(content)
    assert run(["solve", graph_c_file, "--config", str(config)]) == EXIT_USAGE
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "cannot load configuration" in captured.err


def test_distant(run_cli, graph_c_file, given_file):
    given = given_file([[1, 1], [2, 2], [3, 3]])
    code, document, _ = run_cli("distant", graph_c_file, "--given", given)
    assert code == EXIT_SUCCESS
    assert document["results"]["matching"] == [[1, 1], [2, 3], [3, 2]]
    assert document["results"]["d_star"] == 2


def test_distant_decision(run_cli, graph_c_file, given_file):
    given = given_file([[1, 1], [2, 2], [3, 3]])
    _, document, _ = run_cli("distant", graph_c_file, "--given", given, "--d", "3")
    assert document["results"]["answer"] == "no"
    assert document["results"]["witness"] is None
    _, document, _ = run_cli("distant", graph_c_file, "--given", given, "--d", "2")
    assert document["results"]["answer"] == "yes"
    assert run_cli("distant", graph_c_file, "--given", given, "--d", "4")[0] == EXIT_USAGE


def test_distant_rejects_invalid_given(run_cli, graph_c_file, given_file):
    given = given_file([[1, 3], [2, 2], [3, 1]])
    assert run_cli("distant", graph_c_file, "--given", given)[0] == EXIT_USAGE


def test_maximal_pair(run_cli, graph_c_file):
    code, document, _ = run_cli("maximal-pair", graph_c_file)
    assert code == EXIT_SUCCESS
    assert document["results"]["distance"] == 3
    assert document["results"]["trace"]["distances"] == [0, 2, 3]


def test_max_pair_exact(run_cli, graph_c_file):
    code, document, _ = run_cli("max-pair-exact", graph_c_file, "--limit", "10")
    assert code == EXIT_SUCCESS
    assert document["results"]["d_max"] == 3
    assert run_cli("max-pair-exact", graph_c_file, "--limit", "2")[0] == EXIT_LIMIT


def test_disjoint_pair(run_cli, graph_c_file, graph_b_file):
    code, document, _ = run_cli("disjoint-pair", graph_c_file)
    assert code == EXIT_SUCCESS
    assert document["results"]["pair"] == [[[1, 1], [2, 3], [3, 2]], [[1, 2], [2, 1], [3, 3]]]
    assert run_cli("disjoint-pair", graph_b_file)[0] == EXIT_INFEASIBLE


def test_disjoint_family(run_cli, graph_c_file):
    _, document, _ = run_cli("disjoint-family", graph_c_file, "--k", "3")
    assert document["results"]["size"] == 2


def test_diverse(run_cli, graph_c_file):
    code, document, _ = run_cli("diverse", graph_c_file, "--k", "2", "--restarts", "2", "--seed", "0")
    assert code == EXIT_SUCCESS
    results = document["results"]
    assert results["objective"] == 3
    assert results["size"] == 2
    assert results["shortfall"] == 0
    assert results["secret"] in results["pool"]
    assert document["seed"] == 0


def test_diverse_uses_configured_defaults(run_cli, graph_c_file):
    _, document, _ = run_cli("diverse", graph_c_file)
    assert document["arguments"]["k"] == 3
    assert document["arguments"]["restarts"] == 2
    assert document["results"]["objective"] == 7


def test_sample_reports_uniformity(run_cli, graph_c_file):
    code, document, _ = run_cli("sample", graph_c_file, "--count", "20", "--seed", "1")
    assert code == EXIT_SUCCESS
    assert len(document["results"]["samples"]) == 20
    assert 0.0 <= document["results"]["tv_to_uniform"] <= 1.0
    _, document, _ = run_cli("sample", graph_c_file, "--count", "5", "--limit", "2")
    assert "tv_to_uniform" not in document["results"]


def test_enumerate_and_count(run_cli, graph_c_file):
    code, document, _ = run_cli("enumerate", graph_c_file, "--limit", "10")
    assert code == EXIT_SUCCESS
    assert document["results"]["count"] == 3
    assert len(document["results"]["matchings"]) == 3

    code, document, _ = run_cli("enumerate", graph_c_file, "--limit", "2")
    assert code == EXIT_LIMIT
    assert document["status"] == "limit_exceeded"
    assert document["results"]["complete"] is False

    assert run_cli("count", graph_c_file, "--limit", "10")[1]["results"]["count"] == 3
    assert run_cli("count", graph_c_file, "--limit", "2")[0] == EXIT_LIMIT


def test_audit(run_cli, graph_c_file):
    code, document, _ = run_cli("audit", graph_c_file, "--k", "2", "--seed", "0")
    assert code == EXIT_SUCCESS
    results = document["results"]
    assert results["uniform"]["adversary_success"] == pytest.approx(5 / 9)
    assert results["pool"]["adversary_success"] == pytest.approx(0.5)
    assert results["less_predictable"] == "pool"


def test_human_format(run_cli, graph_c_file):
    code, document, out = run_cli("solve", graph_c_file, "--format", "human")
    assert code == EXIT_SUCCESS
    assert document is None
    assert "status: success" in out
    assert "matching: [[1, 1], [2, 2], [3, 3]]" in out


def test_solver_errors_map_to_exit_codes(run_cli, graph_c_file):
    with patch("src.cli.find_perfect_matching", side_effect=InfeasibleInstanceError("no matching")):
        assert run_cli("solve", graph_c_file)[0] == EXIT_INFEASIBLE
    with patch("src.cli.diverse_pool", side_effect=LimitExceededError("budget")):
        assert run_cli("diverse", graph_c_file)[0] == EXIT_LIMIT


def test_toolkit_resolves_defaults():
    toolkit = MatchingToolkit(TEST_CONFIG_PATH)
    resolved = toolkit.resolve(RunConfig(command="diverse", graph_path="g.txt", k=5))
    assert resolved.k == 5
    assert resolved.restarts == 2
    assert resolved.seed == 0
    assert resolved.limit == 1000
