import json

import pytest

from qslice.cli import main

from conftest import FIXTURE_PATH, classical_slice_ids

FIXTURE = FIXTURE_PATH


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_slice_matches_classical_filter(capsys):
    code, out, _ = run_cli(
        capsys, "slice", "--input", FIXTURE,
        "--return-min", "0.12", "--risk-max", "0.30", "--seed", "7",
    )
    assert code == 0
    payload = json.loads(out)
    from qslice import load_frontier

    with open(FIXTURE) as handle:
        table = load_frontier(handle, 7)
    want = sorted(classical_slice_ids(table, 0.12, 0.30))
    assert payload["selected_ids"] == want
    assert payload["qubit_layout"]["num_qubits"] == 37
    assert payload["seed"] == 7
    assert payload["count_estimate"]["M_rounded"] == len(want)
    assert payload["oracle_calls"] > 0


def test_slice_empty_selection_is_success(capsys):
    code, out, _ = run_cli(
        capsys, "slice", "--input", FIXTURE,
        "--return-min", "0.99", "--risk-max", "0.5", "--seed", "1",
    )
    assert code == 0
    assert json.loads(out)["selected_ids"] == []


def test_slice_unreadable_input(capsys):
    code, out, err = run_cli(
        capsys, "slice", "--input", "missing.csv",
        "--return-min", "0.1", "--risk-max", "0.5",
    )
    assert code == 1
    assert out == ""
    assert "error" in err


def test_max_sharpe_fixture_and_determinism(capsys):
    args = ("max-sharpe", "--input", FIXTURE, "--seed", "1", "--repeat", "5")
    code, first, _ = run_cli(capsys, *args)
    assert code == 0
    code, second, _ = run_cli(capsys, *args)
    assert code == 0
    assert first == second  # byte-identical for identical config and seed
    payload = json.loads(first)
    assert payload["id"] == 2
    assert payload["repetitions"] == 5
    assert payload["qubit_layout"]["num_qubits"] == 18


def test_max_sharpe_single_repetition_flagged(capsys):
    code, out, _ = run_cli(
        capsys, "max-sharpe", "--input", FIXTURE, "--seed", "4", "--repeat", "1",
    )
    assert code == 0
    assert json.loads(out)["repetitions"] == 1


def test_count_vacuous_condition_doubles(capsys):
    code, out, _ = run_cli(
        capsys, "count", "--input", FIXTURE,
        "--return-min", "0.0", "--risk-max", "0.99", "--mode", "exact", "--seed", "3",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["M_rounded"] == 8
    assert payload["doubled"] is True
    assert payload["mode"] == "exact"


def test_count_impossible_condition(capsys):
    code, out, _ = run_cli(
        capsys, "count", "--input", FIXTURE,
        "--risk-max", "0.05", "--mode", "exact", "--seed", "2",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["M_rounded"] == 0
    assert payload["class"] == "none"


def test_count_detect_single_solution(capsys):
    # only id 7 has return above 0.24 on the fixture
    code, out, _ = run_cli(
        capsys, "count", "--input", FIXTURE,
        "--return-min", "0.24", "--mode", "detect", "--seed", "0",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["class"] == "single"
    assert payload["m_used"] == 4


def test_count_needs_a_condition(capsys):
    code, _, err = run_cli(capsys, "count", "--input", FIXTURE)
    assert code == 1
    assert "return-min" in err


def test_bad_resolution_is_input_error(capsys):
    code, _, err = run_cli(
        capsys, "max-sharpe", "--input", FIXTURE, "--resolution", "2.0",
    )
    assert code == 1
    assert "resolution" in err


@pytest.mark.parametrize(
    "n,a,b,want",
    [(3, 5, 3, {"gt": 1, "lt": 0, "eq": 0}),
     (3, 4, 4, {"gt": 0, "lt": 0, "eq": 1}),
     (2, 0, 3, {"gt": 0, "lt": 1, "eq": 0})],
)
def test_compare(capsys, n, a, b, want):
    code, out, _ = run_cli(capsys, "compare", str(n), str(a), str(b))
    assert code == 0
    payload = json.loads(out)
    assert payload["simulated"] == want
    assert payload["classical"] == want
    assert payload["agree"] is True
    assert payload["qubit_layout"]["num_qubits"] == 2 * n + 1


def test_compare_range_check(capsys):
    code, _, err = run_cli(capsys, "compare", "2", "9", "1")
    assert code == 1
    assert "fit" in err


def test_text_output_mode(capsys):
    code, out, _ = run_cli(
        capsys, "compare", "3", "5", "3", "--output", "text",
    )
    assert code == 0
    assert "agree: True" in out
