"""End-to-end tests of the command-line surface."""

import json

import pytest

from cli import run
from config.settings import settings
from tests.conftest import FIXTURES


@pytest.fixture(autouse=True)
def _restore_settings():
    yield
    settings.reload()


def _fixture(stem: str) -> str:
    return str(FIXTURES / f"{stem}.json")


def _json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_check_impossible_json(capsys):
    code = run(["check", _fixture("sec3_joint"), "--format", "json"])
    doc = _json(capsys)
    assert code == 1
    assert doc["command"] == "check"
    assert doc["status"] == "impossible"
    assert doc["exit_code"] == 1
    assert doc["stage"] == 2
    assert doc["reason"]["condition"] == "cross_pair"
    assert doc["trace"]


def test_check_without_search_is_inconclusive(capsys):
    code = run(["check", _fixture("ex2p1"), "--no-search", "--format", "json"])
    doc = _json(capsys)
    assert code == 2
    assert doc["status"] == "inconclusive"
    assert doc["trace"][-1]["outcome"] == "skipped"


def test_pair_text_report(capsys):
    code = run(["pair", _fixture("sec3_pair1")])
    out = capsys.readouterr().out
    assert code == 0
    assert "Status: CERTIFIED" in out
    assert "R_1 singular values" in out
    assert "Trace:" in out


def test_pair_index_out_of_range(capsys):
    code = run(["pair", _fixture("sec3_joint"), "--pair-index", "5"])
    assert code == 3
    assert "pair-index" in capsys.readouterr().err


def test_verify_certificate(capsys):
    code = run(["verify", _fixture("sec3_pair1"), "--certificate", _fixture("sec3_certificate1"),
                "--format", "json"])
    doc = _json(capsys)
    assert code == 0
    assert doc["status"] == "pass"
    assert doc["certificate"]["p"] == 2


def test_verify_wrong_certificate_is_not_impossible(capsys):
    code = run(["verify", _fixture("sec3_pair2"), "--certificate", _fixture("sec3_certificate1"),
                "--format", "json"])
    doc = _json(capsys)
    assert code == 2
    assert doc["status"] == "fail"


def test_gram_single_party(capsys):
    code = run(["gram", _fixture("sec3_joint"), "--format", "json"])
    doc = _json(capsys)
    assert code == 0
    assert doc["status"] == "certified"
    assert {"G_X", "G_Y"} <= set(doc["data"])


def test_svals_table(capsys):
    code = run(["svals", _fixture("ex2p3"), "--format", "json"])
    doc = _json(capsys)
    assert code == 0
    rows = doc["data"]["pairs"]
    assert [r["pair"] for r in rows] == [1, 2]
    assert all(r["peel"] for r in rows)


def test_svals_text_has_columns(capsys):
    run(["svals", _fixture("ex2p3")])
    out = capsys.readouterr().out
    assert "s(X)" in out
    assert "Peel" in out


def test_reduce_right_side_impossible(capsys):
    code = run(["reduce", _fixture("ex2p3"), "--format", "json"])
    doc = _json(capsys)
    assert code == 1
    assert doc["reason"]["witness"]["side"] == "right"
    assert len(doc["data"]["gammas"]) == 2


def test_missing_file_is_input_error(tmp_path, capsys):
    code = run(["check", str(tmp_path / "missing.json")])
    assert code == 3
    assert capsys.readouterr().err.startswith("error:")


def test_malformed_problem_is_input_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"m": 2, "n": 2, "pairs": [{"x": [1, 0, 0], "y": [1, 0, 0, 0]}]}')
    assert run(["check", str(path)]) == 3


def test_unnormalized_input_needs_flag(tmp_path, capsys):
    path = tmp_path / "scaled.json"
    path.write_text(json.dumps({"m": 1, "n": 2, "pairs": [{"x": [3, 4], "y": [0, 5]}]}))
    assert run(["pair", str(path)]) == 3
    capsys.readouterr()

    code = run(["pair", str(path), "--normalize", "--format", "json"])
    doc = _json(capsys)
    assert code == 0
    assert any("rescaled by 1/5" in w for w in doc["warnings"])


def test_usage_error_exits_3():
    with pytest.raises(SystemExit) as info:
        run(["check"])
    assert info.value.code == 3


def test_unknown_command_exits_3():
    with pytest.raises(SystemExit) as info:
        run(["frobnicate"])
    assert info.value.code == 3


def test_examples_listing(capsys):
    code = run(["examples", "--list", "--format", "json"])
    doc = _json(capsys)
    assert code == 0
    groups = {row["group"] for row in doc["data"]["fixtures"]}
    assert {"ex2p1", "ex2p2", "ex2p3", "sec3"} <= groups


def test_examples_group(capsys):
    code = run(["examples", "--group", "ex2p2", "--format", "json"])
    doc = _json(capsys)
    assert code == 0
    assert doc["data"]["matched"] == doc["data"]["checks"] == 5
    assert doc["data"]["divergent"] == []


def test_examples_unknown_group(capsys):
    assert run(["examples", "--group", "nope"]) == 3


def test_tolerance_flag_overrides_settings(capsys):
    run(["examples", "--group", "ex2p2", "--tolerance", "1e-6", "--format", "json"])
    capsys.readouterr()
    assert settings.abs_eps == 1e-6


def _spread_to_product(tmp_path, **bounds) -> str:
    # (|00> + |11> + |22>)/sqrt3 -> |00>, ell = 3
    x = ["1/sqrt3" if i in (0, 4, 8) else 0 for i in range(9)]
    y = [1] + [0] * 8
    path = tmp_path / "spread.json"
    path.write_text(json.dumps({"m": 3, "n": 3, **bounds, "pairs": [{"x": x, "y": y}]}))
    return str(path)


def test_check_and_pair_agree_without_bounds(tmp_path, capsys):
    path = _spread_to_product(tmp_path)
    assert run(["pair", path, "--format", "json"]) == 0
    pair_doc = _json(capsys)
    assert run(["check", path, "--format", "json"]) == 0
    check_doc = _json(capsys)
    assert pair_doc["status"] == check_doc["status"] == "certified"
    bound = [t for t in check_doc["trace"] if t["check"].startswith("ancilla_bound")]
    assert bound and bound[0]["outcome"] == "pass"
    assert "no ancilla bound given" in bound[0]["detail"]


def test_explicit_bounds_still_rule_out(tmp_path, capsys):
    path = _spread_to_product(tmp_path, p_max=2, q_max=2)
    assert run(["check", path, "--format", "json"]) == 1
    assert _json(capsys)["reason"]["condition"] == "ancilla_bound"

    unbounded = _spread_to_product(tmp_path)
    assert run(["check", unbounded, "--max-q", "2", "--format", "json"]) == 1
    assert _json(capsys)["reason"]["witness"]["q_max"] == 2


def test_negative_seed_is_input_error(capsys):
    assert run(["search", _fixture("sec3_pair1"), "-p", "2", "-q", "2", "--seed", "-1"]) == 3
    assert "seed" in capsys.readouterr().err


def test_zero_ancilla_dimension_is_not_replaced(capsys):
    assert run(["search", _fixture("sec3_pair1"), "-p", "0", "-q", "2"]) == 3
    assert "p=0" in capsys.readouterr().err
