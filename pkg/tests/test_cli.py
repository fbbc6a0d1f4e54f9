import json

import numpy as np
import pytest

from ccopt import problems
from ccopt.cli import main
from ccopt.schemas import load_schema

jsonschema = pytest.importorskip("jsonschema")

SCHEMA = {"solve": "solve", "certify": "certify", "second-order": "second_order",
          "oracle": "oracle", "check-derivatives": "check_derivatives"}


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out.strip() else None
    if report is not None:
        jsonschema.validate(report, load_schema(SCHEMA[argv[0]]))
    return code, report, captured.err


def test_solve_dist3d(capsys):
    code, rep, _ = run(capsys, "solve", "--builtin", "dist3d", "--start", "0.5,0.9,1.9")
    assert code == 0
    np.testing.assert_allclose(rep["final"]["x"], [0, 0, 2], atol=1e-6)


def test_solve_disk2d(capsys):
    code, rep, _ = run(capsys, "solve", "--builtin", "disk2d")
    assert code == 0 and rep["final"]["f"] <= 1e-10
    assert rep["seed"] == 0


def test_solve_malformed_problem(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 2, "kappa": 1, "Q": [[1, 0]], "c": [0, 0]}')
    code, rep, err = run(capsys, "solve", "--problem", str(path))
    assert code == 1 and rep is None and "ParseError" in err


def test_solve_stall(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"path": {"t_min": 0.5}}))
    code, rep, _ = run(capsys, "solve", "--builtin", "dist3d", "--start", "0.5,0.9,1.9",
                       "--config", str(cfg))
    assert code == 2 and rep["status"] == "stalled" and rep["final"] is None
    assert len(rep["steps"]) == 1


def test_certify_origin(capsys):
    code, rep, _ = run(capsys, "certify", "--builtin", "dist3d", "--x", "0,0,0")
    assert code == 0
    assert rep["m_certificate"]["kind"] == "M" and rep["kind"] == "S"
    np.testing.assert_allclose(rep["m_certificate"]["gamma"], [0, 2, 4])


def test_certify_not_stationary(capsys):
    code, rep, _ = run(capsys, "certify", "--builtin", "dist3d", "--x", "0,0,1")
    assert code == 0 and rep["kind"] == "none"
    assert rep["residual"] == pytest.approx(2.0)


def test_certify_infeasible(capsys):
    code, rep, err = run(capsys, "certify", "--builtin", "disk2d", "--x", "1,1")
    assert code == 3 and rep is None and "infeasible" in err


def test_certify_bad_y(capsys):
    code, _, _ = run(capsys, "certify", "--builtin", "disk2d", "--x", "0.5,0", "--y", "1,0")
    assert code == 3


def test_certify_bad_length(capsys):
    code, _, err = run(capsys, "certify", "--builtin", "disk2d", "--x", "0,0,0")
    assert code == 1 and "ParseError" in err


def test_second_order_exists(capsys):
    code, rep, _ = run(capsys, "second-order", "--builtin", "disk2d", "--x", "0,0", "--y", "1,0",
                       "--mode", "exists")
    assert code == 0 and rep["verdict"]["status"] == "certified"


def test_second_order_forall(capsys):
    code, rep, _ = run(capsys, "second-order", "--builtin", "dist3d", "--x", "0,0,2", "--mode", "forall")
    assert code == 0 and rep["verdict"]["status"] == "certified"


def test_second_order_sonc_x_union(capsys):
    code, rep, _ = run(capsys, "second-order", "--builtin", "dist3d", "--x", "0,1,0", "--mode", "sonc",
                       "--cone", "x-union", "--samples", "50")
    assert code == 0 and rep["verdict"]["status"] == "certified"


def test_second_order_precondition(capsys):
    code, rep, _ = run(capsys, "second-order", "--builtin", "dist3d", "--x", "0,0,1")
    assert code == 4 and rep["status"] == "precondition_failed"


def test_oracle_dist3d(capsys):
    code, rep, _ = run(capsys, "oracle", "--builtin", "dist3d")
    assert code == 0 and rep["best_f"] == pytest.approx(1.0)
    assert sum(c["m_stationary"] for c in rep["candidates"]) == 3


def test_oracle_byte_identical(capsys):
    argv = ["oracle", "--builtin", "sparse_lsq", "--n", "6", "--kappa", "2", "--seed", "7"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_oracle_limit(capsys):
    code, rep, err = run(capsys, "oracle", "--builtin", "sparse_lsq", "--n", "30", "--kappa", "15")
    assert code == 2 and "EnumerationLimit" in err


def test_check_derivatives(capsys):
    for name in problems.BUILTINS:
        code, rep, _ = run(capsys, "check-derivatives", "--builtin", name)
        assert code == 0 and rep["passed"]


def test_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["oracle", "--builtin", "disk2d", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["best_f"] == pytest.approx(0.0)


def test_problem_file(tmp_path, capsys):
    path = tmp_path / "p.json"
    problems.save(problems.builtin("dist3d"), path)
    code, rep, _ = run(capsys, "certify", "--problem", str(path), "--x", "0,1,0")
    assert code == 0 and rep["kind"] == "S"


def test_config_flags_win(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"builtin": "sparse_lsq", "params": {"n": 5, "kappa": 2}, "seed": 1,
                               "starts_per_support": 1}))
    code, rep, _ = run(capsys, "oracle", "--config", str(cfg), "--seed", "3")
    assert code == 0 and rep["seed"] == 3 and rep["n"] == 5
    code, rep, _ = run(capsys, "oracle", "--config", str(cfg), "--n", "4")
    assert rep["n"] == 4 and rep["seed"] == 1


@pytest.mark.parametrize("doc", [{"builtin": "disk2d", "colour": 1},
                                 {"builtin": "disk2d", "path": {"speed": 1}},
                                 {"builtin": "sparse_lsq", "params": {"m": 3}},
                                 {"builtin": "disk2d", "problem": "x.json"}])
def test_config_rejected(tmp_path, capsys, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(doc))
    code, _, err = run(capsys, "solve", "--config", str(cfg))
    assert code == 1 and "error" in err


def test_unknown_builtin_rejected_by_parser(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["oracle", "--builtin", "knapsack"])
    assert exc.value.code == 1
