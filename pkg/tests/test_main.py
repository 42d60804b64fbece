import json

import numpy as np
import pytest

import dynamics
import main
import selftest
from errors import RootFindingFailed
from serialization import deserialize_map, operator_from_json


def coeffs(series, n):
    return list(series.coeffs[:n])


def test_compose_laws():
    f1, f2 = "z^2+conj(2*z)", "0.5*z+conj(z+1)"
    direct = deserialize_map(main.execute(["--trunc", "4", "compose", f1, f2]))
    assert coeffs(direct.h, 3) == [0, 0, 0.25]
    assert coeffs(direct.g, 2) == [2, 2]
    crossed = deserialize_map(main.execute(["--trunc", "4", "compose", "--law", "crossed", f1, f2]))
    assert coeffs(crossed.h, 3) == [1, 2, 1]
    assert coeffs(crossed.g, 2) == [0, 1]
    blend = deserialize_map(main.execute(["--trunc", "4", "compose", "--law", "blend", f1, f2]))
    assert np.array_equal(blend.h.coeffs, direct.h.coeffs)
    assert np.array_equal(blend.g.coeffs, direct.g.coeffs)


def test_iterate_writes_csv():
    text = main.execute(["iterate", "direct", "0.5*z+conj(0.5*z)", "1", "3"])
    lines = text.splitlines()
    assert lines[0] == "n,re,im"
    assert lines[1] == "0,2,0"
    assert len(lines) == 5


def test_fixed_points_and_taxonomy():
    records = json.loads(main.execute(["--trunc", "6", "fixed-points", "z^2+conj(z/2)"]))
    assert [r["class"] for r in records] == ["superattracting", "repelling"]
    taxonomy = json.loads(main.execute(["classify-mobius", "mobius[0.5,1;0,1]+conj(mobius[0.25,0;0,1])"]))
    assert taxonomy["case"] == "general"


def test_linearization_commands():
    koenigs = json.loads(main.execute(["--trunc", "12", "koenigs", "0.5*z+0.5*z^2+conj(0.25*z)"]))
    assert koenigs["kind"] == "koenigs"
    assert koenigs["residual"] < 1e-9
    boettcher = json.loads(main.execute(["--trunc", "12", "boettcher", "z^2+conj(0.5*z)"]))
    assert boettcher["kind"] == "boettcher_analytic_side"
    assert boettcher["p"] == 2
    both = json.loads(main.execute(["--trunc", "12", "linearize", "z^2+conj(z^3)"]))
    assert both["kind"] == "boettcher_both"


def test_basin_is_ppm():
    data = main.execute(["--n-max", "50", "basin", "0.5*z+conj(0.25*z)", "--grid", "6", "4"])
    assert data.startswith(b"P6")


def test_operator_matrix_and_checks():
    L = operator_from_json(main.execute(["--trunc", "5", "op", "matrix", "--phi", "0.5*z", "--pi", "0.3*z"]))
    assert L.trunc_order == 5
    assert np.allclose(np.diag(L.A), 0.5 ** np.arange(6))

    csv_text = main.execute(["--trunc", "3", "op", "matrix", "--format", "csv"])
    assert csv_text.splitlines()[0].startswith("block,row,re0,im0")

    norm = json.loads(main.execute(["--trunc", "8", "op", "norm", "--phi", "0.7*z", "--pi", "0.2*z"]))
    assert norm["norm"] == pytest.approx(1.0, rel=1e-6)
    assert norm["bound_phi"] == 1.0

    normal = json.loads(main.execute(["--trunc", "4", "op", "normal-check"]))
    assert normal["normal"] is True

    kernel = json.loads(main.execute(
        ["--trunc", "16", "op", "adjoint-kernel", "--phi", "0.5*z", "--pi", "0.3*z", "--lambda", "0.2"]
    ))
    assert kernel["ok"] is True

    simple = json.loads(main.execute(["--trunc", "6", "op", "simple-check", "--phi", "0.5*z+0.1"]))
    assert simple["simple"] is True
    assert simple["phi"][1] == pytest.approx([0.5, 0.0])


def test_operator_file_input(tmp_path):
    path = tmp_path / "op.json"
    path.write_text(main.execute(["--trunc", "4", "op", "matrix", "--phi", "0.5*z"]))
    payload = json.loads(main.execute(["op", "norm", "--operator", str(path)]))
    assert "bound_A" not in payload
    assert payload["norm"] == pytest.approx(1.0, rel=1e-6)


def test_artifacts_are_deterministic():
    argv = ["--trunc", "8", "op", "matrix", "--perturb", "0.1", "--phi", "0.5*z"]
    assert main.execute(argv) == main.execute(argv)


# ========== EXIT CODES ==========

@pytest.mark.parametrize("argv, code", [
    (["compose", "z +", "z"], 2),
    (["compose", "--law", "blend", "mobius[1,0;0,2]+conj(z)", "z+conj(z)"], 3),
    (["classify-mobius", "z+conj(z)"], 3),
    (["koenigs", "z+1+conj(0.5*z)"], 4),
    (["boettcher", "0.5*z+conj(0.5*z)"], 4),
    (["--trunc", "0", "fixed-points", "z^2+conj(z/2)"], 4),
    (["basin", "z+conj(z)", "--grid", "0", "3"], 4),
])
def test_exit_codes(argv, code, capsys):
    assert main.run(argv) == code
    assert capsys.readouterr().out == ""


def test_numerical_failure_exit_code(monkeypatch):
    def failing_roots(coeffs, *args, **kwargs):
        raise RootFindingFailed("did not converge", partial=[0j])

    monkeypatch.setattr(dynamics, "polynomial_roots", failing_roots)
    assert main.run(["--trunc", "4", "fixed-points", "z^2+conj(z^2)"]) == 5


def test_output_file(tmp_path, capsys):
    target = tmp_path / "points.json"
    assert main.run(["--output", str(target), "fixed-points", "z^2+conj(z/2)"]) == 0
    assert capsys.readouterr().out == ""
    assert len(json.loads(target.read_text())) == 2

    image = tmp_path / "basin.ppm"
    assert main.run(["--n-max", "30", "basin", "0.5*z+conj(0.5*z)", "--grid", "3", "2", str(image)]) == 0
    assert image.read_bytes().startswith(b"P6")


def test_unwritable_output(tmp_path):
    target = tmp_path / "missing" / "out.json"
    assert main.run(["--output", str(target), "fixed-points", "z^2+conj(z/2)"]) == 4


def test_missing_input_file(tmp_path):
    assert main.run(["op", "norm", "--operator", str(tmp_path / "absent.json")]) == 4


def test_stdout_artifact(capsys):
    assert main.run(["iterate", "crossed", "0.5*z+conj(0.5*z)", "1", "2"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "n,re,im"


def test_selftest_command(monkeypatch, capsys):
    monkeypatch.setattr(selftest, "CHECKS", [("quick", lambda rng: (True, "fine"))])
    assert main.run(["selftest"]) == 0
    assert "1/1 passed" in capsys.readouterr().out

    monkeypatch.setattr(selftest, "CHECKS", [
        ("quick", lambda rng: (True, "fine")),
        ("broken", lambda rng: (False, "residual 1e-2")),
    ])
    assert main.run(["selftest"]) == 5
    out = capsys.readouterr().out
    assert "FAIL" in out and "1/2 passed" in out
