import csv
import io
import json
from collections import Counter

import pytest

from dlgraphs import __version__
from dlgraphs import cayley_algebra as ca
from dlgraphs.cli import main
from dlgraphs.dl_graph import Ball, DLParams, ball

from oracles import dl_ball_bruteforce, exact_return_probability


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def read_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    return meta, list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_growth_csv_matches_bruteforce(capsys):
    code, out, _ = run(capsys, "growth", "--q", "2,3", "--radius", "6")
    assert code == 0
    meta, rows = read_csv(out)
    assert meta["version"] == __version__ and meta["params"]["q"] == [2, 3]
    dist, _ = dl_ball_bruteforce((2, 3), 6)
    expected = Counter(dist.values())
    assert [int(r["sphere_size"]) for r in rows] == [expected[r] for r in range(7)]


def test_spectrum_within_interval(capsys):
    code, out, _ = run(capsys, "spectrum", "--q", "2,2,2", "--hmax", "8")
    assert code == 0
    _, rows = read_csv(out)
    values = [float(r["eigenvalue"]) for r in rows]
    assert values and all(-0.5 - 1e-9 <= v <= 1 + 1e-9 for v in values)
    assert {int(r["h"]) for r in rows} == set(range(3, 9))


def test_cayley_verify_report(capsys):
    code, out, _ = run(capsys, "cayley-verify", "--d", "3", "--q", "2", "--radius", "3")
    assert code == 0
    data = json.loads(out)
    report = data["report"]
    assert report["ok"] and report["injective"] and report["edges_match"]
    assert report["group_size"] == report["ball_size"]
    assert data["provenance"]["params"]["radius"] == 3


def test_cayley_verify_failure_exits_3(capsys, monkeypatch):
    original = ca.generator

    def broken(ring, label):
        g = original(ring, label)
        return ca.AffineElement(g.k, ca.constant(ring, 2)) if label.i == 0 and label.lam == 1 else g

    monkeypatch.setattr(ca, "generator", broken)
    code, out, _ = run(capsys, "cayley-verify", "--d", "2", "--q", "3", "--radius", "2")
    assert code == 3
    assert json.loads(out)["report"]["counterexamples"]


def test_field_ring_flags(capsys):
    code, out, _ = run(capsys, "cayley-verify", "--ring", "F", "--prime-powers", "2^2", "--radius", "2")
    assert code == 0
    assert json.loads(out)["report"]["ring"]["q"] == 4


def test_presentation_counts(capsys):
    code, out, _ = run(capsys, "presentation-check", "--q", "3", "--format", "csv")
    assert code == 0
    _, rows = read_csv(out)
    counts = {r["kind"]: int(r["count"]) for r in rows}
    assert counts["first"] + counts["second"] == 3 * 2 * 1 * (9 + 3)


def test_automaton_check(capsys):
    code, out, _ = run(capsys, "automaton-check", "--q", "5", "--trials", "5", "--seed", "3")
    assert code == 0
    assert json.loads(out)["mismatches"] == 0


def test_automaton_rejects_non_invertible(capsys):
    code, _, err = run(capsys, "automaton-check", "--q", "4", "--d", "2")
    assert code == 2 and err


def test_eig_matches_closed_form(capsys):
    code, out, _ = run(capsys, "eig", "--q", "3", "--d", "3", "--h", "6")
    assert code == 0
    assert json.loads(out)["closed_form_max_deviation"] < 1e-9


def test_basis_check(capsys):
    code, out, _ = run(capsys, "basis-check", "--q", "2,3", "--height", "3")
    assert code == 0
    data = json.loads(out)
    assert data["size"] == data["expected_size"] > 0
    assert data["gram_error"] < 1e-9 and data["eigen_residual"] < 1e-10


def test_basis_check_anchors(capsys):
    code, out, _ = run(capsys, "basis-check", "--q", "2,2", "--anchors=-2:|0:")
    assert code == 0
    assert json.loads(out)["polyhedron"] == "-2:|0:"


def test_return_prob_against_exact(capsys):
    code, out, _ = run(capsys, "return-prob", "--q", "2,3", "--nmax", "6")
    assert code == 0
    _, rows = read_csv(out)
    for r in rows:
        n = int(r["n"])
        assert abs(float(r["return_probability"]) - exact_return_probability((2, 3), n)) \
            <= float(r["tail_bound"]) + 1e-8


def test_euler(capsys):
    code, out, _ = run(capsys, "euler", "--q", "2,2,2,2", "--R", "2")
    assert code == 0
    _, rows = read_csv(out)
    assert [int(r["euler_characteristic"]) for r in rows] == [0, 0]


def test_simulate_is_deterministic(capsys, tmp_path):
    argv = ["simulate", "--q", "2,3", "--steps", "50", "--trials", "4", "--seed", "9"]
    assert main(argv + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b.csv")]) == 0
    a, b = (tmp_path / "a.csv").read_text(), (tmp_path / "b.csv").read_text()
    assert a == b
    meta, rows = read_csv(a)
    assert meta["params"]["seed"] == 9 and len(rows) == 4


def test_drift_report(capsys):
    code, out, _ = run(capsys, "drift", "--q", "2,3", "--steps", "200", "--trials", "500", "--check-se", "4")
    assert code == 0
    report = json.loads(out)["report"]
    assert report["alpha_exact"] == ["-1/5", "1/5"] and report["alpha_sum"] == "0"


def test_custom_law_file(capsys, tmp_path):
    law = tmp_path / "law.json"
    law.write_text(json.dumps({"moves": [{"down": 0, "up": 1, "label": 0, "p": 0.5},
                                         {"down": 1, "up": 0, "label": 1, "p": 0.5}]}))
    code, out, _ = run(capsys, "drift", "--q", "2,2", "--steps", "10", "--trials", "10", "--law", str(law))
    assert code == 0
    assert json.loads(out)["report"]["config"]["law"]["moves"][0]["p"] == 0.5


def test_ball_dump_round_trip(capsys, tmp_path):
    path = tmp_path / "ball.json"
    assert main(["growth", "--q", "2,2,3", "--radius", "2", "--ball-out", str(path)]) == 0
    reloaded = Ball.from_json(path.read_text())
    direct = ball(DLParams((2, 2, 3)), None, 2)
    assert reloaded.vertices == direct.vertices
    assert reloaded.adjacency == direct.adjacency
    assert reloaded.distances == direct.distances


@pytest.mark.parametrize("argv", [
    ["nope"],
    ["growth", "--q", "2,3"],
    ["growth", "--q", "2,x", "--radius", "2"],
    ["growth", "--q", "1,3", "--radius", "2"],
    ["growth", "--q", "2,3", "--d", "3", "--radius", "2"],
    ["growth", "--radius", "2"],
    ["spectrum", "--q", "2,3", "--hmax", "1"],
    ["spectrum", "--q", "2,3", "--hmax", "4", "--bogus"],
    ["cayley-verify", "--q", "2", "--d", "4"],
    ["cayley-verify", "--ring", "F"],
    ["simulate", "--q", "2,3", "--steps", "-1"],
    ["drift", "--q", "2,3", "--steps", "5", "--law", "/nonexistent.json"],
])
def test_validation_errors_exit_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == "" and err


@pytest.mark.parametrize("argv", [
    ["growth", "--q", "2,3", "--radius", "8", "--cap", "100"],
    ["cayley-verify", "--q", "2", "--radius", "3", "--cap", "50"],
    ["basis-check", "--q", "2,2", "--height", "4", "--cap", "3"],
    ["euler", "--q", "3,3,3", "--R", "3", "--cap", "10"],
])
def test_cap_fails_gracefully(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "cap" in err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
