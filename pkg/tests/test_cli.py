import csv
import io
import json
import math
import subprocess
import sys

import pytest

from gradnet.cli import main

RING4_FN = '{"ring": {"n": 4, "delta": {"family": "cosine", "params": {}}}}'


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def rows_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_graph_info_figure2(capsys):
    code, out, _ = run(capsys, "graph-info", "figure2")
    assert code == 0
    d = json.loads(out)
    assert d["bipartite"]
    assert sorted(map(sorted, d["bipartition"])) == [[1, 3, 5, 7, 8, 9, 10], [2, 4, 6]]


def test_graph_info_ring4(capsys):
    d = json.loads(run(capsys, "graph-info", "ring4")[1])
    assert d["regular"] == 2
    assert [round(x, 9) for x in d["laplacian_spectrum"]] == [0, 2, 2, 4]


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "g.json"
    bad.write_text('{"n": 3,\n "edges": [[1, 2],, [2, 3]]}')
    code, _, err = run(capsys, "graph-info", str(bad))
    assert code == 2
    assert "line 2" in err


def test_missing_file(capsys):
    assert run(capsys, "graph-info", "/nonexistent/graph.json")[0] == 2


def test_sync_triangle_wedge_row(capsys):
    code, out, _ = run(capsys, "sync-classify", "--graph", "triangle", "--coupling", "quadratic:alpha=1,beta=1.5", "--format", "csv")
    assert code == 0
    (row,) = rows_csv(out)
    assert row["wedge"] == "true" and row["verdict"] == "minimum" and row["phi_minimum"] == "false"
    assert (row["n_minus"], row["n_zero"], row["n_plus"]) == ("0", "0", "3")


def test_sync_sweeps(capsys):
    out = run(capsys, "sync-classify", "--graph", "cube", "--grid=-2:2:9", "--format", "csv")[1]
    rows = rows_csv(out)
    assert len(rows) == 81 and not any(r["wedge"] == "true" for r in rows)
    out = run(capsys, "sync-classify", "--graph", "ring5", "--grid=-2:2:41", "--format", "csv")[1]
    # the C5 wedge is the thin sector 0.809 beta < alpha < beta
    assert any(r["wedge"] == "true" for r in rows_csv(out))


def test_sync_non_regular(capsys):
    code, _, err = run(capsys, "sync-classify", "--graph", "figure2", "--coupling", "quadratic:alpha=1,beta=0")
    assert code == 4
    assert "kmn" in err or "dm-classify" in err


def test_kmn_and_dm(capsys):
    code, out, _ = run(capsys, "kmn", "--m", "2", "--n", "3", "--coupling", "quadratic:alpha=2,beta=1")
    assert code == 0
    assert json.loads(out)["rows"][0]["verdict"] == "minimum"
    q = json.dumps({"family": "polynomial", "z2": True, "params": {"terms": [
        [4, 0, 1], [3, 1, -4], [2, 2, 6], [1, 3, -4], [0, 4, 1], [2, 0, -1], [1, 1, 6], [0, 2, -1]]}})
    code, out, _ = run(capsys, "dm-classify", "--graph", "cube", "--coupling", q, "--resolution", "48")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 2 and all(r["verdict"] == "minimum" for r in rows)


def test_ring_equilibria_n4(capsys):
    code, out, _ = run(capsys, "ring-equilibria", "--n", "4", "--format", "csv")
    assert code == 0
    energies = {round(float(r["energy"]), 9) for r in rows_csv(out)}
    assert {4.0, 0.0, -4.0} <= energies
    assert all(r["n_minus"] != "" for r in rows_csv(out))


def test_ring_equilibria_strict_rejects(capsys):
    code, _, _ = run(capsys, "ring-equilibria", "--n", "6", "--coupling", "two_harmonic:b=0.1")
    assert code == 4
    assert run(capsys, "ring-equilibria", "--n", "6", "--coupling", "two_harmonic:b=0.1", "--relaxed")[0] == 0


def test_ring_ground_state_n5(capsys):
    code, out, _ = run(capsys, "ring-ground-state", "--n", "5", "--starts", "50")
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["formula_energy"] == pytest.approx(5 * math.cos(4 * math.pi / 5))
    assert abs(row["empirical_energy"] - row["formula_energy"]) <= 1e-6


def test_inertia_bounds_ring5(capsys):
    code, out, _ = run(capsys, "inertia-bounds", "--graph", "ring5", "--signs", "++++-", "--samples", "20")
    assert code == 0
    d = json.loads(out)
    assert d["bounds"]["n_minus"] == [0, 1]
    assert d["inside"] and d["violations"] == 0
    assert run(capsys, "inertia-bounds", "--graph", "ring5", "--weights", "1,1,0,1,1")[0] == 4


def test_flow_command(capsys):
    code, out, _ = run(capsys, "flow", "--function", RING4_FN, "--x0", "0,0.45,0.02,0.53", "--torus", "--format", "csv")
    assert code == 0
    last = rows_csv(out)[-1]
    assert float(last["energy"]) == pytest.approx(-4.0, abs=1e-12)


def test_flow_non_convergence_exit(capsys):
    code, _, _ = run(capsys, "flow", "--function", RING4_FN, "--x0", "0.1,0.3,0.2,0.9", "--T", "0.01", "--torus")
    assert code == 3


def test_flow_bad_x0(capsys):
    assert run(capsys, "flow", "--function", RING4_FN, "--x0", "0,1")[0] in (2, 3)


COMMANDS = [
    ["graph-info", "petersen"],
    ["sync-classify", "--graph", "ring5", "--grid=-2:2:5", "--format", "csv"],
    ["ring-equilibria", "--n", "6"],
    ["ring-ground-state", "--n", "4:5", "--starts", "30", "--seed", "7"],
    ["flow", "--function", RING4_FN, "--torus", "--seed", "3"],
    ["inertia-bounds", "--graph", "cube", "--signs", "+-+-+-+-+-+-", "--samples", "10", "--seed", "2"],
]


@pytest.mark.parametrize("argv", COMMANDS, ids=lambda a: a[0])
def test_byte_identical_reruns(tmp_path, capsys, argv):
    blobs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(argv + ["--out-dir", str(d)]) == 0
        capsys.readouterr()
        blobs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert blobs[0] == blobs[1]
    manifest = json.loads(blobs[0]["manifest.json"])
    assert manifest["command"] == argv[0]
    assert set(manifest["outputs"]) | {"manifest.json"} == set(blobs[0])


def test_svg_written(tmp_path, capsys):
    svg = tmp_path / "wedge.svg"
    assert main(["sync-classify", "--graph", "triangle", "--grid=-2:2:5", "--svg", str(svg)]) == 0
    capsys.readouterr()
    assert svg.read_text().startswith("<svg")


def test_console_script_entry():
    res = subprocess.run([sys.executable, "-m", "gradnet.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "gradnet" in res.stdout
