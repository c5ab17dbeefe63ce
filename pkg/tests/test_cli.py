import json

import numpy as np
import pytest

from cmvweyl.cli import main, z_grid
from cmvweyl.errors import ConfigError
from cmvweyl.verblunsky import generate_sequence


def read_csv(path):
    lines = path.read_text().splitlines()
    head = {l[2:].split(": ", 1)[0]: json.loads(l[2:].split(": ", 1)[1])
            for l in lines if l.startswith("# ")}
    body = [l for l in lines if not l.startswith("#")]
    return head, body[0].split(","), [row.split(",") for row in body[1:]]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out), "--deterministic"])
    return code, out


def test_spectrum(tmp_path):
    code, out = run(tmp_path, "spectrum", "--alpha", "random:3", "--n", "32")
    assert code == 0
    head, cols, rows = read_csv(out)
    assert cols == ["theta", "weight"] and len(rows) == 32
    assert head["seed"] == 3 and head["version"] and "created" not in head
    assert head["total_weight"] == pytest.approx(1, abs=1e-12)
    assert sum(float(r[1]) for r in rows) == pytest.approx(1, abs=1e-12)
    assert len(rows[0][0].replace("-", "").replace(".", "").split("e")[0]) >= 15


def test_deterministic_output_is_reproducible(tmp_path):
    _, a = run(tmp_path, "mfun", "--alpha", "random:5", "--n", "16", name="a")
    _, b = run(tmp_path, "mfun", "--alpha", "random:5", "--n", "16", name="b")
    assert a.read_bytes() == b.read_bytes()


def test_timestamp_without_deterministic(tmp_path, capsys):
    assert main(["spectrum", "--n", "4"]) == 0
    assert "# created:" in capsys.readouterr().out


def test_mfun_grid_and_symmetry(tmp_path):
    code, out = run(tmp_path, "mfun", "--alpha", "random:1", "--n", "20",
                    "--z-grid", "radial:0.1:0.9:5x8")
    _, cols, rows = read_csv(out)
    assert code == 0 and len(rows) == 40 and cols[-1] == "residual"
    assert max(float(r[-1]) for r in rows) < 1e-10
    code, out = run(tmp_path, "mfun", "--function", "Phi", "--side", "minus", "--alpha", "random:1",
                    "--z-grid", "list:0.2,0.3j", name="phi")
    assert code == 0 and len(read_csv(out)[2]) == 2


def test_measure_then_reconstruct(tmp_path):
    code, mu = run(tmp_path, "measure", "--alpha", "random:7:0.6", "--n", "48", name="mu.json")
    assert code == 0
    payload = json.loads(mu.read_text())
    assert payload["header"]["command"] == "measure"
    code, out = run(tmp_path, "reconstruct", "--measure", str(mu), "--n", "20", name="alpha.txt")
    assert code == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 20
    seq = generate_sequence("random:7:0.6", 0, 25)
    for line in lines:
        k, re, im = line.split()
        assert abs(complex(float(re), float(im)) - seq[int(k)]) < 1e-7


@pytest.mark.parametrize("kind", ["full", "half"])
def test_green(tmp_path, kind):
    code, out = run(tmp_path, "green", "--alpha", "random:2", "--kind", kind, "--n", "40", "--z", "0.4j")
    head, cols, rows = read_csv(out)
    assert code == 0 and cols == ["k", "kp", "re", "im"]
    assert head["max_dense_deviation"] < 1e-10


def test_disk(tmp_path):
    code, out = run(tmp_path, "disk", "--alpha", "random:4", "--k1", "11", "--z", "0.5+0.2j",
                    name="d.json")
    disk = json.loads(out.read_text())
    assert code == 0 and disk["parity"] == "even/odd" and disk["on_circle_residual"] < 1e-10
    code, out = run(tmp_path, "disk", "--alpha", "random:4", "--k1-sweep", "10:40:10", name="s.csv")
    _, _, rows = read_csv(out)
    radii = [float(r[1]) for r in rows]
    assert code == 0 and len(rows) == 4 and radii == sorted(radii, reverse=True)


def test_borg(tmp_path):
    code, out = run(tmp_path, "borg", "--theta0", "1", "--theta1", "4", "--n", "64", "--r", "0.99")
    rep = json.loads(out.read_text())
    assert code == 0 and rep["containment_fraction"] >= 0.9


def test_verify(tmp_path):
    code, out = run(tmp_path, "verify", "--alpha", "random:9", "--n", "32")
    rep = json.loads(out.read_text())
    assert code == 0 and rep["all_passed"]


def test_config_defaults_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 8, "alpha": "random:2"}))
    code, out = run(tmp_path, "spectrum", "--config", str(cfg))
    head, _, rows = read_csv(out)
    assert code == 0 and len(rows) == 8 and head["config"]["alpha"] == "random:2"
    code, out = run(tmp_path, "spectrum", "--config", str(cfg), "--n", "6", name="o")
    assert len(read_csv(out)[2]) == 6


@pytest.mark.parametrize("argv,code", [
    (["spectrum", "--alpha", "bogus:1"], 2),
    (["spectrum", "--alpha", "constant:1.5"], 3),
    (["disk"], 2),
    (["mfun", "--z-grid", "spiral:1"], 2),
    # free coefficients: M_- = -1, so Phi_- has a pole
    (["mfun", "--function", "Phi", "--side", "minus", "--z-grid", "list:0.2"], 4),
])
def test_exit_codes(tmp_path, capsys, argv, code):
    assert main(argv + ["--out", str(tmp_path / "x")]) == code
    assert "cmvweyl: error:" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_rank_error_exit_code(tmp_path):
    mu = tmp_path / "mu.json"
    mu.write_text(json.dumps({"atoms": [[0.1, 0.5], [2.0, 0.5]]}))
    assert main(["reconstruct", "--measure", str(mu), "--n", "4", "--out", str(tmp_path / "y")]) == 5


def test_bad_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["spectrum", "--config", str(cfg)]) == 2
    cfg.write_text("[1]")
    assert main(["spectrum", "--config", str(cfg)]) == 2


def test_z_grid():
    assert z_grid("radial:0.5:0.5:1x4") == pytest.approx(0.5 * np.exp(0.5j * np.pi * np.arange(4)))
    assert z_grid("list:0.1,2j").tolist() == [0.1, 2j]
    with pytest.raises(ConfigError):
        z_grid("radial:1:2")
