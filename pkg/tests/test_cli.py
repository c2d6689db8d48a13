import json

import pytest

from kpi_lab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_soliton_report(capsys):
    code, out, _ = run(capsys, "soliton", "--kind", "zaitsev", "--a", "0.5", "--nx", "1024", "--ny", "64")
    assert code == 0
    d = json.loads(out)
    assert d["schema"] == "kpi-lab/1"
    assert d["max"] == pytest.approx(15.347705, rel=1e-6)


def test_soliton_dump_roundtrip(capsys, tmp_path):
    path = tmp_path / "z.bin"
    code, _, _ = run(capsys, "soliton", "--a", "0.2", "--nx", "256", "--ny", "16", "--dump", str(path))
    assert code == 0
    code, out, _ = run(capsys, "modulate", "--field", str(path))
    assert code == 0
    assert json.loads(out)["a"] == pytest.approx(0.2, abs=1e-8)


def test_profile_dump(capsys, tmp_path):
    path = tmp_path / "v.csv"
    assert run(capsys, "soliton", "--kind", "vstar", "--nx", "128", "--dump", str(path))[0] == 0
    assert path.read_text().startswith("x,value\n")
    assert run(capsys, "soliton", "--kind", "vstar", "--dump", str(tmp_path / "v.bin"))[0] == 2


@pytest.mark.parametrize("argv", [
    ("soliton", "--a", "1.0"),
    ("soliton", "--a", "nan"),
    ("soliton", "--nx", "-4"),
    ("soliton", "--kind", "g-mu", "--mu", "40"),
    ("spectrum", "--mode", "-1"),
    ("evolve", "--dt", "0"),
    ("stability", "--a", "0.5"),
    ("functionals", "--field", "/nonexistent/u.bin"),
    ("bogus",),
])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_functionals_of_zaitsev(capsys):
    code, out, _ = run(capsys, "functionals", "--a", "0.0", "--nx", "512", "--ny", "16")
    d = json.loads(out)
    assert code == 0
    assert d["mass"] == pytest.approx(529.2247617, rel=1e-9)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# grid\nnx = 256\nny = 16\na = 0.1\n")
    code, out, _ = run(capsys, "--config", str(cfg), "soliton")
    d = json.loads(out)
    assert code == 0 and d["grid"][0] == 256
    code, out, _ = run(capsys, "--config", str(cfg), "soliton", "--nx", "512")
    assert json.loads(out)["grid"][0] == 512


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "--config", str(cfg), "soliton")[0] == 2


def test_spectrum_constraints(capsys):
    code, out, _ = run(capsys, "spectrum", "--mode", "0", "--count", "3", "--nx", "256")
    d = json.loads(out)
    assert code == 0 and d["negative_count"] == 1


def test_evolve_short(capsys, tmp_path):
    code, out, _ = run(capsys, "evolve", "--t-end", "0.05", "--nx", "256", "--ny", "8",
                       "--observer-stride", "10", "--snapshot-every", "2",
                       "--snapshot-dir", str(tmp_path / "snaps"))
    d = json.loads(out)
    assert code == 0
    assert d["mass_drift"] < 1e-10
    assert len(d["snapshots"]) == 3
    assert "wall_time" not in d


def test_verify_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "verify", "--suite", "closed-form", "--out", str(a))[0] == 0
    assert run(capsys, "verify", "--suite", "closed-form", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_unknown_suite(capsys):
    assert run(capsys, "verify", "--suite", "nope")[0] == 2


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "kpi_lab", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "verify" in r.stdout
