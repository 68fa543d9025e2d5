import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from dslab.cli import InputError, main, parse_range, resolve_workers


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))


class TestRanges:
    def test_forms(self):
        assert parse_range("0.5") == [0.5]
        assert parse_range("1:2:3") == [1.0, 1.5, 2.0]
        assert parse_range("1,2,4") == [1.0, 2.0, 4.0]
        assert parse_range(3) == [3.0]
        assert len(parse_range("0.1:0.9:9")) == 9

    @pytest.mark.parametrize("text", ["a", "1:2", "1:2:0", "1:x:3"])
    def test_bad(self, text):
        with pytest.raises(InputError):
            parse_range(text)

    def test_worker_precedence(self, monkeypatch):
        monkeypatch.setenv("DSL_WORKERS", "3")
        assert resolve_workers(None) == 3
        assert resolve_workers(1) == 1
        monkeypatch.delenv("DSL_WORKERS")
        assert resolve_workers(None) >= 1


def test_soliton(capsys):
    code, out, _ = run(capsys, "soliton", "--p", "1", "--omega", "0.6", "--samples", "1001")
    assert code == 0
    r = rows(out)
    assert r[0] == ["x", "v", "u", "density_p", "M"]
    data = np.array(r[1:], dtype=float)
    assert data.shape == (1001, 5)
    assert np.array_equal(data[:, 2], -data[::-1, 2])
    mid = data[500]
    assert mid[0] == 0.0 and mid[2] == 0.0
    assert mid[1] == pytest.approx(np.sqrt(0.8), rel=1e-11)
    assert data[:, 3].max() == pytest.approx(0.8, rel=1e-11)
    assert "\r" not in out and all(len(f.split("e")[0].strip("-").replace(".", "")) <= 12 for f in r[1][:4])


def test_spectrum_l(capsys):
    code, out, _ = run(capsys, "spectrum", "--op", "L", "--mu", "0", "--p", "1", "--omega", "0.5", "--gap-only")
    assert code == 0
    doc = json.loads(out)
    np.testing.assert_allclose(sorted(e["re"] for e in doc["eigenvalues"]), [-1.0, 0.0], atol=1e-6)
    assert doc["meta"]["elapsed_ms"] is None


@pytest.mark.slow
def test_spectrum_h(capsys):
    code, out, _ = run(capsys, "spectrum", "--op", "H", "--mu", "2", "--p", "1", "--omega", "0.8")
    assert code == 0
    doc = json.loads(out)
    orbit = np.array([w[0] + 1j * w[1] for e in doc["eigenvalues"] for w in e["orbit"]])
    assert sum(abs(e["re"]) + abs(e["im"]) <= 1e-5 for e in doc["eigenvalues"]) == 2
    assert np.abs(orbit - 1.6).min() <= 1e-5 and np.abs(orbit + 1.6).min() <= 1e-5


def test_spectrum_deterministic(capsys):
    argv = ["spectrum", "--op", "L", "--p", "2", "--omega", "0.8", "--grid-n", "256"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_invalid_omega_exit_2(capsys, tmp_path):
    out = tmp_path / "s.json"
    code, _, err = run(capsys, "spectrum", "--omega", "1.2", "--out", str(out))
    assert code == 2 and not out.exists() and "omega" in err


@pytest.mark.parametrize("argv", [["spectrum", "--grid-n", "63"], ["soliton", "--samples", "1"],
                                  ["vk-scan", "--omega", "0.2:1.2:3"], ["regions", "--p", "-1"],
                                  ["verify-all", "--only", "13"], ["soliton", "--tol", "0"]])
def test_validation_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_numerical_failure_exit_3(capsys, monkeypatch):
    import dslab.spectra

    def broken(*a, **k):
        raise np.linalg.LinAlgError("did not converge")

    monkeypatch.setattr(dslab.spectra.sla, "eigh", broken)
    code, out, err = run(capsys, "spectrum", "--op", "L", "--grid-n", "128")
    assert code == 3 and out == "" and "numerical failure" in err


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"p": 2, "omega": 0.8, "samples": 5}))
    code, out, _ = run(capsys, "soliton", "--config", str(cfg), "--samples", "5")
    v0 = float(rows(out)[3][1])
    assert v0 == pytest.approx((3 * 0.2) ** 0.25, rel=1e-11)
    code, out, _ = run(capsys, "soliton", "--config", str(cfg), "--samples", "5", "--p", "1")
    assert float(rows(out)[3][1]) == pytest.approx(np.sqrt(2 * 0.2), rel=1e-11)


def test_bad_config_exit_2(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("[1, 2]")
    assert run(capsys, "soliton", "--config", str(cfg))[0] == 2


def test_vk_scan_rows_and_workers(capsys):
    argv = ["vk-scan", "--p", "3,2", "--omega", "0.53:0.89:13"]
    code, one, _ = run(capsys, *argv, "--workers", "1")
    assert code == 0
    code, two, _ = run(capsys, *argv, "--workers", "2")
    assert one == two
    r = rows(one)
    assert len(r) == 1 + 26
    keys = [(float(a[0]), float(a[1])) for a in r[1:]]
    assert keys == sorted(keys)
    p2 = [int(a[2]) for a in r[1:] if a[0] == "2"]
    assert all(s == -1 for s in p2)
    p3 = [int(a[2]) for a in r[1:] if a[0] == "3"]
    changes = [i for i in range(len(p3) - 1) if p3[i] != p3[i + 1]]
    assert len(changes) == 1
    w3 = [float(a[1]) for a in r[1:] if a[0] == "3"]
    assert 0.6 <= w3[changes[0]] and w3[changes[0] + 1] <= 0.895


def test_regions(capsys):
    code, out, _ = run(capsys, "regions", "--p", "1,2,1000")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# mu=2 p_circ=1.1876") and "p_star=1.536" in lines[0]
    r = rows(out)
    assert r[0] == ["p", "beta", "omega_circ", "omega_star", "beta_improved"]
    assert float(r[1][1]) == pytest.approx(0.4387, abs=1e-4)
    assert float(r[1][4]) == pytest.approx(0.2968, abs=1e-4)
    assert r[2][4] == ""
    assert 0.99 < float(r[3][1]) < 1.0


def test_nonrel_with_plotscript(capsys, tmp_path):
    out = tmp_path / "ladder.csv"
    code, _, _ = run(capsys, "nonrel", "--p", "1", "--kappa", "0.1", "--out", str(out), "--emit-plotscript")
    assert code == 0
    r = rows(out.read_text())
    assert r[0][:4] == ["p", "mu", "kappa_over_m", "k"] and len(r) == 3
    assert float(r[1][6]) <= 0.2
    assert (tmp_path / "ladder.gp").exists()


@pytest.mark.slow
def test_gn_verify(capsys):
    code, out, _ = run(capsys, "gn-verify", "--omega", "0.5")
    doc = json.loads(out)
    assert code == 0 and doc["pass"] and len(doc["rows"]) == 1


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify-all", "--only", "6,8")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2 and all(l.startswith("[PASS] criterion") for l in lines)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dslab", "regions", "--p", "1"], capture_output=True, text=True)
    assert res.returncode == 0 and "beta" in res.stdout
