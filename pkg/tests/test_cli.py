import json

import numpy as np
import pytest
from scipy.io import mmread
from scipy.linalg import svdvals

from transportlab import GridConfig, gauss_rule, initial_parity_field
from transportlab.ap_scheme import ap_evolve
from transportlab.cli import emit_report, main
from transportlab.complexity import ComplexityRow, sweep_epsilon


AP_RAW = {
    "scheme": "ap", "epsilon": 0.5, "phi": 1.0, "tau": 0.004, "h": 0.1,
    "N": 3, "Nx": 6, "Nt": 4, "x_left": 0.0, "bc_left": 0.0,
    "bc_right": 0.0, "init": "gaussian",
}

EXPLICIT_RAW = {
    "scheme": "explicit", "epsilon": 0.4, "phi": 1.0, "tau": "auto",
    "h": 0.1, "N": 3, "Nx": 6, "Nt": 4, "x_left": 0.0,
    "bc_left": 0.0, "bc_right": 0.0, "init": "gaussian",
}


@pytest.fixture
def ap_config(tmp_path):
    path = tmp_path / "ap.json"
    path.write_text(json.dumps(AP_RAW), encoding="utf-8")
    return path


@pytest.fixture
def explicit_config(tmp_path):
    path = tmp_path / "explicit.json"
    path.write_text(json.dumps(EXPLICIT_RAW), encoding="utf-8")
    return path


def test_solve_writes_density_and_manifest(ap_config, tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", str(ap_config),
                 "--output-dir", str(out)]) == 0
    lines = (out / "density.csv").read_text().strip().splitlines()
    assert lines[0] == "x,rho"
    assert len(lines) == 1 + AP_RAW["Nx"]
    # density agrees with a direct run
    cfg = GridConfig(epsilon=0.5, tau=0.004, h=0.1, N=3, N_x=6, N_t=4)
    rule = gauss_rule(3, 0.0, 1.0)
    trajectory = ap_evolve(initial_parity_field(cfg, rule), cfg, rule)
    rho = rule.weights @ trajectory.fields[-1].blocks()[0]
    got = np.array([float(line.split(",")[1]) for line in lines[1:]])
    np.testing.assert_allclose(got, rho, rtol=1e-15)

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved_config"]["Nt"] == 4
    assert manifest["resolved_config"]["x_right"] == pytest.approx(0.7)
    assert len(manifest["input_sha256"]) == 64


def test_solve_trajectory_export(explicit_config, tmp_path):
    out = tmp_path / "out"
    code = main(["solve", "--config", str(explicit_config),
                 "--output-dir", str(out), "--export-trajectory"])
    assert code == 0
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "step,k,m,f"


def test_overrides_apply_on_top_of_config(ap_config, tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", str(ap_config), "--output-dir", str(out),
                 "--Nt", "2", "--init", "constant"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["resolved_config"]["Nt"] == 2
    assert manifest["resolved_config"]["init"] == "constant"


def test_unknown_flag_is_usage_error(ap_config, capsys):
    assert main(["solve", "--config", str(ap_config), "--bogus", "1"]) == 1
    err = capsys.readouterr().err
    assert "usage error" in err
    assert "valid override keys" in err and "epsilon" in err


def test_unknown_config_key_lists_valid_keys(tmp_path, capsys):
    path = tmp_path / "bad.json"
    raw = dict(AP_RAW, extra_knob=3)
    path.write_text(json.dumps(raw), encoding="utf-8")
    assert main(["solve", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert "extra_knob" in err and "epsilon" in err


def test_cfl_violation_exits_2_with_inequality(ap_config, tmp_path, capsys):
    code = main(["solve", "--config", str(ap_config),
                 "--output-dir", str(tmp_path / "o"), "--tau", "0.02"])
    assert code == 2
    err = capsys.readouterr().err
    assert "tau/h^2" in err and "allow-unstable" in err


def test_allow_unstable_overrides(ap_config, tmp_path):
    code = main(["solve", "--config", str(ap_config),
                 "--output-dir", str(tmp_path / "o"), "--tau", "0.012",
                 "--allow-unstable"])
    assert code == 0


def test_divergence_exits_3(ap_config, tmp_path, capsys):
    code = main(["solve", "--config", str(ap_config),
                 "--output-dir", str(tmp_path / "o"),
                 "--tau", "0.5", "--h", "0.05", "--Nt", "400",
                 "--allow-unstable"])
    assert code == 3
    assert "diverged" in capsys.readouterr().err


def test_missing_config_exits_4(tmp_path, capsys):
    code = main(["solve", "--config", str(tmp_path / "nope.json")])
    assert code == 4
    assert "nope.json" in capsys.readouterr().err


def test_assemble_single_step_identity(ap_config, tmp_path):
    out = tmp_path / "out"
    assert main(["assemble", "--config", str(ap_config),
                 "--output-dir", str(out), "--Nt", "1"]) == 0
    L = mmread(out / "L.mtx").tocsr()
    n = 2 * 3 * 6
    assert L.shape == (n, n)
    assert np.array_equal(L.toarray(), np.eye(n))
    sidecar = json.loads((out / "L.mtx.json").read_text())
    assert sidecar["config"]["Nt"] == 1


def test_spectrum_matches_offline_computation(explicit_config, tmp_path):
    out = tmp_path / "out"
    assert main(["spectrum", "--config", str(explicit_config),
                 "--output-dir", str(out)]) == 0
    row = (out / "spectrum.csv").read_text().strip().splitlines()[1].split(",")
    kappa_cli = float(row[11])
    # recompute from the exported matrix
    assert main(["assemble", "--config", str(explicit_config),
                 "--output-dir", str(out)]) == 0
    values = svdvals(mmread(out / "L.mtx").toarray())
    assert kappa_cli == pytest.approx(values[0] / values[-1], rel=1e-9)


def test_fourier_tables(ap_config, tmp_path):
    out = tmp_path / "out"
    assert main(["fourier", "--config", str(ap_config),
                 "--output-dir", str(out), "--xi-samples", "6"]) == 0
    symbols = (out / "symbols.csv").read_text().strip().splitlines()
    assert symbols[0].startswith("xi,k,v,c1_re")
    assert len(symbols) == 1 + 6 * 3  # samples * velocity nodes
    norms = (out / "fourier_norms.csv").read_text().strip().splitlines()
    assert len(norms) == 1 + 6


def test_sweep_csv_shape_and_determinism(ap_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["sweep", "--config", str(ap_config),
            "--epsilons", "1e-2,1e-4,1e-6"]
    assert main(argv + ["--output-dir", str(out1)]) == 0
    assert main(argv + ["--output-dir", str(out2)]) == 0
    first = (out1 / "sweep.csv").read_bytes()
    assert first == (out2 / "sweep.csv").read_bytes()
    lines = first.decode().strip().splitlines()
    assert lines[0].startswith("scheme,epsilon,")
    assert len(lines) == 4


def test_emit_report_contract(tmp_path):
    base = GridConfig(epsilon=1.0, tau=0.004, h=0.1, N=3, N_x=6, N_t=4)
    rows = sweep_epsilon(base, [1e-3], mode="fixed_grid")
    dest = tmp_path / "rows.csv"
    emit_report(rows, dest)
    text = dest.read_text()
    assert len(text.strip().splitlines()) == 2
    # idempotent: identical bytes on rewrite
    emit_report(rows, dest)
    assert dest.read_text() == text
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "empty.csv")


def test_emit_report_preserves_failure_rows(tmp_path):
    row = ComplexityRow(
        scheme="ap", epsilon=1e-3, phi=1.0, tau=0.004, h=0.1, N=3, Nx=6,
        Nt=4, delta=0.1, sigma_min=None, sigma_max=None, kappa=None,
        sparsity=None, alpha=0.0, classical_cost=0, quantum_queries=None,
        status="error: solver exploded",
    )
    dest = tmp_path / "rows.csv"
    emit_report([row], dest)
    assert "error: solver exploded" in dest.read_text()
