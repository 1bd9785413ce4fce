import json

import numpy as np
import pytest

from transportlab import (
    CflViolationError,
    GridConfig,
    ParityField,
    cfl_limit,
    density,
    gauss_rule,
    initial_kinetic_field,
    initial_parity_field,
    load_config,
    parity_transform,
    resolve_config,
    validate_config,
)


def ap_cfg(**kw):
    base = dict(epsilon=0.5, tau=0.005, h=0.1, N=4, N_x=8, N_t=4)
    base.update(kw)
    return GridConfig(**base)


# --- validation ---------------------------------------------------------


def test_ap_cfl_pass():
    report = validate_config(ap_cfg(tau=0.005, h=0.1))
    assert report.ok and report.violations == ()


def test_explicit_cfl_boundary():
    # limit h*eps^2/(eps+h) = 9.0909e-4 at eps=0.1, h=0.01
    ok = GridConfig(epsilon=0.1, tau=9e-4, h=0.01, N=2, N_x=4, N_t=2,
                    scheme="explicit")
    assert validate_config(ok).ok
    bad = GridConfig(epsilon=0.1, tau=1e-3, h=0.01, N=2, N_x=4, N_t=2,
                     scheme="explicit", allow_unstable=True)
    report = validate_config(bad)
    assert not report.ok
    assert "0.000909091" in report.violations[0]  # both sides evaluated
    assert "0.001" in report.violations[0]


def test_phi_out_of_range_fails():
    cfg = ap_cfg(epsilon=1.0, phi=2.0, allow_unstable=True)
    report = validate_config(cfg)
    assert not report.ok
    assert any("phi" in v for v in report.violations)


def test_construction_rejects_cfl_violation_without_override():
    with pytest.raises(CflViolationError) as err:
        ap_cfg(tau=0.02, h=0.1)
    assert "tau/h^2" in str(err.value)
    # override admits it
    cfg = ap_cfg(tau=0.02, h=0.1, allow_unstable=True)
    assert not validate_config(cfg).ok


@pytest.mark.parametrize("field,value", [
    ("tau", -1.0), ("tau", float("nan")), ("h", 0.0),
    ("epsilon", -0.1), ("epsilon", float("inf")),
])
def test_invalid_arguments_raise(field, value):
    with pytest.raises(ValueError):
        ap_cfg(**{field: value})


def test_cfl_limit_values():
    assert cfl_limit("ap", 1.0, 0.1) == pytest.approx(0.01 / 1.1)
    assert cfl_limit("explicit", 0.1, 0.01) == pytest.approx(1e-4 / 0.11)


def test_derived_quantities():
    cfg = ap_cfg()
    assert cfg.lam == pytest.approx(0.05)
    assert cfg.gamma == pytest.approx(0.005 / 0.25)
    assert cfg.x_right == pytest.approx(0.9)
    assert cfg.interior_x()[0] == pytest.approx(0.1)
    assert cfg.interior_x()[-1] == pytest.approx(0.8)


# --- parity transform ---------------------------------------------------


def test_parity_forward_example():
    assert parity_transform(2.0, 1.0, 0.5) == (1.5, 1.0)


def test_parity_inverse_example():
    assert parity_transform(1.5, 1.0, 0.5, "inverse") == (2.0, 1.0)


def test_isotropic_state_has_zero_odd_parity():
    for c in (0.0, 3.7, -2.0):
        r, j = parity_transform(c, c, 1e-3)
        assert r == c and j == 0.0


def test_parity_round_trip_sweep():
    rng = np.random.default_rng(7)
    for eps in (1e-8, 1e-4, 1e-1, 1.0):
        fp = rng.uniform(-1e6, 1e6, size=50)
        fm = rng.uniform(-1e6, 1e6, size=50)
        r, j = parity_transform(fp, fm, eps)
        fp2, fm2 = parity_transform(r, j, eps, "inverse")
        scale = np.maximum(np.abs(fp), 1.0)
        assert np.max(np.abs(fp2 - fp) / scale) < 1e-14
        assert np.max(np.abs(fm2 - fm) / scale) < 1e-14


def test_parity_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        parity_transform(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        parity_transform(1.0, 1.0, -2.0, "inverse")


# --- density ------------------------------------------------------------


def test_density_of_unit_field_is_one():
    rule = gauss_rule(4, 0.0, 1.0)
    field = ParityField.zeros(4, 6)
    field.r[:] = 1.0
    np.testing.assert_allclose(density(field, rule), np.ones(6), atol=1e-14)


def test_density_degree_one_and_two():
    # analytic integrals of v and v^2 on [0, 1]
    for N in (2, 3, 8):
        rule = gauss_rule(N, 0.0, 1.0)
        r_lin = np.repeat(rule.nodes, 5)
        np.testing.assert_allclose(density(r_lin, rule), 0.5, rtol=1e-13)
        r_quad = np.repeat(rule.nodes**2, 5)
        np.testing.assert_allclose(density(r_quad, rule), 1.0 / 3.0, rtol=1e-13)


def test_density_is_linear():
    rng = np.random.default_rng(11)
    rule = gauss_rule(5, 0.0, 1.0)
    r1, r2 = rng.normal(size=(2, 5 * 7))
    lhs = density(2.5 * r1 - 1.25 * r2, rule)
    rhs = 2.5 * density(r1, rule) - 1.25 * density(r2, rule)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_density_size_mismatch():
    rule = gauss_rule(4, 0.0, 1.0)
    with pytest.raises(ValueError):
        density(np.ones(10), rule)
    field = ParityField.zeros(3, 5)
    with pytest.raises(ValueError):
        density(field, rule)


# --- fields and initial data -------------------------------------------


def test_parity_field_validation():
    with pytest.raises(ValueError):
        ParityField(np.ones(8), np.ones(9), np.zeros(2), np.zeros(2),
                    np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        ParityField(np.ones(8), np.ones(8), np.zeros(2), np.zeros(3),
                    np.zeros(2), np.zeros(2))


def test_initial_profiles():
    rule = gauss_rule(3, 0.0, 1.0)
    cfg = ap_cfg(N=3, init="gaussian")
    field = initial_parity_field(cfg, rule)
    R, J = field.blocks()
    assert np.all(J == 0)
    # isotropic: identical across velocity nodes, peaked at the midpoint
    assert np.allclose(R[0], R[2])
    assert R[0].argmax() in (cfg.N_x // 2 - 1, cfg.N_x // 2)

    step = initial_parity_field(ap_cfg(N=3, init="step"), rule)
    values = np.unique(step.blocks()[0])
    assert set(values.tolist()) <= {0.0, 1.0}


def test_initial_kinetic_field_layout():
    cfg = ap_cfg(N=3, scheme="explicit", epsilon=0.5, tau=1e-3, h=0.1,
                 bc_left=0.25)
    rule = gauss_rule(6, -1.0, 1.0)
    field = initial_kinetic_field(cfg, rule)
    assert field.f.size == 6 * cfg.N_x
    # isotropic initial data: every spatial block is constant in v
    F = field.blocks()
    assert np.allclose(F, F[:, :1])
    assert np.all(field.f_left == 0.25)


# --- config files -------------------------------------------------------


def config_dict(**kw):
    raw = {"scheme": "ap", "epsilon": 0.5, "phi": 1.0, "tau": 0.005,
           "h": 0.1, "N": 4, "Nx": 8, "Nt": 4, "x_left": 0.0,
           "bc_left": 0.0, "bc_right": 0.0, "init": "gaussian"}
    raw.update(kw)
    return raw


def test_resolve_config_round_trip():
    cfg = resolve_config(config_dict())
    assert cfg == ap_cfg()


def test_resolve_config_rejects_unknown_keys():
    with pytest.raises(ValueError) as err:
        resolve_config(config_dict(bogus=1))
    assert "bogus" in str(err.value) and "scheme" in str(err.value)


def test_resolve_config_auto_tau():
    cfg = resolve_config(config_dict(tau="auto"))
    assert cfg.tau == pytest.approx(0.9 * 0.01 / 1.1)
    cfg2 = resolve_config(config_dict(scheme="explicit", tau="auto", epsilon=0.3))
    assert cfg2.tau == pytest.approx(0.9 * 0.1 * 0.09 / 0.4)


def test_resolve_config_grid_consistency():
    cfg = resolve_config(config_dict(x_right=0.9))
    assert cfg.h == pytest.approx(0.1)
    with pytest.raises(ValueError):
        resolve_config(config_dict(x_right=1.5))
    raw = config_dict(x_right=0.9)
    del raw["h"]
    assert resolve_config(raw).h == pytest.approx(0.1)


def test_load_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(config_dict()), encoding="utf-8")
    assert load_config(path) == ap_cfg()
