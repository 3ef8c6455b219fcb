import numpy as np
import pytest

from cascade_lab.core.config_loader import (
    apply_overrides,
    build_config,
    dump_config,
    expand_sweep,
    load_config,
    parse_override,
    save_config,
    validate_config,
)
from cascade_lab.core.errors import ConfigParseError, ConfigValidationError
from cascade_lab.models.config_models import (
    IntegratorSettings,
    ShellGrid,
    SimConfig,
    shell_wavenumbers,
)


@pytest.mark.parametrize(
    "k0, lam, n, expected",
    [
        (1.0, 2.0, 4, [1.0, 2.0, 4.0, 8.0]),
        (1.0, 2.0, 1, [1.0]),
        (0.5, 3.0, 3, [0.5, 1.5, 4.5]),
    ],
)
def test_shell_wavenumbers_examples(k0, lam, n, expected):
    assert shell_wavenumbers(ShellGrid(k0=k0, lambda_=lam, n_shells=n)) == expected


def test_shell_wavenumbers_ratio_within_rounding():
    grid = ShellGrid(k0=0.3, lambda_=1.7, n_shells=30)
    k = np.array(shell_wavenumbers(grid))
    assert len(k) == 30
    assert np.all(np.diff(k) > 0)
    ratios = k[1:] / k[:-1]
    assert np.all(np.abs(ratios - 1.7) <= 2 * np.spacing(1.7))


def test_minimal_finance_config_gets_defaults(write_toml):
    cfg = load_config(write_toml("[finance]\nalpha = -0.5\n"))
    assert cfg.model.value == "finance"
    assert cfg.model_params.alpha == -0.5
    assert cfg.model_params.b == 0.0
    assert cfg.grid.n_shells == 22
    assert cfg.grid.lambda_ == 2.0
    assert cfg.integrator.dt == 1e-4
    assert cfg.integrator.transient_fraction == 0.5
    assert cfg.seed == 42


def test_zero_dt_names_the_key(write_toml):
    path = write_toml('model = "finance"\n[integrator]\ndt = 0.0\n')
    with pytest.raises(ConfigValidationError) as excinfo:
        load_config(path)
    assert "integrator.dt" in str(excinfo.value)


def test_model_and_params_section_must_agree(write_toml):
    path = write_toml('model = "goy"\n[finance]\nalpha = -1.0\n')
    with pytest.raises(ConfigValidationError) as excinfo:
        load_config(path)
    assert "params/model mismatch" in str(excinfo.value)


def test_unknown_key_is_reported_with_its_section(write_toml):
    with pytest.raises(ConfigValidationError) as excinfo:
        load_config(write_toml("[grid]\nbogus = 1\n[tree]\nlevels = 3\n"))
    assert "grid.bogus" in str(excinfo.value)


def test_forcing_outside_grid_is_rejected():
    with pytest.raises(ConfigValidationError) as excinfo:
        build_config("goy", {"forcing": [{"shell": 30, "re": 1e-3}]})
    assert "goy.forcing.0.shell" in str(excinfo.value)


def test_missing_and_malformed_files(tmp_path, write_toml):
    with pytest.raises(ConfigParseError):
        load_config(tmp_path / "nope.toml")
    with pytest.raises(ConfigParseError):
        load_config(write_toml("[grid\nk0 = 1"))


def test_default_config_is_valid():
    for model in ("goy", "finance", "equilibrium", "pao", "tree"):
        assert validate_config(build_config(model)) == []


def test_lambda_one_is_a_single_violation():
    cfg = SimConfig(
        model="finance", grid=ShellGrid(lambda_=1.0), model_params={"kind": "finance"}
    )
    assert validate_config(cfg) == ["grid.lambda must exceed 1"]


def test_transient_fraction_one_is_a_violation():
    cfg = SimConfig(
        model="pao",
        model_params={"kind": "pao"},
        integrator=IntegratorSettings(transient_fraction=1.0),
    )
    violations = validate_config(cfg)
    assert len(violations) == 1
    assert "integrator.transient_fraction" in violations[0]


@pytest.mark.parametrize("model", ["goy", "finance", "equilibrium", "pao", "tree"])
def test_save_and_load_round_trip(tmp_path, model):
    cfg = build_config(model, seed=7, grid={"n_shells": 12, "lambda": 1.5})
    path = save_config(cfg, tmp_path / f"{model}.toml")
    assert load_config(path).model_dump() == cfg.model_dump()


def test_overrides_return_new_validated_config():
    cfg = build_config("finance")
    changed = apply_overrides(cfg, {"finance.alpha": 0.5, "grid.lambda": 3.0, "seed": 9})
    assert changed.model_params.alpha == 0.5
    assert changed.grid.lambda_ == 3.0
    assert changed.model_params.grid.lambda_ == 3.0
    assert changed.seed == 9
    assert cfg.model_params.alpha == -1.0

    with pytest.raises(ConfigValidationError):
        apply_overrides(cfg, {"goy.nu": 1e-3})
    with pytest.raises(ConfigValidationError):
        apply_overrides(cfg, {"integrator.dt": -1.0})


def test_parse_override_types_values():
    assert parse_override("finance.alpha=-1,-0.5,0") == ("finance.alpha", [-1, -0.5, 0])
    assert parse_override("output.emit_plots=true") == ("output.emit_plots", [True])
    with pytest.raises(ConfigValidationError):
        parse_override("finance.alpha")


def test_expand_sweep_is_cartesian():
    runs = expand_sweep({"finance.alpha": [-1, 0], "finance.q": [1, 2, 4]})
    assert len(runs) == 6
    assert {"finance.alpha": 0, "finance.q": 4} in runs


def test_dump_config_writes_model_section():
    text = dump_config(build_config("tree", seed=3))
    assert 'model = "tree"' in text
    assert "seed = 3" in text
    assert "[tree]" in text
    assert "kind" not in text


@pytest.mark.parametrize(
    "model, params, key",
    [
        ("goy", {"spinup_dt": 0.0}, "goy.spinup_dt"),
        ("goy", {"spinup_time": -1.0}, "goy.spinup_time"),
        ("finance", {"max_steps": 0}, "finance.max_steps"),
        ("finance", {"blowup_factor": 1.0}, "finance.blowup_factor"),
    ],
)
def test_run_limits_are_validated(model, params, key):
    with pytest.raises(ConfigValidationError) as excinfo:
        build_config(model, params, grid={"n_shells": 8})
    [violation] = excinfo.value.violations
    assert key in violation


def test_unset_horizon_falls_back_to_the_model_default(tmp_path):
    cfg = build_config("finance")
    assert cfg.integrator.t_end is None
    assert cfg.integrator.horizon(7.0) == 7.0
    assert build_config("finance", integrator={"t_end": 3.0}).integrator.horizon(7.0) == 3.0
    save_config(cfg, tmp_path / "finance.toml")
    assert "t_end" not in (tmp_path / "finance.toml").read_text()
    assert load_config(tmp_path / "finance.toml").model_dump() == cfg.model_dump()
