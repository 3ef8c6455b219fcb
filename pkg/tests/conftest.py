from pathlib import Path

import numpy as np
import pytest

from cascade_lab.core.config_loader import build_config


@pytest.fixture
def write_toml(tmp_path):
    """Write TOML text to a file under tmp_path and return its path."""

    def _write(text: str, name: str = "config.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_goy_config(tmp_path):
    """Ten-shell forced-dissipative GOY run that finishes in well under a second."""
    return build_config(
        "goy",
        {
            "nu": 1e-3,
            "forcing": [{"shell": 1, "re": 5e-3, "im": 5e-3}],
            "spinup_time": 0.0,
        },
        grid={"n_shells": 10},
        integrator={"dt": 1e-3, "t_end": 1.0, "sample_every": 10},
        output={"directory": str(tmp_path / "goy")},
    )


def relaxed_finance_config(alpha: float = -1.0, n_shells: int = 20, **params):
    values = {"alpha": alpha, "b": 0.0, "q": 1.0}
    values.update(params)
    return build_config("finance", values, grid={"n_shells": n_shells, "lambda": 2.0})
