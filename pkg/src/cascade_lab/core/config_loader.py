"""Loading, validating and serialising run configurations.

Every config, whether it comes from a TOML file, from code or from a sweep
override, passes through the same TOML-shaped mapping and the same checks.
"""

import copy
import itertools
import logging
import tomllib
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import tomli_w
from pydantic import ValidationError

from cascade_lab.core.errors import ConfigParseError, ConfigValidationError
from cascade_lab.models.config_models import (
    EquilibriumParams,
    FinanceParams,
    GoyParams,
    ModelKind,
    PaoParams,
    SimConfig,
    TreeParams,
    shell_wavenumbers,
)

logger = logging.getLogger(__name__)

PARAM_SECTIONS = tuple(kind.value for kind in ModelKind)
COMMON_SECTIONS = ("grid", "integrator", "output")
TOP_LEVEL_KEYS = ("model", "seed")

__all__ = [
    "apply_overrides",
    "build_config",
    "config_to_mapping",
    "dump_config",
    "expand_sweep",
    "load_config",
    "parse_override",
    "save_config",
    "shell_wavenumbers",
    "validate_config",
]


def load_config(path: Union[str, Path]) -> SimConfig:
    """Read a TOML config file and return a fully validated SimConfig.

    Raises:
        ConfigParseError: If the file is missing or is not valid TOML
        ConfigValidationError: If any key has the wrong type or breaks an invariant
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigParseError(f"Config file not found: {config_path}")

    try:
        data = tomllib.loads(config_path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigParseError(f"Malformed config {config_path}: {e}") from e

    logger.info(f"Loaded config {config_path}")
    return _validated(_config_from_mapping(data), source=str(config_path))


def build_config(
    model: Union[ModelKind, str],
    params: Optional[Mapping[str, Any]] = None,
    grid: Optional[Mapping[str, Any]] = None,
    integrator: Optional[Mapping[str, Any]] = None,
    output: Optional[Mapping[str, Any]] = None,
    seed: int = 42,
) -> SimConfig:
    """Build a validated config from plain mappings, as if read from a file."""
    kind = ModelKind(model)
    data: Dict[str, Any] = {"model": kind.value, "seed": seed}
    for section, values in (
        ("grid", grid),
        ("integrator", integrator),
        ("output", output),
        (kind.value, params),
    ):
        if values:
            data[section] = dict(values)
    return _validated(_config_from_mapping(data), source=f"<{kind.value} config>")


def validate_config(cfg: SimConfig) -> List[str]:
    """Check every semantic invariant of a config.

    Returns:
        List of human-readable violations, each naming the dotted key.
        An empty list means the config is valid.
    """
    violations: List[str] = []

    def check(condition: bool, message: str) -> None:
        if not condition:
            violations.append(message)

    grid = cfg.grid
    check(grid.k0 > 0, "grid.k0 must be > 0")
    check(grid.lambda_ > 1, "grid.lambda must exceed 1")
    check(grid.n_shells >= 4, "grid.n_shells must be >= 4")

    integ = cfg.integrator
    check(integ.dt > 0, "integrator.dt must be > 0")
    check(
        integ.t_end is None or integ.t_end > integ.dt,
        "integrator.t_end must exceed integrator.dt",
    )
    check(
        0 <= integ.transient_fraction < 1,
        "integrator.transient_fraction must be in [0, 1)",
    )
    check(integ.sample_every >= 1, "integrator.sample_every must be >= 1")
    check(0 <= cfg.seed < 2**64, "seed must be a 64-bit unsigned integer")

    params = cfg.model_params
    if params.kind != cfg.model.value:
        violations.append(
            f"params/model mismatch: model={cfg.model.value} "
            f"but params are for {params.kind}"
        )
        return violations

    section = params.kind
    if isinstance(params, (GoyParams, FinanceParams)) and params.grid != grid:
        violations.append(f"{section}.grid must match grid")

    if isinstance(params, GoyParams):
        check(params.nu >= 0, "goy.nu must be >= 0")
        check(params.init_amplitude > 0, "goy.init_amplitude must be > 0")
        check(params.spinup_time >= 0, "goy.spinup_time must be >= 0")
        check(params.spinup_dt > 0, "goy.spinup_dt must be > 0")
        for i, term in enumerate(params.forcing):
            check(
                0 <= term.shell < grid.n_shells,
                f"goy.forcing.{i}.shell must be within [0, {grid.n_shells})",
            )
    elif isinstance(params, FinanceParams):
        check(params.a > 0, "finance.a must be > 0")
        check(params.b >= 0, "finance.b must be >= 0")
        check(params.q >= 0, "finance.q must be >= 0")
        check(params.sink is None or params.sink >= 0, "finance.sink must be >= 0")
        check(params.initial_wealth > 0, "finance.initial_wealth must be > 0")
        check(params.tolerance > 0, "finance.tolerance must be > 0")
        check(params.check_every >= 1, "finance.check_every must be >= 1")
        check(params.max_steps >= 1, "finance.max_steps must be >= 1")
        check(params.blowup_factor > 1, "finance.blowup_factor must exceed 1")
    elif isinstance(params, EquilibriumParams):
        check(params.n_agents >= 2, "equilibrium.n_agents must be >= 2")
        check(params.mean_wealth > 0, "equilibrium.mean_wealth must be > 0")
        check(params.n_steps >= 0, "equilibrium.n_steps must be >= 0")
        check(params.n_bins >= 2, "equilibrium.n_bins must be >= 2")
        check(params.recheck_every >= 1, "equilibrium.recheck_every must be >= 1")
    elif isinstance(params, PaoParams):
        check(params.k_ko > 0, "pao.k_ko must be > 0")
        check(params.eps_u > 0, "pao.eps_u must be > 0")
        check(params.nu > 0, "pao.nu must be > 0")
        check(params.n_points >= 2, "pao.n_points must be >= 2")
        check(
            0 < params.k_min_factor < params.k_max_factor,
            "pao.k_min_factor must be > 0 and below pao.k_max_factor",
        )
    elif isinstance(params, TreeParams):
        check(params.levels >= 1, "tree.levels must be >= 1")
        check(params.branching >= 2, "tree.branching must be >= 2")
        check(params.budget > 0, "tree.budget must be > 0")
        check(0 <= params.pilferage < 1, "tree.pilferage must be in [0, 1)")

    return violations


def config_to_mapping(cfg: SimConfig) -> Dict[str, Any]:
    """Return the TOML-shaped mapping that load_config would read back."""
    params = cfg.model_params.model_dump(
        mode="json", by_alias=True, exclude={"kind", "grid"}, exclude_none=True
    )
    return {
        "model": cfg.model.value,
        "seed": cfg.seed,
        "grid": cfg.grid.model_dump(mode="json", by_alias=True),
        "integrator": cfg.integrator.model_dump(mode="json", exclude_none=True),
        "output": cfg.output.model_dump(mode="json"),
        cfg.model.value: params,
    }


def dump_config(cfg: SimConfig) -> str:
    """Serialise a config as TOML text."""
    return tomli_w.dumps(config_to_mapping(cfg))


def save_config(cfg: SimConfig, path: Union[str, Path]) -> Path:
    """Write a config to disk and return the path."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dump_config(cfg), encoding="utf-8")
    return target


def apply_overrides(cfg: SimConfig, overrides: Mapping[str, Any]) -> SimConfig:
    """Return a new validated config with dotted-key overrides applied.

    Example keys: ``seed``, ``output.directory``, ``finance.alpha``,
    ``grid.lambda``.
    """
    data = copy.deepcopy(config_to_mapping(cfg))
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        if parts[0] in PARAM_SECTIONS and parts[0] != cfg.model.value:
            raise ConfigValidationError(
                "Invalid override",
                [f"params/model mismatch: {dotted} does not apply to {cfg.model.value}"],
            )
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigValidationError("Invalid override", [f"{dotted} is not a section key"])
        node[parts[-1]] = value
    return _validated(_config_from_mapping(data), source="<overrides>")


def parse_override(text: str) -> Tuple[str, List[Any]]:
    """Parse ``KEY=v1,v2,...`` into the key and its typed values."""
    if "=" not in text:
        raise ConfigValidationError("Invalid sweep", [f"expected KEY=v1,v2,... got {text!r}"])
    key, _, raw_values = text.partition("=")
    values = [_parse_scalar(v.strip()) for v in raw_values.split(",") if v.strip()]
    if not key.strip() or not values:
        raise ConfigValidationError("Invalid sweep", [f"expected KEY=v1,v2,... got {text!r}"])
    return key.strip(), values


def expand_sweep(sweep: Mapping[str, Iterable[Any]]) -> List[Dict[str, Any]]:
    """Cartesian product of sweep values, one override dict per run."""
    keys = list(sweep)
    value_lists = [list(sweep[key]) for key in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*value_lists)]


def _parse_scalar(text: str) -> Any:
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _config_from_mapping(data: Mapping[str, Any]) -> SimConfig:
    """Turn a TOML-shaped mapping into a SimConfig (types checked only)."""
    problems: List[str] = []
    allowed = set(TOP_LEVEL_KEYS) | set(COMMON_SECTIONS) | set(PARAM_SECTIONS)
    for key in data:
        if key not in allowed:
            problems.append(f"{key} is not a recognised section or key")

    present = [section for section in PARAM_SECTIONS if section in data]
    tag = data.get("model")
    if tag is None:
        if len(present) == 1:
            tag = present[0]
        else:
            problems.append(
                "model is required unless exactly one params section is given"
            )
    elif tag not in PARAM_SECTIONS:
        problems.append(f"model must be one of {', '.join(PARAM_SECTIONS)}")
    else:
        for section in present:
            if section != tag:
                problems.append(
                    f"params/model mismatch: model={tag} but [{section}] section given"
                )

    if problems:
        raise ConfigValidationError("Invalid config", problems)

    raw: Dict[str, Any] = {
        "model": tag,
        "model_params": {**dict(data.get(tag, {})), "kind": tag},
    }
    for section in COMMON_SECTIONS:
        if section in data:
            raw[section] = data[section]
    if "seed" in data:
        raw["seed"] = data["seed"]

    try:
        return SimConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigValidationError(
            "Invalid config",
            [f"{_dotted(err['loc'], tag)}: {err['msg']}" for err in e.errors()],
        ) from e


def _dotted(loc: Tuple[Any, ...], tag: str) -> str:
    parts = [str(part) for part in loc]
    if parts and parts[0] == "model_params":
        # Discriminated unions insert the tag after the field name.
        rest = parts[2:] if len(parts) > 1 and parts[1] == tag else parts[1:]
        parts = [tag] + rest
    return ".".join(parts) if parts else "<root>"


def _validated(cfg: SimConfig, source: str) -> SimConfig:
    violations = validate_config(cfg)
    if violations:
        raise ConfigValidationError(f"Invalid config {source}", violations)
    return cfg
