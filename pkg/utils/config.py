"""Scenario files: TOML blocks resolved against embedded defaults into validated parameters."""

import copy
import logging
import os
from dataclasses import dataclass, field, fields

import toml

from utils.errors import ConfigError
from utils.microsim import DEFAULT_WAVE_MONTHS, MicrosimSettings
from utils.model_core import ModelParams, ProductivitySpec, validate_params

logger = logging.getLogger(__name__)

UNBOUNDED = "unbounded"

_MODEL_KEYS = {f.name for f in fields(ModelParams)} - {"productivity_spec"}
_PRODUCTIVITY_KEYS = {f.name for f in fields(ProductivitySpec)}

DEFAULTS = {
    "model": {
        "discount_rate": 0.004,
        "unemployment_flow": 0.4,
        "vacancy_cost": 0.3,
        "firing_cost": 2.0,
        "informal_penalty": 0.7,
        "otj_search_rate": 0.0,
        "bargaining_weight": 0.5,
        "matching_efficiency": 0.45,
        "matching_elasticity": 0.5,
        "stc_renewal_cap": 48,
        "grid_size": 501,
        "search_dispersion": 0.0,
        "unfair_dismissal_cost": 0.0,
        "informal_enabled": True,
        "ltc_output_premium": 0.0,
        "productivity": {"family": "lognormal", "location": 0.0, "scale": 0.4, "lower": 0.0, "upper": 1.0},
    },
    "post": {"firing_cost": 0.5, "stc_renewal_cap": UNBOUNDED},
    "control": {},
    "sweep": {"firing_costs": [0.5, 1.0, 2.0, 4.0]},
    "microsim": {
        "n_workers": 20_000,
        "wave_months": list(DEFAULT_WAVE_MONTHS),
        "seed": None,
        "wage_usd_scale": 1.0,
        "burn_in_months": 120,
        "household_mean_size": 5.0,
        "block_size": 10_000,
        "post_wave_lag_months": 0,
    },
    "estimation": {
        "weight": "household_weight",
        "cluster": "household_id",
        "fixed_effects": ["country_id", "event_month"],
        "covariates": [],
        "panel": "",
        "reference_period": -1,
    },
    "output": {"directory": "output"},
}


@dataclass
class ScenarioConfig:
    """Fully resolved scenario"""

    name: str
    model: ModelParams
    post: ModelParams
    control: ModelParams
    sweep_params: ModelParams
    firing_costs: list
    microsim: MicrosimSettings
    seed: int | None
    estimation: dict
    output_dir: str
    resolved: dict = field(default_factory=dict)

    def require_seed(self):
        if self.seed is None:
            raise ConfigError("a seed is required for this command: set [microsim] seed or pass --seed")
        return self.seed

    def echo(self):
        """Resolved configuration written next to every output"""
        data = copy.deepcopy(self.resolved)
        data["microsim"]["seed"] = self.seed
        data["output"]["directory"] = self.output_dir
        data["scenario"] = self.name
        return data


def _merge(base, update, path=""):
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key '{where}'", key=where)
        if isinstance(base[key], dict) and base[key] and not isinstance(value, dict):
            raise ConfigError(f"'{where}' must be a table", key=where)
        if isinstance(value, dict) and isinstance(base[key], dict) and base[key]:
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _model_overrides(block, where):
    """Check an override block ([post], [control], [sweep]) against the model keys"""
    extra = {k: v for k, v in block.items() if k not in _MODEL_KEYS and k != "productivity"}
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"unknown configuration key '{where}.{key}'", key=f"{where}.{key}")
    unknown = set(block.get("productivity", {})) - _PRODUCTIVITY_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown configuration key '{where}.productivity.{key}'", key=f"{where}.productivity.{key}")


def _cap(value):
    if value is None or value == UNBOUNDED:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"stc_renewal_cap must be an integer or '{UNBOUNDED}', got {value!r}", key="stc_renewal_cap")
    return value


def params_from_block(block):
    """
    Build validated ModelParams from a resolved [model] block

    Raises:
        ParameterError: naming the first field out of range
    """
    values = {k: v for k, v in block.items() if k != "productivity"}
    values["stc_renewal_cap"] = _cap(values.get("stc_renewal_cap"))
    try:
        spec = ProductivitySpec(**block["productivity"])
        return validate_params(ModelParams(productivity_spec=spec, **values))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid model parameter type: {e}")


def _apply(model_block, overrides):
    merged = copy.deepcopy(model_block)
    for key, value in overrides.items():
        if key == "productivity":
            merged["productivity"].update(value)
        else:
            merged[key] = value
    return merged


def load_config(path=None, seed=None, out=None):
    """
    Read a scenario file and resolve it against the defaults

    Args:
        path: TOML scenario file; None uses the defaults alone
        seed: overrides [microsim] seed
        out: overrides [output] directory

    Returns:
        ScenarioConfig

    Raises:
        ConfigError: unreadable file, malformed TOML or unknown key
        ParameterError: a model parameter out of range
    """
    raw = {}
    name = "defaults"
    if path:
        try:
            raw = toml.load(path)
        except FileNotFoundError:
            raise ConfigError(f"configuration file not found: {path}", path=str(path))
        except toml.TomlDecodeError as e:
            raise ConfigError(f"malformed configuration file {path}: {e}", path=str(path))
        name = os.path.splitext(os.path.basename(str(path)))[0]
        logger.info(f"Loaded scenario '{name}' from {path}")

    for block in ("post", "control"):
        _model_overrides(raw.get(block, {}), block)
    sweep_block = dict(raw.get("sweep", {}))
    firing_costs = sweep_block.pop("firing_costs", DEFAULTS["sweep"]["firing_costs"])
    _model_overrides(sweep_block, "sweep")

    resolved = _merge({k: v for k, v in DEFAULTS.items() if k not in ("post", "control", "sweep")},
                      {k: v for k, v in raw.items() if k not in ("post", "control", "sweep")})
    resolved["post"] = raw.get("post", DEFAULTS["post"])
    resolved["control"] = raw.get("control", {})
    resolved["sweep"] = {"firing_costs": list(firing_costs), **sweep_block}

    model = params_from_block(resolved["model"])
    post = params_from_block(_apply(resolved["model"], resolved["post"]))
    control = params_from_block(_apply(resolved["model"], resolved["control"]))
    sweep_params = params_from_block(_apply(resolved["model"], sweep_block))

    micro = resolved["microsim"]
    if seed is not None:
        micro["seed"] = int(seed)
    try:
        settings = MicrosimSettings(
            n_workers=int(micro["n_workers"]),
            wave_months=tuple(micro["wave_months"]),
            seed=int(micro["seed"]) if micro["seed"] is not None else 0,
            wage_usd_scale=float(micro["wage_usd_scale"]),
            burn_in_months=int(micro["burn_in_months"]),
            household_mean_size=float(micro["household_mean_size"]),
            block_size=int(micro["block_size"]),
            post_wave_lag_months=int(micro["post_wave_lag_months"]),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid [microsim] block: {e}")
    if settings.post_wave_lag_months < 0 or settings.burn_in_months < 0 or settings.household_mean_size < 1:
        raise ConfigError("[microsim] lag and burn-in must be non-negative and household_mean_size at least 1")
    try:
        costs = [float(f) for f in firing_costs]
    except (TypeError, ValueError):
        raise ConfigError("[sweep] firing_costs must be a list of numbers", key="sweep.firing_costs")

    return ScenarioConfig(
        name=name,
        model=model,
        post=post,
        control=control,
        sweep_params=sweep_params,
        firing_costs=costs,
        microsim=settings,
        seed=micro["seed"],
        estimation=dict(resolved["estimation"]),
        output_dir=out or resolved["output"]["directory"],
        resolved=resolved,
    )
