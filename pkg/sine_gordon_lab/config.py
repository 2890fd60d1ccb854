"""Experiment configuration.

A configuration is a JSON object whose nested sections map onto the dataclasses
below; any field can be addressed by its flat dotted key path
(``grid.n_side``, ``dynamics.dt``). Command-line overrides use the same paths:

    sine-gordon-lab run --config exp.json --set --grid.n_side=64 --beta2 3.14

Example:
    ```python
    from sine_gordon_lab.config import load_config

    config = load_config("renorm.json", overrides={"scan.N_list": "[16, 32]"})
    ```
"""

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union, get_args, get_origin, get_type_hints

from sine_gordon_lab.errors import ConfigError, RegimeError
from sine_gordon_lab.measure import ChainConfig
from sine_gordon_lab.parabolic import DynamicsConfig, Placement

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "renorm-table",
    "gff-check",
    "gmc-scan",
    "cos-decay",
    "run-parabolic",
    "run-wave",
    "sample-gibbs",
    "invariance-test",
    "tightness-scan",
    "volume-scan",
    "apriori-fit",
)
FREE_FIELD_SUBCOMMANDS = ("renorm-table", "gff-check")
WAVE_SUBCOMMANDS = ("run-wave",)


@dataclass
class GridConfig:
    L: float = 1.0
    n_side: Optional[int] = None
    chi: str = "smooth"


@dataclass
class DynamicsSection:
    dt: float = 1e-2
    dt_max: Optional[float] = None
    placement: Optional[str] = None
    gamma_factor: float = 1.0
    T: float = 1.0
    members: int = 8
    record_every: int = 0

    def to_config(self, chi: str, default: Placement = Placement.NONLINEARITY) -> DynamicsConfig:
        """Library config; an unset placement takes the model's own default."""
        placement = Placement(self.placement) if self.placement is not None else default
        return DynamicsConfig(self.dt, self.dt_max, placement, self.gamma_factor, 2, chi)


@dataclass
class SamplerSection:
    method: str = "pcn"
    n_chains: int = 8
    members: int = 200
    step_size: float = 0.3
    target_acceptance: float = 0.3
    tune: bool = True
    pilot_steps: int = 400
    burn_in: Optional[int] = None
    thin: Optional[int] = None
    min_ess: float = 100.0
    potential_off: bool = False
    gamma_factor: float = 1.0

    def to_config(self, chi: str) -> ChainConfig:
        return ChainConfig(
            n_chains=self.n_chains,
            members=self.members,
            step_size=self.step_size,
            target_acceptance=self.target_acceptance,
            tune=self.tune,
            pilot_steps=self.pilot_steps,
            burn_in=self.burn_in,
            thin=self.thin,
            min_ess=self.min_ess,
            potential_off=self.potential_off,
            gamma_factor=self.gamma_factor,
            chi=chi,
        )


@dataclass
class NormSection:
    delta: float = 0.1
    alpha: float = 0.3
    p: float = 2.0
    lam: float = 0.25
    M: float = 16.0
    ell_max: Optional[int] = None
    weighted: bool = False


@dataclass
class ScanSection:
    N_list: List[float] = field(default_factory=lambda: [16.0, 32.0])
    L_list: List[float] = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    samples: int = 1000
    batch: int = 64
    n_times: int = 1
    kind: str = "psi"
    window: float = 1.0
    points_per_unit: Optional[int] = None


@dataclass
class AprioriSection:
    train: int = 100
    validation: int = 100
    headroom: float = 1.25
    batch: int = 4


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs; serialised whole into its manifest."""

    subcommand: str = "renorm-table"
    seed: int = 0
    out: str = "runs"
    threads: int = 1
    beta2: float = math.pi
    N: float = 16.0
    grid: GridConfig = field(default_factory=GridConfig)
    dynamics: DynamicsSection = field(default_factory=DynamicsSection)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    norms: NormSection = field(default_factory=NormSection)
    scan: ScanSection = field(default_factory=ScanSection)
    apriori: AprioriSection = field(default_factory=AprioriSection)

    def as_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def parse_overrides(options: Optional[Union[List[str], Dict[str, str]]]) -> Dict[str, str]:
    """Parse ``--key=value``, ``--key value`` and bare ``--flag`` tokens into a dict.

    Bare flags map to ``"true"``. A dict passes through unchanged.

    Examples:
        >>> parse_overrides(["--grid.n_side", "64"])
        {'grid.n_side': '64'}

        >>> parse_overrides(["--sampler.potential_off"])
        {'sampler.potential_off': 'true'}
    """
    if not options:
        return {}
    if isinstance(options, dict):
        return dict(options)
    parsed: Dict[str, str] = {}
    current_key = None
    for token in options:
        if token.startswith("--"):
            if "=" in token:
                key, value = token.lstrip("-").split("=", 1)
                parsed[key] = value
                current_key = None
            else:
                current_key = token.lstrip("-")
                parsed[current_key] = "true"
        elif current_key:
            parsed[current_key] = token
            current_key = None
        else:
            raise ConfigError(f"override value {token!r} has no key")
    return parsed


def _parse_scalar(text: Any) -> Any:
    if not isinstance(text, str):
        return text
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    """Assign ``value`` at the dotted path ``key``, creating sections as needed."""
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError("is not a section", field=".".join(parts[: parts.index(part) + 1]))
        node = child
    node[parts[-1]] = value


def _coerce(value: Any, hint: Any, path: str) -> Any:
    origin = get_origin(hint)
    if origin is Union:
        options = [a for a in get_args(hint) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, options[0], path)
    if origin in (list, List):
        if isinstance(value, str):
            value = _parse_scalar(value)
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {value!r}", field=path)
        (item,) = get_args(hint) or (Any,)
        return [_coerce(v, item, path) for v in value]
    if dataclasses.is_dataclass(hint):
        if not isinstance(value, dict):
            raise ConfigError(f"expected a section, got {value!r}", field=path)
        return _build(hint, value, path + ".")
    if hint is bool:
        if isinstance(value, str):
            lowered = value.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
        if isinstance(value, bool):
            return value
        raise ConfigError(f"expected a boolean, got {value!r}", field=path)
    if hint in (int, float):
        value = _parse_scalar(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", field=path)
        if hint is int and float(value) != int(value):
            raise ConfigError(f"expected an integer, got {value!r}", field=path)
        return hint(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", field=path)
        return value
    return value


def _build(cls, data: Dict[str, Any], prefix: str = ""):
    hints = get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError("unknown key", field=prefix + key)
        kwargs[key] = _coerce(value, hints[key], prefix + key)
    return cls(**kwargs)


def config_from_dict(data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Build and validate a configuration from a nested dict plus flat overrides."""
    merged = json.loads(json.dumps(data))
    for key, value in (overrides or {}).items():
        logger.info(f"config override {key}={value}")
        set_dotted(merged, key, _parse_scalar(value))
    config = _build(ExperimentConfig, merged)
    validate(config)
    return config


def load_config(path: Optional[Union[str, Path]], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read a JSON configuration file (or start from defaults when ``path`` is None).

    Raises:
        ConfigError: For unreadable files, unknown keys or invalid values.
        RegimeError: For β² outside the subcommand's regime.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as error:
            raise ConfigError(f"cannot read config: {error}", field="config") from error
        except json.JSONDecodeError as error:
            raise ConfigError(f"invalid JSON: {error}", field="config") from error
        if not isinstance(data, dict):
            raise ConfigError("top level must be an object", field="config")
    return config_from_dict(data, overrides)


def _positive(value: Optional[float], path: str) -> None:
    if value is not None and not value > 0:
        raise ConfigError(f"must be positive, got {value}", field=path)


def validate(config: ExperimentConfig) -> None:
    """Check a configuration against its subcommand before any compute."""
    if config.subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {config.subcommand!r}", field="subcommand")
    if not 0 <= config.seed < 2**64:
        raise ConfigError(f"must be an unsigned 64-bit integer, got {config.seed}", field="seed")
    if config.threads < 1:
        raise ConfigError(f"must be >= 1, got {config.threads}", field="threads")
    for path, value in (
        ("beta2", config.beta2),
        ("N", config.N),
        ("grid.L", config.grid.L),
        ("dynamics.dt", config.dynamics.dt),
        ("dynamics.dt_max", config.dynamics.dt_max),
        ("dynamics.T", config.dynamics.T),
        ("dynamics.members", config.dynamics.members),
        ("scan.samples", config.scan.samples),
        ("scan.batch", config.scan.batch),
        ("norms.delta", config.norms.delta),
        ("norms.p", config.norms.p),
        ("norms.M", config.norms.M),
        ("apriori.train", config.apriori.train),
        ("apriori.headroom", config.apriori.headroom),
    ):
        _positive(value, path)
    n_side = config.grid.n_side
    if n_side is not None and (n_side < 4 or n_side & (n_side - 1)):
        raise ConfigError(f"must be a power of two >= 4, got {n_side}", field="grid.n_side")
    if config.dynamics.placement is not None and config.dynamics.placement not in {p.value for p in Placement}:
        raise ConfigError(f"unknown placement {config.dynamics.placement!r}", field="dynamics.placement")
    if config.grid.chi not in ("smooth", "sharp", "physical_bump"):
        raise ConfigError(f"unknown cutoff profile {config.grid.chi!r}", field="grid.chi")
    if config.sampler.method not in ("pcn", "dynamics"):
        raise ConfigError(f"unknown sampler {config.sampler.method!r}", field="sampler.method")
    if config.scan.kind not in ("psi", "theta"):
        raise ConfigError(f"unknown field kind {config.scan.kind!r}", field="scan.kind")
    if config.subcommand in WAVE_SUBCOMMANDS:
        if not config.beta2 < 2.0 * math.pi:
            raise RegimeError(f"run-wave needs beta2 < 2pi, got beta2={config.beta2}")
        if not 0.0 < config.norms.alpha < 0.5:
            raise ConfigError(f"must lie in (0, 1/2), got {config.norms.alpha}", field="norms.alpha")
    elif config.subcommand not in FREE_FIELD_SUBCOMMANDS and not config.beta2 < 4.0 * math.pi:
        raise RegimeError(f"{config.subcommand} needs beta2 < 4pi, got beta2={config.beta2}")
