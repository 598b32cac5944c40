import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

import yaml

from src.core.errors import ConfigError, ModelError
from src.core.exactfield import parse_scalar
from src.core.models import model_from_dict
from src.core.states import Command

logger = logging.getLogger(__name__)

SCAN_AXES = ("delta", "ksq", "p1", "p2", "m")
CROSSCHECK_MODELS = ("sextic", "lame", "goldstone", "calogero")
OUTPUT_FORMATS = ("json", "csv", "text")
MIN_NPOINTS = 64

DEFAULTS = {
    "numeric": {"npoints_line": 2000, "npoints_periodic": 4096, "count": 40, "rel_tol": 1e-3, "L": None},
    "calogero": {"samples": 100, "fd_step": 1e-3, "tol": 1e-5, "min_separation": 0.2, "seed": 0},
    "scan": {"n_jobs": 1},
}


class ConfigHandler:
    """Numeric defaults from config/qes2x2.yaml"""

    def __init__(self, config_path: Optional[str] = None):
        self.config = None
        self.config_path = config_path or os.path.join(
            os.path.dirname(os.path.dirname(os.path.dirname(__file__))), 'config', 'qes2x2.yaml')

    def load_config(self) -> bool:
        try:
            with open(self.config_path, 'r') as f:
                loaded = yaml.safe_load(f) or {}
        except OSError as e:
            logger.warning(f"Warning: could not read {self.config_path} ({e}); using built-in defaults")
            loaded = {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Malformed defaults file {self.config_path}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"Defaults file {self.config_path} must hold a mapping")
        self.config = {section: {**values, **(loaded.get(section) or {})}
                       for section, values in DEFAULTS.items()}
        logger.debug(f"Loaded defaults: {self.config}")
        return True

    def _section(self, name: str) -> Dict[str, Any]:
        if self.config is None:
            self.load_config()
        return self.config[name]

    def get_npoints(self, domain: str = "line") -> int:
        return int(self._section("numeric")[f"npoints_{domain}"])

    def get_count(self) -> int:
        return int(self._section("numeric")["count"])

    def get_rel_tol(self) -> float:
        return float(self._section("numeric")["rel_tol"])

    def get_calogero(self) -> Dict[str, Any]:
        return dict(self._section("calogero"))

    def get_n_jobs(self) -> int:
        return int(self._section("scan")["n_jobs"])

    def numeric_defaults(self) -> Dict[str, Any]:
        return dict(self._section("numeric"))


@dataclass
class RunConfig:
    command: Command
    model: Optional[dict] = None
    numeric: Dict[str, Any] = field(default_factory=dict)
    calogero: Dict[str, Any] = field(default_factory=dict)
    scan: Dict[str, Any] = field(default_factory=dict)
    output: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None
    _params: Any = field(default=None, repr=False, compare=False)

    @property
    def params(self):
        if self._params is None and self.model is not None:
            self._params = model_from_dict(self.model)
        return self._params

    @property
    def kind(self) -> Optional[str]:
        return self.model.get("model") if self.model else None

    def npoints(self) -> int:
        domain = "line" if self.kind == "sextic" else "periodic"
        explicit = self.numeric.get("npoints")
        return int(explicit) if explicit is not None else int(self.numeric[f"npoints_{domain}"])

    def scan_values(self) -> List[Any]:
        """Grid of the scan axis in order; exact for rational axes"""
        axis = self.scan["axis"]
        steps = int(self.scan["steps"])
        if axis == "m":
            start, stop = int(self.scan["start"]), int(self.scan["stop"])
            if steps == 1:
                return [start]
            span = stop - start
            if span % (steps - 1):
                raise ConfigError(f"m scan from {start} to {stop} cannot take {steps} integer steps")
            return [start + i * span // (steps - 1) for i in range(steps)]
        start, stop = parse_scalar(self.scan["start"]), parse_scalar(self.scan["stop"])
        if not isinstance(start, Fraction) or not isinstance(stop, Fraction):
            raise ConfigError("Scan bounds must be rational")
        if steps == 1:
            return [start]
        return [start + i * (stop - start) / (steps - 1) for i in range(steps)]


def _read_file(path: str) -> Any:
    try:
        with open(path, 'r') as f:
            if path.endswith((".yaml", ".yml")):
                return yaml.safe_load(f)
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Malformed config {path}: {e}") from e


def _unwrap(raw: Any) -> Dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigError("Config must be a mapping")
    if isinstance(raw.get("model"), dict):
        return dict(raw)
    blocks = {key: raw.get(key) for key in ("numeric", "calogero", "scan", "output")}
    model = {key: value for key, value in raw.items() if key not in blocks}
    return {"model": model or None, **blocks}


def _validate_numeric(numeric: Dict[str, Any]):
    for key in ("npoints", "npoints_line", "npoints_periodic"):
        value = numeric.get(key)
        if value is not None and (int(value) != value or value < MIN_NPOINTS):
            raise ConfigError(f"numeric.{key} must be an integer >= {MIN_NPOINTS}, got {value}")
    if numeric.get("count") is not None and int(numeric["count"]) < 1:
        raise ConfigError(f"numeric.count must be positive, got {numeric['count']}")
    if float(numeric["rel_tol"]) <= 0:
        raise ConfigError(f"numeric.rel_tol must be > 0, got {numeric['rel_tol']}")
    if numeric.get("L") is not None and float(numeric["L"]) <= 0:
        raise ConfigError(f"numeric.L must be > 0, got {numeric['L']}")


def _validate_calogero(calogero: Dict[str, Any]):
    for key in ("fd_step", "tol", "min_separation"):
        if float(calogero[key]) <= 0:
            raise ConfigError(f"calogero.{key} must be > 0, got {calogero[key]}")
    if int(calogero["samples"]) < 1:
        raise ConfigError(f"calogero.samples must be positive, got {calogero['samples']}")


def _validate_scan(scan: Dict[str, Any], kind: Optional[str]):
    missing = [key for key in ("axis", "start", "stop", "steps") if key not in scan]
    if missing:
        raise ConfigError(f"scan block is missing {', '.join(missing)}")
    if scan["axis"] not in SCAN_AXES:
        raise ConfigError(f"Invalid scan axis {scan['axis']!r}; expected one of {SCAN_AXES}")
    if int(scan["steps"]) < 1:
        raise ConfigError(f"scan.steps must be positive, got {scan['steps']}")
    if int(scan.get("n_jobs", 1)) == 0:
        raise ConfigError("scan.n_jobs must not be 0")
    axis_models = {"delta": ("lame",), "ksq": ("lame",), "p1": ("sextic", "calogero"),
                   "p2": ("sextic", "calogero"), "m": ("sextic", "lame", "calogero")}
    if kind not in axis_models[scan["axis"]]:
        raise ConfigError(f"Scan axis {scan['axis']!r} does not apply to model {kind!r}")


def _checked(check, *args):
    try:
        return check(*args)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"Invalid config value: {e}") from e


def load_run_config(path: Optional[str], command: Command,
                    handler: Optional[ConfigHandler] = None) -> RunConfig:
    """Read, merge with the YAML defaults and validate a run config"""
    handler = handler or ConfigHandler()
    raw = _unwrap(_read_file(path)) if path else {"model": None}
    if raw.get("model") is None and command != Command.CATALOG:
        raise ConfigError(f"Command {command.value!r} needs a config with a model")
    for key in ("numeric", "calogero", "scan", "output"):
        if raw.get(key) is not None and not isinstance(raw[key], dict):
            raise ConfigError(f"Config block {key!r} must be a mapping")

    numeric = {**handler.numeric_defaults(), **(raw.get("numeric") or {})}
    calogero = {**handler.get_calogero(), **(raw.get("calogero") or {})}
    scan = {"n_jobs": handler.get_n_jobs(), **(raw.get("scan") or {})}
    config = RunConfig(command=command, model=raw.get("model"), numeric=numeric, calogero=calogero,
                       scan=scan, output=dict(raw.get("output") or {}), source=path)
    _checked(_validate_numeric, numeric)
    _checked(_validate_calogero, calogero)

    if config.model is not None and command != Command.CATALOG:
        try:
            config.params
        except ModelError as e:
            raise ConfigError(str(e)) from e
    if command == Command.CROSSCHECK and config.kind not in CROSSCHECK_MODELS:
        raise ConfigError(f"crosscheck needs one of {CROSSCHECK_MODELS}, got {config.kind!r}")
    if command == Command.SCAN:
        if raw.get("scan") is None:
            raise ConfigError("scan needs a scan block with axis, start, stop and steps")
        _checked(_validate_scan, scan, config.kind)
        _checked(config.scan_values)
    logger.debug(f"Run config from {path}: model {config.kind}, numeric {numeric}")
    return config
