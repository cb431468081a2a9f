"""Experiment configuration: a small TOML file that fully determines a run.

Example::

    master_seed = 0
    seeds = [0]
    output_dir = "runs/crescent"

    [dataset]
    shape_id = "crescent2d"
    n_points = 6000
    split_fraction = 0.5
    noise_grid = [0.0, 0.6, 1.2]

    [training]
    epochs = 35
    batch_size = 32
    lr = 0.01

    [grid]
    enabled = true
    resolution = 100

    [[models]]
    kind = "drc"
    B = 6

Unknown keys and bad values raise :class:`ConfigError` carrying the line number
of the offending entry.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .baselines import BASELINES, DEFAULTS
from .data import SHAPES
from .qmodels import ARCHITECTURES

DEFAULT_NOISE_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2)


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}: " if line else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    name: str = ""
    n_qubits: int | None = None
    B: int = 6
    L: int = 1
    epochs: int | None = None
    hyper: tuple = ()

    def __post_init__(self):
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def is_baseline(self) -> bool:
        return self.kind in BASELINES


@dataclass
class ExperimentConfig:
    shape_id: str = "crescent2d"
    n_points: int = 6000
    split_fraction: float = 0.5
    noise_grid: tuple[float, ...] = DEFAULT_NOISE_GRID
    noisy_class: int = 1
    models: list[ModelSpec] = field(default_factory=list)
    epochs: int = 35
    batch_size: int = 32
    lr: float = 0.01
    long_epochs: int = 3000
    seeds: tuple[int, ...] = (0,)
    master_seed: int = 0
    output_dir: str = "runs"
    grid_enabled: bool = False
    grid_resolution: int = 100
    blocks: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    block_models: tuple[str, ...] = ("drc", "vcdrc")
    record_wall_time: bool = False


# (table, key) -> (attribute, validator)
_SCHEMA = {
    (None, "master_seed"): "int",
    (None, "seeds"): "int_list",
    (None, "output_dir"): "str",
    (None, "record_wall_time"): "bool",
    (None, "blocks"): "int_list",
    (None, "block_models"): "str_list",
    ("dataset", "shape_id"): "str",
    ("dataset", "n_points"): "int",
    ("dataset", "split_fraction"): "float",
    ("dataset", "noise_grid"): "float_list",
    ("dataset", "noisy_class"): "int",
    ("training", "epochs"): "int",
    ("training", "batch_size"): "int",
    ("training", "lr"): "float",
    ("training", "long_epochs"): "int",
    ("grid", "enabled"): "bool",
    ("grid", "resolution"): "int",
}
_MODEL_KEYS = {"kind": "str", "name": "str", "n_qubits": "int", "B": "int", "L": "int",
               "epochs": "int", "hyper": "table"}
_ATTR = {("grid", "enabled"): "grid_enabled", ("grid", "resolution"): "grid_resolution"}


def _line_index(text: str) -> dict:
    """Map (table, key), (table, index, key) and table headers to 1-based line numbers."""
    lines = {}
    table = None
    counts: dict[str, int] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[\[\s*([\w.-]+)\s*\]\]", s)
        if m:
            name = m.group(1)
            counts[name] = counts.get(name, -1) + 1
            table = (name, counts[name])
            lines[table] = no
            continue
        m = re.fullmatch(r"\[\s*([\w.-]+)\s*\]", s)
        if m:
            table = m.group(1)
            lines[table] = no
            continue
        m = re.match(r"([\w-]+)\s*=", s)
        if m:
            key = m.group(1)
            path = table + (key,) if isinstance(table, tuple) else (table, key)
            lines.setdefault(path, no)
    return lines


def _check(kind: str, value, where: str, line, path):
    def fail(expected):
        raise ConfigError(f"{where} must be {expected}, got {value!r}", line, path)

    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
    elif kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail("a number")
        value = float(value)
    elif kind == "str":
        if not isinstance(value, str):
            fail("a string")
    elif kind == "bool":
        if not isinstance(value, bool):
            fail("true or false")
    elif kind == "table":
        if not isinstance(value, dict):
            fail("a table")
    else:
        item = kind.split("_")[0]
        if not isinstance(value, list):
            fail(f"a list of {item}s")
        value = tuple(_check(item, v, where, line, path) for v in value)
    return value


def parse_config(text: str, path=None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"invalid TOML: {exc}", int(m.group(1)) if m else None, path) from None
    lines = _line_index(text)
    cfg = ExperimentConfig()

    def line_of(*key):
        return lines.get(key) or lines.get(key[:-1]) or lines.get(key[0])

    for top, value in raw.items():
        if top == "models":
            continue
        if isinstance(value, dict):
            if top not in ("dataset", "training", "grid"):
                raise ConfigError(f"unknown table [{top}]", lines.get(top), path)
            for key, v in value.items():
                if (top, key) not in _SCHEMA:
                    raise ConfigError(f"unknown key '{key}' in [{top}]", line_of(top, key), path)
                checked = _check(_SCHEMA[(top, key)], v, f"{top}.{key}", line_of(top, key), path)
                setattr(cfg, _ATTR.get((top, key), key), checked)
        else:
            if (None, top) not in _SCHEMA:
                raise ConfigError(f"unknown key '{top}'", lines.get((None, top)), path)
            setattr(cfg, top, _check(_SCHEMA[(None, top)], value, top, lines.get((None, top)), path))

    models = raw.get("models", [])
    if not isinstance(models, list):
        raise ConfigError("models must be an array of tables ([[models]])", lines.get((None, "models")), path)
    for i, entry in enumerate(models):
        cfg.models.append(_parse_model(entry, i, lines, path))

    _validate(cfg, lines, path)
    return cfg


def _parse_model(entry: dict, i: int, lines: dict, path) -> ModelSpec:
    head = lines.get(("models", i))
    if not isinstance(entry, dict):
        raise ConfigError(f"models[{i}] must be a table", head, path)
    for key in entry:
        if key not in _MODEL_KEYS:
            raise ConfigError(f"unknown key '{key}' in models[{i}]", lines.get(("models", i, key), head), path)
    kw = {k: _check(_MODEL_KEYS[k], v, f"models[{i}].{k}", lines.get(("models", i, k), head), path)
          for k, v in entry.items()}
    if "kind" not in kw:
        raise ConfigError(f"models[{i}] is missing 'kind'", head, path)
    kind = kw["kind"]
    line = lines.get(("models", i, "kind"), head)
    if kind not in ARCHITECTURES and kind not in BASELINES:
        raise ConfigError(
            f"models[{i}].kind '{kind}' is not one of {', '.join(ARCHITECTURES + BASELINES)}", line, path)
    for k in ("B", "L", "n_qubits"):
        if k in kw and kw[k] < 1:
            raise ConfigError(f"models[{i}].{k} must be >= 1", lines.get(("models", i, k), head), path)
    if "epochs" in kw and kw["epochs"] < 0:
        raise ConfigError(f"models[{i}].epochs must be >= 0", lines.get(("models", i, "epochs"), head), path)
    hyper = kw.pop("hyper", {})
    if hyper:
        if kind not in BASELINES:
            raise ConfigError(f"models[{i}].hyper only applies to classical baselines", head, path)
        bad = set(hyper) - set(DEFAULTS[kind])
        if bad:
            raise ConfigError(f"models[{i}].hyper has unknown key(s) {sorted(bad)} for {kind}", head, path)
    return ModelSpec(hyper=tuple(sorted(hyper.items())), **kw)


def _validate(cfg: ExperimentConfig, lines: dict, path) -> None:
    def bad(msg, *key):
        raise ConfigError(msg, lines.get(key), path)

    if cfg.shape_id not in SHAPES:
        bad(f"dataset.shape_id '{cfg.shape_id}' is not one of {', '.join(SHAPES)}", "dataset", "shape_id")
    if cfg.n_points < 2:
        bad("dataset.n_points must be >= 2", "dataset", "n_points")
    if not 0 < cfg.split_fraction < 1:
        bad("dataset.split_fraction must lie strictly between 0 and 1", "dataset", "split_fraction")
    if not cfg.noise_grid or any(s < 0 for s in cfg.noise_grid):
        bad("dataset.noise_grid must be a non-empty list of non-negative numbers", "dataset", "noise_grid")
    if cfg.noisy_class not in (0, 1):
        bad("dataset.noisy_class must be 0 or 1", "dataset", "noisy_class")
    if cfg.epochs < 0 or cfg.long_epochs < 0:
        bad("training epochs must be >= 0", "training", "epochs")
    if cfg.batch_size < 1:
        bad("training.batch_size must be >= 1", "training", "batch_size")
    if not cfg.lr > 0:
        bad("training.lr must be positive", "training", "lr")
    if not cfg.seeds:
        bad("seeds must not be empty", None, "seeds")
    if cfg.grid_resolution < 2:
        bad("grid.resolution must be >= 2", "grid", "resolution")
    if not cfg.blocks or any(b < 1 for b in cfg.blocks):
        bad("blocks must be a non-empty list of positive integers", None, "blocks")
    for k in cfg.block_models:
        if k not in ARCHITECTURES or k == "nn":
            bad(f"block_models entry '{k}' is not a quantum architecture", None, "block_models")
    names = [m.name for m in cfg.models]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        bad(f"duplicate model name(s) {sorted(dup)}; set a distinct 'name'", None, "models")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    return parse_config(text, path)
