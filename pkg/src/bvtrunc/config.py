"""Run configuration: a versioned TOML file, overridable from the command line.

Example::

    version = 1
    seed = 0
    workers = 2

    [cipher]
    name = "PLANTED"
    rounds = 3
    t_star = 2

    [search]
    t = 2
    sigma = 0.9
    tau = 4
    mode = "ascending"

    [attack]
    pairs = 45
    trials = 100

The ``output`` table (paths) is left out of the config hash and of the
config copy embedded in reports, so the same run written to another
directory produces the same bytes.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .cipherkit import DIRECTIONS, FORWARD
from .truncfind import MODES, ASCENDING, exact

CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class SearchConfig:
    t: int | None = None
    sigma: float = 0.9
    tau: float = 4.0
    q: int | None = None  # overrides the sample budget
    mode: str = ASCENDING
    direction: str = FORWARD
    retries: int = 0  # extra seeds tried after a "No"
    splits: list[int] | None = None  # boomerang split points to scan


@dataclass
class VerifyConfig:
    sampled: bool = False


@dataclass
class AttackConfig:
    recovery: bool = True
    pairs: int | None = None  # default ceil(40 / sigma)
    trials: int = 100
    planted: bool = False  # use the cipher's planted differential instead of a report
    boomerang: bool = True
    boomerang_trials: int = 10_000
    per_key: bool = False
    shift_field: str = "a2"
    concretize: str = "zero"
    alpha: float = 1e-3
    baseline: dict[str, Any] = field(default_factory=lambda: {"name": "RANDOMPERM"})


@dataclass
class SpectrumConfig:
    j: int = 1


@dataclass
class OutputConfig:
    report: str | None = None
    csv: str | None = None


@dataclass
class RunConfig:
    version: int = CONFIG_VERSION
    seed: int = 0
    workers: int = 1
    cipher: dict[str, Any] = field(default_factory=lambda: {"name": "PLANTED"})
    search: SearchConfig = field(default_factory=SearchConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> RunConfig:
        if self.version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {self.version}; expected {CONFIG_VERSION}")
        s = self.search
        s.sigma, s.tau = float(s.sigma), float(s.tau)
        if not 0 < exact(s.sigma) < 1:
            raise ConfigError(f"sigma must lie in (0, 1), got {s.sigma}")
        if exact(s.tau) < 1:
            raise ConfigError(f"tau must be >= 1, got {s.tau}")
        if s.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if s.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {DIRECTIONS}")
        if s.q is not None and s.q < 1:
            raise ConfigError("q must be >= 1")
        if s.retries < 0 or self.workers < 1 or self.seed < 0:
            raise ConfigError("retries and seed must be >= 0, workers >= 1")
        if not isinstance(self.cipher, dict) or not self.cipher:
            raise ConfigError("cipher must be a table")
        return self

    def to_dict(self, hashed: bool = False) -> dict[str, Any]:
        """Plain dict; ``hashed`` drops the output paths, as the hash does."""
        d = asdict(self)
        if hashed:
            d.pop("output")
        return d

    def hash(self) -> str:
        d = self.to_dict(hashed=True)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_SECTIONS = {"search": SearchConfig, "verify": VerifyConfig, "attack": AttackConfig,
             "spectrum": SpectrumConfig, "output": OutputConfig}


def from_dict(raw: dict[str, Any]) -> RunConfig:
    raw = copy.deepcopy(raw)
    top = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for key, val in raw.items():
        if key in _SECTIONS:
            if not isinstance(val, dict):
                raise ConfigError(f"[{key}] must be a table")
            allowed = {f.name for f in fields(_SECTIONS[key])}
            bad = set(val) - allowed
            if bad:
                raise ConfigError(f"unknown keys in [{key}]: {sorted(bad)}")
            kw[key] = _SECTIONS[key](**val)
        else:
            kw[key] = val
    return RunConfig(**kw)


def load(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if "version" not in raw:
        raise ConfigError("config must declare `version`")
    return from_dict(raw)


def override(cfg: RunConfig, section: str | None, key: str, value) -> None:
    """Set ``cfg[section][key]`` unless ``value`` is None."""
    if value is None:
        return
    target = cfg if section is None else getattr(cfg, section)
    setattr(target, key, value)
