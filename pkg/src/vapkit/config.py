"""Run configuration from an INI file (sections of key = value pairs).

Every section and key is validated; errors name the offending
``[section] key``. Unknown sections or keys are rejected.

Example::

    [frame]
    fps = 100

    [bins]
    bin_durations_ms = 200, 400, 600, 800
    activation_threshold = 0.5

    [synth]
    seed = 7
    n_dialogs = 50
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .codec import BinConfig
from .corpus import SynthParams
from .errors import ConfigurationError
from .events import EventParams
from .predictors import OracleConfig
from .timeline import FrameRate
from .zeroshot import ScoringConfig


@dataclass(frozen=True)
class PredictorConfig:
    kind: str = "markov"  # "markov" | "oracle"
    alpha: float = 1.0
    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("markov", "oracle"):
            raise ConfigurationError(f"[predictor] kind must be 'markov' or 'oracle', got {self.kind!r}")
        OracleConfig(self.epsilon, self.seed)
        if not self.alpha > 0:
            raise ConfigurationError("[predictor] alpha must be positive")


@dataclass(frozen=True)
class SplitConfig:
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0


@dataclass(frozen=True)
class EvalConfig:
    aggregate: str = "mean"  # "mean" | "vote"
    event_seed: int = 0
    heads: tuple[str, ...] = ("discrete", "independent4", "independent40", "comparative")

    def __post_init__(self) -> None:
        if self.aggregate not in ("mean", "vote"):
            raise ConfigurationError(f"[eval] aggregate must be 'mean' or 'vote', got {self.aggregate!r}")


@dataclass(frozen=True)
class RunConfig:
    rate: FrameRate = field(default_factory=FrameRate)
    bins: BinConfig = field(default_factory=BinConfig)
    events: EventParams = field(default_factory=EventParams)
    synth: SynthParams = field(default_factory=SynthParams)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def check(self) -> None:
        """Every duration must be a whole number of frames."""
        self.bins.horizon_frames(self.rate)
        self.events.frames(self.rate)


# section name -> (RunConfig attribute, dataclass, {ini key: field name})
_SECTIONS = {
    "frame": ("rate", FrameRate, {"fps": "frames_per_second"}),
    "bins": ("bins", BinConfig, None),
    "events": ("events", EventParams, None),
    "synth": ("synth", SynthParams, None),
    "predictor": ("predictor", PredictorConfig, None),
    "split": ("split", SplitConfig, None),
    "scoring": ("scoring", ScoringConfig, {"bc_rule": "bc_rule", "bc_sharpness": "bc_sharpness",
                                          "duration_weighted": "duration_weighted"}),
    "eval": ("eval", EvalConfig, None),
}


def _convert(raw: str, default, where: str):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if default and isinstance(default[0], (int, float)) and not isinstance(default[0], bool):
                return tuple(type(default[0])(x) for x in items)
            return tuple(items)
        return raw.strip()
    except ValueError:
        kind = type(default).__name__ if not isinstance(default, tuple) else "comma-separated list"
        raise ConfigurationError(f"{where}: expected {kind}, got {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    built = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigurationError(f"{source}: unknown section [{section}]")
        attr, cls, keymap = _SECTIONS[section]
        defaults = cls()
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in cp.items(section):
            name = (keymap or {}).get(key, key if keymap is None else None)
            if name not in names:
                raise ConfigurationError(f"{source}: [{section}] unknown key {key!r}")
            kwargs[name] = _convert(raw, getattr(defaults, name), f"{source}: [{section}] {key}")
        try:
            built[attr] = cls(**kwargs)
        except ConfigurationError as exc:
            raise ConfigurationError(f"{source}: [{section}] {exc}") from None
    cfg = RunConfig(**built)
    try:
        cfg.check()
    except ConfigurationError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), str(path))
