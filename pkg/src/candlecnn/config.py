"""Experiment configuration: flat ``key = value`` files.

Blank lines and ``#`` comments are ignored; list values are
comma-separated. Unknown keys are an error so typos do not pass silently.
See ``README.md`` for the key reference.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
from dataclasses import dataclass
from pathlib import Path

from candlecnn.dataset import HORIZONS, Strategy
from candlecnn.imaging import Variant
from candlecnn.nn.training import TrainConfig


class ConfigError(ValueError):
    pass


def _date(s):
    return dt.date.fromisoformat(s)


def _list(conv):
    def parse(s):
        return tuple(conv(p.strip()) for p in s.split(",") if p.strip())
    return parse


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    data_dir: str = "data"
    endpoint: str = ""
    tickers: tuple = ()
    train_start: dt.date = dt.date(2014, 12, 31)
    train_end: dt.date = dt.date(2018, 12, 31)
    test_start: dt.date = dt.date(2019, 1, 1)
    test_end: dt.date = dt.date(2019, 12, 31)
    horizons: tuple = HORIZONS
    variants: tuple = tuple(Variant)
    splits: tuple = (Strategy.TIME,)
    test_ratio: float = 0.2
    train_ratio: float = 0.8
    seed: int = 0
    batch_size: int = 32
    epochs: int = 20
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    dropout: bool = True
    precision: str = "float32"
    image_width: int = 96
    image_height: int = 96
    out_dir: str = "out"

    def __post_init__(self):
        if not self.train_start < self.train_end < self.test_end:
            raise ConfigError("need train_start < train_end < test_end")
        if not self.train_end < self.test_start <= self.test_end:
            raise ConfigError("need train_end < test_start <= test_end")
        bad = [h for h in self.horizons if h not in HORIZONS]
        if bad or not self.horizons:
            raise ConfigError(f"horizons must be a non-empty subset of {HORIZONS}, got {self.horizons}")
        if not self.variants or not self.splits:
            raise ConfigError("variants and splits must be non-empty")
        for name in ("test_ratio", "train_ratio"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must be in (0, 1)")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.optimizer.lower() not in ("sgd", "adam"):
            raise ConfigError(f"optimizer must be sgd or adam, got {self.optimizer!r}")
        for name in ("image_width", "image_height"):
            v = getattr(self, name)
            if v < 64 or v % 16:
                raise ConfigError(f"{name} must be a multiple of 16 and at least 64, got {v}")
        try:
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def cutoff(self):
        return self.test_start

    def train_config(self):
        return TrainConfig(
            batch_size=self.batch_size,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            seed=self.seed,
            dropout=self.dropout,
            precision=self.precision,
        )

    def replace(self, **changes):
        try:
            return dataclasses.replace(self, **changes)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def dumps(self):
        """Canonical text form, parseable by :func:`loads`."""
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(_fmt(x) for x in v)
            else:
                v = _fmt(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def config_hash(self):
        """SHA-256 over every setting except ``out_dir``."""
        text = self.replace(out_dir="").dumps()
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _fmt(v):
    if isinstance(v, (Variant, Strategy)):
        return v.value
    if isinstance(v, dt.date):
        return v.isoformat()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_PARSERS = {
    "data_dir": str,
    "endpoint": str,
    "tickers": _list(str),
    "train_start": _date,
    "train_end": _date,
    "test_start": _date,
    "test_end": _date,
    "horizons": _list(int),
    "variants": _list(Variant),
    "splits": _list(Strategy),
    "test_ratio": float,
    "train_ratio": float,
    "seed": int,
    "batch_size": int,
    "epochs": int,
    "learning_rate": float,
    "optimizer": str,
    "dropout": _bool,
    "precision": str,
    "image_width": int,
    "image_height": int,
    "out_dir": str,
}


def loads(text, base_dir=None):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if base_dir is not None:
        # relative paths in a config file are relative to that file
        for key in ("data_dir", "out_dir"):
            if key in values and not Path(values[key]).is_absolute():
                values[key] = str(Path(base_dir) / values[key])
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text, base_dir=path.parent)
