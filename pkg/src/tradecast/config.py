"""Run configuration: flat ``key = value`` files merged under command-line flags.

Precedence is flag > file > default.  Keys use the flag names with dashes or
underscores (``holdout-years`` and ``holdout_years`` are the same key).
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError, MissingFile

GBDT_KEYS = {
    "learning_rate": float,
    "num_leaves": int,
    "max_depth": int,
    "feature_fraction": float,
    "early_stopping_rounds": int,
    "max_rounds": int,
    "min_data_in_leaf": int,
    "max_bins": int,
    "lambda_l2": float,
}


def _csv_list(text):
    if isinstance(text, (list, tuple)):
        return list(text)
    return [s.strip() for s in str(text).split(",") if s.strip()]


def _int_list(text):
    return [int(s) for s in _csv_list(text)]


@dataclass
class RunConfig:
    trade: str | None = None
    econ: str | None = None
    panel: str | None = None
    commodity: str | None = None
    exporter: str | None = None
    features: list[str] | None = None
    k: int = 3
    n: int = 5
    holdout_years: int = 2
    horizon: int | None = None
    years: list[int] | None = None
    train_end: int | None = None
    order: str = "auto"
    model: str | None = None
    kind: str = "split"
    out: str = "."
    seed: int = 0
    gbdt: dict = field(default_factory=dict)

    _CONVERT = {"k": int, "n": int, "holdout_years": int, "horizon": int, "train_end": int,
                "seed": int, "features": _csv_list, "years": _int_list}

    @classmethod
    def build(cls, file_values: dict, flag_values: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)} - {"gbdt"}
        merged: dict = {}
        gbdt: dict = {}
        for source in (file_values, flag_values):
            for raw_key, value in source.items():
                if value is None:
                    continue
                key = raw_key.replace("-", "_")
                try:
                    if key in GBDT_KEYS:
                        gbdt[key] = GBDT_KEYS[key](value)
                    elif key in known:
                        conv = cls._CONVERT.get(key)
                        merged[key] = conv(value) if conv else value
                    else:
                        raise ConfigError(f"unknown configuration key {raw_key!r}")
                except ValueError as exc:
                    raise ConfigError(f"bad value for {raw_key!r}: {value!r}") from exc
        return cls(**merged, gbdt=gbdt)

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) in (None, "")]
        if missing:
            raise ConfigError("missing required setting(s): " + ", ".join(missing))


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"config file {path} does not exist")
    values = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return values
