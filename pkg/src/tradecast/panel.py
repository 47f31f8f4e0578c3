"""Trade and economic-covariate CSV ingest, inner join, and panel utilities.

A :class:`PanelTable` is column oriented: key columns (origin, dest, commodity,
year), the trade value target, and feature columns tagged numeric or
categorical.  Numeric missing cells are NaN; categorical columns hold integer
codes into a sorted label tuple with ``-1`` marking a missing cell.
"""
from __future__ import annotations

import csv
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateKey,
    HeaderMismatch,
    InsufficientYears,
    MissingFile,
    RowError,
    UnknownColumn,
)

COMMODITIES = ("Wheat", "Milk", "Rice", "Corn", "Beef", "Soy", "Sugar")
TRADE_HEADER = ("origin_iso3", "dest_iso3", "commodity", "year", "value_usd")
ECON_KEYS = ("origin_iso3", "dest_iso3", "year")
KEY_COLUMNS = ("origin", "dest", "commodity", "year")
TARGET = "value_usd"

NUMERIC = "numeric"
CATEGORICAL = "categorical"

_ISO3 = re.compile(r"^[A-Z]{3}$")


@dataclass(frozen=True)
class TradeRecord:
    origin: str
    dest: str
    commodity: str
    year: int
    value: float

    def problems(self) -> str | None:
        """Return the first violated invariant, or None when the record is valid."""
        for name in ("origin", "dest"):
            if not _ISO3.match(getattr(self, name)):
                return f"{name} {getattr(self, name)!r} is not an ISO3 code"
        if self.origin == self.dest:
            return "origin = dest"
        if self.commodity not in COMMODITIES:
            return f"unknown commodity {self.commodity!r}"
        if not 1900 <= self.year <= 2100:
            return f"year {self.year} outside [1900, 2100]"
        if not math.isfinite(self.value) or self.value < 0:
            return f"value {self.value!r} must be finite and >= 0"
        return None


@dataclass(frozen=True)
class EconRecord:
    origin: str
    dest: str
    year: int
    # numeric cells are float, categorical cells str, missing None
    features: dict = field(default_factory=dict)


def _open_rows(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path} does not exist")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows


def _parse_year(text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise RowError(line, f"year {text!r} is not an integer") from None


def parse_trade_csv(path) -> list[TradeRecord]:
    rows = _open_rows(path)
    header = tuple(rows[0]) if rows else ()
    if header != TRADE_HEADER:
        raise HeaderMismatch(",".join(TRADE_HEADER), ",".join(header))

    records = []
    seen = set()
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(TRADE_HEADER):
            raise RowError(line, f"expected {len(TRADE_HEADER)} fields, got {len(row)}")
        origin, dest, commodity, year, value = (c.strip() for c in row)
        try:
            value_f = float(value)
        except ValueError:
            raise RowError(line, f"value {value!r} is not a number") from None
        rec = TradeRecord(origin, dest, commodity, _parse_year(year, line), value_f)
        reason = rec.problems()
        if reason:
            raise RowError(line, reason)
        key = (rec.origin, rec.dest, rec.commodity, rec.year)
        if key in seen:
            raise RowError(line, f"duplicate trade key {key}")
        seen.add(key)
        records.append(rec)
    return records


def _as_number(text: str) -> float | None:
    try:
        v = float(text)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def parse_econ_csv(path) -> list[EconRecord]:
    rows = _open_rows(path)
    header = tuple(c.strip() for c in rows[0]) if rows else ()
    if header[:3] != ECON_KEYS or len(header) < 4:
        raise HeaderMismatch(",".join(ECON_KEYS) + ",<feature...>", ",".join(header))
    names = header[3:]
    if any(not n for n in names) or len(set(names)) != len(names):
        raise HeaderMismatch("unique non-empty feature names", ",".join(names))

    raw = []
    seen = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise RowError(line, f"expected {len(header)} fields, got {len(row)}")
        origin, dest, year = (c.strip() for c in row[:3])
        key = (origin, dest, _parse_year(year, line))
        if key in seen:
            raise DuplicateKey(key, line)
        seen[key] = line
        raw.append((key, [c.strip() for c in row[3:]]))

    numeric = [
        all(_as_number(cells[j]) is not None for _, cells in raw if cells[j] != "")
        for j in range(len(names))
    ]
    out = []
    for (origin, dest, year), cells in raw:
        feats = {}
        for j, name in enumerate(names):
            cell = cells[j]
            if cell == "":
                feats[name] = None
            elif numeric[j]:
                feats[name] = float(cell)
            else:
                feats[name] = cell
        out.append(EconRecord(origin, dest, year, feats))
    return out


def feature_kinds(records: Iterable[EconRecord]) -> dict[str, str]:
    """Numeric when every present cell of the column is a float, else categorical."""
    kinds: dict[str, str] = {}
    for rec in records:
        for name, v in rec.features.items():
            kinds.setdefault(name, NUMERIC)
            if v is not None and not isinstance(v, float):
                kinds[name] = CATEGORICAL
    return kinds


class PanelTable:
    """Immutable joined dataset: keys, ``value_usd`` target and tagged features."""

    def __init__(self, origin, dest, commodity, year, value, features=None,
                 kinds=None, labels=None):
        self.origin = np.asarray(origin, dtype=object)
        self.dest = np.asarray(dest, dtype=object)
        self.commodity = np.asarray(commodity, dtype=object)
        self.year = np.asarray(year, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        self.features = dict(features or {})
        self.kinds = dict(kinds or {})
        self.labels = {k: tuple(v) for k, v in (labels or {}).items()}

        n = len(self.year)
        cols = [self.origin, self.dest, self.commodity, self.value, *self.features.values()]
        if any(len(c) != n for c in cols):
            raise ValueError("all columns must have equal length")
        if set(self.features) != set(self.kinds):
            raise ValueError("every feature column needs a kind")
        for name, kind in self.kinds.items():
            if kind == CATEGORICAL:
                self.features[name] = np.asarray(self.features[name], dtype=np.int64)
                if name not in self.labels:
                    raise ValueError(f"categorical column {name!r} has no labels")
            elif kind == NUMERIC:
                self.features[name] = np.asarray(self.features[name], dtype=np.float64)
            else:
                raise ValueError(f"unknown column kind {kind!r}")
        for arr in (self.origin, self.dest, self.commodity, self.year, self.value,
                    *self.features.values()):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.year)

    @property
    def n_rows(self) -> int:
        return len(self)

    @property
    def feature_names(self) -> list[str]:
        return list(self.features)

    def keys(self) -> list[tuple]:
        return list(zip(self.origin, self.dest, self.commodity, self.year.tolist()))

    def column(self, name: str) -> np.ndarray:
        if name in self.features:
            return self.features[name]
        if name == TARGET:
            return self.value
        if name in KEY_COLUMNS:
            return getattr(self, name)
        raise UnknownColumn(f"no column named {name!r}")

    def decoded(self, name: str) -> list:
        """Column values with categorical codes replaced by labels, missing as None."""
        col = self.column(name)
        if self.kinds.get(name) == CATEGORICAL:
            labels = self.labels[name]
            return [labels[c] if c >= 0 else None for c in col.tolist()]
        if col.dtype == np.float64:
            return [None if math.isnan(v) else v for v in col.tolist()]
        return col.tolist()

    def take(self, idx) -> "PanelTable":
        idx = np.asarray(idx, dtype=np.int64)
        return PanelTable(
            self.origin[idx], self.dest[idx], self.commodity[idx], self.year[idx],
            self.value[idx], {k: v[idx] for k, v in self.features.items()},
            self.kinds, self.labels,
        )

    def rows(self) -> list[tuple]:
        """Decoded rows in storage order: keys, target, features."""
        cols = [self.origin.tolist(), self.dest.tolist(), self.commodity.tolist(),
                self.year.tolist(), self.value.tolist()]
        cols += [self.decoded(n) for n in self.features]
        return list(zip(*cols))

    def equals(self, other: "PanelTable") -> bool:
        return (
            isinstance(other, PanelTable)
            and self.feature_names == other.feature_names
            and self.kinds == other.kinds
            and self.labels == other.labels
            and np.array_equal(self.year, other.year)
            and np.array_equal(self.value, other.value)
            and self.keys() == other.keys()
            and all(np.array_equal(self.features[n], other.features[n], equal_nan=True)
                    for n in self.features)
        )

    def __repr__(self) -> str:
        return f"PanelTable(rows={len(self)}, features={self.feature_names})"


def _build_panel(keys: Sequence[tuple], values: Sequence[float],
                 feature_rows: Sequence[dict], kinds: dict[str, str]) -> PanelTable:
    """Assemble a panel from per-row keys and raw feature maps, sorted by
    (commodity, origin, dest, year).

    Column kinds are re-inferred from the rows kept, and categorical labels are
    compacted to those present, so a written panel parses back identically.
    """
    order = sorted(range(len(keys)), key=lambda i: (keys[i][2], keys[i][0], keys[i][1], keys[i][3]))
    keys = [keys[i] for i in order]
    values = [values[i] for i in order]
    feature_rows = [feature_rows[i] for i in order]
    for a, b in zip(keys, keys[1:]):
        if a == b:
            raise DuplicateKey(a)

    features, labels = {}, {}
    kinds = dict(kinds)
    for name, kind in kinds.items():
        cells = [fr.get(name) for fr in feature_rows]
        if kind == CATEGORICAL and all(_as_number(str(c)) is not None for c in cells if c is not None):
            # same rule as the econ parser, applied to the joined cells
            kinds[name] = kind = NUMERIC
            cells = [None if c is None else float(c) for c in cells]
        if kind == NUMERIC:
            features[name] = np.array([np.nan if c is None else c for c in cells], dtype=np.float64)
        else:
            present = sorted({c for c in cells if c is not None})
            code = {lab: i for i, lab in enumerate(present)}
            features[name] = np.array([-1 if c is None else code[c] for c in cells], dtype=np.int64)
            labels[name] = tuple(present)
    cols = list(zip(*keys)) if keys else [(), (), (), ()]
    return PanelTable(cols[0], cols[1], cols[2], cols[3], values, features, kinds, labels)


def inner_join(trade: Sequence[TradeRecord], econ: Sequence[EconRecord]) -> PanelTable:
    by_key = {(e.origin, e.dest, e.year): e for e in econ}
    kinds = feature_kinds(econ)
    keys, values, feats = [], [], []
    for t in trade:
        match = by_key.get((t.origin, t.dest, t.year))
        if match is None:
            continue
        keys.append((t.origin, t.dest, t.commodity, t.year))
        values.append(t.value)
        feats.append(match.features)
    return _build_panel(keys, values, feats, kinds)


def _fmt_number(v: float) -> str:
    if math.isnan(v):
        return ""
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def write_panel_csv(panel: PanelTable, path) -> None:
    names = panel.feature_names
    decoded = {n: panel.decoded(n) for n in names}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*TRADE_HEADER, *names])
        for i in range(len(panel)):
            row = [panel.origin[i], panel.dest[i], panel.commodity[i],
                   str(panel.year[i]), _fmt_number(float(panel.value[i]))]
            for n in names:
                cell = decoded[n][i]
                if cell is None:
                    row.append("")
                elif panel.kinds[n] == NUMERIC:
                    row.append(_fmt_number(cell))
                else:
                    row.append(cell)
            w.writerow(row)


def read_panel_csv(path) -> PanelTable:
    rows = _open_rows(path)
    header = tuple(rows[0]) if rows else ()
    if header[:5] != TRADE_HEADER:
        raise HeaderMismatch(",".join(TRADE_HEADER) + ",<feature...>", ",".join(header))
    names = header[5:]
    keys, values, raw = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise RowError(line, f"expected {len(header)} fields, got {len(row)}")
        rec = TradeRecord(row[0], row[1], row[2], _parse_year(row[3], line), float(row[4]))
        reason = rec.problems()
        if reason:
            raise RowError(line, reason)
        keys.append((rec.origin, rec.dest, rec.commodity, rec.year))
        values.append(rec.value)
        raw.append(row[5:])
    kinds, feats = {}, [dict() for _ in raw]
    for j, name in enumerate(names):
        numeric = all(_as_number(r[j]) is not None for r in raw if r[j] != "")
        kinds[name] = NUMERIC if numeric else CATEGORICAL
        for fr, r in zip(feats, raw):
            cell = r[j]
            fr[name] = None if cell == "" else (float(cell) if numeric else cell)
    return _build_panel(keys, values, feats, kinds)


def filter_commodity(panel: PanelTable, commodity: str) -> PanelTable:
    return panel.take(np.flatnonzero(panel.commodity == commodity))


def top_exporters(panel: PanelTable, commodity: str, n: int) -> list[tuple[str, float]]:
    if n < 1:
        raise ValueError("n must be >= 1")
    totals: dict[str, float] = defaultdict(float)
    mask = panel.commodity == commodity
    for origin, value in zip(panel.origin[mask], panel.value[mask]):
        totals[origin] += value
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:n]


def time_split(panel: PanelTable, holdout_years: int) -> tuple[PanelTable, PanelTable]:
    """Hold out the last ``holdout_years`` distinct years as the validation part."""
    if holdout_years < 1:
        raise ValueError("holdout_years must be >= 1")
    years = np.unique(panel.year)
    if len(years) <= holdout_years:
        raise InsufficientYears(
            f"panel spans {len(years)} distinct years, need more than {holdout_years}")
    cutoff = years[-holdout_years]
    valid = panel.year >= cutoff
    return panel.take(np.flatnonzero(~valid)), panel.take(np.flatnonzero(valid))


def exporter_series(panel: PanelTable, exporter: str,
                    commodity: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Yearly export totals of one country summed over all destinations.

    Years inside the observed span with no recorded flow count as zero trade.
    """
    mask = panel.origin == exporter
    if commodity is not None:
        mask &= panel.commodity == commodity
    if not mask.any():
        return np.array([], dtype=np.int64), np.array([], dtype=np.float64)
    years = np.arange(panel.year[mask].min(), panel.year[mask].max() + 1)
    totals = np.zeros(len(years))
    np.add.at(totals, panel.year[mask] - years[0], panel.value[mask])
    return years, totals
