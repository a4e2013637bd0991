"""Comma-separated data files: charge events, prices, menus and report tables."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .exceptions import InputError, ParseError
from .model import IncentiveMenu
from .pricing import PriceSeries
from .simulation import RecruitmentLedger, WelfareReport
from .utility import UtilityTable


def fmt(x) -> str:
    """Shortest decimal that round-trips the float (always >= 12 significant digits of precision)."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass(frozen=True)
class ChargeEventRecord:
    """One recorded plug-in: arrival epoch, charge duration and laxity, all in epochs."""

    arrival_epoch: int
    duration_epochs: int
    max_laxity_epochs: int
    cluster: int

    def __post_init__(self):
        if self.duration_epochs < 1:
            raise InputError("duration must be >= 1")
        if self.max_laxity_epochs < 0:
            raise InputError("laxity must be >= 0")
        if self.arrival_epoch < 0:
            raise InputError("arrival must be >= 0")

    @property
    def max_feasible_mode(self) -> int:
        return self.max_laxity_epochs


def _read_rows(path, required: Sequence[str], optional: Sequence[str] = ()):
    """Yield ``(line_number, {column: text})`` after checking the header."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("missing header", path, 1)
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"header must contain {','.join(required)} (missing {','.join(missing)})", path, 1)
        unknown = [c for c in header if c not in required and c not in optional]
        if unknown:
            raise ParseError(f"unexpected column {unknown[0]}", path, 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, line)
            yield line, dict(zip(header, (c.strip() for c in row)))


def _int(text: str, name: str, path, line) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{name} must be an integer, got {text!r}", path, line) from None


def _float(text: str, name: str, path, line) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name} must be numeric, got {text!r}", path, line) from None
    if not np.isfinite(value):
        raise ParseError(f"{name} must be finite", path, line)
    return value


def load_charge_events(path) -> list[ChargeEventRecord]:
    """Parse ``arrival,duration,laxity,cluster`` records (epochs, epochs, epochs, id)."""
    cols = ("arrival", "duration", "laxity", "cluster")
    out = []
    for line, row in _read_rows(path, cols):
        vals = {c: _int(row[c], c, path, line) for c in cols}
        try:
            out.append(ChargeEventRecord(vals["arrival"], vals["duration"], vals["laxity"], vals["cluster"]))
        except InputError as exc:
            raise ParseError(str(exc), path, line) from None
    return out


def load_prices(path, scale: float = 1.0) -> PriceSeries:
    """Parse ``hour,price[,base_load]``; hours must run 0, 1, 2, ... in file order.

    ``scale`` converts the file's unit, e.g. 0.001 for $/MWh into $/kWh.
    """
    hours, prices, loads = [], [], []
    has_load = None
    for line, row in _read_rows(path, ("hour", "price"), ("base_load",)):
        hour = _int(row["hour"], "hour", path, line)
        if hour != len(hours):
            if hour > len(hours):
                raise ParseError(f"missing hour {len(hours)}", path, line)
            raise ParseError(f"hour {hour} out of order", path, line)
        hours.append(hour)
        prices.append(_float(row["price"], "price", path, line) * scale)
        if has_load is None:
            has_load = "base_load" in row
        if has_load:
            loads.append(_float(row["base_load"], "base_load", path, line))
    if not prices:
        raise ParseError("no price rows", path)
    return PriceSeries(np.array(prices), np.array(loads) if has_load else None)


def write_prices(series: PriceSeries, path) -> None:
    rows = [[fmt(h), fmt(p)] + ([fmt(series.base_load[h])] if series.base_load is not None else [])
            for h, p in enumerate(series.hourly)]
    header = ["hour", "price"] + (["base_load"] if series.base_load is not None else [])
    write_table(path, header, rows)


def load_ambient(path) -> np.ndarray:
    """Parse ``epoch,ambient`` with epochs 0, 1, 2, ..."""
    values = []
    for line, row in _read_rows(path, ("epoch", "ambient")):
        epoch = _int(row["epoch"], "epoch", path, line)
        if epoch != len(values):
            raise ParseError(f"missing epoch {len(values)}", path, line)
        values.append(_float(row["ambient"], "ambient", path, line))
    if not values:
        raise ParseError("no ambient rows", path)
    return np.array(values)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a comma-separated table with ``\\n`` line endings."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else fmt(c) for c in row])


def write_menu(menu: IncentiveMenu, path) -> None:
    header = ["epoch"] + [f"m{m}" for m in range(1, menu.mode_count + 1)]
    write_table(path, header, ([t, *row] for t, row in enumerate(menu.values)))


def load_menu(path) -> IncentiveMenu:
    """Inverse of :func:`write_menu`; epochs must run 0, 1, 2, ..."""
    path = Path(path)
    with path.open(newline="") as fh:
        header = next(csv.reader(fh), None)
    if not header or header[0].strip() != "epoch" or len(header) < 2:
        raise ParseError("header must be epoch,m1,...,mM", path, 1)
    modes = [h.strip() for h in header[1:]]
    if modes != [f"m{m}" for m in range(1, len(modes) + 1)]:
        raise ParseError("mode columns must be m1,...,mM in order", path, 1)
    rows = []
    for line, row in _read_rows(path, ["epoch", *modes]):
        epoch = _int(row["epoch"], "epoch", path, line)
        if epoch != len(rows):
            raise ParseError(f"missing epoch {len(rows)}", path, line)
        rows.append([_float(row[c], c, path, line) for c in modes])
    if not rows:
        raise ParseError("menu has no rows", path)
    try:
        return IncentiveMenu(np.array(rows))
    except InputError as exc:
        raise ParseError(str(exc), path) from None


def write_utilities(table: UtilityTable, path) -> None:
    """Columns ``m1..mM`` hold U^t(m); ``f1..fM`` flag cells that were clipped or unevaluable."""
    modes = table.mode_count
    header = (["epoch"] + [f"m{m}" for m in range(1, modes + 1)]
              + [f"f{m}" for m in range(1, modes + 1)])
    write_table(path, header, ([t, *table.values[t, 1:], *table.flags[t, 1:]]
                               for t in range(table.horizon)))


def write_ledger(ledger: RecruitmentLedger, path) -> None:
    write_table(path, RecruitmentLedger.COLUMNS,
                ([getattr(ledger, c)[i] for c in RecruitmentLedger.COLUMNS] for i in range(len(ledger))))


def write_welfare(report: WelfareReport, path) -> None:
    header = ["bin_start", "tasks", "participants", "aggregator_profit", "consumer_savings",
              "dls_welfare", "dynamic_pricing_benchmark"]
    rows = zip(report.bins, report.tasks.astype(int), report.participants.astype(int), report.profit,
               report.savings, report.welfare, report.benchmark)
    write_table(path, header, rows)


def write_json(path, payload: dict) -> None:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    text = json.dumps(payload, sort_keys=True, indent=2, default=_json_default)
    Path(path).write_text(text + "\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise OSError(f"output directory {path} is not writable")
    return path


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Header and raw rows of a comma-separated file (for tests and tooling)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return (rows[0], rows[1:]) if rows else ([], [])


__all__ = [
    "ChargeEventRecord", "load_charge_events", "load_prices", "write_prices", "load_ambient",
    "write_table", "write_menu", "load_menu", "write_utilities", "write_ledger", "write_welfare",
    "write_json", "ensure_dir", "read_table", "fmt",
]
