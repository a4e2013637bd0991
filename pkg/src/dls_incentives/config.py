"""Scenario configuration from a flat ``key = value`` file, and the inputs it describes."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import InputError
from .io import ChargeEventRecord, load_ambient, load_charge_events, load_menu, load_prices
from .model import Cluster, DeferrablePulse, IncentiveMenu, RiskModel, TCLParams, TimeGrid, UniformPrior
from .pricing import PriceSeries, PriceShape, SubHourlyPrices, expand_prices, synth_prices
from .simulation import Population, PopulationSpec, generate_population, population_from_events
from .utility import UtilityTable, utility_table

SEED_ENV = "DLS_SEED"
DEFAULT_GAMMA_MAX = 0.0721

# Fixed stream ids so each consumer of randomness is independent of the others.
STREAMS = {"population": 1, "learning": 2, "simulation": 3}

_TOP_KEYS = {
    "epochs_per_hour", "horizon_epochs", "seed", "clusters", "ambient", "ambient.file",
    "prices.file", "prices.scale", "prices.seed", "prices.peak_hour", "prices.peak_level",
    "prices.offpeak_level", "prices.hours", "prices.peak_width", "prices.noise",
    "population.file", "population.tasks", "population.laxity_min", "population.laxity_max",
    "population.intensity", "learning.days", "learning.compare_days", "learning.envelope",
    "learning.mode", "learning.population", "optimizer.grid_step",
    "calibration.sample_menu", "simulation.reoffer", "report.bin_width",
}
_CLUSTER_KEYS = {
    "kind", "modes", "risk", "gamma_max", "pulse", "power", "duration", "loss_rate", "heat_gain",
    "comfort_low", "comfort_high", "tolerance", "noise_std",
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


class _Keys:
    """Typed access to the flat key table with error messages naming the key."""

    def __init__(self, table: dict, origin: str):
        self.table = table
        self.origin = origin

    def has(self, key):
        return key in self.table

    def text(self, key, default=None):
        return self.table.get(key, default)

    def number(self, key, default=None, kind=float):
        if key not in self.table:
            if default is None:
                raise InputError(f"{self.origin}: missing required key {key}")
            return default
        raw = self.table[key]
        try:
            value = kind(raw) if kind is float else int(raw, 10)
        except ValueError:
            raise InputError(f"{self.origin}: {key} must be {'an integer' if kind is int else 'numeric'}, got {raw!r}") from None
        if kind is float and not np.isfinite(value):
            raise InputError(f"{self.origin}: {key} must be finite")
        return value

    def integer(self, key, default=None):
        return self.number(key, default, kind=int)

    def vector(self, key):
        try:
            return _floats(self.table[key])
        except ValueError:
            raise InputError(f"{self.origin}: {key} must be a comma-separated list of numbers") from None

    def flag(self, key, default=False):
        if key not in self.table:
            return default
        value = self.table[key].lower()
        if value in ("1", "true", "yes", "on"):
            return True
        if value in ("0", "false", "no", "off"):
            return False
        raise InputError(f"{self.origin}: {key} must be true or false")


@dataclass(frozen=True)
class ClusterConfig:
    cluster: Cluster
    gamma_max: float

    @property
    def risk(self) -> RiskModel:
        return RiskModel.for_cluster(self.cluster, UniformPrior(self.gamma_max))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs, with files already loaded and validated."""

    grid: TimeGrid
    seed: int
    clusters: tuple
    prices: PriceSeries
    prices_source: str
    ambient: object = None
    events: Optional[tuple] = None
    population: PopulationSpec = field(default_factory=PopulationSpec)
    learning_days: int = 1000
    compare_days: int = 30
    learning_envelope: object = "utility"
    learning_paired: bool = False
    fixed_population: bool = True
    grid_step: Optional[float] = None
    sample_menu: Optional[IncentiveMenu] = None
    reoffer: bool = False
    bin_width: int = 1
    echo: dict = field(default_factory=dict)

    def cluster(self, q: int) -> ClusterConfig:
        for c in self.clusters:
            if c.cluster.id == q:
                return c
        raise InputError(f"unknown cluster {q}")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))

    def rng(self, stream: str, cluster: int = 0, extra: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, STREAMS[stream], cluster, extra])


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    """Flat ``key = value`` pairs; ``#`` and ``;`` start comments; keys are case sensitive."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
                                       strict=True)
    parser.optionxform = str
    try:
        parser.read_string("[scenario]\n" + text, source=origin)
    except configparser.Error as exc:
        raise InputError(f"{origin}: {exc.message.splitlines()[0] if hasattr(exc, 'message') else exc}") from None
    return dict(parser["scenario"])


def _resolve(base: Path, name: str, key: str, origin: str) -> Path:
    path = Path(name)
    if not path.is_absolute():
        path = base / path
    if not path.is_file():
        raise InputError(f"{origin}: {key} refers to missing file {name}")
    return path


def _cluster(keys: _Keys, q: int) -> ClusterConfig:
    p = f"cluster.{q}."
    kind = keys.text(p + "kind", "deferrable")
    modes = keys.integer(p + "modes")
    risk = np.array(keys.vector(p + "risk")) if keys.has(p + "risk") else None
    if kind == "deferrable":
        if keys.has(p + "pulse"):
            spec = DeferrablePulse(tuple(keys.vector(p + "pulse")))
        else:
            spec = DeferrablePulse((keys.number(p + "power"),) * keys.integer(p + "duration"))
    elif kind == "tcl":
        tol = keys.number(p + "tolerance") if keys.has(p + "tolerance") else None
        spec = TCLParams(keys.number(p + "loss_rate"), keys.number(p + "heat_gain"), keys.number(p + "power"),
                         keys.number(p + "comfort_low"), keys.number(p + "comfort_high"), tol,
                         keys.number(p + "noise_std", 0.0))
    else:
        raise InputError(f"{keys.origin}: {p}kind must be deferrable or tcl")
    gamma_max = keys.number(p + "gamma_max", DEFAULT_GAMMA_MAX)
    if not gamma_max > 0:
        raise InputError(f"{keys.origin}: {p}gamma_max must be positive")
    return ClusterConfig(Cluster(q, modes, spec, risk), gamma_max)


def config_from_dict(table: dict, base: Path = Path("."), origin: str = "<config>") -> ScenarioConfig:
    for key in table:
        if key in _TOP_KEYS:
            continue
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == "cluster" and parts[1].isdigit() and parts[2] in _CLUSTER_KEYS:
            continue
        raise InputError(f"{origin}: unknown key {key}")
    keys = _Keys(table, origin)
    try:
        grid = TimeGrid(keys.integer("epochs_per_hour", 2), keys.integer("horizon_epochs", 48))
        ids = [int(v) for v in keys.text("clusters", "1").replace(",", " ").split()]
    except ValueError:
        raise InputError(f"{origin}: clusters must list integer ids") from None
    if not ids or len(set(ids)) != len(ids):
        raise InputError(f"{origin}: clusters must list distinct ids")
    clusters = tuple(_cluster(keys, q) for q in ids)
    for key in table:
        if key.startswith("cluster.") and int(key.split(".")[1]) not in ids:
            raise InputError(f"{origin}: {key} names a cluster not listed in clusters")

    scale = keys.number("prices.scale", 1.0)
    if keys.has("prices.file"):
        path = _resolve(base, table["prices.file"], "prices.file", origin)
        prices = load_prices(path, scale)
        source = str(path)
    else:
        shape = PriceShape(keys.integer("prices.peak_hour", 18), keys.number("prices.peak_level", 0.08),
                           keys.number("prices.offpeak_level", 0.03), keys.integer("prices.hours", 36),
                           keys.integer("prices.peak_width", 6), keys.number("prices.noise", 0.1))
        series = synth_prices(shape, seed=keys.integer("prices.seed", 0))
        prices = PriceSeries(series.hourly * scale)
        source = "synthetic"

    ambient = None
    if keys.has("ambient.file"):
        ambient = load_ambient(_resolve(base, table["ambient.file"], "ambient.file", origin))
    elif keys.has("ambient"):
        ambient = keys.number("ambient")
    if ambient is None and any(isinstance(c.cluster.spec, TCLParams) for c in clusters):
        raise InputError(f"{origin}: TCL clusters need ambient or ambient.file")

    events = None
    if keys.has("population.file"):
        events = tuple(load_charge_events(_resolve(base, table["population.file"], "population.file", origin)))
        for ev in events:
            if ev.cluster not in ids:
                raise InputError(f"{origin}: population.file has events for unknown cluster {ev.cluster}")
    intensity = tuple(keys.vector("population.intensity")) if keys.has("population.intensity") else None
    population = PopulationSpec(keys.integer("population.tasks", 500), grid.horizon_epochs,
                                keys.integer("population.laxity_min", 1), keys.integer("population.laxity_max", 8),
                                intensity)

    envelope = keys.text("learning.envelope", "utility")
    if envelope != "utility":
        envelope = keys.number("learning.envelope")
        if envelope < 0:
            raise InputError(f"{origin}: learning.envelope must be 'utility' or a non-negative number")
    mode = keys.text("learning.mode", "noisy")
    if mode not in ("noisy", "paired"):
        raise InputError(f"{origin}: learning.mode must be noisy or paired")
    pop_mode = keys.text("learning.population", "fixed")
    if pop_mode not in ("fixed", "daily"):
        raise InputError(f"{origin}: learning.population must be fixed or daily")
    days = keys.integer("learning.days", 1000)
    compare = keys.integer("learning.compare_days", 30)
    if days < 1 or not 1 <= compare <= days:
        raise InputError(f"{origin}: need learning.days >= 1 and 1 <= learning.compare_days <= learning.days")

    step = keys.number("optimizer.grid_step") if keys.has("optimizer.grid_step") else None
    sample_menu = None
    if keys.has("calibration.sample_menu"):
        sample_menu = load_menu(_resolve(base, table["calibration.sample_menu"], "calibration.sample_menu", origin))
    bin_width = keys.integer("report.bin_width", 1)
    if bin_width < 1:
        raise InputError(f"{origin}: report.bin_width must be >= 1")

    return ScenarioConfig(
        grid=grid, seed=keys.integer("seed", 0), clusters=clusters, prices=prices, prices_source=source,
        ambient=ambient, events=events, population=population, learning_days=days, compare_days=compare,
        learning_envelope=envelope, learning_paired=mode == "paired", fixed_population=pop_mode == "fixed",
        grid_step=step, sample_menu=sample_menu, reoffer=keys.flag("simulation.reoffer"),
        bin_width=bin_width, echo=dict(sorted(table.items())),
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    return config_from_dict(parse_config_text(text, str(path)), path.parent, str(path))


def resolve_seed(cli_seed: Optional[int], config_seed: int, environ=None) -> tuple[int, str]:
    """Seed precedence: command line, then ``DLS_SEED``, then the config file."""
    if cli_seed is not None:
        return int(cli_seed), "cli"
    environ = os.environ if environ is None else environ
    raw = environ.get(SEED_ENV)
    if raw not in (None, ""):
        try:
            return int(raw), "env"
        except ValueError:
            raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
    return int(config_seed), "config"


# -- materialised inputs --------------------------------------------------------


def sub_hourly_prices(cfg: ScenarioConfig) -> SubHourlyPrices:
    return expand_prices(cfg.prices, cfg.grid)


def utilities_for(cfg: ScenarioConfig, cc: ClusterConfig) -> UtilityTable:
    return utility_table(cc.cluster, cfg.grid, sub_hourly_prices(cfg), cfg.ambient)


def population_for(cfg: ScenarioConfig, cc: ClusterConfig, rng: np.random.Generator) -> Population:
    """One day's tasks for a cluster: recorded events with sampled types, or synthetic arrivals."""
    q = cc.cluster.id
    prior = UniformPrior(cc.gamma_max)
    if cfg.events is not None:
        events = [ev for ev in cfg.events if ev.cluster == q]
        return population_from_events(events, prior.sample(rng, len(events)), cc.cluster.mode_count)
    spec = PopulationSpec(cfg.population.tasks, cfg.population.horizon, cfg.population.laxity_min,
                          cfg.population.laxity_max, cfg.population.intensity, q)
    return generate_population(spec, prior, cc.cluster.mode_count, rng)


def envelope_for(cfg: ScenarioConfig, utilities: UtilityTable) -> np.ndarray:
    if cfg.learning_envelope == "utility":
        return utilities.values[:, 1:]
    return np.full((utilities.horizon, utilities.mode_count), float(cfg.learning_envelope))


__all__ = [
    "ScenarioConfig", "ClusterConfig", "ChargeEventRecord", "parse_config_text", "config_from_dict",
    "load_config", "resolve_seed", "sub_hourly_prices", "utilities_for", "population_for", "envelope_for",
    "SEED_ENV", "STREAMS", "DEFAULT_GAMMA_MAX",
]
