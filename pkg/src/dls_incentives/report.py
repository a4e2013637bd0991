"""Pipeline runs behind the command line, and the report files they emit."""

from __future__ import annotations

import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .choice import calibrate_types
from .config import STREAMS, ClusterConfig, ScenarioConfig, envelope_for, population_for, utilities_for
from .exceptions import InputError
from .io import (ensure_dir, write_json, write_ledger, write_menu, write_table, write_utilities,
                 write_welfare)
from .learning import random_search, realized_profit_by_epoch
from .model import IncentiveMenu
from .optimizer import MenuSolution, brute_force_menu, expected_profit, optimize_menu
from .simulation import Population, RecruitmentLedger, WelfareReport, simulate_day, welfare_report
from .utility import UtilityTable


@dataclass
class RunOutputs:
    """Everything a command produced, keyed by cluster id where per-cluster."""

    command: str
    config: ScenarioConfig
    seed_source: str = "config"
    utilities: dict = field(default_factory=dict)
    menus: dict = field(default_factory=dict)        # name -> {q: IncentiveMenu}
    solutions: dict = field(default_factory=dict)    # name -> {q: MenuSolution}
    learning: dict = field(default_factory=dict)     # q -> LearningRun
    profit_table: Optional[tuple] = None             # (header, rows)
    ledgers: dict = field(default_factory=dict)      # name -> RecruitmentLedger
    calibrations: dict = field(default_factory=dict) # q -> (events, Calibration)
    summary: dict = field(default_factory=dict)

    def welfare(self, name: str) -> WelfareReport:
        cfg = self.config
        return welfare_report(self.ledgers[name], cfg.grid.horizon_epochs, cfg.bin_width)


def _each(cfg: ScenarioConfig):
    for cc in cfg.clusters:
        yield cc.cluster.id, cc


def run_utilities(cfg: ScenarioConfig) -> RunOutputs:
    out = RunOutputs("utilities", cfg)
    for q, cc in _each(cfg):
        out.utilities[q] = utilities_for(cfg, cc)
        out.summary[f"cluster_{q}_flagged_cells"] = int(out.utilities[q].flags.sum())
    return out


def _solve(cfg: ScenarioConfig, cc: ClusterConfig, utilities: UtilityTable) -> MenuSolution:
    sol = optimize_menu(utilities, cc.risk)
    if not sol.converged:
        raise InputError(f"QP for cluster {cc.cluster.id} did not converge")
    return sol


def run_optimize(cfg: ScenarioConfig, grid_step: Optional[float] = None) -> RunOutputs:
    """QP menu per cluster; with ``grid_step`` also the exhaustive grid menu for comparison."""
    out = RunOutputs("optimize", cfg)
    step = grid_step if grid_step is not None else cfg.grid_step
    out.menus["qp"], out.solutions["qp"] = {}, {}
    if step is not None:
        out.menus["grid"], out.solutions["grid"] = {}, {}
    rows = []
    for q, cc in _each(cfg):
        u = utilities_for(cfg, cc)
        out.utilities[q] = u
        sol = _solve(cfg, cc, u)
        out.menus["qp"][q], out.solutions["qp"][q] = sol.menu, sol
        out.summary[f"cluster_{q}_qp_objective"] = sol.objective
        out.summary[f"cluster_{q}_qp_kkt_residual"] = sol.kkt_residual
        per_epoch = expected_profit(sol.menu, u, cc.risk).per_epoch
        grid_epoch = None
        if step is not None:
            g = brute_force_menu(u, cc.risk, step=step)
            out.menus["grid"][q], out.solutions["grid"][q] = g.menu, g
            out.summary[f"cluster_{q}_grid_objective"] = g.objective
            grid_epoch = expected_profit(g.menu, u, cc.risk).per_epoch
        for t in range(u.horizon):
            rows.append([q, t, per_epoch[t]] + ([grid_epoch[t]] if grid_epoch is not None else []))
    header = ["cluster", "epoch", "qp_expected_per_arrival"] + (["grid_expected_per_arrival"] if step else [])
    out.profit_table = (header, rows)
    return out


def _population_generator(cfg: ScenarioConfig, cc: ClusterConfig, fixed: Optional[Population]):
    if fixed is not None:
        return lambda rng: fixed
    return lambda rng: population_for(cfg, cc, rng)


def fixed_population(cfg: ScenarioConfig, cc: ClusterConfig) -> Population:
    return population_for(cfg, cc, cfg.rng("population", cc.cluster.id))


def run_learn(cfg: ScenarioConfig, days: Optional[int] = None) -> RunOutputs:
    days = cfg.learning_days if days is None else days
    if days < 1:
        raise InputError("--days must be >= 1")
    out = RunOutputs("learn", cfg)
    out.menus["learned"] = {}
    for q, cc in _each(cfg):
        u = utilities_for(cfg, cc)
        out.utilities[q] = u
        pop = fixed_population(cfg, cc) if cfg.fixed_population else None
        run = random_search(days, _population_generator(cfg, cc, pop), u, cc.cluster, cfg.rng("learning", q),
                            envelope=envelope_for(cfg, u), paired=cfg.learning_paired, seed=cfg.seed)
        out.learning[q] = run
        out.menus["learned"][q] = run.best_menu
        out.summary[f"cluster_{q}_learned_profit"] = run.profit_at(days)
    return out


def _menus_from(cfg: ScenarioConfig, menu: Optional[IncentiveMenu]) -> dict:
    if menu is None:
        return {q: _solve(cfg, cc, utilities_for(cfg, cc)).menu for q, cc in _each(cfg)}
    if len(cfg.clusters) != 1:
        raise InputError("--menu needs a scenario with exactly one cluster")
    cc = cfg.clusters[0]
    if menu.values.shape != (cfg.grid.horizon_epochs, cc.cluster.mode_count):
        raise InputError(f"menu shape {menu.values.shape} does not match horizon "
                         f"{cfg.grid.horizon_epochs} and {cc.cluster.mode_count} modes")
    return {cc.cluster.id: menu}


def _simulate(cfg: ScenarioConfig, menus: dict, populations: dict, utilities: dict) -> RecruitmentLedger:
    parts = []
    for q, cc in _each(cfg):
        rng = cfg.rng("simulation", q)
        parts.append(simulate_day(menus[q], populations[q], utilities[q], cc.cluster, rng, reoffer=cfg.reoffer))
    return RecruitmentLedger.concat(parts)


def run_simulate(cfg: ScenarioConfig, menu: Optional[IncentiveMenu] = None) -> RunOutputs:
    out = RunOutputs("simulate", cfg)
    menus = _menus_from(cfg, menu)
    out.menus["posted"] = menus
    out.utilities = {q: utilities_for(cfg, cc) for q, cc in _each(cfg)}
    pops = {q: fixed_population(cfg, cc) for q, cc in _each(cfg)}
    out.ledgers["posted"] = _simulate(cfg, menus, pops, out.utilities)
    out.summary.update(out.welfare("posted").totals)
    return out


def run_calibrate(cfg: ScenarioConfig) -> RunOutputs:
    if cfg.events is None:
        raise InputError("calibrate needs population.file with recorded charge events")
    if cfg.sample_menu is None:
        raise InputError("calibrate needs calibration.sample_menu")
    out = RunOutputs("calibrate", cfg)
    for q, cc in _each(cfg):
        events = [ev for ev in cfg.events if ev.cluster == q]
        if cfg.sample_menu.mode_count != cc.cluster.mode_count:
            raise InputError(f"sample menu has {cfg.sample_menu.mode_count} modes, cluster {q} has "
                             f"{cc.cluster.mode_count}")
        cal = calibrate_types(events, cfg.sample_menu, cc.cluster.risk_shape)
        out.calibrations[q] = (events, cal)
        out.summary[f"cluster_{q}_gamma_max"] = cal.gamma_max
    return out


def run_report(cfg: ScenarioConfig, days: Optional[int] = None) -> RunOutputs:
    """QP menu against random search after a short and a long run, on one fixed population per cluster.

    All schemes are scored on the same tasks with the same simulation stream.
    """
    days = cfg.learning_days if days is None else days
    short = min(cfg.compare_days, days)
    out = RunOutputs("report", cfg)
    out.menus = {"qp": {}, f"learned_{short}": {}, f"learned_{days}": {}}
    rows, qp_parts, learned_parts = [], [], []
    for q, cc in _each(cfg):
        u = utilities_for(cfg, cc)
        out.utilities[q] = u
        sol = _solve(cfg, cc, u)
        pop = fixed_population(cfg, cc)
        run = random_search(days, _population_generator(cfg, cc, pop if cfg.fixed_population else None), u,
                            cc.cluster, cfg.rng("learning", q), envelope=envelope_for(cfg, u),
                            paired=cfg.learning_paired, seed=cfg.seed)
        out.learning[q] = run
        schemes = {"qp": sol.menu, f"learned_{short}": run.incumbent_at(short), f"learned_{days}": run.best_menu}
        for name, menu in schemes.items():
            out.menus[name][q] = menu
        realized = {name: realized_profit_by_epoch(menu, pop, u, cc.cluster, cfg.rng("simulation", q))
                    for name, menu in schemes.items()}
        caps = np.bincount(np.minimum(pop.cap, cc.cluster.mode_count), minlength=cc.cluster.mode_count + 1)
        cap_probs = caps / max(caps.sum(), 1)
        per_arrival = expected_profit(sol.menu, u, cc.risk, cap_probs=cap_probs).per_epoch
        arrivals = np.bincount(pop.arrival[pop.arrival < u.horizon], minlength=u.horizon)[:u.horizon]
        for t in range(u.horizon):
            rows.append([q, t, arrivals[t], per_arrival[t] * arrivals[t]] + [realized[n][t] for n in schemes])
        for name in schemes:
            out.summary[f"cluster_{q}_{name}_realized"] = float(realized[name].sum())
        out.summary[f"cluster_{q}_qp_expected"] = float(per_arrival @ arrivals)
        qp_parts.append(simulate_day(sol.menu, pop, u, cc.cluster, cfg.rng("simulation", q), cfg.reoffer))
        learned_parts.append(simulate_day(run.best_menu, pop, u, cc.cluster, cfg.rng("simulation", q), cfg.reoffer))
    header = ["cluster", "epoch", "arrivals", "qp_expected"] + [f"{n}_realized" for n in out.menus]
    out.profit_table = (header, rows)
    out.ledgers["qp"] = RecruitmentLedger.concat(qp_parts)
    out.ledgers[f"learned_{days}"] = RecruitmentLedger.concat(learned_parts)
    return out


def _versions() -> dict:
    return {"package": __version__, "numpy": np.__version__, "python": platform.python_version()}


def emit_report(outputs: RunOutputs, out_dir) -> list[Path]:
    """Write the tables of a run plus ``manifest.json``; returns the files written, sorted."""
    out_dir = ensure_dir(out_dir)
    cfg = outputs.config
    written = []

    def path(name):
        p = out_dir / name
        written.append(p)
        return p

    for q, table in sorted(outputs.utilities.items()):
        write_utilities(table, path(f"utilities_c{q}.csv"))
    for name, menus in sorted(outputs.menus.items()):
        for q, menu in sorted(menus.items()):
            write_menu(menu, path(f"menu_{name}_c{q}.csv"))
    for q, run in sorted(outputs.learning.items()):
        write_table(path(f"learning_c{q}.csv"), ["day", "incumbent_profit"],
                    ([d + 1, p] for d, p in enumerate(run.profit_trajectory)))
    if outputs.profit_table is not None:
        header, rows = outputs.profit_table
        write_table(path("profit_by_epoch.csv"), header, rows)
    for name, ledger in sorted(outputs.ledgers.items()):
        write_ledger(ledger, path(f"ledger_{name}.csv"))
        write_welfare(outputs.welfare(name), path(f"welfare_{name}.csv"))
    for q, (events, cal) in sorted(outputs.calibrations.items()):
        write_table(path(f"calibration_c{q}.csv"), ["event", "arrival", "laxity", "gamma"],
                    ([i, ev.arrival_epoch, ev.max_laxity_epochs, g] for i, (ev, g) in enumerate(zip(events, cal.gammas))))

    welfare = {name: outputs.welfare(name).totals for name in sorted(outputs.ledgers)}
    manifest = {
        "command": outputs.command,
        "config": cfg.echo,
        "seed": cfg.seed,
        "seed_source": outputs.seed_source,
        "streams": STREAMS,
        "prices_source": cfg.prices_source,
        "versions": _versions(),
        "summary": dict(sorted(outputs.summary.items())),
        "welfare_totals": welfare,
        "files": sorted(p.name for p in written),
    }
    write_json(path("manifest.json"), manifest)
    return sorted(written)


__all__ = ["RunOutputs", "run_utilities", "run_optimize", "run_learn", "run_simulate", "run_calibrate",
           "run_report", "emit_report", "fixed_population"]
