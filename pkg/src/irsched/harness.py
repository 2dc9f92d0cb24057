"""Seeded Monte Carlo sweeps, metric aggregation, CSV and SVG output."""
from __future__ import annotations

import csv
import itertools
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import drop_ues, synthesize_channels
from .config import ScenarioConfig
from .irs import Codebook, build_codebook
from .rate import RateTable, build_rate_table, fill_codewords
from . import sched

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["point", "params", "scheduler", "n_drops", "mean_sum_rate", "stderr_sum_rate",
                   "mean_reconfig_bits", "control_reduction", "n_violations"]
DROP_COLUMNS = ["point", "params", "scheduler", "drop", "sum_rate", "reconfig_bits"]

# stream tags for SeedSequence spawn keys
_CODEBOOK, _DROP, _GA = 0, 1, 2


@dataclass
class SchedulerMetrics:
    sum_rates: list[float] = field(default_factory=list)
    ue_rates: list[np.ndarray] = field(default_factory=list)
    reconfig_bits: list[int] = field(default_factory=list)
    wall_s: list[float] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.sum_rates))

    @property
    def stderr(self) -> float:
        n = len(self.sum_rates)
        return float(np.std(self.sum_rates, ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    @property
    def ecdf_samples(self) -> np.ndarray:
        return np.concatenate(self.ue_rates) if self.ue_rates else np.empty(0)


@dataclass
class MetricsReport:
    """Results at one sweep point."""

    params: dict
    cfg: ScenarioConfig
    schedulers: dict[str, SchedulerMetrics]

    @property
    def label(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.params.items())


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def sweep_points(sweep: dict | None):
    """Cartesian product of ``{param: [values]}`` in insertion order."""
    if not sweep:
        yield {}
        return
    names = list(sweep)
    for combo in itertools.product(*(sweep[n] for n in names)):
        yield dict(zip(names, combo))


def _codebook_key(cfg: ScenarioConfig) -> tuple:
    d = cfg.to_dict()
    for k in ("Z", "n_drops", "ga"):
        d.pop(k)
    return tuple(sorted((k, str(v)) for k, v in d.items()))


def run_drop(cfg: ScenarioConfig, cb: Codebook, drop_index: int, schedulers, mode="exhaustive"):
    """One frame: drop UEs, synthesize channels, build the rate table, run every scheduler.

    Returns ``{name: (grid, table, seconds)}``.
    """
    rng = stream(cfg.seed, _DROP, drop_index)
    drop = drop_ues(cfg, rng)
    channels = synthesize_channels(cfg, drop, rng)
    t0 = time.perf_counter()
    seeds = None
    if mode == "projected":
        # seed clusters from projected cells, then evaluate only the chosen codewords
        proj = build_rate_table(channels, cb, cfg, mode="projected")
        seeds = sched.configuration_assignment(proj, cfg.Z)
        needs_all = any(s in ("da", "exhaustive", "ga") for s in schedulers)
        table = build_rate_table(channels, cb, cfg) if needs_all else \
            fill_codewords(proj, channels, cb, cfg, [c for _, c, _ in seeds])
    else:
        table = build_rate_table(channels, cb, cfg)
    t_table = time.perf_counter() - t0

    out = {}
    gmax_grid = None
    for name in schedulers:
        t0 = time.perf_counter()
        if name == "gmax":
            grid = sched.gmax(table, cfg, seeds=seeds)
        elif name == "da":
            grid = sched.da(table, cfg)
        elif name == "uoscbc":
            grid = sched.uoscbc(table, cfg, seeds=seeds)
        elif name == "ga":
            seed_grid = gmax_grid if gmax_grid is not None else sched.gmax(table, cfg, seeds=seeds)
            grid = sched.ga(table, cfg, seed_grid, rng=stream(cfg.seed, _GA, drop_index))
        elif name == "exhaustive":
            grid = sched.exhaustive(table, cfg)
        else:
            raise ValueError(f"unknown scheduler {name!r}")
        if name == "gmax":
            gmax_grid = grid
        out[name] = (grid, table, time.perf_counter() - t0 + t_table)
    return out


def run_point(cfg: ScenarioConfig, cb: Codebook, schedulers, mode="exhaustive", params=None) -> MetricsReport:
    metrics = {name: SchedulerMetrics() for name in schedulers}
    b_q = cb.b_q
    for d in range(cfg.n_drops):
        for name, (grid, table, secs) in run_drop(cfg, cb, d, schedulers, mode).items():
            m = metrics[name]
            for v in sched.validate(grid, cfg, table.n_codewords):
                m.violations.append(f"drop {d}: {v}")
            m.sum_rates.append(sched.sum_rate(grid, table))
            m.ue_rates.append(sched.per_ue_rates(grid, table))
            m.reconfig_bits.append(sched.reconfiguration_bits(grid, b_q))
            m.wall_s.append(secs)
    return MetricsReport(params=dict(params or {}), cfg=cfg, schedulers=metrics)


def run_experiment(cfg: ScenarioConfig, schedulers=("gmax", "da", "uoscbc", "ga"), sweep: dict | None = None,
                   codebook: Codebook | None = None, mode: str = "exhaustive") -> list[MetricsReport]:
    """Evaluate ``schedulers`` over ``n_drops`` frames at every sweep point.

    Drop ``d`` draws from the same RNG stream at every point, so points are paired.
    Codebooks are built once per distinct physical setting unless ``codebook`` is given.
    Points that violate config invariants are skipped with a warning.
    """
    reports = []
    books: dict[tuple, Codebook] = {}
    for params in sweep_points(sweep):
        try:
            point_cfg = cfg.replace(**params) if params else cfg
        except ValueError as exc:
            log.warning("skipping sweep point %s: %s", params, exc)
            continue
        if codebook is not None:
            if codebook.n_irs != point_cfg.n_irs:
                log.warning("skipping sweep point %s: codebook N_I=%d, config N_I=%d",
                            params, codebook.n_irs, point_cfg.n_irs)
                continue
            cb = codebook
        else:
            key = _codebook_key(point_cfg)
            if key not in books:
                books[key] = build_codebook(point_cfg, stream(point_cfg.seed, _CODEBOOK))
            cb = books[key]
        log.info("sweep point %s", params or "(base)")
        reports.append(run_point(point_cfg, cb, schedulers, mode, params))
    return reports


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(reports: list[MetricsReport], path: str | Path) -> tuple[Path, Path]:
    """Write one summary row per (point, scheduler) to ``path`` and per-drop rows next to it.

    The per-drop file is ``<stem>_drops.csv``. Timing is deliberately excluded so
    files are byte-identical across runs with the same seed.
    """
    path = Path(path)
    drops_path = path.with_name(path.stem + "_drops.csv")
    try:
        with open(path, "w", newline="") as fs, open(drops_path, "w", newline="") as fd:
            ws, wd = csv.writer(fs), csv.writer(fd)
            ws.writerow(SUMMARY_COLUMNS)
            wd.writerow(DROP_COLUMNS)
            for p, rep in enumerate(reports):
                for name, m in rep.schedulers.items():
                    ws.writerow([p, rep.label, name, len(m.sum_rates), _fmt(m.mean), _fmt(m.stderr),
                                 _fmt(np.mean(m.reconfig_bits)), _fmt(rep.cfg.control_reduction),
                                 len(m.violations)])
                    for d, (s, b) in enumerate(zip(m.sum_rates, m.reconfig_bits)):
                        wd.writerow([p, rep.label, name, d, _fmt(s), b])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path, drops_path


def emit_plots(reports: list[MetricsReport], out_dir: str | Path) -> list[Path]:
    """Average sum rate versus the swept parameter, plus per-UE rate ECDFs, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not reports:
        raise ValueError("nothing to plot")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plt.rcParams["svg.hashsalt"] = "irsched"
    meta = {"Date": None}
    files = []
    names = list(reports[0].schedulers)

    if len(reports) > 1:
        swept = [k for k in reports[0].params]
        if len(swept) == 1 and all(isinstance(r.params[swept[0]], (int, float)) for r in reports):
            xs = [r.params[swept[0]] for r in reports]
            xlabel = swept[0]
            ticks = None
        else:
            xs = list(range(len(reports)))
            xlabel = "sweep point"
            ticks = [r.label for r in reports]
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in names:
            ax.plot(xs, [r.schedulers[name].mean for r in reports], marker="x", label=name, gid=f"curve_{name}")
        if ticks:
            ax.set_xticks(xs, ticks, rotation=30, ha="right")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("average sum rate [bit/s/Hz]")
        ax.grid(True)
        ax.legend()
        fig.tight_layout()
        f = out_dir / "sum_rate.svg"
        fig.savefig(f, metadata=meta)
        plt.close(fig)
        files.append(f)
    else:
        log.info("single sweep point: skipping the sum-rate curve")

    for p, rep in enumerate(reports):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in names:
            s = np.sort(rep.schedulers[name].ecdf_samples)
            ax.step(s, np.arange(1, len(s) + 1) / len(s), where="post", label=name, gid=f"ecdf_{name}")
        ax.set_xlabel("per-UE rate [bit/s/Hz]")
        ax.set_ylabel("ECDF")
        ax.set_title(rep.label or "base")
        ax.grid(True)
        ax.legend()
        fig.tight_layout()
        f = out_dir / f"ecdf_{p}.svg"
        fig.savefig(f, metadata=meta)
        plt.close(fig)
        files.append(f)
    return files
