"""Joint IRS-configuration / resource-block schedulers over a :class:`RateTable`.

A frame is a grid of K/F time slots by F carriers. Cluster z keeps codeword
``configs[z]`` for ``alpha[z]`` consecutive slots, so it owns ``alpha[z]`` RBs on
every carrier. All argmax ties resolve to the lexicographically smallest
(k, z, i) or codeword index.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import ScenarioConfig
from .rate import RateTable

UNASSIGNED = -1
EXHAUSTIVE_CAP = 10**7


class TooLargeError(RuntimeError):
    """Exhaustive search space exceeds the leaf cap."""


@dataclass
class AssignmentGrid:
    """Decision variables of one frame.

    ``cluster[k]``/``carrier[k]`` give UE k's RB (``-1`` when unassigned),
    ``alpha[z]`` the slot count of cluster z and ``configs[z]`` its codeword.
    """

    cluster: np.ndarray
    carrier: np.ndarray
    alpha: np.ndarray
    configs: np.ndarray
    relaxed: bool = False

    @classmethod
    def empty(cls, K: int, Z: int) -> "AssignmentGrid":
        return cls(cluster=np.full(K, UNASSIGNED), carrier=np.full(K, UNASSIGNED),
                   alpha=np.zeros(Z, dtype=np.int64), configs=np.zeros(Z, dtype=np.int64))

    def copy(self) -> "AssignmentGrid":
        return AssignmentGrid(self.cluster.copy(), self.carrier.copy(), self.alpha.copy(),
                              self.configs.copy(), self.relaxed)

    @property
    def n_ue(self) -> int:
        return len(self.cluster)

    @property
    def n_clusters(self) -> int:
        return len(self.alpha)

    @property
    def assigned(self) -> np.ndarray:
        return self.cluster != UNASSIGNED

    def occupancy(self, F: int) -> np.ndarray:
        """UE count per (z, i)."""
        occ = np.zeros((self.n_clusters, F), dtype=np.int64)
        m = self.assigned
        np.add.at(occ, (self.cluster[m], self.carrier[m]), 1)
        return occ

    def x(self, F: int) -> np.ndarray:
        """Dense 0/1 assignment tensor ``x[k, z, i]``."""
        out = np.zeros((self.n_ue, self.n_clusters, F), dtype=np.int64)
        m = np.flatnonzero(self.assigned)
        out[m, self.cluster[m], self.carrier[m]] = 1
        return out

    def to_dict(self) -> dict:
        assign = [None if z == UNASSIGNED else [int(z), int(i)]
                  for z, i in zip(self.cluster, self.carrier)]
        return {"assign": assign, "alpha": self.alpha.tolist(),
                "configs": self.configs.tolist(), "relaxed": bool(self.relaxed)}

    @classmethod
    def from_dict(cls, data: dict) -> "AssignmentGrid":
        pairs = [(UNASSIGNED, UNASSIGNED) if a is None else tuple(a) for a in data["assign"]]
        cl = np.array([p[0] for p in pairs], dtype=np.int64)
        ca = np.array([p[1] for p in pairs], dtype=np.int64)
        return cls(cl, ca, np.asarray(data["alpha"], dtype=np.int64),
                   np.asarray(data["configs"], dtype=np.int64), bool(data["relaxed"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "AssignmentGrid":
        return cls.from_dict(json.loads(Path(path).read_text()))


def validate(grid: AssignmentGrid, cfg: ScenarioConfig, n_codewords: int | None = None) -> list[str]:
    """List every constraint violation of ``grid``; an empty list means feasible.

    Relaxed grids skip the per-RB cardinality and the total-slot checks.
    """
    out = []
    K, F = cfg.K, cfg.F
    if grid.n_ue != K:
        return [f"grid holds {grid.n_ue} UEs, config has K={K}"]
    if grid.n_clusters > cfg.Z:
        out.append(f"{grid.n_clusters} clusters exceed Z={cfg.Z}")
    missing = np.flatnonzero(~grid.assigned)
    if len(missing):
        out.append(f"unassigned UEs: {missing.tolist()}")
    m = grid.assigned
    bad = m & ((grid.cluster < 0) | (grid.cluster >= grid.n_clusters) | (grid.carrier < 0) | (grid.carrier >= F))
    if bad.any():
        out.append(f"UEs on out-of-range RBs: {np.flatnonzero(bad).tolist()}")
        return out
    if np.any(grid.alpha < 0):
        out.append(f"negative cluster cardinality: alpha={grid.alpha.tolist()}")
    if n_codewords is not None:
        badc = np.flatnonzero((grid.configs < 0) | (grid.configs >= n_codewords))
        if len(badc):
            out.append(f"clusters {badc.tolist()} use codewords outside the codebook")
    if grid.relaxed:
        return out
    occ = grid.occupancy(F)
    for z, i in zip(*np.nonzero(occ != grid.alpha[:, None])):
        out.append(f"RB (z={z}, i={i}) holds {occ[z, i]} UEs, alpha_z={grid.alpha[z]}")
    if grid.alpha.sum() != cfg.slots:
        out.append(f"sum(alpha)={grid.alpha.sum()} differs from K/F={cfg.slots}")
    return out


def sum_rate(grid: AssignmentGrid, table: RateTable) -> float:
    """Frame objective; unassigned UEs contribute nothing."""
    return float(per_ue_rates(grid, table).sum())


def per_ue_rates(grid: AssignmentGrid, table: RateTable) -> np.ndarray:
    out = np.zeros(grid.n_ue)
    m = np.flatnonzero(grid.assigned)
    out[m] = table.r[m, grid.configs[grid.cluster[m]], grid.carrier[m]]
    return out


def reconfigurations(grid: AssignmentGrid) -> int:
    """IRS reconfigurations per frame once clusters sharing a codeword are merged."""
    used = np.unique(grid.cluster[grid.assigned])
    return len(np.unique(grid.configs[used]))


def reconfiguration_bits(grid: AssignmentGrid, b_q: int) -> int:
    return b_q * reconfigurations(grid)


def _check(table: RateTable, cfg: ScenarioConfig):
    if table.n_ue != cfg.K or table.n_carriers != cfg.F:
        raise ValueError(f"table shape {table.shape} does not match K={cfg.K}, F={cfg.F}")


def configuration_assignment(table: RateTable, Z: int) -> list[tuple[int, int, int]]:
    """Seed step: the Z UEs with the highest single-cell rate, each with its best (codeword, carrier).

    Returns ``(ue, codeword, carrier)`` triples in descending rate order.
    """
    K, C, F = table.shape
    if Z > K:
        raise ValueError(f"Z={Z} exceeds K={K}")
    flat = table.r.reshape(K, C * F)
    best = flat.argmax(axis=1)  # first max -> lower c, then lower i
    best_rate = flat[np.arange(K), best]
    order = np.lexsort((np.arange(K), -best_rate))[:Z]
    return [(int(k), int(best[k] // F), int(best[k] % F)) for k in order]


def _seeded_grid(cfg: ScenarioConfig, seeds) -> AssignmentGrid:
    grid = AssignmentGrid.empty(cfg.K, cfg.Z)
    for z, (k, c, i) in enumerate(seeds):
        grid.cluster[k], grid.carrier[k] = z, i
        grid.configs[z] = c
    return grid


def gmax(table: RateTable, cfg: ScenarioConfig, seeds=None) -> AssignmentGrid:
    """Greedy maximum-rate scheduler.

    Clusters start from :func:`configuration_assignment` with one slot each. UEs
    are then placed one at a time on the free RB giving the highest rate under that
    cluster's codeword. When every RB is taken and UEs remain, the best
    (UE, cluster, carrier) ignoring capacity is placed and that cluster gains a slot.
    """
    _check(table, cfg)
    K, F, Z = cfg.K, cfg.F, cfg.Z
    if seeds is None:
        seeds = configuration_assignment(table, Z)
    grid = _seeded_grid(cfg, seeds)
    grid.alpha[:] = 1
    occ = grid.occupancy(F)
    # rates[k, z, i] under the chosen cluster codewords
    rates = table.r[:, grid.configs, :]
    free_ue = ~grid.assigned

    def place(k, z, i):
        grid.cluster[k], grid.carrier[k] = z, i
        occ[z, i] += 1
        free_ue[k] = False

    while free_ue.any():
        while free_ue.any() and occ.sum() < F * grid.alpha.sum():
            slot_ok = occ < grid.alpha[:, None]
            masked = np.where(free_ue[:, None, None] & slot_ok[None], rates, -np.inf)
            k, z, i = np.unravel_index(np.argmax(masked), masked.shape)
            place(k, z, i)
        if free_ue.any():
            masked = np.where(free_ue[:, None, None], rates, -np.inf)
            k, z, i = np.unravel_index(np.argmax(masked), masked.shape)
            grid.alpha[z] += 1
            place(k, z, i)
    return grid


def da(table: RateTable, cfg: ScenarioConfig) -> AssignmentGrid:
    """Deterministic assignment: contiguous UE blocks, round-robin carriers, best codeword per block."""
    _check(table, cfg)
    K, F, Z = cfg.K, cfg.F, cfg.Z
    base, extra = divmod(cfg.slots, Z)
    alpha = np.array([base + (z < extra) for z in range(Z)], dtype=np.int64)
    grid = AssignmentGrid.empty(K, Z)
    grid.alpha = alpha
    start = 0
    for z in range(Z):
        members = np.arange(start, start + alpha[z] * F)
        grid.cluster[members] = z
        grid.carrier[members] = np.arange(len(members)) % F
        start += len(members)
        totals = table.r[members, :, grid.carrier[members]].sum(axis=0)
        grid.configs[z] = int(np.argmax(totals))
    return grid


def uoscbc(table: RateTable, cfg: ScenarioConfig, seeds=None) -> AssignmentGrid:
    """Seed step as in :func:`gmax`, then each remaining UE takes its best (cluster, carrier) with no RB limit."""
    _check(table, cfg)
    if seeds is None:
        seeds = configuration_assignment(table, cfg.Z)
    grid = _seeded_grid(cfg, seeds)
    grid.relaxed = True
    rates = table.r[:, grid.configs, :]
    F = cfg.F
    for k in np.flatnonzero(~grid.assigned):
        z, i = divmod(int(np.argmax(rates[k])), F)
        grid.cluster[k], grid.carrier[k] = z, i
    grid.alpha = grid.occupancy(F).max(axis=1)
    return grid


# ---------------------------------------------------------------- genetic algorithm


@dataclass
class _Individual:
    cluster: np.ndarray
    carrier: np.ndarray
    alpha: np.ndarray
    configs: np.ndarray
    fitness: float = field(default=-np.inf)

    def copy(self):
        return _Individual(self.cluster.copy(), self.carrier.copy(), self.alpha.copy(),
                           self.configs.copy(), self.fitness)


class _GA:
    def __init__(self, table: RateTable, cfg: ScenarioConfig, rng: np.random.Generator):
        self.r = table.r
        self.n_c = table.n_codewords
        self.cfg = cfg
        self.rng = rng
        self.F = cfg.F

    def evaluate(self, ind: _Individual) -> float:
        ind.fitness = float(self.r[np.arange(len(ind.cluster)), ind.configs[ind.cluster], ind.carrier].sum())
        return ind.fitness

    def swap_ues(self, ind: _Individual):
        if len(ind.cluster) < 2:
            return
        a, b = self.rng.choice(len(ind.cluster), 2, replace=False)
        ind.cluster[[a, b]] = ind.cluster[[b, a]]
        ind.carrier[[a, b]] = ind.carrier[[b, a]]

    def redraw_config(self, ind: _Individual):
        z = self.rng.integers(len(ind.configs))
        ind.configs[z] = self.rng.integers(self.n_c)

    def move_slot(self, ind: _Individual, donor=None, receiver=None) -> bool:
        """Move one slot (one UE per carrier) from ``donor`` to ``receiver``."""
        if donor is None:
            donors = np.flatnonzero(ind.alpha >= 2)
            if len(donors) == 0 or len(ind.alpha) < 2:
                return False
            donor = self.rng.choice(donors)
        if receiver is None:
            others = np.flatnonzero(np.arange(len(ind.alpha)) != donor)
            receiver = self.rng.choice(others)
        if ind.alpha[donor] < 2 or donor == receiver:
            return False
        for i in range(self.F):
            cand = np.flatnonzero((ind.cluster == donor) & (ind.carrier == i))
            ind.cluster[self.rng.choice(cand)] = receiver
        ind.alpha[donor] -= 1
        ind.alpha[receiver] += 1
        return True

    def mutate(self, ind: _Individual):
        if self.rng.random() >= self.cfg.ga.mutation_rate:
            return
        op = self.rng.integers(3)
        if op == 0:
            self.swap_ues(ind)
        elif op == 1:
            self.redraw_config(ind)
        elif not self.move_slot(ind):
            self.swap_ues(ind)

    def crossover(self, p1: _Individual, p2: _Individual) -> _Individual:
        """Transplant one cluster (codeword and members) of ``p2`` into a copy of ``p1``, then repair."""
        child = p1.copy()
        z = self.rng.integers(len(child.alpha))
        child.configs[z] = p2.configs[z]
        target = p2.alpha[z]
        while child.alpha[z] < target:
            donors = np.flatnonzero((child.alpha >= 2) & (np.arange(len(child.alpha)) != z))
            if len(donors) == 0:
                return child
            self.move_slot(child, donor=self.rng.choice(donors), receiver=z)
        while child.alpha[z] > target:
            others = np.flatnonzero(np.arange(len(child.alpha)) != z)
            self.move_slot(child, donor=z, receiver=self.rng.choice(others))
        for i in range(self.F):
            want = set(np.flatnonzero((p2.cluster == z) & (p2.carrier == i)).tolist())
            have = set(np.flatnonzero((child.cluster == z) & (child.carrier == i)).tolist())
            incoming = sorted(want - have)
            outgoing = sorted(have - want)
            for k, u in zip(incoming, outgoing):
                child.cluster[u], child.carrier[u] = child.cluster[k], child.carrier[k]
                child.cluster[k], child.carrier[k] = z, i
        return child

    def tournament(self, pop):
        a, b = self.rng.integers(len(pop), size=2)
        return pop[a] if pop[a].fitness >= pop[b].fitness else pop[b]


def ga(table: RateTable, cfg: ScenarioConfig, seed_solution: AssignmentGrid,
       rng: np.random.Generator | None = None) -> AssignmentGrid:
    """Genetic search over feasible grids, seeded with ``seed_solution``.

    Every operator preserves feasibility (RB uniqueness and per-RB cardinalities),
    and the best ``elitism`` individuals survive each generation, so the result is
    never worse than the seed.
    """
    _check(table, cfg)
    if seed_solution.relaxed or validate(seed_solution, cfg, table.n_codewords):
        raise ValueError("GA seed solution is infeasible")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    params = cfg.ga
    eng = _GA(table, cfg, rng)
    seed = _Individual(seed_solution.cluster.copy(), seed_solution.carrier.copy(),
                       seed_solution.alpha.copy(), seed_solution.configs.copy())
    eng.evaluate(seed)
    pop = [seed]
    while len(pop) < params.population:
        ind = seed.copy()
        for _ in range(rng.integers(1, 4)):
            [eng.swap_ues, eng.redraw_config, eng.move_slot][rng.integers(3)](ind)
        eng.evaluate(ind)
        pop.append(ind)

    for _ in range(params.generations):
        pop.sort(key=lambda p: -p.fitness)
        nxt = [p.copy() for p in pop[:params.elitism]]
        while len(nxt) < params.population:
            child = eng.crossover(eng.tournament(pop), eng.tournament(pop))
            eng.mutate(child)
            eng.evaluate(child)
            nxt.append(child)
        pop = nxt

    best = max(pop, key=lambda p: p.fitness)
    if best.fitness < seed.fitness:
        best = seed
    return AssignmentGrid(best.cluster, best.carrier, best.alpha, best.configs)


# ---------------------------------------------------------------- exhaustive oracle


def compositions(total: int, parts: int):
    """All tuples of ``parts`` positive integers summing to ``total``."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[j + 1] - bounds[j] for j in range(parts))


def _count_compositions(total: int, parts: int) -> int:
    from math import comb
    return comb(total - 1, parts - 1) if total >= parts else 0


def exhaustive(table: RateTable, cfg: ScenarioConfig, cap: int = EXHAUSTIVE_CAP) -> AssignmentGrid:
    """Global optimum over slot splits, codeword tuples and UE-to-RB assignments.

    For a fixed split and codeword tuple the UE placement is a linear assignment
    problem on a K x K rate matrix and is solved exactly.
    """
    _check(table, cfg)
    K, C, F = table.shape
    Z = cfg.Z
    leaves = _count_compositions(cfg.slots, Z) * C**Z
    if leaves > cap:
        raise TooLargeError(f"{leaves} leaves exceed the cap of {cap}")
    best_val, best = -np.inf, None
    for alpha in compositions(cfg.slots, Z):
        slot_z = np.repeat(np.arange(Z), np.array(alpha) * F)
        slot_i = np.concatenate([np.tile(np.arange(F), a) for a in alpha])
        for codes in itertools.product(range(C), repeat=Z):
            m = table.r[:, np.asarray(codes)[slot_z], slot_i]
            rows, cols = linear_sum_assignment(m, maximize=True)
            val = m[rows, cols].sum()
            if val > best_val:
                best_val = val
                best = (alpha, codes, slot_z[cols], slot_i[cols])
    alpha, codes, cl, ca = best
    return AssignmentGrid(np.asarray(cl, dtype=np.int64), np.asarray(ca, dtype=np.int64),
                          np.asarray(alpha, dtype=np.int64), np.asarray(codes, dtype=np.int64))


SCHEDULERS = ("gmax", "da", "uoscbc", "ga", "exhaustive")
